#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "monrex/forward.hpp"
#include "monrex/literal.hpp"
#include "monrex/matrix.hpp"

namespace monrex {

// Shannon entropy in bits of a histogram. Throws on an all-zero histogram.
double entropy(std::span<const std::size_t> counts);

struct SplitResult {
  Literal literal;
  double info_gain = 0.0;
  std::size_t candidate_count = 0;
  // Set when every value was equal; the threshold is then that value.
  bool degenerate = false;
};

// Best binary split of `values` for predicting `labels` (non-negative class
// ids). Candidate thresholds are midpoints of consecutive distinct values;
// ties go to the smallest threshold.
SplitResult best_split_vs_labels(std::span<const double> values, std::span<const int> labels);
SplitResult best_split_vs_literal(std::span<const double> values, const TruthVector& target);

// Positive head literal for a neuron, split against the network's predicted
// labels.
SplitResult make_target_literal(const ForwardResult& forward, int layer, std::size_t neuron);

// One literal per fan-in column, negated where the weight is negative, sorted
// by descending |weight| with ties toward the lower column. `sources` names
// the neurons behind each column; when empty, columns are treated as network
// inputs.
std::vector<Literal> make_input_literals(std::span<const double> weights, const Matrix& inputs,
                                         const TruthVector& target,
                                         std::span<const NeuronId> sources = {},
                                         std::size_t workers = 1);

struct FeatureMapChoice {
  std::size_t neuron = 0;
  SplitResult split;
};

// Representative neuron of a convolutional feature map: the spatial position
// whose best split against the predicted labels has the largest gain.
FeatureMapChoice select_feature_map_neuron(const NetworkModel& model, const ForwardResult& forward,
                                           int layer, std::size_t feature_map,
                                           std::size_t workers = 1);

}  // namespace monrex
