#pragma once

#include <cstddef>
#include <vector>

#include "monrex/literal.hpp"
#include "monrex/matrix.hpp"
#include "monrex/model_io.hpp"

namespace monrex {

// Post-activation values of one layer, one row per example. Neurons of a
// spatial layer are flattened in (y, x, channel) order.
struct ActivationTensor {
  int layer_index = kInputLayer;
  Shape shape;
  Matrix values;
};

struct PredictedLabels {
  std::vector<int> labels;
  std::size_t num_classes = 0;
};

struct ForwardResult {
  ActivationTensor input;
  std::vector<ActivationTensor> layers;
  PredictedLabels labels;

  // layer == kInputLayer selects the network input.
  const ActivationTensor& at(int layer) const;
};

// Evaluates every layer for every example in 64-bit floating point. Work is
// split over examples; results do not depend on `workers`.
ForwardResult forward_all(const NetworkModel& model, const Dataset& data,
                          std::size_t workers = 1);

// Per-example argmax, ties toward the lowest index.
PredictedLabels argmax_labels(const ActivationTensor& outputs);

// Fan-in of one target neuron: the input activations feeding it (one column
// per connection, zero for padding cells), the matching weights and bias.
struct NeuronInputs {
  Matrix values;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<NeuronId> sources;
};

NeuronInputs neuron_inputs(const NetworkModel& model, const ForwardResult& forward, int layer,
                           std::size_t neuron);

}  // namespace monrex
