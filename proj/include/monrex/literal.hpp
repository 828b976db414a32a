#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace monrex {

using TruthVector = std::vector<bool>;

// Layer index used for the network's input features.
inline constexpr int kInputLayer = -1;
// Neuron index used for zero-padding cells of a convolution patch.
inline constexpr std::int64_t kPaddingNeuron = -1;

struct NeuronId {
  int layer = kInputLayer;
  std::int64_t index = 0;

  bool is_padding() const { return index == kPaddingNeuron; }
  bool operator==(const NeuronId&) const = default;
};

enum class Polarity { kPositive, kNegated };

// Thresholded neuron predicate. A positive literal holds when the activation
// is strictly greater than the threshold; a negated one holds otherwise.
// `column` locates the neuron inside the fan-in matrix the literal is
// evaluated against (unused for head literals).
struct Literal {
  NeuronId neuron;
  std::size_t column = 0;
  double threshold = 0.0;
  Polarity polarity = Polarity::kPositive;

  bool holds(double activation) const {
    const bool above = activation > threshold;
    return polarity == Polarity::kPositive ? above : !above;
  }

  bool operator==(const Literal&) const = default;
};

TruthVector evaluate_literal(const Literal& literal, std::span<const double> values);

}  // namespace monrex
