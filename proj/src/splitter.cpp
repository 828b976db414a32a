#include "monrex/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "monrex/error.hpp"
#include "monrex/parallel.hpp"

namespace monrex {
namespace {

// Gains closer than this count as tied; ties keep the earlier candidate.
constexpr double kGainTolerance = 1e-12;

// Shared scan over sorted values; `classes` holds class ids in [0, num_classes).
SplitResult scan_splits(std::span<const double> values, std::span<const int> classes,
                        std::size_t num_classes) {
  const std::size_t n = values.size();
  if (n < 2 || classes.size() != n) {
    throw ValidationError(-1, "values",
                          fmt::format("split needs two or more values with matching targets "
                                      "(got {} values, {} targets)",
                                      n, classes.size()));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<std::size_t> total(num_classes, 0);
  for (int c : classes) ++total[static_cast<std::size_t>(c)];
  const double total_entropy = entropy(total);

  SplitResult best;
  best.literal.threshold = values[order.front()];
  best.degenerate = true;

  std::vector<std::size_t> left(num_classes, 0);
  std::vector<std::size_t> right = total;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto cls = static_cast<std::size_t>(classes[order[i]]);
    ++left[cls];
    --right[cls];
    const double lo = values[order[i]];
    const double hi = values[order[i + 1]];
    if (!(lo < hi)) continue;

    ++best.candidate_count;
    const double nl = static_cast<double>(i + 1);
    const double gain =
        total_entropy - (nl / dn) * entropy(left) - ((dn - nl) / dn) * entropy(right);
    if (best.degenerate || gain > best.info_gain + kGainTolerance) {
      double threshold = lo + (hi - lo) / 2.0;
      // Keep the induced partition exact when lo and hi are adjacent doubles.
      if (!(threshold < hi) || threshold < lo) threshold = lo;
      best.literal.threshold = threshold;
      best.info_gain = gain;
      best.degenerate = false;
    }
  }
  best.info_gain = std::clamp(best.info_gain, 0.0, total_entropy);
  return best;
}

}  // namespace

double entropy(std::span<const std::size_t> counts) {
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  if (total == 0) throw ValidationError(-1, "counts", "entropy of an all-zero histogram");
  double h = 0.0;
  const double dt = static_cast<double>(total);
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / dt;
    h -= p * std::log2(p);
  }
  return h > 0.0 ? h : 0.0;
}

SplitResult best_split_vs_labels(std::span<const double> values, std::span<const int> labels) {
  int max_label = 0;
  for (int label : labels) {
    if (label < 0) throw ValidationError(-1, "labels", "negative class label");
    max_label = std::max(max_label, label);
  }
  return scan_splits(values, labels, static_cast<std::size_t>(max_label) + 1);
}

SplitResult best_split_vs_literal(std::span<const double> values, const TruthVector& target) {
  std::vector<int> classes(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) classes[i] = target[i] ? 1 : 0;
  return scan_splits(values, classes, 2);
}

SplitResult make_target_literal(const ForwardResult& forward, int layer, std::size_t neuron) {
  const ActivationTensor& tensor = forward.at(layer);
  if (neuron >= tensor.values.cols()) {
    throw ValidationError(layer, "neuron", fmt::format("neuron {} out of range", neuron));
  }
  const auto values = tensor.values.column(neuron);
  SplitResult split = best_split_vs_labels(values, forward.labels.labels);
  split.literal.neuron = NeuronId{layer, static_cast<std::int64_t>(neuron)};
  split.literal.polarity = Polarity::kPositive;
  return split;
}

std::vector<Literal> make_input_literals(std::span<const double> weights, const Matrix& inputs,
                                         const TruthVector& target,
                                         std::span<const NeuronId> sources,
                                         std::size_t workers) {
  const std::size_t n = weights.size();
  if (inputs.cols() != n) {
    throw ValidationError(-1, "weights",
                          fmt::format("{} weights for {} input columns", n, inputs.cols()));
  }
  if (!sources.empty() && sources.size() != n) {
    throw ValidationError(-1, "sources", "source list does not match the weight vector");
  }

  std::vector<Literal> literals(n);
  parallel_for(n, workers, [&](std::size_t j) {
    const auto column = inputs.column(j);
    const SplitResult split = best_split_vs_literal(column, target);
    Literal& literal = literals[j];
    literal.neuron = sources.empty() ? NeuronId{kInputLayer, static_cast<std::int64_t>(j)}
                                     : sources[j];
    literal.column = j;
    literal.threshold = split.literal.threshold;
    literal.polarity = weights[j] < 0.0 ? Polarity::kNegated : Polarity::kPositive;
  });

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(weights[a]) > std::abs(weights[b]);
  });
  std::vector<Literal> sorted;
  sorted.reserve(n);
  for (std::size_t j : order) sorted.push_back(literals[j]);
  return sorted;
}

FeatureMapChoice select_feature_map_neuron(const NetworkModel& model, const ForwardResult& forward,
                                           int layer, std::size_t feature_map,
                                           std::size_t workers) {
  if (layer < 0 || static_cast<std::size_t>(layer) >= model.layers.size() ||
      model.layers[static_cast<std::size_t>(layer)].kind != LayerKind::kConv2d) {
    throw ValidationError(layer, "kind", "feature maps exist only in conv2d layers");
  }
  const ActivationTensor& tensor = forward.at(layer);
  const std::size_t channels = tensor.shape.channels();
  if (feature_map >= channels) {
    throw ValidationError(layer, "feature_map",
                          fmt::format("feature map {} out of range (layer has {})", feature_map,
                                      channels));
  }
  const std::size_t positions = tensor.shape.height() * tensor.shape.width();

  std::vector<SplitResult> splits(positions);
  parallel_for(positions, workers, [&](std::size_t p) {
    splits[p] = make_target_literal(forward, layer, p * channels + feature_map);
  });

  std::size_t best = 0;
  for (std::size_t p = 1; p < positions; ++p) {
    if (splits[p].info_gain > splits[best].info_gain + kGainTolerance) best = p;
  }
  return FeatureMapChoice{best * channels + feature_map, splits[best]};
}

}  // namespace monrex
