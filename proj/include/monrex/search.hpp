#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "monrex/forward.hpp"
#include "monrex/oracle.hpp"
#include "monrex/report.hpp"
#include "monrex/rules.hpp"
#include "monrex/splitter.hpp"

namespace monrex {

enum class TieBreak {
  // Lower loss, then lower complexity, shorter body, smaller m.
  kSimplestFirst,
};

struct SearchConfig {
  std::vector<double> betas{0.0};
  std::optional<int> max_body;
  std::size_t workers = 1;
  TieBreak tie_break = TieBreak::kSimplestFirst;
  // When set, every target is also solved exhaustively and annotated with
  // the optimality gap.
  std::optional<OracleBudget> oracle;

  // betas non-empty, non-negative, strictly ascending; max_body >= 0.
  void validate() const;
};

// Weight-ordered candidate search: m-of-(first N literals) for 1 <= N <= n
// (capped by max_body) and 1 <= m <= N, plus the always-true 0-of-{} and
// always-false 1-of-{} rules. Returns the minimum under `preferred`.
ScoredRule search_neuron(const Literal& head, std::span<const Literal> ordered_literals,
                         const Matrix& inputs, const TruthVector& target, double beta,
                         std::optional<int> max_body = std::nullopt);

// Same candidate set scored once and selected for every beta. `table`, when
// given, must cover the literal count and be built for that fan-in.
std::vector<ScoredRule> search_neuron_sweep(const Literal& head,
                                            std::span<const Literal> ordered_literals,
                                            const Matrix& inputs, const TruthVector& target,
                                            std::span<const double> betas,
                                            std::optional<int> max_body = std::nullopt,
                                            const ComplexityTable* table = nullptr,
                                            bool trivial_only = false);

// Everything needed to search one target: its head split, fan-in and
// weight-ordered literals.
struct TargetProblem {
  TargetId id;
  SplitResult head;
  NeuronInputs inputs;
  TruthVector truth;
  std::vector<Literal> literals;
};

TargetProblem prepare_target(const NetworkModel& model, const ForwardResult& forward,
                             const TargetId& id, std::size_t workers = 1);

// Targets of a layer: every neuron of a dense/softmax layer, or one
// representative neuron per feature map of a conv2d layer.
std::vector<TargetId> layer_targets(const NetworkModel& model, const ForwardResult& forward,
                                    int layer, std::size_t workers = 1);

std::vector<ExtractionReport> search_layer(const NetworkModel& model,
                                           const ForwardResult& forward, int layer,
                                           const SearchConfig& config);

// Per beta, mean complexity and mean error over the reports.
TradeoffCurve sweep_curve(std::span<const ExtractionReport> reports);

}  // namespace monrex
