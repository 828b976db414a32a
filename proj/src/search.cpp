#include "monrex/search.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "monrex/error.hpp"
#include "monrex/parallel.hpp"

namespace monrex {
namespace {

struct Candidate {
  int m = 0;
  int n = 0;
  std::size_t errors = 0;
};

MofNRule build_rule(const Literal& head, std::span<const Literal> literals, int m, int n,
                    int total_inputs) {
  MofNRule rule;
  rule.head = head;
  rule.m = m;
  rule.total_inputs = total_inputs;
  rule.body.assign(literals.begin(), literals.begin() + n);
  return rule;
}

std::size_t fan_in(const LayerSpec& spec) {
  if (spec.kind == LayerKind::kConv2d) {
    return spec.weight_shape[0] * spec.weight_shape[1] * spec.weight_shape[2];
  }
  return spec.weight_shape[0];
}

}  // namespace

void SearchConfig::validate() const {
  if (betas.empty()) throw ValidationError(-1, "betas", "beta grid is empty");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!std::isfinite(betas[i]) || betas[i] < 0.0) {
      throw ValidationError(-1, "betas", fmt::format("beta {} is not a finite value >= 0",
                                                     betas[i]));
    }
    if (i > 0 && !(betas[i - 1] < betas[i])) {
      throw ValidationError(-1, "betas", "betas must be strictly ascending");
    }
  }
  if (max_body && *max_body < 0) throw ValidationError(-1, "max_body", "negative body cap");
  if (workers == 0) throw ValidationError(-1, "workers", "worker count must be positive");
}

std::vector<ScoredRule> search_neuron_sweep(const Literal& head,
                                            std::span<const Literal> ordered_literals,
                                            const Matrix& inputs, const TruthVector& target,
                                            std::span<const double> betas,
                                            std::optional<int> max_body,
                                            const ComplexityTable* table, bool trivial_only) {
  const std::size_t rows = inputs.rows();
  if (target.size() != rows) {
    throw ValidationError(-1, "target", "target length differs from example count");
  }
  if (rows == 0) throw ValidationError(-1, "target", "empty example set");
  const int n = static_cast<int>(ordered_literals.size());
  const int total_inputs = std::max(n, 1);
  int cap = max_body ? std::min(*max_body, n) : n;
  if (trivial_only) cap = 0;
  for (const auto& literal : ordered_literals) {
    if (literal.column >= inputs.cols()) {
      throw ValidationError(-1, "body",
                            fmt::format("literal {} reads column {} but inputs have {}",
                                        format_literal(literal), literal.column, inputs.cols()));
    }
  }

  std::optional<ComplexityTable> local_table;
  if (table == nullptr) {
    local_table.emplace(total_inputs, cap);
    table = &*local_table;
  } else if (table->total_inputs() != total_inputs || table->max_body() < cap) {
    throw ValidationError(-1, "complexity", "complexity table does not match the fan-in");
  }

  std::size_t total_true = 0;
  for (bool t : target) total_true += t ? 1 : 0;
  const std::size_t total_false = rows - total_true;

  std::vector<Candidate> candidates;
  candidates.reserve(2 + static_cast<std::size_t>(cap) * (cap + 1) / 2);
  candidates.push_back({0, 0, total_false});  // always true
  candidates.push_back({1, 0, total_true});   // always false

  // counts[r] = how many of the first N literals hold on example r.
  std::vector<int> counts(rows, 0);
  std::vector<std::size_t> hist_true;
  std::vector<std::size_t> hist_false;
  for (int body = 1; body <= cap; ++body) {
    const Literal& literal = ordered_literals[static_cast<std::size_t>(body - 1)];
    hist_true.assign(static_cast<std::size_t>(body) + 1, 0);
    hist_false.assign(static_cast<std::size_t>(body) + 1, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      counts[r] += literal.holds(inputs(r, literal.column)) ? 1 : 0;
      auto& hist = target[r] ? hist_true : hist_false;
      ++hist[static_cast<std::size_t>(counts[r])];
    }
    // Rule m-of-N fires when counts >= m; errors are true targets below m
    // plus false targets at or above m.
    std::size_t true_below = 0;
    std::size_t false_at_or_above = total_false;
    for (int m = 1; m <= body; ++m) {
      true_below += hist_true[static_cast<std::size_t>(m - 1)];
      false_at_or_above -= hist_false[static_cast<std::size_t>(m - 1)];
      candidates.push_back({m, body, true_below + false_at_or_above});
    }
  }

  std::vector<ScoredRule> selected;
  selected.reserve(betas.size());
  const double dr = static_cast<double>(rows);
  for (double beta : betas) {
    // Same order as `preferred`, without materializing every rule.
    const Candidate* best = nullptr;
    double best_loss = 0.0;
    double best_complexity = 0.0;
    for (const auto& c : candidates) {
      const double complexity = table->at(c.m, c.n);
      const double loss = rule_loss(static_cast<double>(c.errors) / dr, complexity, beta);
      const bool better =
          best == nullptr || loss < best_loss ||
          (loss == best_loss &&
           (complexity < best_complexity ||
            (complexity == best_complexity &&
             (c.n < best->n || (c.n == best->n && c.m < best->m)))));
      if (better) {
        best = &c;
        best_loss = loss;
        best_complexity = complexity;
      }
    }
    ScoredRule scored;
    scored.rule = build_rule(head, ordered_literals, best->m, best->n, total_inputs);
    scored.error = static_cast<double>(best->errors) / dr;
    scored.complexity = best_complexity;
    scored.loss = best_loss;
    scored.beta = beta;
    selected.push_back(std::move(scored));
  }
  return selected;
}

ScoredRule search_neuron(const Literal& head, std::span<const Literal> ordered_literals,
                         const Matrix& inputs, const TruthVector& target, double beta,
                         std::optional<int> max_body) {
  const double betas[] = {beta};
  return search_neuron_sweep(head, ordered_literals, inputs, target, betas, max_body).front();
}

TargetProblem prepare_target(const NetworkModel& model, const ForwardResult& forward,
                             const TargetId& id, std::size_t workers) {
  TargetProblem problem;
  problem.id = id;
  problem.head = make_target_literal(forward, id.layer, id.neuron);
  problem.inputs = neuron_inputs(model, forward, id.layer, id.neuron);
  problem.truth =
      evaluate_literal(problem.head.literal, forward.at(id.layer).values.column(id.neuron));
  problem.literals = make_input_literals(problem.inputs.weights, problem.inputs.values,
                                         problem.truth, problem.inputs.sources, workers);
  return problem;
}

std::vector<TargetId> layer_targets(const NetworkModel& model, const ForwardResult& forward,
                                    int layer, std::size_t workers) {
  if (layer < 0 || static_cast<std::size_t>(layer) >= model.layers.size()) {
    throw ValidationError(layer, "layer", "target layer index out of range");
  }
  const LayerSpec& spec = model.layers[static_cast<std::size_t>(layer)];
  if (!spec.has_weights()) {
    throw ValidationError(layer, "kind",
                          fmt::format("{} layer has no weights to explain",
                                      to_string(spec.kind)));
  }
  std::vector<TargetId> targets;
  if (spec.kind == LayerKind::kConv2d) {
    const std::size_t maps = spec.weight_shape[3];
    for (std::size_t f = 0; f < maps; ++f) {
      const auto choice = select_feature_map_neuron(model, forward, layer, f, workers);
      targets.push_back(TargetId{layer, choice.neuron, f});
    }
  } else {
    const std::size_t neurons = spec.weight_shape[1];
    for (std::size_t j = 0; j < neurons; ++j) targets.push_back(TargetId{layer, j, std::nullopt});
  }
  return targets;
}

std::vector<ExtractionReport> search_layer(const NetworkModel& model,
                                           const ForwardResult& forward, int layer,
                                           const SearchConfig& config) {
  config.validate();
  const auto targets = layer_targets(model, forward, layer, config.workers);
  const LayerSpec& spec = model.layers[static_cast<std::size_t>(layer)];
  const int n = static_cast<int>(fan_in(spec));
  const int cap = config.max_body ? std::min(*config.max_body, n) : n;
  const ComplexityTable table(std::max(n, 1), cap);

  std::vector<ExtractionReport> reports(targets.size());
  parallel_for(targets.size(), config.workers, [&](std::size_t t) {
    const TargetProblem problem = prepare_target(model, forward, targets[t]);
    ExtractionReport& report = reports[t];
    report.target = problem.id;
    report.head = problem.head.literal;
    report.head_gain = problem.head.info_gain;
    report.degenerate = problem.head.degenerate;
    report.total_inputs = std::max(n, 1);
    report.rules = search_neuron_sweep(problem.head.literal, problem.literals,
                                       problem.inputs.values, problem.truth, config.betas,
                                       config.max_body, &table, problem.head.degenerate);
    for (const auto& scored : report.rules) {
      report.curve.points.push_back(CurvePoint{scored.beta, scored.complexity, scored.error});
    }
    if (config.oracle) {
      const auto best = exhaustive_sweep(problem.literals, problem.inputs.values, problem.truth,
                                         config.betas, *config.oracle);
      for (std::size_t b = 0; b < best.size(); ++b) {
        report.oracle.push_back(
            OracleCheck{best[b].beta, best[b].loss, report.rules[b].loss - best[b].loss});
      }
    }
  });
  return reports;
}

TradeoffCurve sweep_curve(std::span<const ExtractionReport> reports) {
  TradeoffCurve curve;
  if (reports.empty()) return curve;
  const auto& grid = reports.front().rules;
  for (const auto& report : reports) {
    bool same = report.rules.size() == grid.size();
    for (std::size_t b = 0; same && b < grid.size(); ++b) {
      same = report.rules[b].beta == grid[b].beta;
    }
    if (!same) {
      throw ValidationError(report.target.layer, "betas", "reports use different beta grids");
    }
  }
  const double count = static_cast<double>(reports.size());
  for (std::size_t b = 0; b < grid.size(); ++b) {
    double complexity = 0.0;
    double error = 0.0;
    for (const auto& report : reports) {
      complexity += report.rules[b].complexity;
      error += report.rules[b].error;
    }
    curve.points.push_back(CurvePoint{grid[b].beta, complexity / count, error / count});
  }
  return curve;
}

}  // namespace monrex
