#include "monrex/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>

#include <fmt/format.h>

#include "monrex/error.hpp"
#include "monrex/parallel.hpp"

namespace monrex {
namespace {

struct SubsetBest {
  ScoredRule rule;
  std::uint32_t mask = 0;
  bool valid = false;
};

void check_budget(std::size_t inputs, std::size_t examples, const OracleBudget& budget) {
  if (inputs > static_cast<std::size_t>(budget.max_inputs)) {
    throw BudgetError(fmt::format("oracle limited to {} inputs, problem has {}",
                                  budget.max_inputs, inputs));
  }
  if (examples > budget.max_examples) {
    throw BudgetError(fmt::format("oracle limited to {} examples, problem has {}",
                                  budget.max_examples, examples));
  }
}

double plain_entropy(const std::map<int, std::size_t>& counts, std::size_t total) {
  double h = 0.0;
  for (const auto& [label, count] : counts) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

std::vector<ScoredRule> exhaustive_sweep(std::span<const Literal> literals, const Matrix& inputs,
                                         const TruthVector& target, std::span<const double> betas,
                                         const OracleBudget& budget, std::size_t workers) {
  const std::size_t rows = inputs.rows();
  check_budget(literals.size(), rows, budget);
  if (target.size() != rows || rows == 0) {
    throw ValidationError(-1, "target", "target must be non-empty and match the example count");
  }
  const int n = static_cast<int>(literals.size());
  const int total_inputs = std::max(n, 1);
  const ComplexityTable table(total_inputs, n);

  std::vector<std::uint32_t> holds(rows, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (int i = 0; i < n; ++i) {
      const Literal& literal = literals[static_cast<std::size_t>(i)];
      if (literal.column >= inputs.cols()) {
        throw ValidationError(-1, "body", "literal column outside the input matrix");
      }
      if (literal.holds(inputs(r, literal.column))) holds[r] |= 1u << i;
    }
  }

  const std::size_t subsets = std::size_t{1} << n;
  const double dr = static_cast<double>(rows);
  std::vector<std::vector<SubsetBest>> per_subset(subsets);

  parallel_for(subsets, workers, [&](std::size_t s) {
    const auto mask = static_cast<std::uint32_t>(s);
    const int k = std::popcount(mask);
    std::vector<std::size_t> errors_by_m(static_cast<std::size_t>(k) + 2, 0);
    // Rule m-of-S fires when at least m literals of S hold.
    for (std::size_t r = 0; r < rows; ++r) {
      const int count = std::popcount(holds[r] & mask);
      for (int m = 0; m <= k + 1; ++m) {
        if ((count >= m) != static_cast<bool>(target[r])) ++errors_by_m[static_cast<std::size_t>(m)];
      }
    }

    std::vector<Literal> body;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) body.push_back(literals[static_cast<std::size_t>(i)]);
    }
    auto& best = per_subset[s];
    best.resize(betas.size());
    for (std::size_t b = 0; b < betas.size(); ++b) {
      // Trivial rules are only taken from the empty subset, with empty bodies.
      const int m_lo = mask == 0 ? 0 : 1;
      const int m_hi = mask == 0 ? 1 : k;
      for (int m = m_lo; m <= m_hi; ++m) {
        ScoredRule probe;
        probe.rule.m = m;
        probe.rule.body = body;
        probe.rule.total_inputs = total_inputs;
        probe.error = static_cast<double>(errors_by_m[static_cast<std::size_t>(m)]) / dr;
        probe.complexity = table.at(m, k);
        probe.beta = betas[b];
        probe.loss = rule_loss(probe.error, probe.complexity, betas[b]);
        if (!best[b].valid || preferred(probe, best[b].rule)) {
          best[b] = SubsetBest{std::move(probe), mask, true};
        }
      }
    }
  });

  std::vector<ScoredRule> result;
  for (std::size_t b = 0; b < betas.size(); ++b) {
    const SubsetBest* winner = nullptr;
    for (const auto& subset : per_subset) {
      const SubsetBest& candidate = subset[b];
      if (winner == nullptr || preferred(candidate.rule, winner->rule)) winner = &candidate;
    }
    result.push_back(winner->rule);
  }
  return result;
}

ScoredRule exhaustive_best_rule(std::span<const Literal> literals, const Matrix& inputs,
                                const TruthVector& target, double beta,
                                const OracleBudget& budget, std::size_t workers) {
  const double betas[] = {beta};
  return exhaustive_sweep(literals, inputs, target, betas, budget, workers).front();
}

Matrix binary_product_space(int n, const OracleBudget& budget) {
  if (n < 1) throw ValidationError(-1, "n", "product space needs at least one input");
  check_budget(static_cast<std::size_t>(n), std::size_t{1} << std::min(n, 62), budget);
  const std::size_t rows = std::size_t{1} << n;
  Matrix points(rows, static_cast<std::size_t>(n));
  for (std::size_t r = 0; r < rows; ++r) {
    for (int j = 0; j < n; ++j) {
      points(r, static_cast<std::size_t>(j)) = static_cast<double>((r >> (n - 1 - j)) & 1u);
    }
  }
  return points;
}

TruthVector perceptron_truth(std::span<const double> weights, double bias, const Matrix& inputs) {
  if (weights.size() != inputs.cols()) {
    throw ValidationError(-1, "weights", "weight count differs from input width");
  }
  TruthVector truth(inputs.rows());
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    double activation = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) activation += weights[j] * inputs(r, j);
    truth[r] = activation > 0.0;
  }
  return truth;
}

SplitResult exhaustive_split_scan(std::span<const double> values, std::span<const int> labels) {
  if (values.size() != labels.size() || values.size() < 2) {
    throw ValidationError(-1, "values", "split needs two or more values with matching labels");
  }
  std::vector<double> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::map<int, std::size_t> all;
  for (int label : labels) ++all[label];
  const double base = plain_entropy(all, labels.size());

  SplitResult best;
  best.degenerate = true;
  best.literal.threshold = distinct.front();
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    const double threshold = (distinct[i] + distinct[i + 1]) / 2.0;
    std::map<int, std::size_t> above;
    std::map<int, std::size_t> below;
    std::size_t n_above = 0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (values[k] > threshold) {
        ++above[labels[k]];
        ++n_above;
      } else {
        ++below[labels[k]];
      }
    }
    const std::size_t n_below = values.size() - n_above;
    const double total = static_cast<double>(values.size());
    const double gain = base - (static_cast<double>(n_above) / total) * plain_entropy(above, n_above) -
                        (static_cast<double>(n_below) / total) * plain_entropy(below, n_below);
    ++best.candidate_count;
    if (best.degenerate || gain > best.info_gain + 1e-12) {
      best.degenerate = false;
      best.info_gain = gain;
      best.literal.threshold = threshold;
    }
  }
  return best;
}

}  // namespace monrex
