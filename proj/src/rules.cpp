#include "monrex/rules.hpp"

#include <algorithm>
#include <cmath>

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>

#include "monrex/error.hpp"

namespace monrex {
namespace {

using BigInt = boost::multiprecision::cpp_int;

BigInt binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt result = 1;
  for (int i = 1; i <= k; ++i) {
    result *= n - k + i;
    result /= i;
  }
  return result;
}

// Natural log of a positive big integer; values past double range are
// shifted down first.
double log_big(const BigInt& value) {
  const unsigned bits = boost::multiprecision::msb(value);
  if (bits < 1000) return std::log(value.convert_to<double>());
  const unsigned shift = bits - 63;
  const BigInt top = value >> shift;
  return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

int widest_m(int n) { return (n + 2) / 2; }  // ceil((n + 1) / 2)

void check_arguments(int m, int body_size, int total_inputs) {
  if (total_inputs < 1) {
    throw ValidationError(-1, "total_inputs", "fan-in must be at least 1");
  }
  if (body_size < 0 || body_size > total_inputs) {
    throw ValidationError(-1, "body",
                          fmt::format("body of {} literals exceeds fan-in {}", body_size,
                                      total_inputs));
  }
  if (m < 0 || m > body_size + 1) {
    throw ValidationError(-1, "m", fmt::format("m = {} outside [0, {}]", m, body_size + 1));
  }
}

double normalized(const BigInt& count, double log_max) {
  if (count <= 1 || log_max <= 0.0) return 0.0;
  return log_big(count) / log_max;
}

}  // namespace

TruthVector evaluate_literal(const Literal& literal, std::span<const double> values) {
  TruthVector out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = literal.holds(values[i]);
  return out;
}

void validate_rule(const MofNRule& rule) { check_arguments(rule.m, rule.n(), rule.total_inputs); }

TruthVector evaluate_rule(const MofNRule& rule, const Matrix& inputs) {
  validate_rule(rule);
  for (const auto& literal : rule.body) {
    if (literal.column >= inputs.cols()) {
      throw ValidationError(-1, "body",
                            fmt::format("literal {} reads column {} but inputs have {}",
                                        format_literal(literal), literal.column, inputs.cols()));
    }
  }
  TruthVector out(inputs.rows());
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    const auto row = inputs.row(r);
    int count = 0;
    for (const auto& literal : rule.body) count += literal.holds(row[literal.column]) ? 1 : 0;
    out[r] = count >= rule.m;
  }
  return out;
}

double rule_error(const MofNRule& rule, const Matrix& inputs, const TruthVector& target) {
  if (target.size() != inputs.rows()) {
    throw ValidationError(-1, "target", "target length differs from example count");
  }
  if (target.empty()) throw ValidationError(-1, "target", "empty example set");
  const TruthVector predicted = evaluate_rule(rule, inputs);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < target.size(); ++i) mismatches += predicted[i] != target[i];
  return static_cast<double>(mismatches) / static_cast<double>(target.size());
}

double rule_complexity(int m, int body_size, int total_inputs) {
  check_arguments(m, body_size, total_inputs);
  if (m == 0 || m == body_size + 1 || total_inputs == 1) return 0.0;
  const int d = widest_m(total_inputs);
  const double log_max = log_big(d * binomial(total_inputs, d));
  return normalized(m * binomial(body_size, m), log_max);
}

double rule_loss(double error, double complexity, double beta) {
  return error + beta * complexity;
}

ScoredRule score_rule(const MofNRule& rule, const Matrix& inputs, const TruthVector& target,
                      double beta) {
  ScoredRule scored;
  scored.rule = rule;
  scored.beta = beta;
  scored.error = rule_error(rule, inputs, target);
  scored.complexity = rule_complexity(rule.m, rule.n(), rule.total_inputs);
  scored.loss = rule_loss(scored.error, scored.complexity, beta);
  return scored;
}

ComplexityTable::ComplexityTable(int total_inputs, int max_body)
    : total_inputs_(total_inputs), max_body_(max_body) {
  check_arguments(0, max_body, total_inputs);
  const int d = widest_m(total_inputs);
  const double log_max = total_inputs == 1 ? 0.0 : log_big(d * binomial(total_inputs, d));

  rows_.resize(static_cast<std::size_t>(max_body) + 1);
  std::vector<BigInt> pascal{1};
  for (int n = 0; n <= max_body; ++n) {
    if (n > 0) {
      std::vector<BigInt> next(static_cast<std::size_t>(n) + 1);
      next.front() = 1;
      next.back() = 1;
      for (int k = 1; k < n; ++k) next[k] = pascal[k - 1] + pascal[k];
      pascal = std::move(next);
    }
    auto& row = rows_[static_cast<std::size_t>(n)];
    row.assign(static_cast<std::size_t>(n) + 2, 0.0);
    for (int m = 1; m <= n; ++m) row[static_cast<std::size_t>(m)] = normalized(m * pascal[m], log_max);
  }
}

double ComplexityTable::at(int m, int body_size) const {
  if (body_size < 0 || body_size > max_body_ || m < 0 || m > body_size + 1) {
    throw ValidationError(-1, "m", fmt::format("({}, {}) outside complexity table", m, body_size));
  }
  return rows_[static_cast<std::size_t>(body_size)][static_cast<std::size_t>(m)];
}

bool preferred(const ScoredRule& a, const ScoredRule& b) {
  if (a.loss != b.loss) return a.loss < b.loss;
  if (a.complexity != b.complexity) return a.complexity < b.complexity;
  if (a.rule.n() != b.rule.n()) return a.rule.n() < b.rule.n();
  return a.rule.m < b.rule.m;
}

std::vector<std::vector<Literal>> to_dnf(const MofNRule& rule) {
  validate_rule(rule);
  constexpr int kMaxBody = 20;
  if (rule.n() > kMaxBody) {
    throw BudgetError(fmt::format("DNF expansion limited to {} body literals, rule has {}",
                                  kMaxBody, rule.n()));
  }
  std::vector<std::vector<Literal>> terms;
  if (rule.always_false()) return terms;
  if (rule.always_true()) return {{}};

  const int n = rule.n();
  const int m = rule.m;
  std::vector<int> pick(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) pick[static_cast<std::size_t>(i)] = i;
  while (true) {
    auto& term = terms.emplace_back();
    for (int i : pick) term.push_back(rule.body[static_cast<std::size_t>(i)]);
    int i = m - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - m + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < m; ++j) {
      pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return terms;
}

bool evaluate_dnf(const std::vector<std::vector<Literal>>& dnf,
                  std::span<const double> example) {
  return std::any_of(dnf.begin(), dnf.end(), [&](const auto& term) {
    return std::all_of(term.begin(), term.end(),
                       [&](const Literal& l) { return l.holds(example[l.column]); });
  });
}

std::string format_literal(const Literal& literal) {
  const std::string index = literal.neuron.is_padding()
                                ? std::string("pad")
                                : fmt::format("{}", literal.neuron.index);
  const std::string atom =
      fmt::format("x[{}:{}]>{}", literal.neuron.layer, index, literal.threshold);
  return literal.polarity == Polarity::kPositive ? atom : fmt::format("¬({})", atom);
}

std::string format_body(const MofNRule& rule) {
  std::string out = fmt::format("{}-of-{{", rule.m);
  for (std::size_t i = 0; i < rule.body.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_literal(rule.body[i]);
  }
  out += "}";
  return out;
}

std::string format_rule(const MofNRule& rule) {
  return fmt::format("{} <- {}", format_literal(rule.head), format_body(rule));
}

}  // namespace monrex
