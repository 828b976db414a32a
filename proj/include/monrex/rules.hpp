#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "monrex/literal.hpp"
#include "monrex/matrix.hpp"

namespace monrex {

// head <- m-of-body. m == 0 is the always-true rule and m == body.size() + 1
// the always-false rule. total_inputs is the fan-in n of the head neuron and
// fixes the complexity normalization.
struct MofNRule {
  Literal head;
  std::vector<Literal> body;
  int m = 0;
  int total_inputs = 1;

  int n() const { return static_cast<int>(body.size()); }
  bool always_true() const { return m == 0; }
  bool always_false() const { return m == n() + 1; }
  bool trivial() const { return always_true() || always_false(); }

  bool operator==(const MofNRule&) const = default;
};

struct ScoredRule {
  MofNRule rule;
  double error = 0.0;
  double complexity = 0.0;
  double loss = 0.0;
  double beta = 0.0;

  bool operator==(const ScoredRule&) const = default;
};

// Throws ValidationError on an out-of-range m or a body longer than the fan-in.
void validate_rule(const MofNRule& rule);

// True for each example where at least m body literals hold.
TruthVector evaluate_rule(const MofNRule& rule, const Matrix& inputs);

// Fraction of examples where rule and target disagree.
double rule_error(const MofNRule& rule, const Matrix& inputs, const TruthVector& target);

// log(m * C(N, m)) / log(d * C(n, d)) with d = ceil((n + 1) / 2). Trivial
// rules, the 1-of-1 rule and n == 1 targets score 0.
double rule_complexity(int m, int body_size, int total_inputs);

double rule_loss(double error, double complexity, double beta);

ScoredRule score_rule(const MofNRule& rule, const Matrix& inputs, const TruthVector& target,
                      double beta);

// Precomputed rule_complexity for every (m, N) with N <= max_body, sharing
// one fan-in. Values are identical to rule_complexity.
class ComplexityTable {
 public:
  ComplexityTable(int total_inputs, int max_body);

  int total_inputs() const { return total_inputs_; }
  int max_body() const { return max_body_; }
  double at(int m, int body_size) const;

 private:
  int total_inputs_;
  int max_body_;
  std::vector<std::vector<double>> rows_;
};

// Total preference order used by every search: lower loss, then lower
// complexity, then shorter body, then smaller m.
bool preferred(const ScoredRule& a, const ScoredRule& b);

// Every size-m conjunction over the body; literal count is m * C(N, m).
// The always-true rule yields one empty conjunction, the always-false rule
// none. Bodies longer than 20 literals are rejected.
std::vector<std::vector<Literal>> to_dnf(const MofNRule& rule);
bool evaluate_dnf(const std::vector<std::vector<Literal>>& dnf,
                  std::span<const double> example);

// `x[layer:index]>a` or `¬(x[layer:index]>a)`; network inputs use layer -1
// and padding cells print `pad` for the index.
std::string format_literal(const Literal& literal);
// `M-of-{lit, lit, ...}`
std::string format_body(const MofNRule& rule);
// `head <- M-of-{...}`
std::string format_rule(const MofNRule& rule);

}  // namespace monrex
