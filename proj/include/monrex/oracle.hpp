#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "monrex/literal.hpp"
#include "monrex/matrix.hpp"
#include "monrex/rules.hpp"
#include "monrex/splitter.hpp"

namespace monrex {

// Brute-force references. They enumerate exponentially many candidates and
// refuse to run past these caps.
struct OracleBudget {
  int max_inputs = 10;
  std::size_t max_examples = 4096;
};

// Minimal-loss M-of-S rule over every subset S of `literals` and every
// 0 <= M <= |S| + 1. Subsets are enumerated by ascending bitmask; ties follow
// `preferred` and then the smaller bitmask. Trivial rules are reported with
// an empty body. The fan-in used for complexity is literals.size().
ScoredRule exhaustive_best_rule(std::span<const Literal> literals, const Matrix& inputs,
                                const TruthVector& target, double beta,
                                const OracleBudget& budget = {}, std::size_t workers = 1);

// Same, for every beta in one pass over the subsets.
std::vector<ScoredRule> exhaustive_sweep(std::span<const Literal> literals, const Matrix& inputs,
                                         const TruthVector& target, std::span<const double> betas,
                                         const OracleBudget& budget = {},
                                         std::size_t workers = 1);

// All 2^n points of {0,1}^n; row r sets x_j to bit (n - 1 - j) of r.
Matrix binary_product_space(int n, const OracleBudget& budget = {});

// Active iff w.x + b > 0.
TruthVector perceptron_truth(std::span<const double> weights, double bias, const Matrix& inputs);

// Recomputes every candidate threshold's partition and gain from scratch.
SplitResult exhaustive_split_scan(std::span<const double> values, std::span<const int> labels);

}  // namespace monrex
