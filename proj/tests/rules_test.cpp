#include "monrex/rules.hpp"

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "monrex/error.hpp"
#include "monrex/oracle.hpp"

namespace monrex {
namespace {

Literal input_literal(std::size_t column, Polarity polarity = Polarity::kPositive,
                      double threshold = 0.5) {
  return Literal{NeuronId{kInputLayer, static_cast<std::int64_t>(column)}, column, threshold,
                 polarity};
}

MofNRule rule_of(int m, std::vector<Literal> body, int total_inputs = 0) {
  MofNRule rule;
  rule.m = m;
  rule.total_inputs = total_inputs > 0 ? total_inputs : std::max<int>(1, static_cast<int>(body.size()));
  rule.body = std::move(body);
  return rule;
}

TEST(RuleError, PerceptronExample) {
  const Matrix points = binary_product_space(2);
  const double w[] = {1.0, -0.5};
  const TruthVector truth = perceptron_truth(w, 1.0, points);
  const MofNRule rule = rule_of(1, {input_literal(0), input_literal(1, Polarity::kNegated)});
  EXPECT_NEAR(rule_error(rule, points, truth), 0.25, 1e-12);
  // The disagreement is exactly at (0, 1).
  const TruthVector fired = evaluate_rule(rule, points);
  EXPECT_EQ(fired, (TruthVector{true, false, true, true}));
}

TEST(RuleError, CountingExamples) {
  Matrix inputs(10, 1);
  TruthVector target(10, false);
  target[0] = target[4] = target[9] = true;
  EXPECT_NEAR(rule_error(rule_of(0, {}), inputs, target), 0.7, 1e-12);
  EXPECT_NEAR(rule_error(rule_of(1, {}), inputs, target), 0.3, 1e-12);

  for (std::size_t r = 0; r < 10; ++r) inputs(r, 0) = target[r] ? 1.0 : 0.0;
  EXPECT_EQ(rule_error(rule_of(1, {input_literal(0)}), inputs, target), 0.0);
  EXPECT_THROW(rule_error(rule_of(0, {}), Matrix(0, 1), TruthVector{}), ValidationError);
  EXPECT_THROW(rule_error(rule_of(1, {input_literal(3)}), inputs, target), ValidationError);
}

TEST(RuleError, InvariantUnderPermutations) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unit(0, 1);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix inputs(30, 6);
    TruthVector target(30);
    for (std::size_t r = 0; r < 30; ++r) {
      for (std::size_t c = 0; c < 6; ++c) inputs(r, c) = unit(rng);
      target[r] = coin(rng);
    }
    std::vector<Literal> body;
    for (std::size_t c = 0; c < 6; ++c) {
      body.push_back(input_literal(c, coin(rng) ? Polarity::kPositive : Polarity::kNegated, unit(rng)));
    }
    const int m = std::uniform_int_distribution<int>(0, 7)(rng);
    const double base = rule_error(rule_of(m, body), inputs, target);

    std::shuffle(body.begin(), body.end(), rng);
    EXPECT_EQ(rule_error(rule_of(m, body), inputs, target), base);

    std::vector<std::size_t> perm(30);
    for (std::size_t i = 0; i < 30; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix shuffled(30, 6);
    TruthVector shuffled_target(30);
    for (std::size_t r = 0; r < 30; ++r) {
      for (std::size_t c = 0; c < 6; ++c) shuffled(r, c) = inputs(perm[r], c);
      shuffled_target[r] = target[perm[r]];
    }
    EXPECT_EQ(rule_error(rule_of(m, body), shuffled, shuffled_target), base);
  }
}

TEST(EvaluateRule, Semantics) {
  const Matrix point = [] {
    Matrix p(1, 2);
    p(0, 0) = 0.0;
    p(0, 1) = 1.0;
    return p;
  }();
  EXPECT_EQ(evaluate_rule(rule_of(1, {input_literal(0), input_literal(1, Polarity::kNegated)}), point),
            (TruthVector{false}));
  EXPECT_EQ(evaluate_rule(rule_of(0, {}), point), (TruthVector{true}));
  EXPECT_EQ(evaluate_rule(rule_of(1, {}), point), (TruthVector{false}));
  EXPECT_EQ(evaluate_rule(rule_of(3, {input_literal(0), input_literal(1)}), point),
            (TruthVector{false}));
  EXPECT_THROW(evaluate_rule(rule_of(4, {input_literal(0), input_literal(1)}), point),
               ValidationError);
}

TEST(EvaluateRule, ThresholdTieFallsOnNegatedSide) {
  Matrix at(1, 1);
  at(0, 0) = 0.5;
  EXPECT_EQ(evaluate_rule(rule_of(1, {input_literal(0)}), at), (TruthVector{false}));
  EXPECT_EQ(evaluate_rule(rule_of(1, {input_literal(0, Polarity::kNegated)}), at),
            (TruthVector{true}));
}

TEST(EvaluateRule, TwoOfThreeMatchesHandExpansion) {
  const Matrix points = binary_product_space(3);
  const MofNRule rule =
      rule_of(2, {input_literal(0), input_literal(1), input_literal(2, Polarity::kNegated)});
  const TruthVector fired = evaluate_rule(rule, points);
  for (std::size_t r = 0; r < 8; ++r) {
    const bool x1 = points(r, 0) > 0.5, x2 = points(r, 1) > 0.5, x3 = points(r, 2) > 0.5;
    EXPECT_EQ(fired[r], (x1 && x2) || (x2 && !x3) || (x1 && !x3)) << "row " << r;
  }
}

TEST(EvaluateRule, AgreesWithDnfUpToEightLiterals) {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution coin(0.5);
  for (int n = 1; n <= 8; ++n) {
    const Matrix points = binary_product_space(n);
    std::vector<Literal> body;
    for (int i = 0; i < n; ++i) {
      body.push_back(input_literal(static_cast<std::size_t>(i),
                                   coin(rng) ? Polarity::kPositive : Polarity::kNegated));
    }
    for (int m = 0; m <= n + 1; ++m) {
      const MofNRule rule = rule_of(m, body);
      const TruthVector fired = evaluate_rule(rule, points);
      const auto dnf = to_dnf(rule);
      for (std::size_t r = 0; r < points.rows(); ++r) {
        ASSERT_EQ(fired[r], evaluate_dnf(dnf, points.row(r))) << m << "-of-" << n << " row " << r;
      }
    }
  }
}

TEST(RuleComplexity, ReferenceValues) {
  EXPECT_NEAR(rule_complexity(1, 2, 2), 1.0, 1e-12);
  for (int n : {1, 2, 5, 13, 100}) EXPECT_EQ(rule_complexity(1, 1, n), 0.0);
  EXPECT_NEAR(rule_complexity(2, 3, 4), 0.72105705434887016, 1e-12);
  EXPECT_NEAR(rule_complexity(3, 4, 13), 0.26453014817942245, 1e-12);
  EXPECT_EQ(rule_complexity(0, 5, 9), 0.0);
  EXPECT_EQ(rule_complexity(6, 5, 9), 0.0);
  EXPECT_EQ(rule_complexity(0, 0, 9), 0.0);
  EXPECT_EQ(rule_complexity(1, 0, 9), 0.0);
  EXPECT_EQ(rule_complexity(1, 1, 1), 0.0);
  // The widest rule over the full fan-in is the normalizer.
  EXPECT_NEAR(rule_complexity(7, 13, 13), 1.0, 1e-12);
}

TEST(RuleComplexity, RejectsIllegalArguments) {
  EXPECT_THROW(rule_complexity(1, 3, 2), ValidationError);
  EXPECT_THROW(rule_complexity(5, 3, 4), ValidationError);
  EXPECT_THROW(rule_complexity(-1, 3, 4), ValidationError);
  EXPECT_THROW(rule_complexity(1, 1, 0), ValidationError);
}

TEST(RuleComplexity, BoundedByOne) {
  for (int n = 1; n <= 40; ++n) {
    for (int body = 0; body <= n; ++body) {
      for (int m = 0; m <= body + 1; ++m) {
        const double c = rule_complexity(m, body, n);
        ASSERT_GE(c, 0.0);
        ASSERT_LE(c, 1.0 + 1e-12) << m << "," << body << "," << n;
      }
    }
  }
  // Huge fan-ins still produce finite values.
  const double big = rule_complexity(500, 1000, 4096);
  EXPECT_GT(big, 0.0);
  EXPECT_LT(big, 1.0);
}

TEST(RuleComplexity, WidestMIsCeilHalf) {
  const auto count = [](std::uint64_t n, std::uint64_t m) {
    std::uint64_t binom = 1;
    for (std::uint64_t i = 1; i <= m; ++i) binom = binom * (n - m + i) / i;
    return m * binom;
  };
  for (std::uint64_t n = 1; n <= 30; ++n) {
    const std::uint64_t d = (n + 2) / 2;
    for (std::uint64_t m = 1; m <= n; ++m) ASSERT_LE(count(n, m), count(n, d)) << n << "," << m;
    // The normalizer is reached exactly by the widest rule over the full fan-in.
    EXPECT_NEAR(rule_complexity(static_cast<int>(d), static_cast<int>(n), static_cast<int>(n)),
                n == 1 ? 0.0 : 1.0, 1e-12);
  }
}

TEST(ComplexityTable, MatchesDirectFormula) {
  for (int n : {1, 2, 3, 13, 64, 400}) {
    const int cap = std::min(n, 64);
    const ComplexityTable table(n, cap);
    for (int body = 0; body <= cap; ++body) {
      for (int m = 0; m <= body + 1; ++m) {
        ASSERT_EQ(table.at(m, body), rule_complexity(m, body, n)) << m << "," << body << "," << n;
      }
    }
    EXPECT_THROW(table.at(1, cap + 1), ValidationError);
  }
}

TEST(RuleLoss, Arithmetic) {
  EXPECT_EQ(rule_loss(0.25, 1.0, 0.0), 0.25);
  EXPECT_EQ(rule_loss(0.0, 0.5, 2.0), 1.0);
  EXPECT_NEAR(rule_loss(0.043, rule_complexity(3, 4, 13), 0.1), 0.06945301481794224, 1e-12);
}

TEST(ScoreRule, CombinesTheThreeTerms) {
  const Matrix points = binary_product_space(2);
  const double w[] = {1.0, -0.5};
  const TruthVector truth = perceptron_truth(w, 1.0, points);
  const MofNRule rule = rule_of(1, {input_literal(0), input_literal(1, Polarity::kNegated)});
  const ScoredRule scored = score_rule(rule, points, truth, 0.3);
  EXPECT_NEAR(scored.error, 0.25, 1e-12);
  EXPECT_NEAR(scored.complexity, 1.0, 1e-12);
  EXPECT_NEAR(scored.loss, 0.55, 1e-12);
  EXPECT_EQ(scored.beta, 0.3);
}

TEST(Preferred, TotalOrder) {
  ScoredRule a, b;
  a.loss = 0.1;
  b.loss = 0.2;
  EXPECT_TRUE(preferred(a, b));
  b.loss = 0.1;
  a.complexity = 0.3;
  b.complexity = 0.2;
  EXPECT_TRUE(preferred(b, a));
  a.complexity = b.complexity;
  a.rule = rule_of(1, {input_literal(0)}, 3);
  b.rule = rule_of(1, {input_literal(0), input_literal(1)}, 3);
  EXPECT_TRUE(preferred(a, b));
  b.rule = rule_of(0, {input_literal(0)}, 3);
  EXPECT_TRUE(preferred(b, a));
  EXPECT_FALSE(preferred(a, a));
}

TEST(ToDnf, Expansions) {
  const Literal a = input_literal(0), b = input_literal(1), c = input_literal(2);
  const auto two = to_dnf(rule_of(2, {a, b, c}));
  ASSERT_EQ(two.size(), 3u);
  EXPECT_EQ(two[0], (std::vector<Literal>{a, b}));
  EXPECT_EQ(two[1], (std::vector<Literal>{a, c}));
  EXPECT_EQ(two[2], (std::vector<Literal>{b, c}));

  const auto all = to_dnf(rule_of(3, {a, b, c}));
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].size(), 3u);

  const auto any = to_dnf(rule_of(1, {a, b, c}));
  std::size_t literals = 0;
  for (const auto& term : any) literals += term.size();
  EXPECT_EQ(any.size(), 3u);
  EXPECT_EQ(literals, 3u);

  EXPECT_EQ(to_dnf(rule_of(0, {a})), (std::vector<std::vector<Literal>>{{}}));
  EXPECT_TRUE(to_dnf(rule_of(2, {a})).empty());
}

TEST(ToDnf, LiteralCountIsMTimesBinomial) {
  std::vector<Literal> body;
  for (std::size_t i = 0; i < 10; ++i) body.push_back(input_literal(i));
  for (int m = 1; m <= 10; ++m) {
    std::size_t literals = 0;
    for (const auto& term : to_dnf(rule_of(m, body))) literals += term.size();
    std::size_t binom = 1;
    for (int i = 1; i <= m; ++i) binom = binom * static_cast<std::size_t>(10 - m + i) / static_cast<std::size_t>(i);
    EXPECT_EQ(literals, static_cast<std::size_t>(m) * binom);
  }
}

TEST(ToDnf, GuardsLargeBodies) {
  std::vector<Literal> body;
  for (std::size_t i = 0; i < 21; ++i) body.push_back(input_literal(i));
  EXPECT_THROW(to_dnf(rule_of(10, body)), BudgetError);
}

TEST(Printer, Format) {
  MofNRule rule = rule_of(1, {input_literal(0), input_literal(1, Polarity::kNegated)});
  rule.head = Literal{NeuronId{0, 0}, 0, 0.25, Polarity::kPositive};
  EXPECT_EQ(format_literal(rule.body[0]), "x[-1:0]>0.5");
  EXPECT_EQ(format_literal(rule.body[1]), "¬(x[-1:1]>0.5)");
  EXPECT_EQ(format_body(rule), "1-of-{x[-1:0]>0.5, ¬(x[-1:1]>0.5)}");
  EXPECT_EQ(format_rule(rule), "x[0:0]>0.25 <- 1-of-{x[-1:0]>0.5, ¬(x[-1:1]>0.5)}");
  EXPECT_EQ(format_body(rule_of(0, {})), "0-of-{}");
  const Literal pad{NeuronId{2, kPaddingNeuron}, 3, 0.0, Polarity::kPositive};
  EXPECT_EQ(format_literal(pad), "x[2:pad]>0");
}

}  // namespace
}  // namespace monrex
