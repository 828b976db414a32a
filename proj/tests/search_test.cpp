#include "monrex/search.hpp"

#include <random>

#include <gtest/gtest.h>

#include "monrex/error.hpp"
#include "monrex/oracle.hpp"
#include "test_util.hpp"

namespace monrex {
namespace {

using testing::conv;
using testing::dense;
using testing::make_model;

struct Problem {
  Matrix inputs;
  TruthVector target;
  std::vector<Literal> literals;
};

Problem perceptron_problem(std::vector<double> weights, double bias) {
  Problem p;
  p.inputs = binary_product_space(static_cast<int>(weights.size()));
  p.target = perceptron_truth(weights, bias, p.inputs);
  p.literals = make_input_literals(weights, p.inputs, p.target);
  return p;
}

// Correlated real-valued inputs and a noisy thresholded linear target.
Problem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t rows) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> weight(-1, 1);
  Problem p;
  p.inputs = Matrix(rows, n);
  std::vector<double> w(n);
  for (double& x : w) x = weight(rng);
  p.target.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double shared = normal(rng);
    double z = 0.3 * normal(rng);
    for (std::size_t c = 0; c < n; ++c) {
      p.inputs(r, c) = 0.7 * shared + normal(rng);
      z += w[c] * p.inputs(r, c);
    }
    p.target[r] = z > 0.0;
  }
  p.literals = make_input_literals(w, p.inputs, p.target);
  return p;
}

TEST(SearchNeuron, PerceptronFindsZeroErrorRule) {
  const Problem p = perceptron_problem({1.0, -0.5}, 1.0);
  const ScoredRule best = search_neuron({}, p.literals, p.inputs, p.target, 0.0);
  EXPECT_EQ(best.error, 0.0);
  EXPECT_EQ(best.loss, 0.0);
  EXPECT_EQ(rule_error(best.rule, p.inputs, p.target), 0.0);
}

TEST(SearchNeuron, LargeBetaGivesZeroComplexity) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Problem p = random_problem(rng, 6, 80);
    const ScoredRule best = search_neuron({}, p.literals, p.inputs, p.target, 10.0);
    EXPECT_EQ(best.complexity, 0.0);
    EXPECT_TRUE(best.rule.trivial() || (best.rule.m == 1 && best.rule.n() == 1));
  }
}

TEST(SearchNeuron, ConstantTargetGivesAlwaysTrue) {
  std::mt19937_64 rng(6);
  Problem p = random_problem(rng, 4, 20);
  p.target.assign(20, true);
  for (double beta : {0.0, 0.3, 5.0}) {
    const ScoredRule best = search_neuron({}, p.literals, p.inputs, p.target, beta);
    EXPECT_TRUE(best.rule.always_true());
    EXPECT_TRUE(best.rule.body.empty());
    EXPECT_EQ(best.loss, 0.0);
  }
  p.target.assign(20, false);
  const ScoredRule never = search_neuron({}, p.literals, p.inputs, p.target, 0.0);
  EXPECT_TRUE(never.rule.always_false());
  EXPECT_EQ(format_body(never.rule), "1-of-{}");
}

TEST(SearchNeuron, EmptyLiteralListStillReturnsTrivialRule) {
  Matrix inputs(3, 0);
  const TruthVector target{true, true, false};
  const ScoredRule best = search_neuron({}, {}, inputs, target, 0.0);
  EXPECT_TRUE(best.rule.always_true());
  EXPECT_NEAR(best.error, 1.0 / 3.0, 1e-15);
}

TEST(SearchNeuron, MatchesSequentialReEnumeration) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + trial % 9;
    const Problem p = random_problem(rng, n, 60);
    for (double beta : {0.0, 0.05, 0.1, 0.5}) {
      const ScoredRule fast = search_neuron({}, p.literals, p.inputs, p.target, beta);
      EXPECT_EQ(fast, score_rule(fast.rule, p.inputs, p.target, beta));

      const int total = static_cast<int>(n);
      std::optional<ScoredRule> best;
      const auto consider = [&](int m, int body) {
        MofNRule rule;
        rule.m = m;
        rule.total_inputs = total;
        rule.body.assign(p.literals.begin(), p.literals.begin() + body);
        const ScoredRule s = score_rule(rule, p.inputs, p.target, beta);
        EXPECT_LE(fast.loss, s.loss + 1e-15);
        if (!best || preferred(s, *best)) best = s;
      };
      consider(0, 0);
      consider(1, 0);
      for (int body = 1; body <= total; ++body)
        for (int m = 1; m <= body; ++m) consider(m, body);
      EXPECT_EQ(fast, *best) << "trial " << trial << " beta " << beta;
    }
  }
}

TEST(SearchNeuron, BodyCapLimitsCandidates) {
  std::mt19937_64 rng(8);
  const Problem p = random_problem(rng, 8, 50);
  for (int cap : {0, 1, 3}) {
    const ScoredRule best = search_neuron({}, p.literals, p.inputs, p.target, 0.0, cap);
    EXPECT_LE(best.rule.n(), cap);
    EXPECT_EQ(best.rule.total_inputs, 8);
  }
}

TEST(SearchNeuron, BetaMonotonicity) {
  std::mt19937_64 rng(9);
  const std::vector<double> betas{0.0, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0, 10.0};
  for (int trial = 0; trial < 60; ++trial) {
    const Problem p = random_problem(rng, 2 + trial % 12, 100);
    const auto rules = search_neuron_sweep({}, p.literals, p.inputs, p.target, betas);
    for (std::size_t b = 1; b < rules.size(); ++b) {
      EXPECT_LE(rules[b].complexity, rules[b - 1].complexity) << "trial " << trial;
      EXPECT_GE(rules[b].error, rules[b - 1].error) << "trial " << trial;
    }
  }
}

TEST(SearchNeuron, SweepAgreesWithSingleBetaCalls) {
  std::mt19937_64 rng(10);
  const Problem p = random_problem(rng, 7, 70);
  const std::vector<double> betas{0.0, 0.1, 0.3};
  const auto sweep = search_neuron_sweep({}, p.literals, p.inputs, p.target, betas);
  for (std::size_t b = 0; b < betas.size(); ++b) {
    EXPECT_EQ(sweep[b], search_neuron({}, p.literals, p.inputs, p.target, betas[b]));
  }
}

TEST(SearchConfig, Validation) {
  SearchConfig config;
  EXPECT_NO_THROW(config.validate());
  config.betas = {};
  EXPECT_THROW(config.validate(), ValidationError);
  config.betas = {0.1, 0.0};
  EXPECT_THROW(config.validate(), ValidationError);
  config.betas = {0.1, 0.1};
  EXPECT_THROW(config.validate(), ValidationError);
  config.betas = {-0.1};
  EXPECT_THROW(config.validate(), ValidationError);
  config.betas = {0.0};
  config.workers = 0;
  EXPECT_THROW(config.validate(), ValidationError);
}

NetworkModel random_dense_model(std::mt19937_64& rng, std::size_t inputs, std::size_t width) {
  LayerSpec head = dense(width, 3, testing::random_floats(width * 3, rng),
                         testing::random_floats(3, rng));
  head.kind = LayerKind::kSoftmax;
  head.activation = Activation::kNone;
  return make_model(Shape{{inputs}},
                    {dense(inputs, width, testing::random_floats(inputs * width, rng),
                           testing::random_floats(width, rng), Activation::kTanh),
                     head});
}

Dataset random_data(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  Dataset data;
  data.examples = Matrix(rows, cols);
  data.examples.data() = testing::random_floats(rows * cols, rng, -2, 2);
  return data;
}

TEST(SearchLayer, ReportCounts) {
  std::mt19937_64 rng(11);
  auto single = make_model(Shape{{3}}, {dense(3, 1, {0.5, -1, 0.25}, {0.1})});
  const auto forward1 = forward_all(single, random_data(rng, 40, 3));
  EXPECT_EQ(search_layer(single, forward1, 0, SearchConfig{}).size(), 1u);

  LayerSpec head = dense(8 * 4 * 4 / 4, 2, testing::random_floats(64, rng), {0, 0});
  head.kind = LayerKind::kSoftmax;
  head.activation = Activation::kNone;
  const auto cnn = make_model(
      Shape{{4, 4, 1}},
      {conv(3, 3, 1, 16, testing::random_floats(144, rng), testing::random_floats(16, rng)),
       testing::maxpool(), dense(64, 2, testing::random_floats(128, rng), {0, 0}), head});
  const auto forward2 = forward_all(cnn, random_data(rng, 30, 16));
  SearchConfig config;
  config.betas = {0.0, 0.1};
  const auto reports = search_layer(cnn, forward2, 0, config);
  ASSERT_EQ(reports.size(), 16u);
  for (std::size_t f = 0; f < 16; ++f) {
    EXPECT_EQ(reports[f].target.feature_map, f);
    EXPECT_EQ(reports[f].total_inputs, 9);
    EXPECT_EQ(reports[f].rules.size(), 2u);
    EXPECT_EQ(reports[f].curve.points.size(), 2u);
  }
  EXPECT_THROW(search_layer(cnn, forward2, 1, config), ValidationError);
}

TEST(SearchLayer, MatchesOracleOverWeightOrderedCandidates) {
  std::mt19937_64 rng(12);
  const auto model = random_dense_model(rng, 6, 8);
  const auto forward = forward_all(model, random_data(rng, 120, 6));
  SearchConfig config;
  config.betas = {0.0, 0.1};
  const auto reports = search_layer(model, forward, 0, config);
  ASSERT_EQ(reports.size(), 8u);
  for (const auto& report : reports) {
    const TargetProblem problem = prepare_target(model, forward, report.target);
    for (std::size_t b = 0; b < 2; ++b) {
      double best = 1e300;
      for (int body = 0; body <= 6; ++body) {
        for (int m = body == 0 ? 0 : 1; m <= (body == 0 ? 1 : body); ++m) {
          MofNRule rule;
          rule.m = m;
          rule.total_inputs = 6;
          rule.body.assign(problem.literals.begin(), problem.literals.begin() + body);
          best = std::min(best, score_rule(rule, problem.inputs.values, problem.truth,
                                           config.betas[b]).loss);
        }
      }
      EXPECT_NEAR(report.rules[b].loss, best, 1e-12) << "neuron " << report.target.neuron;
      EXPECT_EQ(report.rules[b].rule.head, report.head);
    }
  }
}

TEST(SearchLayer, OracleGapIsNonNegative) {
  std::mt19937_64 rng(13);
  const auto model = random_dense_model(rng, 5, 4);
  const auto forward = forward_all(model, random_data(rng, 64, 5));
  SearchConfig config;
  config.betas = {0.0, 0.2};
  config.oracle = OracleBudget{};
  for (int layer : {0, 1}) {
    for (const auto& report : search_layer(model, forward, layer, config)) {
      ASSERT_EQ(report.oracle.size(), 2u);
      for (const auto& check : report.oracle) EXPECT_GE(check.gap, 0.0);
    }
  }
}

TEST(SearchLayer, IndependentOfWorkerCount) {
  std::mt19937_64 rng(14);
  const auto model = random_dense_model(rng, 9, 12);
  const auto forward = forward_all(model, random_data(rng, 200, 9));
  SearchConfig config;
  config.betas = {0.0, 0.05, 0.3};
  const auto one = search_layer(model, forward, 0, config);
  for (std::size_t workers : {4u, 16u}) {
    config.workers = workers;
    EXPECT_EQ(search_layer(model, forward, 0, config), one);
  }
}

TEST(SearchLayer, DegenerateTargetUsesTrivialRules) {
  // A dead relu neuron is constant zero.
  const auto model = make_model(Shape{{2}}, {dense(2, 1, {0.0, 0.0}, {-1.0}, Activation::kRelu)});
  const auto forward = forward_all(model, testing::make_dataset({{0, 1}, {1, 0}, {1, 1}}));
  const auto reports = search_layer(model, forward, 0, SearchConfig{});
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_TRUE(reports[0].degenerate);
  EXPECT_TRUE(reports[0].rules[0].rule.trivial());
  EXPECT_EQ(reports[0].rules[0].loss, 0.0);
}

ExtractionReport report_with(std::vector<std::pair<double, double>> complexity_error,
                             std::vector<double> betas) {
  ExtractionReport report;
  for (std::size_t b = 0; b < betas.size(); ++b) {
    ScoredRule rule;
    rule.beta = betas[b];
    rule.complexity = complexity_error[b].first;
    rule.error = complexity_error[b].second;
    report.rules.push_back(rule);
  }
  return report;
}

TEST(SweepCurve, MeansPerBeta) {
  const std::vector<ExtractionReport> one{report_with({{0.5, 0.1}, {0.2, 0.3}}, {0.0, 0.1})};
  const TradeoffCurve single = sweep_curve(one);
  EXPECT_EQ(single.points, (std::vector<CurvePoint>{{0.0, 0.5, 0.1}, {0.1, 0.2, 0.3}}));

  const std::vector<ExtractionReport> two{report_with({{0.2, 0.0}}, {0.1}),
                                          report_with({{0.4, 0.1}}, {0.1})};
  const TradeoffCurve mean = sweep_curve(two);
  EXPECT_NEAR(mean.points[0].complexity, 0.3, 1e-15);
  EXPECT_NEAR(mean.points[0].error, 0.05, 1e-15);

  const std::vector<ExtractionReport> mismatched{report_with({{0.2, 0.0}}, {0.1}),
                                                 report_with({{0.4, 0.1}}, {0.2})};
  EXPECT_THROW(sweep_curve(mismatched), ValidationError);
}

}  // namespace
}  // namespace monrex
