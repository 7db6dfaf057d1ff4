#include "cedl/eval.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cedl/error.hpp"
#include "oracles.hpp"

namespace cedl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Random set with at least one label of each class and, optionally, many
// duplicated scores drawn from a small grid.
ScoredSet random_set(std::mt19937_64& gen, std::size_t max_n, bool ties) {
  const std::size_t n = 2 + gen() % (max_n - 1);
  ScoredSet s;
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (std::size_t i = 0; i < n; ++i) {
    s.scores.push_back(ties ? static_cast<double>(gen() % 7) * 0.5 : u(gen));
    s.labels.push_back(static_cast<int>(gen() % 3 == 0));
  }
  s.labels[0] = 0;
  s.labels[1] = 1;
  return s;
}

ErrorKind error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

TEST(AurocTest, Examples) {
  EXPECT_DOUBLE_EQ(auroc({{0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}}), 0.75);
  EXPECT_EQ(auroc({{0.1, 0.2, 0.9, 1.0}, {0, 0, 1, 1}}), 1.0);
  EXPECT_EQ(auroc({{0.5, 0.5, 0.5}, {0, 1, 1}}), 0.5);
  EXPECT_EQ(error_kind([] { auroc({{0.1, 0.2}, {1, 1}}); }), ErrorKind::UndefinedMetric);
  EXPECT_EQ(error_kind([] { auroc({{0.1}, {0, 1}}); }), ErrorKind::Dimension);
}

TEST(AurocTest, MatchesPairwiseOracle) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_set(gen, 50, trial % 2 == 0);
    EXPECT_NEAR(auroc(s), oracle::brute_auroc(s.scores, s.labels), 1e-12);
  }
}

TEST(AurocTest, InvariantUnderIncreasingTransforms) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_set(gen, 50, trial % 2 == 0);
    const double base = auroc(s);
    ScoredSet e = s;
    ScoredSet a = s;
    for (auto& v : e.scores) v = std::exp(v);
    for (auto& v : a.scores) v = 2.5 * v - 7.0;
    EXPECT_NEAR(auroc(e), base, 1e-12);
    EXPECT_NEAR(auroc(a), base, 1e-12);
  }
}

TEST(AurocTest, ComplementWithoutTies) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_set(gen, 50, false);
    ScoredSet neg = s;
    for (auto& v : neg.scores) v = -v;
    EXPECT_NEAR(auroc(s) + auroc(neg), 1.0, 1e-12);
  }
}

TEST(AuprTest, Examples) {
  EXPECT_DOUBLE_EQ(aupr({{0.2, 0.9}, {1, 0}}), 0.5);
  EXPECT_EQ(aupr({{0.9, 0.8, 0.1}, {1, 1, 0}}), 1.0);
  EXPECT_DOUBLE_EQ(aupr({{0.1, 0.5, 0.6, 0.7, 0.8}, {1, 0, 0, 0, 0}}), 0.2);
  // Tied block processed in index order: the positive at index 1 ranks second.
  EXPECT_DOUBLE_EQ(aupr({{0.5, 0.5}, {0, 1}}), 0.5);
  EXPECT_EQ(aupr({{0.5, 0.5}, {1, 0}}), 1.0);
  EXPECT_EQ(error_kind([] { aupr({{0.1, 0.2}, {0, 0}}); }), ErrorKind::UndefinedMetric);
}

TEST(AuprTest, MatchesAveragePrecisionOracle) {
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_set(gen, 50, trial % 2 == 0);
    EXPECT_NEAR(aupr(s), oracle::brute_average_precision(s.scores, s.labels), 1e-12);
  }
}

TEST(BestF1Test, Examples) {
  const auto perfect = best_f1({{0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}});
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_DOUBLE_EQ(perfect.threshold, 0.5);
  const auto tied = best_f1({{0.3, 0.3}, {1, 1}});
  EXPECT_EQ(tied.f1, 1.0);
  EXPECT_EQ(tied.threshold, -kInf);
  EXPECT_EQ(error_kind([] { best_f1({{0.1}, {0}}); }), ErrorKind::UndefinedMetric);
}

TEST(BestF1Test, MatchesExhaustiveScanAndBeatsFixedThresholds) {
  std::mt19937_64 gen(15);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_set(gen, 30, trial % 2 == 0);
    const auto got = best_f1(s);
    const auto want = oracle::exhaustive_f1(s.scores, s.labels);
    EXPECT_NEAR(got.f1, want.f1, 1e-12);
    EXPECT_EQ(got.threshold, want.threshold);
    EXPECT_NEAR(oracle::f1_at(s.scores, s.labels, got.threshold), got.f1, 1e-12);
    const double p = static_cast<double>(std::count(s.labels.begin(), s.labels.end(), 1));
    const double n = static_cast<double>(s.labels.size()) - p;
    EXPECT_GE(got.f1 + 1e-15, 2.0 * p / (2.0 * p + n));
    for (int k = 0; k < 100; ++k) {
      EXPECT_GE(got.f1 + 1e-15, oracle::f1_at(s.scores, s.labels, u(gen)));
    }
  }
}

TEST(EvaluateTest, ReportAndMean) {
  const ScoredSet s{{0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}};
  const auto r = evaluate(s);
  EXPECT_DOUBLE_EQ(r.auroc, 0.75);
  EXPECT_EQ(r.positives, 2u);
  EXPECT_EQ(r.negatives, 2u);
  EXPECT_DOUBLE_EQ(r.aupr, oracle::brute_average_precision(s.scores, s.labels));

  MetricReport a{1.0, 0.5, 0.4, 1.0, 2, 3};
  MetricReport b{0.5, 0.25, 0.6, 3.0, 1, 4};
  const std::vector<MetricReport> both{a, b};
  const auto m = mean_report(both);
  EXPECT_DOUBLE_EQ(m.auroc, 0.75);
  EXPECT_DOUBLE_EQ(m.aupr, 0.375);
  EXPECT_DOUBLE_EQ(m.best_f1, 0.5);
  EXPECT_DOUBLE_EQ(m.best_threshold, 2.0);
  EXPECT_EQ(m.positives, 3u);
  EXPECT_EQ(m.negatives, 7u);
}

TEST(ScoreTest, DistanceAndProbability) {
  SeededRng rng(1);
  const auto model = init_encoder(mlp_specs(2, {}, 2, Activation::Identity, Activation::Identity), rng);
  Matrix x(3, 2);
  x(1, 0) = 1.0;
  x(2, 0) = 2.0;
  ObjectiveConfig cfg;
  cfg.alpha = 2.0;
  const Matrix reps = encode(model, x);
  cfg.centre = {reps(0, 0), reps(0, 1)};
  const auto s = score(model, cfg, x);
  EXPECT_EQ(s.raw[0], 0.0);
  EXPECT_EQ(s.probability[0], 0.5);
  EXPECT_NEAR(s.raw[2], 2.0 * s.raw[1], 1e-12);
  EXPECT_GT(s.probability[2], s.probability[1]);
  EXPECT_NEAR(s.probability[1], stable_sigmoid(2.0 / std::sqrt(2.0) * s.raw[1]), 1e-15);

  cfg.centre = {0.0, 0.0, 0.0};
  EXPECT_EQ(error_kind([&] { score(model, cfg, x); }), ErrorKind::Dimension);
}

TEST(ScoreTest, RankingByRawEqualsRankingByProbability) {
  std::mt19937_64 gen(16);
  SeededRng rng(2);
  const auto model = init_encoder(mlp_specs(4, std::vector<std::size_t>{6}, 3, Activation::Relu, Activation::Tanh), rng);
  Matrix x(40, 4);
  std::normal_distribution<double> n;
  for (auto& v : x.data()) v = n(gen);
  ObjectiveConfig cfg;
  cfg.centre = {0.1, -0.2, 0.0};
  const auto s = score(model, cfg, x);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 40; ++j) {
      if (s.raw[i] < s.raw[j]) EXPECT_LE(s.probability[i], s.probability[j]);
    }
  }
}

TEST(ScoreTest, BceDetectorUsesHeadLogit) {
  SeededRng rng(3);
  Detector det;
  det.encoder = init_encoder(mlp_specs(2, {}, 2, Activation::Identity, Activation::Identity), rng);
  det.kind = ObjectiveKind::Bce;
  det.objective = with_origin_centre({}, 2);
  det.head = {{0.5, -1.0}, 0.25};
  Matrix x(2, 2);
  x(0, 0) = 1.0;
  x(1, 1) = -2.0;
  const auto s = score(det, x);
  const Matrix reps = encode(det.encoder, x);
  for (std::size_t i = 0; i < 2; ++i) {
    const double logit = 0.5 * reps(i, 0) - 1.0 * reps(i, 1) + 0.25;
    EXPECT_NEAR(s.raw[i], logit, 1e-15);
    EXPECT_NEAR(s.probability[i], stable_sigmoid(logit), 1e-15);
  }
}

}  // namespace
}  // namespace cedl
