#include "cedl/optimizer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cedl/error.hpp"

namespace cedl {
namespace {

TEST(AdamStepTest, ZeroGradientLeavesParametersUnchanged) {
  AdamState state(3, 1e-3);
  Vec params{1.0, -2.0, 0.5};
  const Vec before = params;
  adam_step(state, params, Vec(3, 0.0));
  EXPECT_EQ(params, before);
  EXPECT_EQ(state.t, 1u);
}

TEST(AdamStepTest, FirstStepMagnitudeIsLearningRate) {
  for (double g : {1e-3, 0.5, -7.0, 1e4}) {
    AdamState state(1, 1e-4);
    Vec p{0.0};
    adam_step(state, p, Vec{g});
    // m_hat = g, v_hat = g^2, so |step| = lr |g| / (|g| + eps).
    EXPECT_NEAR(std::abs(p[0]), 1e-4 * std::abs(g) / (std::abs(g) + 1e-8), 1e-18);
    EXPECT_EQ(std::signbit(p[0]), g > 0);
  }
}

TEST(AdamStepTest, MatchesReferenceLoopOnQuadratic) {
  // Independent scalar Adam on f(theta) = theta^2 from theta = 1.
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double theta = 1.0, m = 0.0, v = 0.0;
  std::vector<double> expected;
  for (int t = 1; t <= 5; ++t) {
    const double g = 2.0 * theta;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    theta -= lr * mh / (std::sqrt(vh) + eps);
    expected.push_back(theta);
  }

  AdamState state(1, lr);
  Vec p{1.0};
  for (int t = 0; t < 5; ++t) {
    adam_step(state, p, Vec{2.0 * p[0]});
    EXPECT_NEAR(p[0], expected[t], 1e-12) << "step " << t + 1;
  }
}

TEST(AdamStepTest, StepBoundedByLearningRateOnConstantGradients) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0.0, 100.0);
  Vec grads(8);
  for (auto& g : grads) g = n(gen);
  for (double scale : {1e-3, 1.0, 1e5}) {
    AdamState state(8, 1e-3);
    Vec p(8, 0.0);
    Vec scaled = grads;
    for (auto& g : scaled) g *= scale;
    for (int t = 1; t <= 150; ++t) {
      const Vec before = p;
      adam_step(state, p, scaled);
      if (t >= 100) {
        for (int i = 0; i < 8; ++i) EXPECT_LE(std::abs(p[i] - before[i]), 1e-3 * (1 + 1e-6));
      }
    }
  }
}

TEST(AdamStepTest, DeterministicAndValidated) {
  AdamState a(2, 0.01), b(2, 0.01);
  Vec pa{0.3, 0.4}, pb{0.3, 0.4};
  for (int i = 0; i < 10; ++i) {
    adam_step(a, pa, Vec{0.1 * i, -0.2});
    adam_step(b, pb, Vec{0.1 * i, -0.2});
  }
  EXPECT_EQ(pa, pb);
  EXPECT_EQ(a.m, b.m);
  EXPECT_EQ(a.v, b.v);
  for (double v : a.v) EXPECT_GE(v, 0.0);

  try {
    adam_step(a, pa, Vec{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
  const Vec before = pa;
  const auto t_before = a.t;
  try {
    adam_step(a, pa, Vec{1.0, std::nan("")});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Gradient);
  }
  EXPECT_EQ(pa, before);
  EXPECT_EQ(a.t, t_before);
}

TEST(SgdStepTest, Examples) {
  Vec p{1.0, 2.0};
  sgd_step(p, Vec{1.0, 1.0}, 0.0);
  EXPECT_EQ(p, (Vec{1.0, 2.0}));
  sgd_step(p, Vec{1.0, 1.0}, 0.5);
  EXPECT_EQ(p, (Vec{0.5, 1.5}));
  EXPECT_THROW(sgd_step(p, Vec{1.0}, 0.1), Error);

  std::mt19937_64 gen(5);
  std::normal_distribution<double> n;
  Vec q(20), g(20);
  for (int i = 0; i < 20; ++i) { q[i] = n(gen); g[i] = n(gen); }
  Vec expected = q;
  for (int i = 0; i < 20; ++i) expected[i] = q[i] - 0.03 * g[i];
  sgd_step(q, g, 0.03);
  EXPECT_EQ(q, expected);
}

}  // namespace
}  // namespace cedl
