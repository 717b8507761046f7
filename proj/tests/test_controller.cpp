#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace riccatitron;

namespace {

Riccatitron MakeController(const LinearSystem& sys, long T, ConfigOverrides overrides = {}) {
  const RiccatiInfinite r = SolveInfiniteHorizon(sys);
  const ProblemScales scales = ComputeProblemScales(sys, r.P);
  return Riccatitron(DefaultConfig(sys, scales, r, r.kappa, r.gamma, T, overrides));
}

}  // namespace

TEST(DefaultLookahead, ZeroDynamics) {
  const LinearSystem sys = rt_test::Scalar(0.0);
  const RiccatiInfinite r = SolveInfiniteHorizon(sys);
  const ProblemScales scales = ComputeProblemScales(sys, r.P);
  EXPECT_EQ(DefaultLookahead(scales, r, 100), 19);
  EXPECT_EQ(DefaultLookahead(scales, r, 1), 0);
  EXPECT_GE(DefaultLookahead(scales, r, 10000), DefaultLookahead(scales, r, 100));
  EXPECT_THROW(DefaultLookahead(scales, r, 0), ConfigError);
}

TEST(DefaultConfig, OverridesApply) {
  ConfigOverrides o;
  o.h = 3;
  o.m = 2;
  o.R = 0.5;
  o.learner = LearnerKind::kOns;
  const LinearSystem sys = rt_test::Scalar(0.5);
  const RiccatiInfinite r = SolveInfiniteHorizon(sys);
  const RiccatitronConfig c = DefaultConfig(sys, ComputeProblemScales(sys, r.P), r, r.kappa, r.gamma, 50, o);
  EXPECT_EQ(c.h, 3);
  EXPECT_EQ(c.dap_set.m, 2);
  EXPECT_EQ(c.dap_set.R, 0.5);
  EXPECT_EQ(c.learner, LearnerKind::kOns);
  o.m = 0;
  EXPECT_THROW(DefaultConfig(sys, ComputeProblemScales(sys, r.P), r, r.kappa, r.gamma, 50, o), ConfigError);
}

TEST(Riccatitron, FirstActionIsInfiniteHorizonFeedback) {
  std::mt19937_64 rng(1);
  const LinearSystem sys = rt_test::RandomSystem(rng, 3, 2);
  Riccatitron c = MakeController(sys, 100);
  const Vector x = rt_test::Gaussian(rng, 3, 1);
  EXPECT_LE((c.Act(x) + c.config().ricc_inf.K * x).norm(), 1e-12);
}

TEST(Riccatitron, ProtocolViolations) {
  Riccatitron c = MakeController(rt_test::Scalar(0.5), 20);
  EXPECT_THROW(c.Observe(Vector::Zero(1)), ProtocolError);
  c.Act(Vector::Zero(1));
  EXPECT_THROW(c.Act(Vector::Zero(1)), ProtocolError);
  EXPECT_THROW(c.Observe(Vector::Constant(1, 1.5)), ProtocolError);
  c.Observe(Vector::Constant(1, 1.0));
  EXPECT_EQ(c.round(), 2);
}

TEST(Riccatitron, LossForNoLookaheadSingleBlock) {
  ConfigOverrides o;
  o.h = 0;
  o.m = 1;
  Riccatitron c = MakeController(rt_test::Scalar(0.0), 10, o);
  const std::vector<double> w = {0.3, -0.8, 0.5};
  for (size_t k = 0; k < w.size(); ++k) {
    c.Act(Vector::Zero(1));
    c.Observe(Vector::Constant(1, w[k]));
    ASSERT_TRUE(c.last_loss().has_value());
    EXPECT_EQ(c.last_loss_round(), static_cast<long>(k + 1));
    const double prev = k == 0 ? 0.0 : w[k - 1];
    for (double theta : {-0.7, 0.0, 0.4}) {
      const double expected = 2.0 * std::pow(theta * prev - 0.5 * w[k], 2);
      EXPECT_NEAR(c.last_loss()->Value(Vector::Constant(1, theta)), expected, 1e-14);
    }
  }
}

TEST(Riccatitron, ZeroDisturbancesStayAtRest) {
  std::mt19937_64 rng(2);
  const LinearSystem sys = rt_test::RandomSystem(rng, 2, 2);
  Riccatitron c = MakeController(sys, 200);
  const Trajectory tr = Simulate(sys, c, DisturbanceSequence::Zero(2, 200));
  EXPECT_EQ(tr.total_cost, 0.0);
  EXPECT_EQ(Vectorize(c.current_policy()).norm(), 0.0);
}

TEST(Riccatitron, DeterministicAcrossRuns) {
  std::mt19937_64 rng(3);
  const LinearSystem sys = rt_test::RandomSystem(rng, 2, 1, 0.8);
  const DisturbanceSequence w = rt_test::RandomDisturbances(rng, 2, 150);
  Riccatitron a = MakeController(sys, 150);
  Riccatitron b = MakeController(sys, 150);
  const Trajectory ta = Simulate(sys, a, w);
  const Trajectory tb = Simulate(sys, b, w);
  ASSERT_EQ(ta.u.size(), tb.u.size());
  for (size_t i = 0; i < ta.u.size(); ++i) EXPECT_EQ(ta.u[i], tb.u[i]);
  EXPECT_EQ(ta.total_cost, tb.total_cost);
}

TEST(Riccatitron, IteratesStayFeasibleAndStatesBounded) {
  std::mt19937_64 rng(4);
  for (LearnerKind kind : {LearnerKind::kVaw, LearnerKind::kOns}) {
    const LinearSystem sys = rt_test::RandomSystem(rng, 2, 2);
    ConfigOverrides o;
    o.learner = kind;
    Riccatitron c = MakeController(sys, 300, o);
    const DisturbanceSequence w = rt_test::RandomDisturbances(rng, 2, 300);
    Vector x = Vector::Zero(2);
    double max_state = 0.0;
    for (int t = 1; t <= 300; ++t) {
      const Vector u = c.Act(x);
      EXPECT_TRUE(c.config().dap_set.Contains(c.current_policy(), 1e-8)) << "round " << t;
      x = sys.A() * x + sys.B() * u + w.at(t);
      c.Observe(w.at(t));
      max_state = std::max(max_state, x.norm());
    }
    EXPECT_TRUE(std::isfinite(max_state));
    // State stays within the disturbance-to-state gain of the stabilized loop.
    const double bias_bound = c.config().dap_set.R / (1.0 - c.config().dap_set.gamma);
    const double kappa = c.config().ricc_inf.kappa;
    const double gamma = c.config().ricc_inf.gamma;
    EXPECT_LE(max_state, kappa * (1.0 + OpNorm(sys.B()) * bias_bound) / (1.0 - gamma) + 1e-9);
  }
}

TEST(Riccatitron, LossMatchesApproximateAdvantage) {
  std::mt19937_64 rng(5);
  const LinearSystem sys = rt_test::RandomSystem(rng, 2, 2);
  ConfigOverrides o;
  o.h = 3;
  o.m = 4;
  Riccatitron c = MakeController(sys, 60, o);
  const DisturbanceSequence w = rt_test::RandomDisturbances(rng, 2, 60);
  Vector x = Vector::Zero(2);
  for (int t = 1; t <= 60; ++t) {
    x = sys.A() * x + sys.B() * c.Act(x) + w.at(t);
    c.Observe(w.at(t));
    if (!c.last_loss()) {
      EXPECT_LT(t, 4);
      continue;
    }
    const int s = static_cast<int>(c.last_loss_round());
    EXPECT_EQ(s, t - 3);
    std::vector<Vector> history;
    for (int i = 1; i <= 4 && s - i >= 1; ++i) history.push_back(w.at(s - i));
    std::vector<Vector> window;
    for (int i = 0; i <= 3; ++i) window.push_back(w.at(s + i));
    for (int k = 0; k < 3; ++k) {
      std::vector<Matrix> blocks;
      for (int i = 0; i < 4; ++i) blocks.push_back(rt_test::Gaussian(rng, 2, 2));
      const DapPolicy M(blocks);
      const double expected = ApproxAdvantage(M, history, window, c.config().ricc_inf);
      EXPECT_NEAR(c.last_loss()->Value(Vectorize(M)), expected, 1e-10 * std::max(1.0, expected));
    }
  }
}
