#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "test_util.hpp"

using namespace riccatitron;

namespace {

ControllerSpec KInfController() {
  ControllerSpec c;
  c.kind = ControllerKind::kKInf;
  return c;
}

}  // namespace

TEST(Simulate, HandRolledScalar) {
  const LinearSystem sys = rt_test::Scalar(0.5);
  FeedbackPolicy zero(Matrix::Zero(1, 1));
  const DisturbanceSequence w(1, {Vector::Ones(1), Vector::Zero(1)});
  const Trajectory tr = Simulate(sys, zero, w);
  ASSERT_EQ(tr.x.size(), 3u);
  EXPECT_EQ(tr.x[1](0), 1.0);
  EXPECT_EQ(tr.x[2](0), 0.5);
  EXPECT_EQ(tr.step_costs[0], 0.0);
  EXPECT_EQ(tr.step_costs[1], 1.0);
  EXPECT_EQ(tr.total_cost, 1.0);
  EXPECT_EQ(tr.cumulative_costs, (std::vector<double>{0.0, 1.0}));

  FeedbackPolicy half(Matrix::Constant(1, 1, 0.5));
  const Trajectory t2 = Simulate(sys, half, w);
  // x₂ = 1, u₂ = −0.5, x₃ = 0.5 − 0.5 = 0
  EXPECT_DOUBLE_EQ(t2.total_cost, 1.25);
  EXPECT_DOUBLE_EQ(t2.x[2](0), 0.0);
  EXPECT_DOUBLE_EQ(FeedbackCost(sys, Matrix::Constant(1, 1, 0.5), w), 1.25);
}

TEST(Simulate, OptimalPolicyBeatsRandomFeedback) {
  std::mt19937_64 rng(1);
  const LinearSystem sys = rt_test::RandomSystem(rng, 2, 1);
  const DisturbanceSequence w = rt_test::RandomDisturbances(rng, 2, 40);
  OptimalPolicy opt(sys, w);
  const double best = Simulate(sys, opt, w).total_cost;
  const RiccatiInfinite r = SolveInfiniteHorizon(sys);
  EXPECT_LE(best, FeedbackCost(sys, r.K, w) + 1e-12);
  for (int k = 0; k < 5; ++k) {
    const Matrix K = r.K + rt_test::Gaussian(rng, 1, 2, 0.1);
    EXPECT_LE(best, FeedbackCost(sys, K, w) + 1e-12);
  }
}

TEST(DisturbanceGen, NormBoundOverManyDraws) {
  const std::vector<DisturbanceGen> gens = {
      DisturbanceGen::ClippedGaussian(7, 3.0), DisturbanceGen::Rademacher(7),
      DisturbanceGen::Sinusoid(Vector::Constant(3, 2.0), 0.013, 0.3), DisturbanceGen::AlternatingBias(0.9),
      DisturbanceGen::Constant(Vector::Constant(3, 5.0))};
  for (const DisturbanceGen& g : gens) {
    const DisturbanceSequence w = g.Generate(3, 100000);
    double worst = 0.0;
    for (const Vector& v : w.values()) worst = std::max(worst, v.norm());
    EXPECT_LE(worst, 1.0 + 1e-12) << g.Name();
  }
}

TEST(DisturbanceGen, Examples) {
  const DisturbanceSequence r = DisturbanceGen::Rademacher(3).Generate(4, 50);
  for (const Vector& v : r.values())
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(std::abs(v(i)), 0.5);

  const DisturbanceSequence a = DisturbanceGen::AlternatingBias(0.5).Generate(2, 4);
  EXPECT_DOUBLE_EQ(a.at(1)(0), (-1.0 + 0.25) / 1.25);
  EXPECT_DOUBLE_EQ(a.at(2)(0), (1.0 + 0.25) / 1.25);
  EXPECT_EQ(a.at(2)(1), 0.0);

  const DisturbanceSequence s = DisturbanceGen::Sinusoid(Vector::Ones(1), 0.25, 0.0).Generate(1, 4);
  EXPECT_NEAR(s.at(1)(0), 1.0, 1e-15);
  EXPECT_NEAR(s.at(2)(0), 0.0, 1e-15);

  const DisturbanceSequence g1 = DisturbanceGen::ClippedGaussian(11, 0.3).Generate(2, 20);
  const DisturbanceSequence g2 = DisturbanceGen::ClippedGaussian(11, 0.3).Generate(2, 20);
  for (int t = 1; t <= 20; ++t) EXPECT_EQ(g1.at(t), g2.at(t));
  EXPECT_EQ(DisturbanceGen::Zero().Generate(2, 5).at(3).norm(), 0.0);
}

TEST(BestFeedbackInHindsight, MatchesDenseScanOnScalar) {
  const LinearSystem sys = rt_test::Scalar(0.8);
  const DisturbanceSequence w = DisturbanceGen::Sinusoid(Vector::Ones(1), 0.05, 0.0).Generate(1, 200);
  const double kappa0 = 1.0;
  const double gamma0 = 0.9;
  const FeedbackOptimum opt = BestFeedbackInHindsight(sys, w, kappa0, gamma0, GridSpec{21, 2}, 2);
  // Scalar certificate: κ = 1, γ = |a − K|.
  double scan = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 4000; ++i) {
    const double k = -kappa0 + 2.0 * kappa0 * i / 4000.0;
    if (std::abs(0.8 - k) > gamma0) continue;
    scan = std::min(scan, FeedbackCost(sys, Matrix::Constant(1, 1, k), w));
  }
  EXPECT_GT(opt.feasible_cells, 0);
  EXPECT_LE(std::abs(opt.K(0, 0)), kappa0 + 1e-12);
  EXPECT_LE(opt.J, scan * (1.0 + 1e-6));
  EXPECT_NEAR(opt.J, FeedbackCost(sys, opt.K, w), 1e-9 * opt.J);
}

TEST(BestFeedbackInHindsight, RejectsLargeProblemsAndEmptyGrids) {
  std::mt19937_64 rng(2);
  const LinearSystem big = rt_test::RandomSystem(rng, 3, 2);
  EXPECT_THROW(BestFeedbackInHindsight(big, DisturbanceSequence::Zero(3, 5), 1.0, 0.5), ConfigError);
  // No K with |K| ≤ 0.1 stabilizes a = 3 to γ ≤ 0.5.
  EXPECT_THROW(BestFeedbackInHindsight(rt_test::Scalar(3.0), DisturbanceSequence::Zero(1, 5), 0.1, 0.5),
               ConfigError);
}

TEST(BestDapInHindsight, ScalarZeroDynamicsClosedForm) {
  // A = 0 gives K∞ = 0 and x_{t+1} = w_t − M w_{t−1}, u_t = −M w_{t−1}, so
  // J(M) = Σ_t (w_{t−1} − M w_{t−2})² + M² w_{t−1}².
  const LinearSystem sys = rt_test::Scalar(0.0);
  const RiccatiInfinite r = SolveInfiniteHorizon(sys);
  std::mt19937_64 rng(3);
  const DisturbanceSequence w = rt_test::RandomDisturbances(rng, 1, 60);
  double a = 0.0, b = 0.0;
  for (int t = 1; t <= 60; ++t) {
    const double wp = w.at(t - 1)(0);
    const double wpp = w.at(t - 2)(0);
    a += wpp * wpp + wp * wp;
    b += wp * wpp;
  }
  for (double R : {5.0, 0.05}) {
    const double M_star = std::clamp(b / a, -R, R);
    const DapOptimum opt = BestDapInHindsight(sys, r, w, DapSet{1, R, 0.0});
    EXPECT_NEAR(opt.M.block(1)(0, 0), M_star, 1e-7);
    DapPolicy M(1, 1, 1);
    M.block(1)(0, 0) = M_star;
    EXPECT_NEAR(opt.J, DapCost(sys, r, w, M), 1e-9 * std::max(1.0, opt.J));
    // Impulse scan: no grid point does better.
    for (int i = -200; i <= 200; ++i) {
      M.block(1)(0, 0) = R * i / 200.0;
      EXPECT_GE(DapCost(sys, r, w, M), opt.J - 1e-9);
    }
  }
}

TEST(BestDapInHindsight, NeverWorseThanZeroPolicyOrRandomMembers) {
  std::mt19937_64 rng(4);
  const LinearSystem sys = rt_test::RandomSystem(rng, 2, 2, 0.9);
  const RiccatiInfinite r = SolveInfiniteHorizon(sys);
  const DisturbanceSequence w = rt_test::RandomDisturbances(rng, 2, 80);
  const DapSet set{3, 0.5, 0.6};
  const DapOptimum opt = BestDapInHindsight(sys, r, w, set);
  EXPECT_TRUE(set.Contains(opt.M, 1e-9));
  EXPECT_LE(opt.J, DapCost(sys, r, w, DapPolicy::Zero(3, 2, 2)) + 1e-9);
  for (int k = 0; k < 20; ++k) {
    std::vector<Matrix> blocks;
    for (int i = 0; i < 3; ++i) blocks.push_back(rt_test::Gaussian(rng, 2, 2));
    const DapPolicy M = ProjectDap(DapPolicy(blocks), set);
    EXPECT_LE(opt.J, DapCost(sys, r, w, M) * (1.0 + 1e-7));
  }
}

TEST(RegretExperiment, ZeroDisturbancesGiveZeroRegret) {
  const LinearSystem sys = rt_test::Scalar(0.9);
  ControllerSpec c;
  ComparatorSpec comp;
  comp.mode = ComparatorMode::kBoth;
  const ExperimentResult r = RegretExperiment(sys, c, DisturbanceGen::Zero(), {16, 32}, comp, 2);
  ASSERT_EQ(r.rows.size(), 4u);
  for (const RegretRow& row : r.rows) {
    EXPECT_EQ(row.J_alg, 0.0);
    EXPECT_EQ(row.regret, 0.0);
  }
  EXPECT_EQ(r.baseline_rows.size(), r.rows.size());
}

TEST(RegretExperiment, DeterministicAcrossThreadCounts) {
  const LinearSystem sys = rt_test::Scalar(0.9);
  ControllerSpec c;
  ComparatorSpec comp;
  const DisturbanceGen gen = DisturbanceGen::ClippedGaussian(5, 0.5);
  const ExperimentResult a = RegretExperiment(sys, c, gen, {16, 64, 128}, comp, 1);
  const ExperimentResult b = RegretExperiment(sys, c, gen, {16, 64, 128}, comp, 3);
  ASSERT_EQ(a.rows.size(), 3u);
  for (size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].t, b.rows[i].t);
    EXPECT_EQ(a.rows[i].J_alg, b.rows[i].J_alg);
    EXPECT_EQ(a.rows[i].J_comparator, b.rows[i].J_comparator);
    EXPECT_EQ(a.baseline_rows[i].J_alg, b.baseline_rows[i].J_alg);
  }
}

TEST(RegretExperiment, KInfControllerMatchesBaseline) {
  const LinearSystem sys = rt_test::Scalar(0.7);
  ComparatorSpec comp;
  comp.kind = ComparatorKind::kKInf;
  const ExperimentResult r =
      RegretExperiment(sys, KInfController(), DisturbanceGen::Rademacher(1), {20, 40}, comp, 1);
  for (size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(r.rows[i].J_alg, r.baseline_rows[i].J_alg);
    EXPECT_EQ(r.rows[i].regret, 0.0);
  }
}

TEST(RegretExperiment, RejectsBadCheckpoints) {
  const LinearSystem sys = rt_test::Scalar(0.5);
  EXPECT_THROW(RegretExperiment(sys, {}, DisturbanceGen::Zero(), {}, {}, 1), ConfigError);
  EXPECT_THROW(RegretExperiment(sys, {}, DisturbanceGen::Zero(), {0}, {}, 1), ConfigError);
}

TEST(CounterexampleExperiment, MatchesHandRolledScalarOns) {
  const long T = 16;
  const CounterexampleReport rep = CounterexampleExperiment(T);
  const double mu = 0.25;
  EXPECT_DOUBLE_EQ(rep.mu, mu);
  const double comparator = (1.0 - 0.2 * mu) * (1.0 - 0.2 * mu);
  EXPECT_DOUBLE_EQ(comparator, 0.9025);

  const double G = 2.0 * mu * (1.0 + 0.2 * mu);
  const double eta = 2.0 * std::max(4.0 * G * 0.4, 4.0);
  const double eps = eta * eta / 0.4;
  EXPECT_DOUBLE_EQ(rep.eta, eta);
  EXPECT_DOUBLE_EQ(rep.epsilon, eps);

  double E = eps, z = 0.0, prev = 0.0, loss = 0.0, movement = 0.0;
  for (long t = 1; t <= T; ++t) {
    loss += (1.0 - mu * z) * (1.0 - mu * z);
    if (t > 1) movement += std::abs(z - prev);
    prev = z;
    const double g = -2.0 * mu * (1.0 - mu * z);
    E += g * g;
    z = std::clamp(z - eta * g / E, -0.2, 0.2);
  }
  EXPECT_NEAR(rep.lambda_regret, loss - T * comparator, 1e-12);
  EXPECT_NEAR(rep.movement_cost, movement, 1e-12);
  EXPECT_GE(rep.stationarization_gap, 0.0);
  EXPECT_THROW(CounterexampleExperiment(8), ConfigError);
}

TEST(ResolveThreads, ExplicitValueWins) {
  EXPECT_EQ(ResolveThreads(3), 3);
  EXPECT_GE(ResolveThreads(0), 1);
}
