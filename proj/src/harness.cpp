#include "riccatitron/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "parallel.hpp"

namespace riccatitron {
namespace {

Vector IntoUnitBall(Vector v) {
  const double n = v.norm();
  if (n > 1.0) v /= n;
  return v;
}

}  // namespace

DisturbanceGen DisturbanceGen::Zero() { return {}; }

DisturbanceGen DisturbanceGen::Constant(Vector v) {
  DisturbanceGen g;
  g.kind = Kind::kConstant;
  g.value = std::move(v);
  return g;
}

DisturbanceGen DisturbanceGen::Sinusoid(Vector direction, double frequency, double phase) {
  DisturbanceGen g;
  g.kind = Kind::kSinusoid;
  g.direction = std::move(direction);
  g.frequency = frequency;
  g.phase = phase;
  return g;
}

DisturbanceGen DisturbanceGen::ClippedGaussian(std::uint64_t seed, double scale) {
  DisturbanceGen g;
  g.kind = Kind::kClippedGaussian;
  g.seed = seed;
  g.scale = scale;
  return g;
}

DisturbanceGen DisturbanceGen::Rademacher(std::uint64_t seed) {
  DisturbanceGen g;
  g.kind = Kind::kRademacher;
  g.seed = seed;
  return g;
}

DisturbanceGen DisturbanceGen::AlternatingBias(double mu) {
  DisturbanceGen g;
  g.kind = Kind::kAlternatingBias;
  g.mu = mu;
  return g;
}

std::string DisturbanceGen::Name() const {
  switch (kind) {
    case Kind::kZero: return "zero";
    case Kind::kConstant: return "constant";
    case Kind::kSinusoid: return "sinusoid";
    case Kind::kClippedGaussian: return "clipped_gaussian";
    case Kind::kRademacher: return "rademacher";
    case Kind::kAlternatingBias: return "alternating_bias";
  }
  return "unknown";
}

DisturbanceSequence DisturbanceGen::Generate(int dx, int T) const {
  Require(dx >= 1 && T >= 0, "generator needs dx ≥ 1 and T ≥ 0");
  std::vector<Vector> w;
  w.reserve(static_cast<size_t>(T));
  std::mt19937_64 rng(seed);
  switch (kind) {
    case Kind::kZero:
      w.assign(static_cast<size_t>(T), Vector::Zero(dx));
      break;
    case Kind::kConstant: {
      Require(value.size() == dx, "constant disturbance has the wrong dimension");
      w.assign(static_cast<size_t>(T), IntoUnitBall(value));
      break;
    }
    case Kind::kSinusoid: {
      Require(direction.size() == dx, "sinusoid direction has the wrong dimension");
      const Vector d = IntoUnitBall(direction);
      for (int t = 1; t <= T; ++t) {
        w.push_back(d * std::sin(2.0 * std::numbers::pi * frequency * t + phase));
      }
      break;
    }
    case Kind::kClippedGaussian: {
      Require(scale >= 0.0, "Gaussian scale must be nonnegative");
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int t = 1; t <= T; ++t) {
        Vector v(dx);
        for (int i = 0; i < dx; ++i) v(i) = scale * normal(rng);
        w.push_back(IntoUnitBall(std::move(v)));
      }
      break;
    }
    case Kind::kRademacher: {
      std::bernoulli_distribution coin(0.5);
      const double a = 1.0 / std::sqrt(static_cast<double>(dx));
      for (int t = 1; t <= T; ++t) {
        Vector v(dx);
        for (int i = 0; i < dx; ++i) v(i) = coin(rng) ? a : -a;
        w.push_back(std::move(v));
      }
      break;
    }
    case Kind::kAlternatingBias: {
      const double norm = 1.0 + std::abs(mu) / 2.0;
      for (int t = 1; t <= T; ++t) {
        Vector v = Vector::Zero(dx);
        v(0) = ((t % 2 == 0 ? 1.0 : -1.0) + mu / 2.0) / norm;
        w.push_back(std::move(v));
      }
      break;
    }
  }
  return DisturbanceSequence(dx, std::move(w));
}

Trajectory Simulate(const LinearSystem& system, Policy& policy, const DisturbanceSequence& w) {
  const int T = w.T();
  Require(w.dx() == system.dx(), "disturbance dimension does not match the system");
  Trajectory traj{{}, {}, w, {}, 0.0, {}};
  traj.x.reserve(static_cast<size_t>(T) + 1);
  traj.u.reserve(static_cast<size_t>(T));
  traj.step_costs.reserve(static_cast<size_t>(T));
  traj.cumulative_costs.reserve(static_cast<size_t>(T));
  Vector x = Vector::Zero(system.dx());
  traj.x.push_back(x);
  for (int t = 1; t <= T; ++t) {
    Vector u = policy.Act(x);
    Require(u.size() == system.du(), "policy returned an input of the wrong dimension");
    const double cost = system.StageCost(x, u);
    const Vector& wt = w.values()[static_cast<size_t>(t - 1)];
    x = system.A() * x + system.B() * u + wt;
    policy.Observe(wt);
    traj.u.push_back(std::move(u));
    traj.x.push_back(x);
    traj.step_costs.push_back(cost);
    traj.total_cost += cost;
    traj.cumulative_costs.push_back(traj.total_cost);
  }
  return traj;
}

Vector BiasPolicy::Act(const Vector& x) {
  if (t_ >= q_.size()) throw ProtocolError("bias policy ran past its horizon");
  return -K_ * x - q_[t_];
}

Vector DapFixedPolicy::Act(const Vector& x) { return DapAction(M_, x, history_, K_); }

void DapFixedPolicy::Observe(const Vector& w) {
  history_.insert(history_.begin(), w);
  if (static_cast<int>(history_.size()) > M_.m()) history_.pop_back();
}

OptimalPolicy::OptimalPolicy(const LinearSystem& system, const DisturbanceSequence& w)
    : ricc_(system, std::max(1, w.T())), qstar_(QstarAll(ricc_, system, w)) {}

Vector OptimalPolicy::Act(const Vector& x) {
  if (t_ > ricc_.T()) throw ProtocolError("optimal policy ran past its horizon");
  return -ricc_.K(t_) * x - qstar_[static_cast<size_t>(t_ - 1)];
}

double FeedbackCost(const LinearSystem& system, const Matrix& K, const DisturbanceSequence& w) {
  const Matrix acl = system.A() - system.B() * K;
  Vector x = Vector::Zero(system.dx());
  double total = 0.0;
  for (const Vector& wt : w.values()) {
    const Vector u = -K * x;
    total += system.StageCost(x, u);
    x = acl * x + wt;
  }
  return total;
}

double DapCost(const LinearSystem& system, const RiccatiInfinite& ricc_inf, const DisturbanceSequence& w,
               const DapPolicy& M) {
  DapFixedPolicy policy(M, ricc_inf.K);
  return Simulate(system, policy, w).total_cost;
}

namespace {

bool FeedbackFeasible(const LinearSystem& system, const Matrix& K, double kappa0, double gamma0) {
  if (OpNorm(K) > kappa0) return false;
  try {
    const StabilityCertificate cert = CertifyStrongStability(system, K);
    return cert.kappa <= kappa0 && cert.gamma <= gamma0;
  } catch (const NumericError&) {
    return false;
  }
}

Matrix Unflatten(const Vector& v, int rows, int cols) {
  Matrix K(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) K(r, c) = v(r * cols + c);
  return K;
}

}  // namespace

int ResolveThreads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RICCATITRON_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

FeedbackOptimum BestFeedbackInHindsight(const LinearSystem& system, const DisturbanceSequence& w,
                                        double kappa0, double gamma0, const GridSpec& grid,
                                        int threads) {
  const int du = system.du();
  const int dx = system.dx();
  const int d = du * dx;
  Require(d <= 4, "grid search over K requires dx·du ≤ 4");
  Require(grid.points >= 2, "grid needs at least two points per entry");
  Require(kappa0 > 0.0 && gamma0 >= 0.0 && gamma0 < 1.0, "grid search needs κ0 > 0 and γ0 in [0, 1)");

  size_t cells = 1;
  for (int i = 0; i < d; ++i) cells *= static_cast<size_t>(grid.points);
  const double spacing = 2.0 * kappa0 / (grid.points - 1);
  auto cell_vector = [&](size_t index) {
    Vector v(d);
    for (int i = 0; i < d; ++i) {
      v(i) = -kappa0 + spacing * static_cast<double>(index % static_cast<size_t>(grid.points));
      index /= static_cast<size_t>(grid.points);
    }
    return v;
  };

  std::vector<double> costs(cells, std::numeric_limits<double>::infinity());
  internal::ParallelFor(cells, ResolveThreads(threads), [&](size_t i) {
    const Matrix K = Unflatten(cell_vector(i), du, dx);
    if (FeedbackFeasible(system, K, kappa0, gamma0)) costs[i] = FeedbackCost(system, K, w);
  });

  FeedbackOptimum best;
  size_t best_index = cells;
  for (size_t i = 0; i < cells; ++i) {
    if (!std::isfinite(costs[i])) continue;
    ++best.feasible_cells;
    if (best_index == cells || costs[i] < costs[best_index]) best_index = i;
  }
  if (best_index == cells) {
    std::ostringstream msg;
    msg << "no feasible K on the grid: " << cells << " cells, κ0 = " << kappa0 << ", γ0 = " << gamma0;
    throw ConfigError(msg.str());
  }
  Vector k = cell_vector(best_index);
  best.J = costs[best_index];

  for (int pass = 0; pass < grid.refine_passes; ++pass) {
    double step = spacing / 2.0;
    for (int halving = 0; halving < 12; ++halving, step /= 2.0) {
      for (int i = 0; i < d; ++i) {
        for (double sign : {1.0, -1.0}) {
          Vector trial = k;
          trial(i) += sign * step;
          const Matrix K = Unflatten(trial, du, dx);
          if (!FeedbackFeasible(system, K, kappa0, gamma0)) continue;
          const double J = FeedbackCost(system, K, w);
          if (J < best.J) {
            best.J = J;
            k = trial;
          }
        }
      }
    }
  }
  best.K = Unflatten(k, du, dx);
  return best;
}

DapOptimum BestDapInHindsight(const LinearSystem& system, const RiccatiInfinite& ricc_inf,
                              const DisturbanceSequence& w, const DapSet& set, const PgdOptions& options) {
  const int dx = system.dx();
  const int du = system.du();
  const int m = set.m;
  const int d = m * du * dx;
  const Matrix& K = ricc_inf.K;
  const Matrix& acl = ricc_inf.Acl;

  // J(θ) = θᵀHθ + 2gᵀθ + c with x_t = x0_t + X_t θ and u_t = u0_t + U_t θ.
  Matrix H = Matrix::Zero(d, d);
  Vector g = Vector::Zero(d);
  Vector x0 = Vector::Zero(dx);
  Matrix X = Matrix::Zero(dx, d);
  std::vector<Vector> history;
  for (int t = 1; t <= w.T(); ++t) {
    const Matrix F = BiasFeatureMatrix(history, m, du, dx);
    const Vector u0 = -K * x0;
    const Matrix U = -K * X - F;
    H.noalias() += X.transpose() * system.Rx() * X + U.transpose() * system.Ru() * U;
    g.noalias() += X.transpose() * (system.Rx() * x0) + U.transpose() * (system.Ru() * u0);
    const Vector& wt = w.values()[static_cast<size_t>(t - 1)];
    x0 = acl * x0 + wt;
    X = acl * X - system.B() * F;
    history.insert(history.begin(), wt);
    if (static_cast<int>(history.size()) > m) history.pop_back();
  }
  H = 0.5 * (H + H.transpose());
  const ConstraintSet C = ConstraintSet::MakeDap(set, du, dx);
  auto quad = [&](const Vector& theta) { return theta.dot(H * theta) + 2.0 * g.dot(theta); };

  DapOptimum result{DapPolicy::Zero(m, du, dx), 0.0, true, 0};
  Vector theta = Vector::Zero(d);
  if (!g.isZero(0.0)) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(H);
    theta = -cod.solve(g);
  }
  if (!C.Contains(theta)) {
    // λmax(H) by power iteration; the gradient of J is 2(Hθ + g).
    Vector v = Vector::Ones(d).normalized();
    double lambda = 0.0;
    for (int k = 0; k < 500; ++k) {
      Vector hv = H * v;
      const double n = hv.norm();
      if (n == 0.0) break;
      const double next = v.dot(hv);
      v = hv / n;
      if (std::abs(next - lambda) <= 1e-12 * std::max(1.0, std::abs(next))) {
        lambda = next;
        break;
      }
      lambda = next;
    }
    const double L = 2.0 * lambda * 1.01;
    theta = C.Project(theta);
    double value = quad(theta);
    Vector best = theta;
    double best_value = value;
    result.converged = false;
    if (L > 0.0) {
      for (int k = 1; k <= options.max_iter; ++k) {
        theta = C.Project(theta - (2.0 / L) * (H * theta + g));
        const double next = quad(theta);
        result.iterations = k;
        if (next < best_value) {
          best_value = next;
          best = theta;
        }
        if (std::abs(value - next) <= options.tol * std::max(1.0, std::abs(next))) {
          result.converged = true;
          break;
        }
        value = next;
      }
    } else {
      result.converged = true;
    }
    theta = best;
  }
  result.M = Devectorize(theta, m, du, dx);
  result.J = DapCost(system, ricc_inf, w, result.M);
  return result;
}

std::string ToString(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kRiccatitron: return "riccatitron";
    case ControllerKind::kKInf: return "k_inf";
    case ControllerKind::kFixedK: return "fixed_k";
  }
  return "unknown";
}

std::string ToString(ComparatorKind kind) {
  switch (kind) {
    case ComparatorKind::kBestDap: return "best_dap";
    case ComparatorKind::kKGrid: return "k_grid";
    case ComparatorKind::kKInf: return "k_inf";
  }
  return "unknown";
}

std::string ToString(ComparatorMode mode) {
  switch (mode) {
    case ComparatorMode::kPrefix: return "prefix";
    case ComparatorMode::kFixed: return "fixed";
    case ComparatorMode::kBoth: return "both";
  }
  return "unknown";
}

namespace {

struct ExperimentContext {
  const LinearSystem& system;
  const ControllerSpec& controller;
  const ComparatorSpec& comparator;
  RiccatiInfinite ricc_inf;
  ProblemScales scales;
  double kappa0;
  double gamma0;
};

RiccatitronConfig ControllerConfig(const ExperimentContext& ctx, long T) {
  return DefaultConfig(ctx.system, ctx.scales, ctx.ricc_inf, ctx.kappa0, ctx.gamma0, T,
                       ctx.controller.overrides);
}

struct EpisodeResult {
  std::vector<double> cumulative;
  long h = 0;
  int m = 0;
};

EpisodeResult RunController(const ExperimentContext& ctx, const DisturbanceSequence& w) {
  const long T = w.T();
  EpisodeResult out;
  switch (ctx.controller.kind) {
    case ControllerKind::kRiccatitron: {
      RiccatitronConfig config = ControllerConfig(ctx, T);
      out.h = config.h;
      out.m = config.dap_set.m;
      Riccatitron policy(std::move(config));
      out.cumulative = Simulate(ctx.system, policy, w).cumulative_costs;
      break;
    }
    case ControllerKind::kKInf: {
      FeedbackPolicy policy(ctx.ricc_inf.K);
      out.cumulative = Simulate(ctx.system, policy, w).cumulative_costs;
      break;
    }
    case ControllerKind::kFixedK: {
      Require(ctx.controller.K.rows() == ctx.system.du() && ctx.controller.K.cols() == ctx.system.dx(),
              "fixed_k controller needs a du×dx gain");
      FeedbackPolicy policy(ctx.controller.K);
      out.cumulative = Simulate(ctx.system, policy, w).cumulative_costs;
      break;
    }
  }
  return out;
}

DapSet ComparatorDapSet(const ExperimentContext& ctx, long T) {
  return ControllerConfig(ctx, T).dap_set;
}

// Cumulative cost of the comparator optimized on w.
std::vector<double> ComparatorCosts(const ExperimentContext& ctx, const DisturbanceSequence& w, int threads) {
  switch (ctx.comparator.kind) {
    case ComparatorKind::kBestDap: {
      const DapOptimum opt = BestDapInHindsight(ctx.system, ctx.ricc_inf, w, ComparatorDapSet(ctx, w.T()),
                                                ctx.comparator.pgd);
      DapFixedPolicy policy(opt.M, ctx.ricc_inf.K);
      return Simulate(ctx.system, policy, w).cumulative_costs;
    }
    case ComparatorKind::kKGrid: {
      const FeedbackOptimum opt =
          BestFeedbackInHindsight(ctx.system, w, ctx.kappa0, ctx.gamma0, ctx.comparator.grid, threads);
      FeedbackPolicy policy(opt.K);
      return Simulate(ctx.system, policy, w).cumulative_costs;
    }
    case ComparatorKind::kKInf: {
      FeedbackPolicy policy(ctx.ricc_inf.K);
      return Simulate(ctx.system, policy, w).cumulative_costs;
    }
  }
  return {};
}

double Last(const std::vector<double>& v) { return v.empty() ? 0.0 : v.back(); }

RegretRow MakeRow(long t, double alg, double comp, std::string kind) {
  return RegretRow{t, alg, comp, alg - comp, std::move(kind)};
}

}  // namespace

ExperimentResult RegretExperiment(const LinearSystem& system, const ControllerSpec& controller,
                                  const DisturbanceGen& gen, const std::vector<long>& T_list,
                                  const ComparatorSpec& comparator, int threads) {
  const auto start = std::chrono::steady_clock::now();
  Require(!T_list.empty(), "T_list must not be empty");
  for (long T : T_list) Require(T >= 1, "every checkpoint T must be positive");
  const long T_max = *std::max_element(T_list.begin(), T_list.end());

  RiccatiInfinite ricc_inf = SolveInfiniteHorizon(system);
  ProblemScales scales = ComputeProblemScales(system, ricc_inf.P);
  const double kappa0 = controller.kappa0.value_or(ricc_inf.kappa);
  const double gamma0 = controller.gamma0.value_or(ricc_inf.gamma);
  ExperimentContext ctx{system, controller, comparator, std::move(ricc_inf), scales, kappa0, gamma0};
  const int workers = ResolveThreads(threads);
  const DisturbanceSequence w_full = gen.Generate(system.dx(), static_cast<int>(T_max));

  ExperimentResult result;
  const std::string kind = ToString(comparator.kind);
  const bool both = comparator.mode == ComparatorMode::kBoth;

  if (comparator.mode == ComparatorMode::kPrefix || both) {
    struct Cell {
      EpisodeResult alg;
      double baseline = 0.0;
      double comp = 0.0;
    };
    std::vector<Cell> cells(T_list.size());
    internal::ParallelFor(T_list.size(), workers, [&](size_t i) {
      const DisturbanceSequence w = w_full.Prefix(static_cast<int>(T_list[i]));
      cells[i].alg = RunController(ctx, w);
      cells[i].baseline = FeedbackCost(system, ctx.ricc_inf.K, w);
      cells[i].comp = Last(ComparatorCosts(ctx, w, 1));
    });
    const std::string label = both ? kind + ":prefix" : kind;
    for (size_t i = 0; i < T_list.size(); ++i) {
      result.rows.push_back(MakeRow(T_list[i], Last(cells[i].alg.cumulative), cells[i].comp, label));
      result.baseline_rows.push_back(MakeRow(T_list[i], cells[i].baseline, cells[i].comp, label));
      result.lookaheads.push_back(cells[i].alg.h);
      result.dap_lengths.push_back(cells[i].alg.m);
    }
  }
  if (comparator.mode == ComparatorMode::kFixed || both) {
    const EpisodeResult alg = RunController(ctx, w_full);
    FeedbackPolicy baseline_policy(ctx.ricc_inf.K);
    const std::vector<double> baseline = Simulate(system, baseline_policy, w_full).cumulative_costs;
    const std::vector<double> comp = ComparatorCosts(ctx, w_full, workers);
    const std::string label = both ? kind + ":fixed" : kind;
    for (long t : T_list) {
      const auto i = static_cast<size_t>(t - 1);
      result.rows.push_back(MakeRow(t, alg.cumulative[i], comp[i], label));
      result.baseline_rows.push_back(MakeRow(t, baseline[i], comp[i], label));
    }
    if (!both) {
      result.lookaheads.assign(T_list.size(), alg.h);
      result.dap_lengths.assign(T_list.size(), alg.m);
    }
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

CounterexampleReport CounterexampleExperiment(long T, std::optional<double> epsilon, bool projected) {
  Require(T >= 16, "the counterexample needs T ≥ 16");
  constexpr double kLo = -0.2;
  constexpr double kHi = 0.2;
  CounterexampleReport report;
  report.T = T;
  report.projected = projected;
  const double mu = 1.0 / std::sqrt(static_cast<double>(T));
  report.mu = mu;

  // Unary loss (1 − μz)² on C: exp-concavity 1/4, diameter 0.4, |f'| ≤ 2μ(1 + μ/5).
  const double alpha = 0.25;
  const double D = kHi - kLo;
  const double G = 2.0 * mu * (1.0 + mu * kHi);
  const OnsParams params = OnsDefaultParams(G, D, alpha);
  report.eta = params.eta;
  report.epsilon = epsilon.value_or(params.epsilon);
  Require(report.epsilon > 0.0, "ε must be positive");

  ConstraintSet C = projected ? ConstraintSet::MakeBox(1, kLo, kHi) : ConstraintSet::Whole(1);
  OnsState state = OnsState::Initial(report.eta, report.epsilon, std::move(C));

  auto w = [mu](long t) { return (t % 2 == 0 ? 1.0 : -1.0) + mu / 2.0; };
  auto unary = [mu](double z) { return (1.0 - mu * z) * (1.0 - mu * z); };

  double learner_loss = 0.0;
  double prev = 0.0;
  for (long t = 1; t <= T; ++t) {
    const double z = state.z(0);
    learner_loss += unary(z);
    if (t > 1) {
      report.movement_cost += std::abs(z - prev);
      const double r = 1.0 - (w(t) * z + w(t - 1) * prev);
      report.stationarization_gap += std::abs(r * r - unary(z));
    }
    prev = z;
    Vector grad(1);
    grad(0) = -2.0 * mu * (1.0 - mu * z);
    state = OnsStep(std::move(state), grad);
  }
  // (1 − μz)² is decreasing on C because μ·z_max < 1, so the minimum sits at z = 1/5.
  report.lambda_regret = learner_loss - static_cast<double>(T) * unary(kHi);
  return report;
}

}  // namespace riccatitron
