#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "riccatitron/controller.hpp"
#include "riccatitron/dap.hpp"
#include "riccatitron/lqr_core.hpp"
#include "riccatitron/policy.hpp"
#include "riccatitron/riccati.hpp"

namespace riccatitron {

/// One closed-loop rollout from x₁ = 0. x has T+1 entries, u and step_costs T.
struct Trajectory {
  std::vector<Vector> x;
  std::vector<Vector> u;
  DisturbanceSequence w;
  std::vector<double> step_costs;
  double total_cost = 0.0;
  /// Cumulative cost through each round (prefix sums of step_costs).
  std::vector<double> cumulative_costs;
};

/// Oblivious disturbance generators. Every emitted w_t has ‖w_t‖ ≤ 1.
struct DisturbanceGen {
  enum class Kind { kZero, kConstant, kSinusoid, kClippedGaussian, kRademacher, kAlternatingBias };

  Kind kind = Kind::kZero;
  Vector value;           // constant
  Vector direction;       // sinusoid
  double frequency = 0.0; // sinusoid, cycles per round
  double phase = 0.0;     // sinusoid
  std::uint64_t seed = 0; // clipped_gaussian, rademacher
  double scale = 1.0;     // clipped_gaussian standard deviation
  double mu = 0.0;        // alternating_bias

  static DisturbanceGen Zero();
  static DisturbanceGen Constant(Vector v);
  static DisturbanceGen Sinusoid(Vector direction, double frequency, double phase);
  static DisturbanceGen ClippedGaussian(std::uint64_t seed, double scale);
  static DisturbanceGen Rademacher(std::uint64_t seed);
  static DisturbanceGen AlternatingBias(double mu);

  DisturbanceSequence Generate(int dx, int T) const;
  std::string Name() const;
};

/// Rolls the policy forward: u_t = policy.Act(x_t), x_{t+1} = Ax_t + Bu_t + w_t,
/// then policy.Observe(w_t).
Trajectory Simulate(const LinearSystem& system, Policy& policy, const DisturbanceSequence& w);

/// u_t = −K x_t
class FeedbackPolicy final : public Policy {
 public:
  explicit FeedbackPolicy(Matrix K) : K_(std::move(K)) {}
  Vector Act(const Vector& x) override { return -K_ * x; }
  void Observe(const Vector& /*w*/) override {}

 private:
  Matrix K_;
};

/// u_t = −K x_t − q_t for a supplied bias sequence (q_1, …, q_T).
class BiasPolicy final : public Policy {
 public:
  BiasPolicy(Matrix K, std::vector<Vector> q) : K_(std::move(K)), q_(std::move(q)) {}
  Vector Act(const Vector& x) override;
  void Observe(const Vector& /*w*/) override { ++t_; }

 private:
  Matrix K_;
  std::vector<Vector> q_;
  size_t t_ = 0;
};

/// Fixed disturbance-action policy π^(M).
class DapFixedPolicy final : public Policy {
 public:
  DapFixedPolicy(DapPolicy M, Matrix K_inf) : M_(std::move(M)), K_(std::move(K_inf)) {}
  Vector Act(const Vector& x) override;
  void Observe(const Vector& w) override;

 private:
  DapPolicy M_;
  Matrix K_;
  std::vector<Vector> history_;  // most recent first
};

/// The noncausal optimal policy π*_t(x) = −K_t x − q*_t for a known sequence.
class OptimalPolicy final : public Policy {
 public:
  OptimalPolicy(const LinearSystem& system, const DisturbanceSequence& w);
  Vector Act(const Vector& x) override;
  void Observe(const Vector& /*w*/) override { ++t_; }

 private:
  RiccatiFinite ricc_;
  std::vector<Vector> qstar_;
  int t_ = 1;
};

double FeedbackCost(const LinearSystem& system, const Matrix& K, const DisturbanceSequence& w);
double DapCost(const LinearSystem& system, const RiccatiInfinite& ricc_inf, const DisturbanceSequence& w,
               const DapPolicy& M);

struct GridSpec {
  int points = 21;        // grid points per entry of K over [−κ0, κ0]
  int refine_passes = 1;  // coordinate-descent passes around the grid optimum
};

struct FeedbackOptimum {
  Matrix K;
  double J = 0.0;
  int feasible_cells = 0;
};

/// min over a uniform grid of K with ‖K‖ ≤ κ0 and a (κ0, γ0) certificate,
/// refined by coordinate descent. Requires dx·du ≤ 4.
FeedbackOptimum BestFeedbackInHindsight(const LinearSystem& system, const DisturbanceSequence& w,
                                        double kappa0, double gamma0, const GridSpec& grid = {},
                                        int threads = 0);

struct PgdOptions {
  int max_iter = 2000;
  double tol = 1e-9;
};

struct DapOptimum {
  DapPolicy M;
  double J = 0.0;
  bool converged = true;
  int iterations = 0;
};

/// min_{M ∈ set} J_T(π^(M); w). The cost is an exact convex quadratic in
/// vec(M), assembled from forward sensitivities of the affine rollout; the
/// unconstrained minimizer is used when feasible, otherwise projected
/// gradient descent with step 1/λmax.
DapOptimum BestDapInHindsight(const LinearSystem& system, const RiccatiInfinite& ricc_inf,
                              const DisturbanceSequence& w, const DapSet& set,
                              const PgdOptions& options = {});

enum class ControllerKind { kRiccatitron, kKInf, kFixedK };
enum class ComparatorKind { kBestDap, kKGrid, kKInf };
enum class ComparatorMode { kPrefix, kFixed, kBoth };

struct ControllerSpec {
  ControllerKind kind = ControllerKind::kRiccatitron;
  ConfigOverrides overrides;
  std::optional<double> kappa0;  // defaults to κ∞
  std::optional<double> gamma0;  // defaults to γ∞
  Matrix K;                      // fixed_k only
};

struct ComparatorSpec {
  ComparatorKind kind = ComparatorKind::kBestDap;
  ComparatorMode mode = ComparatorMode::kPrefix;
  GridSpec grid;
  PgdOptions pgd;
};

struct RegretRow {
  long t = 0;
  double J_alg = 0.0;
  double J_comparator = 0.0;
  double regret = 0.0;
  std::string comparator_kind;
};

struct ExperimentResult {
  std::vector<RegretRow> rows;           // configured controller
  std::vector<RegretRow> baseline_rows;  // π^{K∞} on the same disturbances
  std::vector<long> lookaheads;          // Riccatitron h per checkpoint (prefix episodes)
  std::vector<int> dap_lengths;          // Riccatitron m per checkpoint
  double wall_seconds = 0.0;
};

std::string ToString(ControllerKind kind);
std::string ToString(ComparatorKind kind);
std::string ToString(ComparatorMode mode);

/// Runs the controller and the π^{K∞} baseline on identical disturbances and
/// reports regret at each checkpoint. Prefix mode re-runs the controller with
/// horizon t and re-optimizes the comparator on w_{1:t}; fixed mode runs once
/// at max(T_list) and evaluates both sides on prefixes.
ExperimentResult RegretExperiment(const LinearSystem& system, const ControllerSpec& controller,
                                  const DisturbanceGen& gen, const std::vector<long>& T_list,
                                  const ComparatorSpec& comparator, int threads = 0);

struct CounterexampleReport {
  long T = 0;
  double mu = 0.0;
  double eta = 0.0;
  double epsilon = 0.0;
  bool projected = true;
  double lambda_regret = 0.0;
  double movement_cost = 0.0;
  double stationarization_gap = 0.0;
};

/// One-dimensional memory-loss construction with w_t = (−1)^t + μ/2,
/// μ = 1/√T, unary losses (1 − μz)² on C = [−1/5, 1/5], learned by ONS.
/// With projected = false the iterate skips the projection step.
CounterexampleReport CounterexampleExperiment(long T, std::optional<double> epsilon = std::nullopt,
                                              bool projected = true);

/// Worker count: explicit value if positive, else RICCATITRON_THREADS, else
/// hardware concurrency.
int ResolveThreads(int requested);

}  // namespace riccatitron
