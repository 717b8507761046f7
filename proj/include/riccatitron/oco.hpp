#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "riccatitron/common.hpp"
#include "riccatitron/dap.hpp"

namespace riccatitron {

/// f(z) = ‖A z − b‖²_Σ
struct QuadraticLoss {
  Matrix A;
  Vector b;
  Matrix Sigma;

  double Value(const Vector& z) const;
  Vector Gradient(const Vector& z) const;  // 2 Aᵀ Σ (A z − b)
  Matrix Hessian() const;                  // 2 Aᵀ Σ A
};

/// Closed convex set with Euclidean projection: all of ℝ^d, a box [lo, hi]^d,
/// a centered ball, or a DAP constraint set acting on vectorized policies.
class ConstraintSet {
 public:
  struct Unconstrained {};
  struct Box {
    double lo;
    double hi;
  };
  struct Ball {
    double radius;
  };
  struct DapProduct {
    DapSet set;
    int du;
    int dx;
  };

  static ConstraintSet Whole(int d) { return ConstraintSet(d, Unconstrained{}); }
  static ConstraintSet MakeBox(int d, double lo, double hi);
  static ConstraintSet MakeBall(int d, double radius);
  static ConstraintSet MakeDap(const DapSet& set, int du, int dx);

  int dim() const { return dim_; }
  bool is_unconstrained() const { return std::holds_alternative<Unconstrained>(kind_); }
  bool is_box() const { return std::holds_alternative<Box>(kind_); }

  Vector Project(const Vector& z) const;
  bool Contains(const Vector& z, double tol = 1e-12) const;
  /// Per-coordinate bounds when the set is a box (including DAP sets with
  /// scalar blocks); nullopt otherwise.
  std::optional<std::pair<Vector, Vector>> CoordinateBounds() const;

 private:
  using Kind = std::variant<Unconstrained, Box, Ball, DapProduct>;
  ConstraintSet(int d, Kind kind) : dim_(d), kind_(std::move(kind)) {}

  int dim_;
  Kind kind_;
};

struct ProjectionResult {
  Vector z;
  bool converged = true;
  int iterations = 0;
};

/// argmin_{z∈C} ‖z − z̃‖²_E. Exact when z̃ ∈ C, when C is unconstrained, when
/// E is a multiple of I, and for box-shaped sets (finite active-set method).
/// Other sets use ADMM with a cached factor of E + ρI, stopping when the
/// primal and dual residuals fall below tol; on max_iter exhaustion the last
/// feasible iterate is returned with converged = false.
ProjectionResult WeightedProject(const Vector& z_tilde, const Matrix& E, const ConstraintSet& C,
                                 double tol = 1e-10, int max_iter = 10000);

/// Online Newton Step state. E is kept together with its Cholesky factor,
/// which is updated in O(d²) per rank-one change.
struct OnsState {
  Vector z;
  Matrix E;
  Eigen::LLT<Matrix> E_factor;
  double eta;
  double epsilon;
  ConstraintSet C;
  bool projection_converged = true;

  /// z₁ = projection of the origin onto C, E₀ = εI.
  static OnsState Initial(double eta, double epsilon, ConstraintSet C);
};

/// E ← E + ∇∇ᵀ; z̃ ← z − η E⁻¹ ∇; z ← argmin_{C} ‖· − z̃‖²_E.
OnsState OnsStep(OnsState state, const Vector& gradient);

struct OnsParams {
  double eta;
  double epsilon;
};

/// η = 2 max{4GD, α⁻¹}, ε = η²/D.
OnsParams OnsDefaultParams(double G, double D, double alpha);

/// Vector-valued Vovk-Azoury-Warmuth state.
struct VawState {
  Matrix E;
  Eigen::LLT<Matrix> E_factor;
  Vector s;  // Σ_i A_iᵀ Σ b_i over labelled rounds
  double epsilon;
  Matrix Sigma;
  Matrix sigma_root_t;  // Lᵀ with Σ = L Lᵀ
  ConstraintSet C;
  std::optional<Matrix> pending_features;
  Vector z;

  static VawState Initial(double epsilon, Matrix Sigma, ConstraintSet C);
};

/// E ← E + A_kᵀ Σ A_k, then z_k = argmin_{C} ⟨z, −2s⟩ + ‖z‖²_E.
VawState VawReceiveFeatures(VawState state, const Matrix& A_k);

/// s ← s + A_kᵀ Σ b_k. Throws ProtocolError when no features are pending.
VawState VawReceiveLabel(VawState state, const Vector& b_k);

/// ε = S Y² / B²
double VawDefaultEpsilon(double S, double Y, double B);

/// α = 1 / (2R) for f = ‖Az − b‖²_Σ bounded by R on the domain.
double ExpConcavityConstant(const QuadraticLoss& loss, double range_bound);

/// Contract shared by the base learners: Predict() then Update(loss) for the
/// loss of that prediction. `features` carries the upcoming loss's A matrix;
/// learners that do not need it ignore it.
class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;
  virtual int dim() const = 0;
  virtual Vector Predict(const Matrix& features) = 0;
  virtual void Update(const QuadraticLoss& loss) = 0;
};

using LearnerFactory = std::function<std::unique_ptr<OnlineLearner>()>;

class OnsLearner final : public OnlineLearner {
 public:
  OnsLearner(double eta, double epsilon, ConstraintSet C)
      : state_(OnsState::Initial(eta, epsilon, std::move(C))) {}

  int dim() const override { return state_.C.dim(); }
  Vector Predict(const Matrix& /*features*/) override { return state_.z; }
  void Update(const QuadraticLoss& loss) override;
  const OnsState& state() const { return state_; }

 private:
  OnsState state_;
};

class VawLearner final : public OnlineLearner {
 public:
  VawLearner(double epsilon, Matrix Sigma, ConstraintSet C)
      : state_(VawState::Initial(epsilon, std::move(Sigma), std::move(C))) {}

  int dim() const override { return state_.C.dim(); }
  Vector Predict(const Matrix& features) override;
  void Update(const QuadraticLoss& loss) override;
  const VawState& state() const { return state_; }

 private:
  VawState state_;
};

/// Reduction from delay-h feedback to h+1 interleaved base learners. Round t
/// (1-based) is served by instance τ(t) = (t−1) mod (h+1) + 1, and the loss of
/// round t must be fed to that same instance before its next turn. Instances
/// are built on first use, so memory grows with min(h+1, rounds played).
class DelayedLearner {
 public:
  DelayedLearner(const LearnerFactory& factory, int h);

  int h() const { return h_; }
  int round() const { return round_; }
  static int InstanceFor(long t, int h) { return static_cast<int>((t - 1) % (h + 1)) + 1; }

  /// Advances to the next round and returns the serving instance's iterate.
  Vector Predict(const Matrix& features);
  /// Supplies the loss incurred by the prediction of round `t`.
  void Feed(long t, const QuadraticLoss& loss);

  /// Null until instance i has served a round.
  const OnlineLearner* instance(int i) const { return instances_.at(static_cast<size_t>(i - 1)).get(); }
  /// Rounds whose losses each instance has received, in order.
  const std::vector<std::vector<long>>& schedule() const { return fed_rounds_; }

 private:
  LearnerFactory factory_;
  int h_;
  long round_ = 0;
  std::vector<std::unique_ptr<OnlineLearner>> instances_;
  std::vector<long> outstanding_;  // round awaiting feedback per instance, 0 if none
  std::vector<std::vector<long>> fed_rounds_;
};

}  // namespace riccatitron
