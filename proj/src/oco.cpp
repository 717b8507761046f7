#include "riccatitron/oco.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace riccatitron {

double QuadraticLoss::Value(const Vector& z) const {
  Vector r = A * z - b;
  return r.dot(Sigma * r);
}

Vector QuadraticLoss::Gradient(const Vector& z) const { return 2.0 * A.transpose() * (Sigma * (A * z - b)); }

Matrix QuadraticLoss::Hessian() const { return 2.0 * A.transpose() * Sigma * A; }

ConstraintSet ConstraintSet::MakeBox(int d, double lo, double hi) {
  Require(d >= 1, "constraint dimension must be positive");
  Require(lo <= hi, "box requires lo ≤ hi");
  return ConstraintSet(d, Box{lo, hi});
}

ConstraintSet ConstraintSet::MakeBall(int d, double radius) {
  Require(d >= 1, "constraint dimension must be positive");
  Require(radius >= 0.0, "ball radius must be nonnegative");
  return ConstraintSet(d, Ball{radius});
}

ConstraintSet ConstraintSet::MakeDap(const DapSet& set, int du, int dx) {
  Require(set.m >= 1 && du >= 1 && dx >= 1, "DAP constraint dimensions must be positive");
  return ConstraintSet(set.m * du * dx, DapProduct{set, du, dx});
}

Vector ConstraintSet::Project(const Vector& z) const {
  Require(z.size() == dim_, "vector dimension does not match the constraint set");
  return std::visit(
      [&](const auto& k) -> Vector {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Unconstrained>) {
          return z;
        } else if constexpr (std::is_same_v<K, Box>) {
          return z.cwiseMax(k.lo).cwiseMin(k.hi);
        } else if constexpr (std::is_same_v<K, Ball>) {
          const double n = z.norm();
          return n > k.radius ? Vector(z * (k.radius / n)) : z;
        } else {
          return Vectorize(ProjectDap(Devectorize(z, k.set.m, k.du, k.dx), k.set));
        }
      },
      kind_);
}

bool ConstraintSet::Contains(const Vector& z, double tol) const {
  if (z.size() != dim_) return false;
  return std::visit(
      [&](const auto& k) -> bool {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Unconstrained>) {
          return true;
        } else if constexpr (std::is_same_v<K, Box>) {
          return z.minCoeff() >= k.lo - tol && z.maxCoeff() <= k.hi + tol;
        } else if constexpr (std::is_same_v<K, Ball>) {
          return z.norm() <= k.radius + tol;
        } else {
          return k.set.Contains(Devectorize(z, k.set.m, k.du, k.dx), tol);
        }
      },
      kind_);
}

std::optional<std::pair<Vector, Vector>> ConstraintSet::CoordinateBounds() const {
  if (const auto* box = std::get_if<Box>(&kind_)) {
    return std::make_pair(Vector::Constant(dim_, box->lo), Vector::Constant(dim_, box->hi));
  }
  if (const auto* dap = std::get_if<DapProduct>(&kind_); dap != nullptr && dap->du == 1 && dap->dx == 1) {
    Vector hi(dim_);
    for (int i = 1; i <= dap->set.m; ++i) hi(i - 1) = dap->set.Radius(i);
    return std::make_pair(Vector(-hi), hi);
  }
  return std::nullopt;
}

namespace {

// Primal active-set method for min (z−z̃)ᵀE(z−z̃) over lo ≤ z ≤ hi.
ProjectionResult ProjectOntoBox(const Vector& z_tilde, const Matrix& E, const Vector& lo, const Vector& hi,
                                int max_iter) {
  const Eigen::Index d = z_tilde.size();
  Vector z = z_tilde.cwiseMax(lo).cwiseMin(hi);
  // 0 free, −1 held at lo, +1 held at hi
  std::vector<int> state(static_cast<size_t>(d), 0);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lo(i) == hi(i) || z_tilde(i) < lo(i)) state[static_cast<size_t>(i)] = -1;
    if (lo(i) != hi(i) && z_tilde(i) > hi(i)) state[static_cast<size_t>(i)] = 1;
  }
  const double scale = E.diagonal().cwiseAbs().maxCoeff() * (1.0 + z.norm() + z_tilde.norm());
  const double grad_tol = 1e-13 * scale;

  ProjectionResult result{z, false, 0};
  for (int k = 1; k <= max_iter; ++k) {
    result.iterations = k;
    const Vector g = E * (z - z_tilde);
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (state[static_cast<size_t>(i)] == 0) free.push_back(i);
    }
    Vector p = Vector::Zero(d);
    if (!free.empty()) {
      const auto n = static_cast<Eigen::Index>(free.size());
      Matrix Eff(n, n);
      Vector gf(n);
      for (Eigen::Index a = 0; a < n; ++a) {
        gf(a) = g(free[static_cast<size_t>(a)]);
        for (Eigen::Index b = 0; b < n; ++b) Eff(a, b) = E(free[static_cast<size_t>(a)], free[static_cast<size_t>(b)]);
      }
      const Vector pf = Eff.ldlt().solve(-gf);
      for (Eigen::Index a = 0; a < n; ++a) p(free[static_cast<size_t>(a)]) = pf(a);
    }

    if (p.norm() <= 1e-14 * (1.0 + z.norm())) {
      // Stationary on the current face: release the worst violated bound.
      Eigen::Index worst = -1;
      double worst_violation = grad_tol;
      for (Eigen::Index i = 0; i < d; ++i) {
        const int s = state[static_cast<size_t>(i)];
        if (s == 0 || lo(i) == hi(i)) continue;
        const double violation = s < 0 ? -g(i) : g(i);
        if (violation > worst_violation) {
          worst_violation = violation;
          worst = i;
        }
      }
      if (worst < 0) {
        result.z = z;
        result.converged = true;
        return result;
      }
      state[static_cast<size_t>(worst)] = 0;
      continue;
    }

    double step = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i : free) {
      if (p(i) < 0.0 && z(i) + p(i) < lo(i)) {
        const double a = (lo(i) - z(i)) / p(i);
        if (a < step) step = a, blocking = i;
      } else if (p(i) > 0.0 && z(i) + p(i) > hi(i)) {
        const double a = (hi(i) - z(i)) / p(i);
        if (a < step) step = a, blocking = i;
      }
    }
    z += step * p;
    if (blocking >= 0) {
      const bool at_lo = p(blocking) < 0.0;
      z(blocking) = at_lo ? lo(blocking) : hi(blocking);
      state[static_cast<size_t>(blocking)] = at_lo ? -1 : 1;
    }
    z = z.cwiseMax(lo).cwiseMin(hi);
  }
  result.z = z;
  return result;
}

ProjectionResult ProjectAdmm(const Vector& z_tilde, const Matrix& E, const ConstraintSet& C, double tol,
                             int max_iter) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(E, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 0.0)) throw NumericError("weighted projection needs a positive definite E");
  double rho = std::sqrt(lmin * lmax);
  const Eigen::Index d = z_tilde.size();
  const Vector Ez = E * z_tilde;
  Eigen::LLT<Matrix> factor(E + rho * Matrix::Identity(d, d));
  Vector y = C.Project(z_tilde);
  Vector u = Vector::Zero(d);  // scaled dual
  const double scale = std::max(1.0, z_tilde.norm());

  ProjectionResult result{y, false, 0};
  for (int k = 1; k <= max_iter; ++k) {
    const Vector z = factor.solve(Ez + rho * (y - u));
    const Vector y_next = C.Project(z + u);
    u += z - y_next;
    const double primal = (z - y_next).norm();
    const double dual = rho * (y_next - y).norm() / lmax;
    y = y_next;
    result.iterations = k;
    if (primal <= tol * scale && dual <= tol * scale) {
      result.z = y;
      result.converged = true;
      return result;
    }
    if (k % 25 == 0 && (primal > 10.0 * dual || dual > 10.0 * primal)) {
      const double factor_change = primal > dual ? 2.0 : 0.5;
      rho *= factor_change;
      u /= factor_change;
      factor.compute(E + rho * Matrix::Identity(d, d));
    }
  }
  result.z = y;
  return result;
}

}  // namespace

ProjectionResult WeightedProject(const Vector& z_tilde, const Matrix& E, const ConstraintSet& C,
                                 double tol, int max_iter) {
  Require(E.rows() == z_tilde.size() && E.cols() == z_tilde.size(), "E has the wrong shape");
  if (C.is_unconstrained() || C.Contains(z_tilde, 0.0)) return {z_tilde, true, 0};
  if (C.dim() == 1 && C.is_box()) return {C.Project(z_tilde), true, 0};
  const double e0 = E(0, 0);
  if (e0 > 0.0 && (E - e0 * Matrix::Identity(E.rows(), E.cols())).isZero(0.0)) {
    return {C.Project(z_tilde), true, 0};
  }
  if (const auto bounds = C.CoordinateBounds()) {
    return ProjectOntoBox(z_tilde, E, bounds->first, bounds->second, max_iter);
  }
  return ProjectAdmm(z_tilde, E, C, tol, max_iter);
}

OnsState OnsState::Initial(double eta, double epsilon, ConstraintSet C) {
  Require(eta > 0.0, "ONS learning rate η must be positive");
  Require(epsilon > 0.0, "ONS regularization ε must be positive");
  const int d = C.dim();
  Matrix E = epsilon * Matrix::Identity(d, d);
  Eigen::LLT<Matrix> factor(E);
  Vector z = C.Project(Vector::Zero(d));
  return OnsState{std::move(z), std::move(E), std::move(factor), eta, epsilon, std::move(C), true};
}

OnsState OnsStep(OnsState state, const Vector& gradient) {
  Require(gradient.size() == state.z.size(), "gradient has the wrong dimension");
  if (gradient.isZero(0.0)) return state;
  state.E.noalias() += gradient * gradient.transpose();
  state.E_factor.rankUpdate(gradient, 1.0);
  if (state.E_factor.info() != Eigen::Success) throw NumericError("ONS curvature matrix lost definiteness");
  Vector z_tilde = state.z - state.eta * state.E_factor.solve(gradient);
  ProjectionResult p = WeightedProject(z_tilde, state.E, state.C);
  state.z = std::move(p.z);
  state.projection_converged = p.converged;
  return state;
}

OnsParams OnsDefaultParams(double G, double D, double alpha) {
  Require(G > 0.0 && D > 0.0 && alpha > 0.0, "ONS parameters G, D, α must be positive");
  const double eta = 2.0 * std::max(4.0 * G * D, 1.0 / alpha);
  return {eta, eta * eta / D};
}

VawState VawState::Initial(double epsilon, Matrix Sigma, ConstraintSet C) {
  Require(epsilon > 0.0, "VAW regularization ε must be positive");
  Eigen::LLT<Matrix> sigma_llt(Sigma);
  Require(Sigma.rows() == Sigma.cols() && sigma_llt.info() == Eigen::Success,
          "VAW cost matrix Σ must be positive definite");
  const int d = C.dim();
  Matrix E = epsilon * Matrix::Identity(d, d);
  Eigen::LLT<Matrix> factor(E);
  Matrix root_t = sigma_llt.matrixU();
  Vector z = C.Project(Vector::Zero(d));
  return VawState{std::move(E),      std::move(factor), Vector::Zero(d), epsilon, std::move(Sigma),
                  std::move(root_t), std::move(C),      std::nullopt,    std::move(z)};
}

VawState VawReceiveFeatures(VawState state, const Matrix& A_k) {
  if (state.pending_features) throw ProtocolError("VAW received features twice without a label");
  Require(A_k.rows() == state.Sigma.rows() && A_k.cols() == state.C.dim(),
          "VAW features have the wrong shape");
  // Aᵀ Σ A = Σ_r ρ_r ρ_rᵀ over the rows ρ_r of Lᵀ A.
  Matrix rows = state.sigma_root_t * A_k;
  state.E.noalias() += rows.transpose() * rows;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    if (!rows.row(r).isZero(0.0)) state.E_factor.rankUpdate(rows.row(r).transpose(), 1.0);
  }
  if (state.E_factor.info() != Eigen::Success) throw NumericError("VAW curvature matrix lost definiteness");
  // Completing the square: ⟨z, −2s⟩ + ‖z‖²_E = ‖z − E⁻¹s‖²_E + const.
  Vector center = state.E_factor.solve(state.s);
  state.z = WeightedProject(center, state.E, state.C).z;
  state.pending_features = A_k;
  return state;
}

VawState VawReceiveLabel(VawState state, const Vector& b_k) {
  if (!state.pending_features) throw ProtocolError("VAW received a label before its features");
  Require(b_k.size() == state.Sigma.rows(), "VAW label has the wrong dimension");
  state.s.noalias() += state.pending_features->transpose() * (state.Sigma * b_k);
  state.pending_features.reset();
  return state;
}

double VawDefaultEpsilon(double S, double Y, double B) {
  Require(S > 0.0 && Y > 0.0 && B > 0.0, "VAW parameters S, Y, B must be positive");
  return S * Y * Y / (B * B);
}

double ExpConcavityConstant(const QuadraticLoss& /*loss*/, double range_bound) {
  Require(range_bound > 0.0, "range bound R must be positive");
  return 1.0 / (2.0 * range_bound);
}

void OnsLearner::Update(const QuadraticLoss& loss) { state_ = OnsStep(std::move(state_), loss.Gradient(state_.z)); }

Vector VawLearner::Predict(const Matrix& features) {
  state_ = VawReceiveFeatures(std::move(state_), features);
  return state_.z;
}

void VawLearner::Update(const QuadraticLoss& loss) {
  if (!state_.pending_features) throw ProtocolError("VAW update without a preceding prediction");
  const Matrix& pending = *state_.pending_features;
  if (pending.rows() != loss.A.rows() || pending.cols() != loss.A.cols() ||
      !(pending - loss.A).isZero(1e-12 * std::max(1.0, pending.cwiseAbs().maxCoeff()))) {
    throw ProtocolError("VAW loss features differ from those announced at prediction time");
  }
  state_ = VawReceiveLabel(std::move(state_), loss.b);
}

DelayedLearner::DelayedLearner(const LearnerFactory& factory, int h) : factory_(factory), h_(h) {
  Require(h >= 0, "delay h must be nonnegative");
  instances_.resize(static_cast<size_t>(h + 1));
  outstanding_.assign(static_cast<size_t>(h + 1), 0);
  fed_rounds_.resize(static_cast<size_t>(h + 1));
}

Vector DelayedLearner::Predict(const Matrix& features) {
  const long t = round_ + 1;
  const auto i = static_cast<size_t>(InstanceFor(t, h_) - 1);
  if (outstanding_[i] != 0) {
    throw ProtocolError("delayed learner: instance still awaits the loss of round " +
                        std::to_string(outstanding_[i]));
  }
  if (!instances_[i]) instances_[i] = factory_();
  Vector z = instances_[i]->Predict(features);
  round_ = t;
  outstanding_[i] = t;
  return z;
}

void DelayedLearner::Feed(long t, const QuadraticLoss& loss) {
  if (t < 1 || t > round_) throw ProtocolError("delayed learner: loss for a round not yet played");
  const auto i = static_cast<size_t>(InstanceFor(t, h_) - 1);
  if (outstanding_[i] != t) {
    throw ProtocolError("delayed learner: instance for round " + std::to_string(t) +
                        " has already advanced");
  }
  instances_[i]->Update(loss);
  outstanding_[i] = 0;
  fed_rounds_[i].push_back(t);
}

}  // namespace riccatitron
