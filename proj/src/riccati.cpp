#include "riccatitron/riccati.hpp"

#include <algorithm>

namespace riccatitron {

DisturbanceSequence::DisturbanceSequence(int dx, std::vector<Vector> w) : dx_(dx), w_(std::move(w)) {
  Require(dx >= 1, "disturbance dimension must be positive");
  for (const auto& v : w_) {
    Require(v.size() == dx, "disturbance has wrong dimension");
    Require(v.allFinite(), "disturbance must be finite");
    Require(v.norm() <= 1.0 + 1e-12, "disturbances must satisfy ‖w_t‖ ≤ 1");
  }
}

Vector DisturbanceSequence::at(int s) const {
  if (s < 1 || s > T()) return Vector::Zero(dx_);
  return w_[static_cast<size_t>(s - 1)];
}

DisturbanceSequence DisturbanceSequence::Prefix(int T) const {
  Require(T >= 0 && T <= this->T(), "prefix longer than the sequence");
  return DisturbanceSequence(dx_, std::vector<Vector>(w_.begin(), w_.begin() + T));
}

TrackingTargets::TrackingTargets(std::vector<Vector> a, std::vector<Vector> b)
    : a_(std::move(a)), b_(std::move(b)) {
  Require(!a_.empty() && a_.size() == b_.size(), "targets a and b must share a nonzero length");
  Require(a_.back().isZero(0.0) && b_.back().isZero(0.0), "terminal targets a_T, b_T must be zero");
}

TrackingTargets TrackingTargets::Zero(int dx, int du, int T) {
  return TrackingTargets(std::vector<Vector>(static_cast<size_t>(T), Vector::Zero(dx)),
                         std::vector<Vector>(static_cast<size_t>(T), Vector::Zero(du)));
}

Vector TrackingTargets::a(int t) const {
  if (t < 1 || t > T()) return Vector::Zero(a_.front().size());
  return a_[static_cast<size_t>(t - 1)];
}

Vector TrackingTargets::b(int t) const {
  if (t < 1 || t > T()) return Vector::Zero(b_.front().size());
  return b_[static_cast<size_t>(t - 1)];
}

RiccatiFinite::RiccatiFinite(const LinearSystem& system, int T) : T_(T) {
  Require(T >= 1, "horizon T must be at least 1");
  const Matrix& A = system.A();
  const Matrix& B = system.B();
  const auto n = static_cast<size_t>(T);
  P_.resize(n + 1);
  Sigma_.resize(n);
  K_.resize(n);
  Acl_.resize(n);
  sigma_llt_.resize(n);
  P_[n] = Matrix::Zero(system.dx(), system.dx());
  for (int t = T; t >= 1; --t) {
    const Matrix& next = P_[static_cast<size_t>(t)];
    const auto i = static_cast<size_t>(t - 1);
    Sigma_[i] = system.Ru() + B.transpose() * next * B;
    Sigma_[i] = 0.5 * (Sigma_[i] + Sigma_[i].transpose());
    sigma_llt_[i].compute(Sigma_[i]);
    if (sigma_llt_[i].info() != Eigen::Success) {
      throw NumericError("Σ_t is singular in the Riccati recursion");
    }
    K_[i] = sigma_llt_[i].solve(B.transpose() * next * A);
    Acl_[i] = A - B * K_[i];
    Matrix BtPA = B.transpose() * next * A;
    Matrix P = system.Rx() + A.transpose() * next * A - BtPA.transpose() * K_[i];
    P_[i] = 0.5 * (P + P.transpose());
  }
}

Vector RiccatiFinite::SolveSigma(int t, const Vector& v) const {
  return sigma_llt_.at(static_cast<size_t>(t - 1)).solve(v);
}

RiccatiFinite RiccatiRecursion(const LinearSystem& system, int T) { return RiccatiFinite(system, T); }

namespace {

// Σ_{i=t}^{upper} (Π_{j=t+1}^{i} Acl_jᵀ) P_{i+1} w_i, evaluated by Horner's rule.
Vector DisturbanceSum(const RiccatiFinite& ricc, const DisturbanceSequence& w, int t, int upper) {
  Vector acc = Vector::Zero(w.dx());
  for (int i = upper; i >= t; --i) {
    Vector next = ricc.P(i + 1) * w.at(i);
    if (i < upper) next.noalias() += ricc.Acl(i + 1).transpose() * acc;
    acc = std::move(next);
  }
  return acc;
}

void CheckRound(const RiccatiFinite& ricc, int t) {
  Require(t >= 1 && t <= ricc.T(), "round index out of range");
}

}  // namespace

Vector QstarTruncated(const RiccatiFinite& ricc, const LinearSystem& system,
                      const DisturbanceSequence& w, int t, int h) {
  CheckRound(ricc, t);
  Require(h >= 0, "truncation horizon must be nonnegative");
  const int upper = std::min(t + h, ricc.T() - 1);
  if (upper < t) return Vector::Zero(system.du());
  return ricc.SolveSigma(t, system.B().transpose() * DisturbanceSum(ricc, w, t, upper));
}

Vector Qstar(const RiccatiFinite& ricc, const LinearSystem& system, const DisturbanceSequence& w,
             int t) {
  return QstarTruncated(ricc, system, w, t, ricc.T());
}

std::vector<Vector> QstarAll(const RiccatiFinite& ricc, const LinearSystem& system,
                             const DisturbanceSequence& w) {
  const int T = ricc.T();
  std::vector<Vector> q(static_cast<size_t>(T));
  Vector acc = Vector::Zero(system.dx());  // running sum for index t; empty at t = T
  q[static_cast<size_t>(T - 1)] = Vector::Zero(system.du());
  for (int t = T - 1; t >= 1; --t) {
    Vector next = ricc.P(t + 1) * w.at(t);
    if (t < T - 1) next.noalias() += ricc.Acl(t + 1).transpose() * acc;
    acc = std::move(next);
    q[static_cast<size_t>(t - 1)] = ricc.SolveSigma(t, system.B().transpose() * acc);
  }
  return q;
}

std::vector<Matrix> QstarInfiniteGains(const RiccatiInfinite& ricc_inf, int h) {
  Require(h >= 0, "lookahead must be nonnegative");
  Eigen::LLT<Matrix> llt(ricc_inf.Sigma);
  const Matrix Bt = ricc_inf.system.B().transpose();
  std::vector<Matrix> gains;
  gains.reserve(static_cast<size_t>(h + 1));
  Matrix power = ricc_inf.P;  // (Acl∞ᵀ)^{i−1} P∞
  for (int i = 1; i <= h + 1; ++i) {
    gains.push_back(llt.solve(Bt * power));
    power = ricc_inf.Acl.transpose() * power;
  }
  return gains;
}

Vector QstarInfinite(const RiccatiInfinite& ricc_inf, std::span<const Vector> window) {
  Require(!window.empty(), "lookahead window must contain at least one disturbance");
  const int dx = ricc_inf.system.dx();
  Vector acc = Vector::Zero(dx);
  for (size_t k = window.size(); k-- > 0;) {
    Require(window[k].size() == dx, "disturbance has wrong dimension");
    acc = ricc_inf.P * window[k] + ricc_inf.Acl.transpose() * acc;
  }
  // acc = Σ_i (Aclᵀ)^{i−1} P w_i
  return ricc_inf.Sigma.llt().solve(ricc_inf.system.B().transpose() * acc);
}

Vector OptimalAction(const RiccatiFinite& ricc, const LinearSystem& system,
                     const DisturbanceSequence& w, const Vector& x, int t) {
  return -ricc.K(t) * x - Qstar(ricc, system, w, t);
}

namespace {

double RolloutCost(const LinearSystem& system, const RiccatiFinite& ricc,
                   const DisturbanceSequence& w, const std::vector<Vector>& qstar, Vector x, int t) {
  double total = 0.0;
  for (int s = t; s <= ricc.T(); ++s) {
    Vector u = -ricc.K(s) * x - qstar[static_cast<size_t>(s - 1)];
    total += system.StageCost(x, u);
    x = system.A() * x + system.B() * u + w.at(s);
  }
  return total;
}

}  // namespace

double ValueStar(const LinearSystem& system, const RiccatiFinite& ricc,
                 const DisturbanceSequence& w, const Vector& x, int t) {
  if (t == ricc.T() + 1) return 0.0;
  CheckRound(ricc, t);
  return RolloutCost(system, ricc, w, QstarAll(ricc, system, w), x, t);
}

double QfunStar(const LinearSystem& system, const RiccatiFinite& ricc,
                const DisturbanceSequence& w, const Vector& x, const Vector& u, int t) {
  CheckRound(ricc, t);
  Vector next = system.A() * x + system.B() * u + w.at(t);
  return system.StageCost(x, u) + ValueStar(system, ricc, w, next, t + 1);
}

double AdvantageStar(const LinearSystem& system, const RiccatiFinite& ricc,
                     const DisturbanceSequence& w, const Vector& x, const Vector& u, int t) {
  Vector best = OptimalAction(ricc, system, w, x, t);
  return QfunStar(system, ricc, w, x, u, t) - QfunStar(system, ricc, w, x, best, t);
}

double AdvantageClosedForm(const Vector& q, const Vector& qstar, const Matrix& Sigma) {
  Require(q.size() == qstar.size() && Sigma.rows() == q.size() && Sigma.cols() == q.size(),
          "advantage operands have mismatched shapes");
  Vector d = q - qstar;
  return d.dot(Sigma * d);
}

double ApproxAdvantage(const DapPolicy& M, DisturbanceHistory w_past,
                       std::span<const Vector> w_future_window, const RiccatiInfinite& ricc_inf) {
  return AdvantageClosedForm(BiasOf(M, w_past), QstarInfinite(ricc_inf, w_future_window),
                             ricc_inf.Sigma);
}

Vector QstarTracking(const RiccatiFinite& ricc, const LinearSystem& system,
                     const DisturbanceSequence& w, const TrackingTargets& targets, int t) {
  CheckRound(ricc, t);
  const int T = ricc.T();
  const Matrix& Ru = system.Ru();
  const Matrix& Rx = system.Rx();
  // acc_i = P_{i+1} w_i + [i+1 ≤ T−1](K_{i+1}ᵀ Ru b_{i+1} − Rx a_{i+1}) + Acl_{i+1}ᵀ acc_{i+1}
  Vector acc = Vector::Zero(system.dx());
  for (int i = T - 1; i >= t; --i) {
    Vector next = ricc.P(i + 1) * w.at(i);
    if (i + 1 <= T - 1) {
      next.noalias() += ricc.K(i + 1).transpose() * (Ru * targets.b(i + 1)) - Rx * targets.a(i + 1);
      next.noalias() += ricc.Acl(i + 1).transpose() * acc;
    }
    acc = std::move(next);
  }
  Vector rhs = -Ru * targets.b(t) + system.B().transpose() * acc;
  return ricc.SolveSigma(t, rhs);
}

Vector QstarInfiniteTracking(const RiccatiInfinite& ricc_inf, std::span<const TrackingSample> window) {
  Require(!window.empty(), "lookahead window must contain at least one sample");
  const LinearSystem& sys = ricc_inf.system;
  const Matrix AclT = ricc_inf.Acl.transpose();
  // Σ_{i=1}^{h+1} (Aclᵀ)^{i−1} P w_i + Σ_{i=2}^{h+1} (Aclᵀ)^{i−2} (Kᵀ Ru b_i − Rx a_i)
  Vector acc = Vector::Zero(sys.dx());
  for (size_t k = window.size(); k-- > 0;) {
    Vector next = ricc_inf.P * window[k].w;
    if (k + 1 < window.size()) {
      const TrackingSample& ahead = window[k + 1];
      next.noalias() += ricc_inf.K.transpose() * (sys.Ru() * ahead.b) - sys.Rx() * ahead.a;
      next.noalias() += AclT * acc;
    }
    acc = std::move(next);
  }
  Vector rhs = -sys.Ru() * window.front().b + sys.B().transpose() * acc;
  return ricc_inf.Sigma.llt().solve(rhs);
}

double ApproxAdvantageTracking(const DapPolicy& M, DisturbanceHistory w_past,
                               std::span<const TrackingSample> wbar_window,
                               const RiccatiInfinite& ricc_inf) {
  return AdvantageClosedForm(BiasOf(M, w_past), QstarInfiniteTracking(ricc_inf, wbar_window),
                             ricc_inf.Sigma);
}

}  // namespace riccatitron
