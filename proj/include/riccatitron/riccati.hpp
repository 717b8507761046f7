#pragma once

#include <vector>

#include "riccatitron/common.hpp"
#include "riccatitron/dap.hpp"
#include "riccatitron/lqr_core.hpp"

namespace riccatitron {

/// Disturbances w_1, …, w_T with w_s ≡ 0 outside [1, T]. Every entry must
/// have Euclidean norm at most 1.
class DisturbanceSequence {
 public:
  DisturbanceSequence(int dx, std::vector<Vector> w);
  static DisturbanceSequence Zero(int dx, int T) {
    return DisturbanceSequence(dx, std::vector<Vector>(static_cast<size_t>(T), Vector::Zero(dx)));
  }

  int T() const { return static_cast<int>(w_.size()); }
  int dx() const { return dx_; }
  /// w_s for any integer s; zero outside [1, T].
  Vector at(int s) const;
  const std::vector<Vector>& values() const { return w_; }
  /// First T entries.
  DisturbanceSequence Prefix(int T) const;

 private:
  int dx_;
  std::vector<Vector> w_;
};

/// State and input targets a_t, b_t for t = 1..T with a_T = b_T = 0.
class TrackingTargets {
 public:
  TrackingTargets(std::vector<Vector> a, std::vector<Vector> b);
  static TrackingTargets Zero(int dx, int du, int T);

  int T() const { return static_cast<int>(a_.size()); }
  /// 1-based; zero outside [1, T].
  Vector a(int t) const;
  Vector b(int t) const;

 private:
  std::vector<Vector> a_;
  std::vector<Vector> b_;
};

/// Finite-horizon Riccati recursion with P_{T+1} = 0. All accessors are
/// 1-based in t.
class RiccatiFinite {
 public:
  RiccatiFinite(const LinearSystem& system, int T);

  int T() const { return T_; }
  const Matrix& P(int t) const { return P_.at(static_cast<size_t>(t - 1)); }  // t = 1..T+1
  const Matrix& Sigma(int t) const { return Sigma_.at(static_cast<size_t>(t - 1)); }
  const Matrix& K(int t) const { return K_.at(static_cast<size_t>(t - 1)); }
  const Matrix& Acl(int t) const { return Acl_.at(static_cast<size_t>(t - 1)); }
  /// Solves Σ_t z = v via the cached factorization.
  Vector SolveSigma(int t, const Vector& v) const;

 private:
  int T_;
  std::vector<Matrix> P_;
  std::vector<Matrix> Sigma_;
  std::vector<Matrix> K_;
  std::vector<Matrix> Acl_;
  std::vector<Eigen::LLT<Matrix>> sigma_llt_;
};

RiccatiFinite RiccatiRecursion(const LinearSystem& system, int T);

/// q*_t = Σ_{i=t}^{T−1} Σ_t⁻¹ Bᵀ (Π_{j=t+1}^{i} Acl_jᵀ) P_{i+1} w_i
Vector Qstar(const RiccatiFinite& ricc, const LinearSystem& system, const DisturbanceSequence& w,
             int t);

/// q*_{t;t+h}: the same sum cut at i ≤ min(t+h, T−1).
Vector QstarTruncated(const RiccatiFinite& ricc, const LinearSystem& system,
                      const DisturbanceSequence& w, int t, int h);

/// q*_1, …, q*_T in one backward pass (element t−1 holds q*_t).
std::vector<Vector> QstarAll(const RiccatiFinite& ricc, const LinearSystem& system,
                             const DisturbanceSequence& w);

/// q*_{∞;h}(w_1..w_{h+1}) = Σ_i Σ∞⁻¹ Bᵀ (Acl∞ᵀ)^{i−1} P∞ w_i, window oldest first.
Vector QstarInfinite(const RiccatiInfinite& ricc_inf, std::span<const Vector> window);

/// Precomputed gains G_i = Σ∞⁻¹ Bᵀ (Acl∞ᵀ)^{i−1} P∞ for i = 1..h+1 so that
/// q*_{∞;h} = Σ_i G_i w_i.
std::vector<Matrix> QstarInfiniteGains(const RiccatiInfinite& ricc_inf, int h);

/// Optimal noncausal action π*_t(x) = −K_t x − q*_t.
Vector OptimalAction(const RiccatiFinite& ricc, const LinearSystem& system,
                     const DisturbanceSequence& w, const Vector& x, int t);

/// V*_t(x): cost of rolling π* forward from x_t = x over s = t..T.
double ValueStar(const LinearSystem& system, const RiccatiFinite& ricc,
                 const DisturbanceSequence& w, const Vector& x, int t);

/// Q*_t(x, u) = ℓ(x, u) + V*_{t+1}(Ax + Bu + w_t), with V*_{T+1} ≡ 0.
double QfunStar(const LinearSystem& system, const RiccatiFinite& ricc,
                const DisturbanceSequence& w, const Vector& x, const Vector& u, int t);

/// A*_t(u; x) = Q*_t(x, u) − Q*_t(x, π*_t(x)).
double AdvantageStar(const LinearSystem& system, const RiccatiFinite& ricc,
                     const DisturbanceSequence& w, const Vector& x, const Vector& u, int t);

/// ‖q − q*‖²_Σ
double AdvantageClosedForm(const Vector& q, const Vector& qstar, const Matrix& Sigma);

/// ‖q^M(history) − q*_{∞;h}(window)‖²_{Σ∞}, window = w_t..w_{t+h} oldest first.
double ApproxAdvantage(const DapPolicy& M, DisturbanceHistory w_past,
                       std::span<const Vector> w_future_window, const RiccatiInfinite& ricc_inf);

/// Optimal bias with moving targets; reduces to Qstar when a = b = 0.
Vector QstarTracking(const RiccatiFinite& ricc, const LinearSystem& system,
                     const DisturbanceSequence& w, const TrackingTargets& targets, int t);

/// One element of a tracking lookahead window: (w_s, a_s, b_s).
struct TrackingSample {
  Vector w;
  Vector a;
  Vector b;
};

/// q*_{∞;h,move}(w̄_1..w̄_{h+1}); the −Ru b term uses the window's first target.
Vector QstarInfiniteTracking(const RiccatiInfinite& ricc_inf, std::span<const TrackingSample> window);

/// ‖q^M(history) − q*_{∞;h,move}(window)‖²_{Σ∞}
double ApproxAdvantageTracking(const DapPolicy& M, DisturbanceHistory w_past,
                               std::span<const TrackingSample> wbar_window,
                               const RiccatiInfinite& ricc_inf);

}  // namespace riccatitron
