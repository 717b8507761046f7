#pragma once

#include <span>
#include <vector>

#include "riccatitron/common.hpp"
#include "riccatitron/lqr_core.hpp"

namespace riccatitron {

/// Disturbance-action matrices M = (M^[1], …, M^[m]), each du×dx.
class DapPolicy {
 public:
  DapPolicy(int m, int du, int dx);
  explicit DapPolicy(std::vector<Matrix> blocks);

  static DapPolicy Zero(int m, int du, int dx) { return DapPolicy(m, du, dx); }

  int m() const { return static_cast<int>(blocks_.size()); }
  int du() const { return du_; }
  int dx() const { return dx_; }
  /// Number of scalar parameters, m·du·dx.
  int size() const { return m() * du_ * dx_; }

  /// 1-based block access, M^[i].
  const Matrix& block(int i) const { return blocks_.at(static_cast<size_t>(i - 1)); }
  Matrix& block(int i) { return blocks_.at(static_cast<size_t>(i - 1)); }
  const std::vector<Matrix>& blocks() const { return blocks_; }

  DapPolicy& operator+=(const DapPolicy& other);
  DapPolicy& operator*=(double alpha);

 private:
  int du_;
  int dx_;
  std::vector<Matrix> blocks_;
};

DapPolicy operator+(DapPolicy lhs, const DapPolicy& rhs);
DapPolicy operator*(double alpha, DapPolicy rhs);

/// Constraint set M(m, R, γ): ‖M^[i]‖ ≤ R γ^{i−1} per block. The default
/// norm is the operator norm; the Frobenius variant is a looser-geometry
/// alternative exposed through configuration.
struct DapSet {
  enum class BlockNorm { kOperator, kFrobenius };

  int m = 1;
  double R = 1.0;
  double gamma = 0.0;
  BlockNorm norm = BlockNorm::kOperator;

  /// R γ^{i−1}, 1-based.
  double Radius(int i) const;
  bool Contains(const DapPolicy& M, double tol = 1e-12) const;
};

/// Past disturbances ordered most recent first: history[0] = w_{t−1},
/// history[1] = w_{t−2}, …. Entries beyond the span are treated as zero.
using DisturbanceHistory = std::span<const Vector>;

/// q^M = Σ_{i=1}^m M^[i] w_{t−i}
Vector BiasOf(const DapPolicy& M, DisturbanceHistory history);

/// −K∞ x − q^M(history)
Vector DapAction(const DapPolicy& M, const Vector& x, DisturbanceHistory history,
                 const Matrix& K_inf);

/// Euclidean (Frobenius) projection onto the set: each block's singular
/// values are clipped at its radius (operator norm) or the block is rescaled
/// (Frobenius norm). Feasible blocks are returned bit-for-bit unchanged.
DapPolicy ProjectDap(const DapPolicy& M, const DapSet& set);

/// m = ⌈(1−γ0)⁻¹ log((1−γ0)⁻¹ T)⌉, R = 2β*Ψ*²Γ*κ0², γ = γ0.
DapSet DefaultDapSet(const ProblemScales& scales, const RiccatiInfinite& ricc_inf, double kappa0,
                     double gamma0, long T);

/// Block-row-major flattening: index = (i−1)·du·dx + r·dx + c.
Vector Vectorize(const DapPolicy& M);
DapPolicy Devectorize(const Vector& v, int m, int du, int dx);

/// The du × (m·du·dx) matrix F with F·Vectorize(M) = BiasOf(M, history).
Matrix BiasFeatureMatrix(DisturbanceHistory history, int m, int du, int dx);

}  // namespace riccatitron
