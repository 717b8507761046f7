#include "riccatitron/dap.hpp"

#include <algorithm>
#include <cmath>

namespace riccatitron {

DapPolicy::DapPolicy(int m, int du, int dx) : du_(du), dx_(dx) {
  Require(m >= 1 && du >= 1 && dx >= 1, "DAP dimensions must be positive");
  blocks_.assign(static_cast<size_t>(m), Matrix::Zero(du, dx));
}

DapPolicy::DapPolicy(std::vector<Matrix> blocks) : blocks_(std::move(blocks)) {
  Require(!blocks_.empty(), "DAP policy needs at least one block");
  du_ = static_cast<int>(blocks_.front().rows());
  dx_ = static_cast<int>(blocks_.front().cols());
  for (const auto& b : blocks_) {
    Require(b.rows() == du_ && b.cols() == dx_, "DAP blocks must share one shape");
  }
}

DapPolicy& DapPolicy::operator+=(const DapPolicy& other) {
  Require(other.m() == m() && other.du() == du_ && other.dx() == dx_, "DAP shape mismatch");
  for (size_t i = 0; i < blocks_.size(); ++i) blocks_[i] += other.blocks_[i];
  return *this;
}

DapPolicy& DapPolicy::operator*=(double alpha) {
  for (auto& b : blocks_) b *= alpha;
  return *this;
}

DapPolicy operator+(DapPolicy lhs, const DapPolicy& rhs) { return lhs += rhs; }
DapPolicy operator*(double alpha, DapPolicy rhs) { return rhs *= alpha; }

double DapSet::Radius(int i) const { return R * std::pow(gamma, i - 1); }

namespace {

double BlockNormOf(const Matrix& b, DapSet::BlockNorm norm) {
  return norm == DapSet::BlockNorm::kOperator ? OpNorm(b) : b.norm();
}

}  // namespace

bool DapSet::Contains(const DapPolicy& M, double tol) const {
  if (M.m() != m) return false;
  for (int i = 1; i <= m; ++i) {
    if (BlockNormOf(M.block(i), norm) > Radius(i) + tol) return false;
  }
  return true;
}

Vector BiasOf(const DapPolicy& M, DisturbanceHistory history) {
  Vector q = Vector::Zero(M.du());
  const int n = std::min<int>(M.m(), static_cast<int>(history.size()));
  for (int i = 1; i <= n; ++i) {
    Require(history[static_cast<size_t>(i - 1)].size() == M.dx(), "disturbance has wrong dimension");
    q.noalias() += M.block(i) * history[static_cast<size_t>(i - 1)];
  }
  return q;
}

Vector DapAction(const DapPolicy& M, const Vector& x, DisturbanceHistory history,
                 const Matrix& K_inf) {
  return -K_inf * x - BiasOf(M, history);
}

DapPolicy ProjectDap(const DapPolicy& M, const DapSet& set) {
  Require(M.m() == set.m, "DAP length does not match the set");
  DapPolicy out = M;
  for (int i = 1; i <= set.m; ++i) {
    const double radius = set.Radius(i);
    Matrix& b = out.block(i);
    if (set.norm == DapSet::BlockNorm::kFrobenius) {
      const double n = b.norm();
      if (n > radius) b *= radius / n;
      continue;
    }
    if (OpNorm(b) <= radius) continue;
    Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector s = svd.singularValues().cwiseMin(radius);
    b = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  }
  return out;
}

DapSet DefaultDapSet(const ProblemScales& scales, const RiccatiInfinite& ricc_inf, double kappa0,
                     double gamma0, long T) {
  Require(T >= 1, "horizon T must be positive");
  Require(gamma0 >= 0.0 && gamma0 < 1.0, "γ0 must lie in [0, 1)");
  Require(kappa0 >= ricc_inf.kappa, "κ0 must be at least κ∞");
  Require(gamma0 >= ricc_inf.gamma, "γ0 must be at least γ∞");
  const double inv_gap = 1.0 / (1.0 - gamma0);
  DapSet set;
  set.m = std::max(1, static_cast<int>(std::ceil(inv_gap * std::log(inv_gap * static_cast<double>(T)))));
  set.R = 2.0 * scales.beta_star * scales.psi_star * scales.psi_star * scales.gamma_star_cap *
          kappa0 * kappa0;
  set.gamma = gamma0;
  return set;
}

Vector Vectorize(const DapPolicy& M) {
  const int block = M.du() * M.dx();
  Vector v(M.size());
  for (int i = 1; i <= M.m(); ++i) {
    for (int r = 0; r < M.du(); ++r) {
      for (int c = 0; c < M.dx(); ++c) v((i - 1) * block + r * M.dx() + c) = M.block(i)(r, c);
    }
  }
  return v;
}

DapPolicy Devectorize(const Vector& v, int m, int du, int dx) {
  Require(v.size() == static_cast<Eigen::Index>(m) * du * dx,
          "vector length does not match m·du·dx");
  DapPolicy M(m, du, dx);
  const int block = du * dx;
  for (int i = 1; i <= m; ++i) {
    for (int r = 0; r < du; ++r) {
      for (int c = 0; c < dx; ++c) M.block(i)(r, c) = v((i - 1) * block + r * dx + c);
    }
  }
  return M;
}

Matrix BiasFeatureMatrix(DisturbanceHistory history, int m, int du, int dx) {
  Matrix F = Matrix::Zero(du, static_cast<Eigen::Index>(m) * du * dx);
  const int block = du * dx;
  const int n = std::min<int>(m, static_cast<int>(history.size()));
  for (int i = 1; i <= n; ++i) {
    const Vector& w = history[static_cast<size_t>(i - 1)];
    Require(w.size() == dx, "disturbance has wrong dimension");
    for (int r = 0; r < du; ++r) F.block(r, (i - 1) * block + r * dx, 1, dx) = w.transpose();
  }
  return F;
}

}  // namespace riccatitron
