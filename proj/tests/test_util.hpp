#pragma once

#include <random>
#include <vector>

#include "riccatitron/harness.hpp"

namespace rt_test {

using riccatitron::LinearSystem;
using riccatitron::Matrix;
using riccatitron::Vector;

inline LinearSystem Scalar(double a, double b = 1.0, double rx = 1.0, double ru = 1.0) {
  return LinearSystem::Make(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), Matrix::Constant(1, 1, rx),
                            Matrix::Constant(1, 1, ru));
}

inline Matrix Gaussian(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix M(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) M(r, c) = n(rng);
  return M;
}

inline Matrix RandomPd(std::mt19937_64& rng, int d) {
  const Matrix G = Gaussian(rng, d, d, 0.5);
  return Matrix::Identity(d, d) * 0.5 + G * G.transpose();
}

/// Random system with ρ(A) around `radius`; B is generic so (A, B) is controllable.
inline LinearSystem RandomSystem(std::mt19937_64& rng, int dx, int du, double radius = 1.1) {
  Matrix A = Gaussian(rng, dx, dx);
  const double rho = riccatitron::SpectralRadius(A);
  if (rho > 0.0) A *= radius / rho;
  return LinearSystem::Make(A, Gaussian(rng, dx, du), RandomPd(rng, dx), RandomPd(rng, du));
}

inline Vector UnitBallVector(std::mt19937_64& rng, int d) {
  Vector v = Gaussian(rng, d, 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return v.normalized() * u(rng);
}

inline riccatitron::DisturbanceSequence RandomDisturbances(std::mt19937_64& rng, int dx, int T) {
  std::vector<Vector> w;
  for (int t = 0; t < T; ++t) w.push_back(UnitBallVector(rng, dx));
  return riccatitron::DisturbanceSequence(dx, std::move(w));
}

/// Brute-force oracle: minimizes Σ_{s=t}^{T} ‖x_s − a_s‖²_Rx + ‖u_s − b_s‖²_Ru
/// from x_t = x0 as one dense least-squares problem over (u_t, …, u_T).
/// Returns the optimal inputs.
inline std::vector<Vector> DenseOptimalInputs(const LinearSystem& sys, const riccatitron::DisturbanceSequence& w,
                                              const std::vector<Vector>& a, const std::vector<Vector>& b,
                                              const Vector& x0, int t) {
  const int T = w.T();
  const int dx = sys.dx();
  const int du = sys.du();
  const int n = T - t + 1;
  const int nu = n * du;
  // x_s = F_s x0 + G_s u + c_s
  Matrix H = Matrix::Zero(nu, nu);
  Vector g = Vector::Zero(nu);
  Matrix Gs = Matrix::Zero(dx, nu);
  Vector cs = x0;
  const Eigen::LLT<Matrix> rx(sys.Rx());
  for (int k = 0; k < n; ++k) {
    const int s = t + k;
    const Vector as = a.empty() ? Vector::Zero(dx) : a[static_cast<size_t>(s - 1)];
    const Vector bs = b.empty() ? Vector::Zero(du) : b[static_cast<size_t>(s - 1)];
    H += Gs.transpose() * sys.Rx() * Gs;
    g += Gs.transpose() * sys.Rx() * (cs - as);
    H.block(k * du, k * du, du, du) += sys.Ru();
    g.segment(k * du, du) -= sys.Ru() * bs;
    Matrix Gn = sys.A() * Gs;
    Gn.block(0, k * du, dx, du) += sys.B();
    cs = sys.A() * cs + w.at(s);
    Gs = std::move(Gn);
  }
  const Vector u = H.ldlt().solve(-g);
  std::vector<Vector> out;
  for (int k = 0; k < n; ++k) out.push_back(u.segment(k * du, du));
  return out;
}

}  // namespace rt_test
