#include "riccatitron/lqr_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace riccatitron {
namespace {

bool IsSymmetric(const Matrix& M, double tol) {
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, M.cwiseAbs().maxCoeff());
}

bool AllFinite(const Matrix& M) { return M.allFinite(); }

Matrix Symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

// One backward Riccati step P ↦ AᵀPA + Rx − AᵀPB(Ru+BᵀPB)⁻¹BᵀPA.
Matrix RiccatiMap(const LinearSystem& sys, const Matrix& P) {
  const Matrix& A = sys.A();
  const Matrix& B = sys.B();
  Matrix sigma = sys.Ru() + B.transpose() * P * B;
  Eigen::LLT<Matrix> llt(Symmetrize(sigma));
  if (llt.info() != Eigen::Success) {
    throw NumericError("Ru + BᵀPB is not positive definite");
  }
  Matrix BtPA = B.transpose() * P * A;
  return A.transpose() * P * A + sys.Rx() - BtPA.transpose() * llt.solve(BtPA);
}

}  // namespace

LinearSystem LinearSystem::Make(Matrix A, Matrix B, Matrix Rx, Matrix Ru) {
  const auto dx = A.rows();
  const auto du = B.cols();
  Require(dx > 0 && du > 0, "system dimensions must be positive");
  Require(A.cols() == dx, "A must be square");
  Require(B.rows() == dx, "B must have dx rows");
  Require(Rx.rows() == dx && Rx.cols() == dx, "Rx must be dx×dx");
  Require(Ru.rows() == du && Ru.cols() == du, "Ru must be du×du");
  Require(AllFinite(A) && AllFinite(B) && AllFinite(Rx) && AllFinite(Ru),
          "system matrices must be finite");
  Require(IsSymmetric(Rx, 1e-12), "Rx must be symmetric");
  Require(IsSymmetric(Ru, 1e-12), "Ru must be symmetric");
  Rx = Symmetrize(Rx);
  Ru = Symmetrize(Ru);
  Require(MinEigenvalue(Rx) > 0.0, "Rx must be positive definite");
  Require(MinEigenvalue(Ru) > 0.0, "Ru must be positive definite");
  return LinearSystem(std::move(A), std::move(B), std::move(Rx), std::move(Ru));
}

double LinearSystem::StageCost(const Vector& x, const Vector& u) const {
  return x.dot(Rx_ * x) + u.dot(Ru_ * u);
}

double OpNorm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  if (M.rows() == 1 || M.cols() == 1) return M.norm();
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

double SpectralRadius(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double MinEigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double MaxEigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Matrix SymmetricSqrt(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(Symmetrize(symmetric));
  Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Matrix SymmetricInvSqrt(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(Symmetrize(symmetric));
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw NumericError("inverse square root of a matrix that is not positive definite");
  }
  Vector inv_root = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_root.asDiagonal() * es.eigenvectors().transpose();
}

Matrix SolveDare(const LinearSystem& system, const DareOptions& options) {
  Require(options.tol > 0.0, "DARE tolerance must be positive");
  Require(options.max_iter > 0, "DARE max_iter must be positive");
  Matrix P = Matrix::Zero(system.dx(), system.dx());
  for (int k = 0; k < options.max_iter; ++k) {
    Matrix next = Symmetrize(RiccatiMap(system, P));
    if (!next.allFinite()) break;
    const double step = OpNorm(next - P);
    P = std::move(next);
    if (step <= options.tol) return P;
  }
  std::ostringstream msg;
  msg << "DARE value iteration did not converge within " << options.max_iter
      << " iterations; (A, B) may not be stabilizable";
  throw NumericError(msg.str());
}

double DareResidual(const LinearSystem& system, const Matrix& P) {
  return OpNorm(P - RiccatiMap(system, P));
}

RiccatiInfinite DeriveInfiniteHorizon(const LinearSystem& system, const Matrix& P_in) {
  Require(P_in.rows() == system.dx() && P_in.cols() == system.dx(), "P must be dx×dx");
  Matrix P = Symmetrize(P_in);
  const Matrix& A = system.A();
  const Matrix& B = system.B();
  Matrix sigma = Symmetrize(system.Ru() + B.transpose() * P * B);
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericError("Σ∞ is not positive definite");
  Matrix K = llt.solve(B.transpose() * P * A);
  Matrix acl = A - B * K;

  if (MinEigenvalue(P) <= 0.0) throw NumericError("P∞ is not positive definite");
  Matrix root = SymmetricSqrt(P);
  Matrix inv_root = SymmetricInvSqrt(P);
  const double kappa = OpNorm(root) * OpNorm(inv_root);
  Matrix contraction = Matrix::Identity(system.dx(), system.dx()) - inv_root * system.Rx() * inv_root;
  const double gamma = std::sqrt(OpNorm(Symmetrize(contraction)));
  if (!(gamma < 1.0)) {
    throw NumericError("γ∞ ≥ 1: P is inconsistent with the DARE for this system");
  }
  return RiccatiInfinite{system, P, K, sigma, acl, std::max(1.0, kappa), gamma};
}

RiccatiInfinite SolveInfiniteHorizon(const LinearSystem& system, const DareOptions& options) {
  return DeriveInfiniteHorizon(system, SolveDare(system, options));
}

ProblemScales ComputeProblemScales(const LinearSystem& system, const Matrix& P) {
  ProblemScales s;
  s.psi_star = std::max({1.0, OpNorm(system.A()), OpNorm(system.B()), OpNorm(system.Rx()),
                         OpNorm(system.Ru())});
  s.beta_star = std::max({1.0, 1.0 / MinEigenvalue(system.Ru()), 1.0 / MinEigenvalue(system.Rx())});
  s.gamma_star_cap = std::max(1.0, OpNorm(P));
  return s;
}

StabilityCertificate CertifyStrongStability(const LinearSystem& system, const Matrix& K,
                                            double tol, int max_terms) {
  Require(K.rows() == system.du() && K.cols() == system.dx(), "K must be du×dx");
  const Matrix acl = system.A() - system.B() * K;
  const double rho = SpectralRadius(acl);
  if (!(rho < 1.0)) {
    std::ostringstream msg;
    msg << "A − BK is not stable (spectral radius " << rho << ")";
    throw NumericError(msg.str());
  }
  // Q = Σ_i (Aclᵀ)^i Acl^i, summed until the term is negligible relative to Q.
  const int n = system.dx();
  Matrix Q = Matrix::Identity(n, n);
  Matrix power = Matrix::Identity(n, n);
  int i = 0;
  for (; i < max_terms; ++i) {
    power = acl * power;
    Matrix term = power.transpose() * power;
    Q += term;
    if (term.norm() <= tol * Q.norm()) break;
  }
  if (i == max_terms) throw NumericError("Lyapunov series did not converge");
  Q = Symmetrize(Q);

  StabilityCertificate cert;
  Matrix q_root = SymmetricSqrt(Q);
  cert.H = SymmetricInvSqrt(Q);
  cert.L = q_root * acl * cert.H;
  cert.kappa = std::max(1.0, OpNorm(cert.H) * OpNorm(q_root));
  cert.gamma = OpNorm(cert.L);
  return cert;
}

}  // namespace riccatitron
