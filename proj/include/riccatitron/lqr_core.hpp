#pragma once

#include "riccatitron/common.hpp"

namespace riccatitron {

/// Linear dynamics x_{t+1} = A x_t + B u_t + w_t with stage cost
/// ‖x‖²_Rx + ‖u‖²_Ru. Rx and Ru must be symmetric positive definite.
class LinearSystem {
 public:
  /// Empty placeholder (dx = du = 0); use Make for a usable system.
  LinearSystem() = default;
  /// Validates shapes, symmetry and strict positive definiteness of the costs.
  static LinearSystem Make(Matrix A, Matrix B, Matrix Rx, Matrix Ru);

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Matrix& Rx() const { return Rx_; }
  const Matrix& Ru() const { return Ru_; }
  int dx() const { return static_cast<int>(A_.rows()); }
  int du() const { return static_cast<int>(B_.cols()); }

  /// ‖x‖²_Rx + ‖u‖²_Ru
  double StageCost(const Vector& x, const Vector& u) const;

 private:
  LinearSystem(Matrix A, Matrix B, Matrix Rx, Matrix Ru)
      : A_(std::move(A)), B_(std::move(B)), Rx_(std::move(Rx)), Ru_(std::move(Ru)) {}

  Matrix A_, B_, Rx_, Ru_;
};

/// Infinite-horizon LQR quantities derived from the DARE solution.
struct RiccatiInfinite {
  LinearSystem system;
  Matrix P;      // P∞
  Matrix K;      // K∞ = Σ∞⁻¹ Bᵀ P∞ A
  Matrix Sigma;  // Σ∞ = Ru + Bᵀ P∞ B
  Matrix Acl;    // A − B K∞
  double kappa = 1.0;
  double gamma = 0.0;
};

struct ProblemScales {
  double psi_star = 1.0;        // max{1, ‖A‖, ‖B‖, ‖Rx‖, ‖Ru‖}
  double beta_star = 1.0;       // max{1, λmin(Ru)⁻¹, λmin(Rx)⁻¹}
  double gamma_star_cap = 1.0;  // max{1, ‖P∞‖}
};

/// Witness that A − BK = H L H⁻¹ with ‖H‖‖H⁻¹‖ ≤ kappa and ‖L‖ ≤ gamma < 1.
struct StabilityCertificate {
  double kappa = 1.0;
  double gamma = 0.0;
  Matrix H;
  Matrix L;
};

struct DareOptions {
  double tol = 1e-10;
  int max_iter = 100000;
};

// Linear-algebra helpers shared across modules.
double OpNorm(const Matrix& M);
double SpectralRadius(const Matrix& M);
double MinEigenvalue(const Matrix& symmetric);
double MaxEigenvalue(const Matrix& symmetric);
/// Square root of a symmetric PSD matrix; tiny negative eigenvalues clamp to 0.
Matrix SymmetricSqrt(const Matrix& symmetric);
/// Inverse square root of a symmetric PD matrix.
Matrix SymmetricInvSqrt(const Matrix& symmetric);

/// Solves the DARE by backward value iteration from P = 0. Throws
/// NumericError when max_iter is exhausted (the pair (A, B) is likely not
/// stabilizable) or when Ru + BᵀPB loses definiteness.
Matrix SolveDare(const LinearSystem& system, const DareOptions& options = {});

/// ‖P − (AᵀPA + Rx − AᵀPB(Ru+BᵀPB)⁻¹BᵀPA)‖_op
double DareResidual(const LinearSystem& system, const Matrix& P);

/// Computes K∞, Σ∞, Acl∞ and the (κ∞, γ∞) strong-stability pair. Throws
/// NumericError if P is not positive definite or γ∞ ≥ 1.
RiccatiInfinite DeriveInfiniteHorizon(const LinearSystem& system, const Matrix& P);

/// Convenience: SolveDare followed by DeriveInfiniteHorizon.
RiccatiInfinite SolveInfiniteHorizon(const LinearSystem& system,
                                     const DareOptions& options = {});

ProblemScales ComputeProblemScales(const LinearSystem& system, const Matrix& P);

/// Builds a strong-stability witness for A − BK from the discrete Lyapunov
/// solution Q = Σ (Aclᵀ)^i Acl^i: H = Q^{-1/2}, L = Q^{1/2} Acl Q^{-1/2}.
/// Throws NumericError when ρ(A − BK) ≥ 1.
StabilityCertificate CertifyStrongStability(const LinearSystem& system, const Matrix& K,
                                            double tol = 1e-12, int max_terms = 1000000);

}  // namespace riccatitron
