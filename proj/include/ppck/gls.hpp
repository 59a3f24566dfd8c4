#pragma once

#include <optional>

#include "ppck/types.hpp"

namespace ppck {

// Lower-triangular factor of R + jitter*I together with its log-determinant.
// Immutable after construction; shareable across threads.
struct CholFactor {
  Matrix L;
  double logdet = 0.0;
  double jitter_used = 0.0;

  Index size() const { return L.rows(); }

  // L^{-1} B
  Matrix whiten(const Matrix& B) const;
  Vector whiten(const Vector& b) const;
  // (R + jitter*I)^{-1} B
  Matrix solve(const Matrix& B) const;
  Vector solve(const Vector& b) const;
};

// Factors R + jitter*I, escalating jitter tenfold on failure up to 1e-4.
// `label` names the matrix in error messages.
CholFactor chol_factor(const Matrix& R, double base_jitter,
                       const std::string& label = "correlation matrix");

struct GlsFit {
  Vector b_hat;
  double s2 = 0.0;          // y' Q y, clamped at zero
  double logdet_TtRT = 0.0; // ln |T' R^{-1} T|
};

// Generalized least squares through the Cholesky factor:
//   b_hat = (T'R^{-1}T)^{-1} T'R^{-1} y,  s2 = y'Q y.
GlsFit gls_fit(const CholFactor& fac, const Matrix& T, const Vector& y);

// Per-coordinate profile terms for T_j = [H, W_j] sharing one factorization.
struct ProfileTerms {
  Vector logdet_TtRT;  // ln|T_j' R^{-1} T_j| per coordinate
  Vector s2;           // S^2(phi, y_j) per coordinate
};

// Shared O(n^3 + n^2 p) setup, O(n^2) per coordinate afterwards. W has one
// column per coordinate; pass nullptr when T_j = H for every coordinate.
ProfileTerms fast_profile_terms(const CholFactor& fac, const Matrix& H,
                                const Matrix* W, const Matrix& Y);

// Shared pieces of the fast profile computation, reusable by callers that
// update the whitened Y/W columns incrementally across Monte Carlo draws.
struct ProfileWorkspace {
  Matrix Hw;          // L^{-1} H
  Eigen::LLT<Matrix> A_llt;  // factor of H'R^{-1}H
  double logdet_A = 0.0;
  Index p = 0;

  // logdet and s2 for one coordinate given whitened y (and optionally w).
  void terms(const Vector& yw, const Vector* ww, double& logdet,
             double& s2) const;
};

ProfileWorkspace make_profile_workspace(const CholFactor& fac, const Matrix& H);

}  // namespace ppck
