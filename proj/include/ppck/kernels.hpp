#pragma once

#include "ppck/types.hpp"

namespace ppck {

// Anisotropic ranges for one fidelity level, in normalized-input units.
// Smoothness is restricted to the closed-form Matern cases.
struct CorrelationParams {
  Vector phis;
  double nu = 2.5;

  CorrelationParams() = default;
  CorrelationParams(Vector phis_, double nu_);

  Index dim() const { return phis.size(); }
};

bool valid_smoothness(double nu);

// One-dimensional Matern correlation with the sqrt(2*nu)*u/phi argument
// convention; nu in {0.5, 1.5, 2.5}.
double matern(double u, double phi, double nu);

// prod_i matern(|x_i - x'_i|, phi_i, nu)
double product_corr(const Vector& x, const Vector& x_prime,
                    const CorrelationParams& params);

// (i,j) entry is product_corr(A.row(i), B.row(j)). Rows are points.
Matrix corr_matrix(const Matrix& A, const Matrix& B,
                   const CorrelationParams& params);

// Self-correlation: symmetric with exact unit diagonal.
Matrix corr_matrix(const Matrix& A, const CorrelationParams& params);

}  // namespace ppck
