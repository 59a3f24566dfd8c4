#pragma once

#include "ppck/gls.hpp"
#include "ppck/kernels.hpp"
#include "ppck/types.hpp"

namespace ppck {

// Jointly robust prior on the per-level range parameters, parameterized by
// the inverse ranges u_l = C_l / phi_l.
struct JrPriorConfig {
  double a = 0.2;
  double b = 1.0;
  Vector C;

  // Reference defaults on normalized inputs: a = 0.2, b = n^{-1/d}(a + d),
  // C_l = n^{-1/d} (the normalized input range is 1).
  static JrPriorConfig defaults(Index n_aug, Index d);
};

// a*log(sum_l C_l/phi_l) - b*(sum_l C_l/phi_l)
double jr_log_prior(const CorrelationParams& phis, const JrPriorConfig& cfg);

// Per-level contribution to the integrated log-posterior after the trend,
// scale-discrepancy, and variance parameters are marginalized:
//   ln pi(phi) - sum_j ln|T_j'R^{-1}T_j|/2 - N ln|R|/2 - (n-q) sum_j ln S2_j/2
// Xaug holds the augmented inputs (normalized), H the trend matrix, Ytil the
// completed outputs, and Wtil the per-coordinate scale-discrepancy columns
// (nullptr at the lowest level).
double level_log_integrated_posterior(const CorrelationParams& phi,
                                      const Matrix& Xaug, const Matrix& H,
                                      const Matrix& Ytil, const Matrix* Wtil,
                                      const JrPriorConfig& jr,
                                      double base_jitter);

// Same, reusing a factorization of the level correlation matrix.
double level_log_integrated_posterior(const CholFactor& fac,
                                      const CorrelationParams& phi,
                                      const Matrix& H, const Matrix& Ytil,
                                      const Matrix* Wtil,
                                      const JrPriorConfig& jr);

}  // namespace ppck
