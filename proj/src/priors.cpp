#include "ppck/priors.hpp"

#include <cmath>
#include <string>

namespace ppck {

JrPriorConfig JrPriorConfig::defaults(Index n_aug, Index d) {
  JrPriorConfig cfg;
  cfg.a = 0.2;
  const double scale = std::pow(static_cast<double>(n_aug),
                                -1.0 / static_cast<double>(d));
  cfg.b = scale * (cfg.a + static_cast<double>(d));
  cfg.C = Vector::Constant(d, scale);
  return cfg;
}

double jr_log_prior(const CorrelationParams& phis, const JrPriorConfig& cfg) {
  if (cfg.C.size() != phis.dim())
    throw ValidationError("jr_log_prior: dimension mismatch");
  if (!(cfg.a > 0.0) || !(cfg.b > 0.0) || (cfg.C.array() <= 0.0).any())
    throw ValidationError("jr_log_prior: hyperparameters must be positive");
  double u = 0.0;
  for (Index l = 0; l < phis.dim(); ++l) {
    if (!(phis.phis[l] > 0.0))
      throw ValidationError("jr_log_prior: non-positive range parameter");
    u += cfg.C[l] / phis.phis[l];
  }
  return cfg.a * std::log(u) - cfg.b * u;
}

double level_log_integrated_posterior(const CholFactor& fac,
                                      const CorrelationParams& phi,
                                      const Matrix& H, const Matrix& Ytil,
                                      const Matrix* Wtil,
                                      const JrPriorConfig& jr) {
  const Index n = H.rows();
  const Index N = Ytil.cols();
  const Index q = H.cols() + (Wtil != nullptr ? 1 : 0);
  if (n <= q)
    throw ValidationError(
        "level posterior: augmented size must exceed regressor count (n=" +
        std::to_string(n) + ", q=" + std::to_string(q) + ")");
  if (!Ytil.allFinite())
    throw ValidationError("level posterior: non-finite augmented outputs");
  const ProfileTerms terms = fast_profile_terms(fac, H, Wtil, Ytil);
  double sum_logdet = 0.0;
  double sum_ln_s2 = 0.0;
  for (Index j = 0; j < N; ++j) {
    const double s2 = terms.s2[j];
    if (!(s2 > 0.0) || !std::isfinite(s2))
      throw NumericalError("level posterior: nonpositive S^2 at coordinate " +
                           std::to_string(j));
    sum_logdet += terms.logdet_TtRT[j];
    sum_ln_s2 += std::log(s2);
  }
  const double dof = static_cast<double>(n - q);
  return jr_log_prior(phi, jr) - 0.5 * sum_logdet -
         0.5 * static_cast<double>(N) * fac.logdet - 0.5 * dof * sum_ln_s2;
}

double level_log_integrated_posterior(const CorrelationParams& phi,
                                      const Matrix& Xaug, const Matrix& H,
                                      const Matrix& Ytil, const Matrix* Wtil,
                                      const JrPriorConfig& jr,
                                      double base_jitter) {
  const CholFactor fac =
      chol_factor(corr_matrix(Xaug, phi), base_jitter, "level correlation");
  return level_log_integrated_posterior(fac, phi, H, Ytil, Wtil, jr);
}

}  // namespace ppck
