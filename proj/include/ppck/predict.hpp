#pragma once

#include <mutex>
#include <vector>

#include "ppck/mcem.hpp"
#include "ppck/rng.hpp"
#include "ppck/types.hpp"

namespace ppck {

// Per-coordinate empirical summaries of the level-s predictive draws.
struct PredictionSummary {
  Vector mean;
  Vector sd;      // denominator m_draws - 1
  Vector lower;   // 2.5% type-7 quantile
  Vector upper;   // 97.5% type-7 quantile
  int m_draws = 0;
};

// Type-7 quantile: linear interpolation between order statistics.
double quantile_type7(std::vector<double> values, double p);

// Summaries of an m_draws x N matrix of draws; needs at least two rows.
PredictionSummary summarize(const Matrix& draws);

// Sequential Student-t sampler with per-level factorizations shared across
// coordinates, recycled imputations, and query points.
class Predictor {
 public:
  explicit Predictor(const FittedEmulator& em, int threads = 0);

  // One chain draw at x0 using recycled imputation k: an s x N matrix of
  // per-level sampled values. Randomness comes from the provided stream.
  Matrix sequential_draw(const Vector& x0_raw, int k,
                         const rng::Stream& stream) const;

  // Composition sampling: cycles deterministically over the retained
  // imputations, draws m_pred chains, and summarizes the level-s values.
  // raw_draws, when given, receives the m_pred x N draw matrix.
  PredictionSummary predict(const Vector& x0_raw, int m_pred, uint64_t seed,
                            Matrix* raw_draws = nullptr) const;

  int retained_draws() const { return retained_; }

 private:
  struct PerDraw {
    Matrix ytil;        // n_aug x N completed outputs
    Matrix w;           // n_aug x N scale regressor (levels > 0)
    Matrix bhat;        // q x N
    Matrix resid_rinv;  // n_aug x N, R^{-1}(ytil - T bhat)
    Matrix tt_inv;      // (q*q) x N, columns are vec of (T'R^{-1}T)^{-1}
    Vector s2;          // N
    bool ready = false;
  };
  struct LevelCtx {
    Matrix x_aug;
    Matrix H;
    CholFactor fac;
    ProfileWorkspace ws;
    Index q = 0;
    Index df = 0;  // observed-run degrees of freedom n_t - q_t
    std::vector<PerDraw> per_draw;
  };
  struct QueryCtx {
    Vector x0n;
    std::vector<Index> exact;    // matching augmented row per level, or -1
    std::vector<Vector> r;       // correlation to the augmented inputs
    std::vector<Vector> rinv_r;  // R^{-1} r
    std::vector<Vector> h_r;     // H' R^{-1} r
    std::vector<double> rr;      // r' R^{-1} r
    std::vector<Vector> hx;      // trend at x0
    std::vector<uint64_t> ctr_offset;  // rng counter base per level
  };

  QueryCtx make_query(const Vector& x0_raw) const;
  void ensure_draw(int k) const;
  Matrix chain_draw(const QueryCtx& q, int k, const rng::Stream& stream) const;

  const FittedEmulator* em_;
  int threads_ = 1;
  int retained_ = 1;
  mutable std::vector<LevelCtx> ctx_;
  mutable std::mutex build_mutex_;
};

// Fixed parameters for the one-step validation path.
struct OneStepParams {
  std::vector<Matrix> beta;    // per level, p x N
  std::vector<Vector> gamma;   // per coupling (levels 2..s), length N
  std::vector<Vector> sigma2;  // per level, length N
  std::vector<CorrelationParams> phis;
};

// Extracts plug-in parameters (beta, gamma, sigma^2, phi) from a fit.
OneStepParams plugin_params(const FittedEmulator& em);

// One-step prediction with fixed parameters on a nested augmented design
// with all augmented outputs available: per-coordinate mean and variance of
// the top-level output at x0. O(N (sum n_aug)^3); validation path.
std::pair<Vector, Vector> one_step_predict(const AugmentedDesign& aug,
                                           const std::vector<Matrix>& y_til,
                                           const TrendBasis& trend,
                                           const OneStepParams& pars,
                                           const Vector& x0_raw,
                                           double base_jitter = 1e-8);

}  // namespace ppck
