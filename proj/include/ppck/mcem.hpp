#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ppck/design.hpp"
#include "ppck/kernels.hpp"
#include "ppck/priors.hpp"
#include "ppck/trend.hpp"
#include "ppck/types.hpp"

namespace ppck {

// Monte Carlo realizations of the imputed outputs: y[k][t] is an
// n_miss(t) x N matrix aligned with aug.x_miss[t]; empty at the top level.
struct MissingDraws {
  std::vector<std::vector<Matrix>> y;
  std::vector<std::string> warnings;

  int M() const { return static_cast<int>(y.size()); }
};

struct OptimizerConfig {
  std::vector<double> restart_multipliers = {1.0, 0.2, 5.0};
  int max_evals = 250;        // per restart
  double initial_step = 0.5;  // simplex edge, log units
  double x_tol = 1e-6;        // simplex diameter, log units
  double f_tol = 1e-11;       // relative objective spread
};

struct McemConfig {
  double nu = 2.5;
  int trend_degree = 0;
  int m_init = 30;
  int m_growth = 10;
  int m_max = 100;
  int max_iters = 200;
  double tol_log_phi = 1e-3;
  int tol_streak = 3;
  double base_jitter = 1e-8;
  uint64_t seed = 0;
  int threads = 0;  // 0: PPCOKRIG_THREADS or hardware concurrency
  int m_pred = 30;  // default draw count for downstream prediction
  OptimizerConfig optimizer;

  int schedule_m(int iter) const {
    return std::min(m_init + m_growth * (iter - 1), m_max);
  }
};

struct TraceRow {
  int iter = 0;
  int M = 0;
  double wall_ms = 0.0;
  std::vector<Vector> phis;  // per level, after the M-step
  std::vector<double> q;     // q_hat at the updated phi
};

struct FittedEmulator {
  AugmentedDesign aug;
  std::vector<Matrix> x_raw;            // per level, n_t x d, raw units
  std::vector<Matrix> y_obs;            // per level, n_t x N
  std::vector<CorrelationParams> phis;  // per level
  std::vector<Matrix> b_hat;            // per level, q_t x N
  std::vector<Vector> sigma2;           // per level, N (S^2 / (n_aug - q))
  MissingDraws retained;
  TrendBasis trend;
  std::vector<JrPriorConfig> jr;
  McemConfig config;
  bool converged = false;
  int iterations = 0;
  std::vector<TraceRow> trace;

  int levels() const { return aug.s; }
};

// Completed outputs [observed; imputed] for draw k at level t (n_aug x N).
Matrix augmented_outputs(const AugmentedDesign& aug,
                         const std::vector<Matrix>& y_obs,
                         const MissingDraws& draws, int k, int t);

// Scale-discrepancy regressor columns for level t > 0: the level t-1
// augmented outputs gathered at level t's augmented inputs (n_aug(t) x N).
Matrix w_columns(const AugmentedDesign& aug, const std::vector<Matrix>& y_obs,
                 const MissingDraws& draws, int k, int t);

// Draws the missing outputs from their Student-t conditionals, bottom-up
// within each Monte Carlo index. Streams are keyed by (k, level), so results
// do not depend on scheduling.
MissingDraws sample_missing(const std::vector<CorrelationParams>& phis,
                            const AugmentedDesign& aug,
                            const std::vector<Matrix>& y_obs,
                            const TrendBasis& trend, uint64_t seed, int M,
                            double base_jitter, int threads = 1);

// Monte Carlo Q-function for one level: callable at any phi, sharing one
// factorization per evaluation across all draws and coordinates.
class LevelQ {
 public:
  LevelQ(const AugmentedDesign& aug, const std::vector<Matrix>& y_obs,
         const TrendBasis& trend, const MissingDraws& draws, int level,
         const JrPriorConfig& jr, double base_jitter, int threads = 1);

  double operator()(const CorrelationParams& phi) const;

  bool draw_independent() const { return draw_independent_; }

 private:
  Matrix x_aug_;
  Matrix H_;
  Matrix y_base_;               // observed rows, zero at imputed rows
  Matrix e_sel_;                // n_aug x n_miss selector of imputed rows
  Matrix w_base_;               // level > 0: fixed part of the W columns
  Matrix p_sel_;                // n_aug x D selector of draw-fed W rows
  std::vector<Matrix> y_draw_;  // per k, n_miss x N
  std::vector<Matrix> w_draw_;  // per k, D x N
  JrPriorConfig jr_;
  double jitter_ = 1e-8;
  Index n_ = 0, p_ = 0, q_ = 0, N_ = 0;
  bool has_w_ = false;
  bool draw_independent_ = false;
  int threads_ = 1;
};

// Mean over draws of the level's integrated-posterior contribution.
double q_hat(const CorrelationParams& phi_t, const AugmentedDesign& aug,
             const std::vector<Matrix>& y_obs, const TrendBasis& trend,
             const MissingDraws& draws, int level, const JrPriorConfig& jr,
             double base_jitter, int threads = 1);

// Simplex search in log(phi) with restarts; the result never scores below
// the initial point. Non-finite evaluations are treated as -infinity.
CorrelationParams m_step(
    const std::function<double(const CorrelationParams&)>& q,
    const CorrelationParams& init, const OptimizerConfig& cfg);

FittedEmulator run_mcem(const std::vector<FidelityData>& levels,
                        const McemConfig& cfg);

}  // namespace ppck
