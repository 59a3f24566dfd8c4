#include "ppck/mcem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "ppck/gls.hpp"
#include "ppck/rng.hpp"
#include "ppck/threading.hpp"

namespace ppck {

namespace {

constexpr uint32_t kDomainEStep = 1;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Matrix augmented_outputs(const AugmentedDesign& aug,
                         const std::vector<Matrix>& y_obs,
                         const MissingDraws& draws, int k, int t) {
  Matrix Y(aug.n_aug(t), aug.N);
  Y.topRows(aug.n_obs(t)) = y_obs[t];
  if (aug.n_miss(t) > 0) Y.bottomRows(aug.n_miss(t)) = draws.y[k][t];
  return Y;
}

Matrix w_columns(const AugmentedDesign& aug, const std::vector<Matrix>& y_obs,
                 const MissingDraws& draws, int k, int t) {
  if (t < 1) throw ValidationError("w_columns: undefined at the lowest level");
  const Index n_prev_obs = aug.n_obs(t - 1);
  Matrix W(aug.n_aug(t), aug.N);
  for (Index i = 0; i < aug.n_aug(t); ++i) {
    const Index src = aug.map_to_prev[t][i];
    if (src < n_prev_obs)
      W.row(i) = y_obs[t - 1].row(src);
    else
      W.row(i) = draws.y[k][t - 1].row(src - n_prev_obs);
  }
  return W;
}

// ---------------------------------------------------------------------------
// E-step sampling (S.7 conditionals)

MissingDraws sample_missing(const std::vector<CorrelationParams>& phis,
                            const AugmentedDesign& aug,
                            const std::vector<Matrix>& y_obs,
                            const TrendBasis& trend, uint64_t seed, int M,
                            double base_jitter, int threads) {
  if (M < 1) throw ValidationError("sample_missing: M must be at least 1");
  const int s = aug.s;
  const Index N = aug.N;
  MissingDraws draws;
  draws.y.assign(M, std::vector<Matrix>(s));
  for (int k = 0; k < M; ++k)
    for (int t = 0; t < s; ++t) draws.y[k][t].resize(aug.n_miss(t), N);

  for (int t = 0; t + 1 < s; ++t) {
    const Index n = aug.n_obs(t);
    const Index m = aug.n_miss(t);
    const Index p = trend.size(aug.d);
    const Index q = p + (t > 0 ? 1 : 0);
    const Index df = n - q;
    if (df <= 0)
      throw ValidationError("sample_missing: level " + std::to_string(t + 1) +
                            " has nonpositive degrees of freedom");
    if (df <= 2)
      draws.warnings.push_back("level " + std::to_string(t + 1) +
                               ": degrees of freedom " + std::to_string(df) +
                               " <= 2, draws have infinite variance");
    if (m == 0) continue;

    const CholFactor fac =
        chol_factor(corr_matrix(aug.x_obs[t], phis[t]), base_jitter,
                    "observed correlation, level " + std::to_string(t + 1));
    const Matrix cross = corr_matrix(aug.x_miss[t], aug.x_obs[t], phis[t]);
    const Matrix r_miss = corr_matrix(aug.x_miss[t], phis[t]);
    const Matrix h_obs = trend.eval(aug.x_obs[t]);
    const Matrix h_miss = trend.eval(aug.x_miss[t]);
    const Matrix rinv_cross = fac.solve(Matrix(cross.transpose()));  // n x m
    const Matrix base_cov = r_miss - cross * rinv_cross;
    const uint64_t stride = static_cast<uint64_t>(m + df);

    if (t == 0) {
      // Regressors are shared across coordinates and draws: the conditional
      // covariance factor is computed once.
      const Matrix Tw = fac.whiten(h_obs);
      Eigen::LLT<Matrix> allt(Tw.transpose() * Tw);
      if (allt.info() != Eigen::Success)
        throw NumericalError("sample_missing: degenerate trend at level 1");
      const Matrix Yw = fac.whiten(y_obs[t]);
      const Matrix Z = Tw.transpose() * Yw;            // p x N
      const Matrix B = allt.solve(Z);                  // b_hat columns
      Vector s2(N);
      for (Index j = 0; j < N; ++j)
        s2[j] = std::max(0.0, Yw.col(j).squaredNorm() - Z.col(j).dot(B.col(j)));
      const Matrix D = h_miss.transpose() - h_obs.transpose() * rinv_cross;
      const Matrix cond = base_cov + D.transpose() * allt.solve(D);
      const CholFactor cfac =
          chol_factor(cond, base_jitter, "conditional covariance, level 1");
      const Matrix resid = y_obs[t] - h_obs * B;
      const Matrix mu = h_miss * B + cross * fac.solve(resid);  // m x N

      parallel_for(M, threads, [&](int64_t k) {
        const rng::Stream st(seed, kDomainEStep, static_cast<uint64_t>(k),
                             static_cast<uint64_t>(t));
        Vector z(m);
        for (Index j = 0; j < N; ++j) {
          const uint64_t base = static_cast<uint64_t>(j) * stride;
          for (Index i = 0; i < m; ++i)
            z[i] = st.normal(base + static_cast<uint64_t>(i));
          const double w = st.chisq(base + static_cast<uint64_t>(m),
                                    static_cast<int>(df));
          draws.y[k][t].col(j) =
              mu.col(j) + std::sqrt(s2[j] / w) * (cfac.L * z);
        }
      });
    } else {
      // The regressor column depends on the lower-level imputation, so the
      // generalized least squares step is per draw and coordinate.
      const Index n_prev_obs = aug.n_obs(t - 1);
      const Matrix Hw = fac.whiten(h_obs);
      parallel_for(M, threads, [&](int64_t k) {
        const rng::Stream st(seed, kDomainEStep, static_cast<uint64_t>(k),
                             static_cast<uint64_t>(t));
        Vector w_obs(n), w_miss(m), z(m);
        Matrix T(n, q), Tmiss(m, q);
        for (Index j = 0; j < N; ++j) {
          for (Index i = 0; i < n; ++i) {
            const Index src = aug.map_to_prev[t][i];
            w_obs[i] = src < n_prev_obs ? y_obs[t - 1](src, j)
                                        : draws.y[k][t - 1](src - n_prev_obs, j);
          }
          for (Index i = 0; i < m; ++i) {
            const Index src = aug.map_to_prev[t][n + i];
            w_miss[i] = src < n_prev_obs
                            ? y_obs[t - 1](src, j)
                            : draws.y[k][t - 1](src - n_prev_obs, j);
          }
          T.leftCols(p) = h_obs;
          T.col(p) = w_obs;
          Tmiss.leftCols(p) = h_miss;
          Tmiss.col(p) = w_miss;
          const Matrix Tw = fac.whiten(T);
          Eigen::LLT<Matrix> allt(Tw.transpose() * Tw);
          if (allt.info() != Eigen::Success)
            throw NumericalError("sample_missing: degenerate regressors at level " +
                                 std::to_string(t + 1) + ", coordinate " +
                                 std::to_string(j));
          const Vector yw = fac.whiten(Vector(y_obs[t].col(j)));
          const Vector zt = Tw.transpose() * yw;
          const Vector b = allt.solve(zt);
          const double s2 = std::max(0.0, yw.squaredNorm() - zt.dot(b));
          const Matrix D = Tmiss.transpose() - T.transpose() * rinv_cross;
          const Matrix cond = base_cov + D.transpose() * allt.solve(D);
          const CholFactor cfac = chol_factor(
              cond, base_jitter,
              "conditional covariance, level " + std::to_string(t + 1));
          const Vector mu =
              Tmiss * b + cross * fac.solve(Vector(y_obs[t].col(j) - T * b));
          const uint64_t base = static_cast<uint64_t>(j) * stride;
          for (Index i = 0; i < m; ++i)
            z[i] = st.normal(base + static_cast<uint64_t>(i));
          const double w =
              st.chisq(base + static_cast<uint64_t>(m), static_cast<int>(df));
          draws.y[k][t].col(j) = mu + std::sqrt(s2 / w) * (cfac.L * z);
        }
      });
    }
  }
  return draws;
}

// ---------------------------------------------------------------------------
// Monte Carlo Q-function

LevelQ::LevelQ(const AugmentedDesign& aug, const std::vector<Matrix>& y_obs,
               const TrendBasis& trend, const MissingDraws& draws, int level,
               const JrPriorConfig& jr, double base_jitter, int threads)
    : jr_(jr), jitter_(base_jitter), threads_(threads) {
  const int M = draws.M();
  if (M < 1) throw ValidationError("LevelQ: need at least one draw");
  x_aug_ = aug.aug(level);
  H_ = trend.eval(x_aug_);
  n_ = aug.n_aug(level);
  p_ = H_.cols();
  N_ = aug.N;
  has_w_ = level > 0;
  q_ = p_ + (has_w_ ? 1 : 0);
  if (n_ <= q_)
    throw ValidationError("LevelQ: level " + std::to_string(level + 1) +
                          " needs more augmented inputs than regressors");

  const Index m = aug.n_miss(level);
  y_base_ = Matrix::Zero(n_, N_);
  y_base_.topRows(aug.n_obs(level)) = y_obs[level];
  e_sel_ = Matrix::Zero(n_, m);
  for (Index i = 0; i < m; ++i) e_sel_(aug.n_obs(level) + i, i) = 1.0;
  if (m > 0) {
    y_draw_.reserve(M);
    for (int k = 0; k < M; ++k) y_draw_.push_back(draws.y[k][level]);
  }

  Index n_fed = 0;
  if (has_w_) {
    const Index n_prev_obs = aug.n_obs(level - 1);
    std::vector<std::pair<Index, Index>> fed;  // (row, missing index below)
    w_base_ = Matrix::Zero(n_, N_);
    for (Index i = 0; i < n_; ++i) {
      const Index src = aug.map_to_prev[level][i];
      if (src < n_prev_obs)
        w_base_.row(i) = y_obs[level - 1].row(src);
      else
        fed.emplace_back(i, src - n_prev_obs);
    }
    n_fed = static_cast<Index>(fed.size());
    p_sel_ = Matrix::Zero(n_, n_fed);
    for (Index a = 0; a < n_fed; ++a) p_sel_(fed[a].first, a) = 1.0;
    if (n_fed > 0) {
      w_draw_.reserve(M);
      for (int k = 0; k < M; ++k) {
        Matrix sel(n_fed, N_);
        for (Index a = 0; a < n_fed; ++a)
          sel.row(a) = draws.y[k][level - 1].row(fed[a].second);
        w_draw_.push_back(std::move(sel));
      }
    }
  }
  draw_independent_ = (m == 0) && (n_fed == 0);
}

double LevelQ::operator()(const CorrelationParams& phi) const {
  const CholFactor fac =
      chol_factor(corr_matrix(x_aug_, phi), jitter_, "level correlation");
  const ProfileWorkspace ws = make_profile_workspace(fac, H_);

  const Matrix Yw0 = fac.whiten(y_base_);
  const Matrix Z0 = ws.Hw.transpose() * Yw0;  // p x N
  Matrix Ge, ZGe;
  const bool has_miss = e_sel_.cols() > 0;
  if (has_miss) {
    Ge = fac.whiten(e_sel_);
    ZGe = ws.Hw.transpose() * Ge;
  }
  Matrix Ww0, V0, Gp, VGp;
  const bool has_fed = has_w_ && p_sel_.cols() > 0;
  if (has_w_) {
    Ww0 = fac.whiten(w_base_);
    V0 = ws.Hw.transpose() * Ww0;
    if (has_fed) {
      Gp = fac.whiten(p_sel_);
      VGp = ws.Hw.transpose() * Gp;
    }
  }

  const double dof = static_cast<double>(n_ - q_);
  const int M = draw_independent_ ? 1 : static_cast<int>(std::max<size_t>(
                                            {y_draw_.size(), w_draw_.size(), 1}));

  std::vector<double> partial(M, 0.0);
  parallel_for(M, threads_, [&](int64_t k) {
    Matrix Yw = Yw0;
    Matrix Z = Z0;
    if (has_miss && !y_draw_.empty()) {
      Yw.noalias() += Ge * y_draw_[k];
      Z.noalias() += ZGe * y_draw_[k];
    }
    const Matrix AZ = ws.A_llt.solve(Z);
    double sum_logdet = 0.0;
    double sum_lns2 = 0.0;
    if (!has_w_) {
      for (Index j = 0; j < N_; ++j) {
        const double s2 = Yw.col(j).squaredNorm() - Z.col(j).dot(AZ.col(j));
        if (!(s2 > 0.0) || !std::isfinite(s2))
          throw NumericalError("q_hat: nonpositive S^2 at coordinate " +
                               std::to_string(j));
        sum_logdet += ws.logdet_A;
        sum_lns2 += std::log(s2);
      }
    } else {
      Matrix Ww = Ww0;
      Matrix V = V0;
      if (has_fed) {
        Ww.noalias() += Gp * w_draw_[k];
        V.noalias() += VGp * w_draw_[k];
      }
      const Matrix AV = ws.A_llt.solve(V);
      for (Index j = 0; j < N_; ++j) {
        const double wQw = Ww.col(j).squaredNorm() - V.col(j).dot(AV.col(j));
        if (!(wQw > 0.0) || !std::isfinite(wQw))
          throw NumericalError(
              "q_hat: scale regressor collinear with trend at coordinate " +
              std::to_string(j));
        const double yQy = Yw.col(j).squaredNorm() - Z.col(j).dot(AZ.col(j));
        const double yQw = Yw.col(j).dot(Ww.col(j)) - Z.col(j).dot(AV.col(j));
        const double s2 = yQy - yQw * yQw / wQw;
        if (!(s2 > 0.0) || !std::isfinite(s2))
          throw NumericalError("q_hat: nonpositive S^2 at coordinate " +
                               std::to_string(j));
        sum_logdet += ws.logdet_A + std::log(wQw);
        sum_lns2 += std::log(s2);
      }
    }
    partial[k] = 0.5 * sum_logdet + 0.5 * dof * sum_lns2;
  });

  double mean_penalty = 0.0;
  for (int k = 0; k < M; ++k) mean_penalty += partial[k];
  mean_penalty /= static_cast<double>(M);

  return jr_log_prior(phi, jr_) -
         0.5 * static_cast<double>(N_) * fac.logdet - mean_penalty;
}

double q_hat(const CorrelationParams& phi_t, const AugmentedDesign& aug,
             const std::vector<Matrix>& y_obs, const TrendBasis& trend,
             const MissingDraws& draws, int level, const JrPriorConfig& jr,
             double base_jitter, int threads) {
  const LevelQ q(aug, y_obs, trend, draws, level, jr, base_jitter, threads);
  return q(phi_t);
}

// ---------------------------------------------------------------------------
// M-step: Nelder-Mead simplex in log(phi) (Lagarias et al. variant)

namespace {

struct SimplexPoint {
  Vector z;
  double g = kInf;
};

SimplexPoint nelder_mead_min(const std::function<double(const Vector&)>& g,
                             const Vector& z0, double step, int max_evals,
                             double x_tol, double f_tol) {
  const Index d = z0.size();
  std::vector<SimplexPoint> simplex(d + 1);
  int evals = 0;
  auto eval = [&](const Vector& z) {
    ++evals;
    return g(z);
  };
  simplex[0] = {z0, eval(z0)};
  for (Index i = 0; i < d; ++i) {
    Vector z = z0;
    z[i] += step;
    simplex[i + 1] = {z, eval(z)};
  }
  auto order = [&] {
    std::stable_sort(simplex.begin(), simplex.end(),
                     [](const SimplexPoint& a, const SimplexPoint& b) {
                       return a.g < b.g;
                     });
  };
  order();

  while (evals < max_evals) {
    double diam = 0.0;
    for (Index i = 1; i <= d; ++i)
      diam = std::max(diam,
                      (simplex[i].z - simplex[0].z).cwiseAbs().maxCoeff());
    const double spread = simplex[d].g - simplex[0].g;
    if (diam <= x_tol ||
        (std::isfinite(spread) &&
         spread <= f_tol * (std::abs(simplex[0].g) + 1e-12)))
      break;

    Vector centroid = Vector::Zero(d);
    for (Index i = 0; i < d; ++i) centroid += simplex[i].z;
    centroid /= static_cast<double>(d);
    const Vector& worst = simplex[d].z;

    const Vector zr = centroid + (centroid - worst);
    const double gr = eval(zr);
    if (gr < simplex[0].g) {
      const Vector ze = centroid + 2.0 * (centroid - worst);
      const double ge = eval(ze);
      simplex[d] = ge < gr ? SimplexPoint{ze, ge} : SimplexPoint{zr, gr};
    } else if (gr < simplex[d - 1].g) {
      simplex[d] = {zr, gr};
    } else if (gr < simplex[d].g) {
      const Vector zc = centroid + 0.5 * (zr - centroid);
      const double gc = eval(zc);
      if (gc <= gr) {
        simplex[d] = {zc, gc};
      } else {
        for (Index i = 1; i <= d; ++i) {
          simplex[i].z = simplex[0].z + 0.5 * (simplex[i].z - simplex[0].z);
          simplex[i].g = eval(simplex[i].z);
        }
      }
    } else {
      const Vector zc = centroid + 0.5 * (worst - centroid);
      const double gc = eval(zc);
      if (gc < simplex[d].g) {
        simplex[d] = {zc, gc};
      } else {
        for (Index i = 1; i <= d; ++i) {
          simplex[i].z = simplex[0].z + 0.5 * (simplex[i].z - simplex[0].z);
          simplex[i].g = eval(simplex[i].z);
        }
      }
    }
    order();
  }
  return simplex[0];
}

}  // namespace

CorrelationParams m_step(
    const std::function<double(const CorrelationParams&)>& q,
    const CorrelationParams& init, const OptimizerConfig& cfg) {
  const double nu = init.nu;
  auto g = [&](const Vector& z) -> double {
    Vector phi = z.array().exp();
    if (!phi.allFinite() || (phi.array() <= 0.0).any()) return kInf;
    try {
      const double v = q(CorrelationParams(phi, nu));
      return std::isfinite(v) ? -v : kInf;
    } catch (const NumericalError&) {
      return kInf;
    } catch (const ValidationError&) {
      return kInf;
    }
  };

  const Vector z_init = init.phis.array().log();
  SimplexPoint best{z_init, g(z_init)};
  const int max_evals = std::min(cfg.max_evals, 500);
  for (const double mult : cfg.restart_multipliers) {
    const Vector z0 = z_init.array() + std::log(mult);
    const SimplexPoint r = nelder_mead_min(g, z0, cfg.initial_step, max_evals,
                                           cfg.x_tol, cfg.f_tol);
    if (r.g < best.g) best = r;
  }
  if (!std::isfinite(best.g))
    throw NumericalError(
        "m_step: no finite objective value found from any restart");
  return CorrelationParams(best.z.array().exp(), nu);
}

// ---------------------------------------------------------------------------
// Training loop (Algorithm 1)

namespace {

// Rao-Blackwellized point estimates: per-draw GLS averaged over the retained
// imputations. Exact GLS on nested designs.
void point_estimates(FittedEmulator& em, int threads) {
  const auto& aug = em.aug;
  const int M = std::max(1, em.retained.M());
  em.b_hat.resize(aug.s);
  em.sigma2.resize(aug.s);
  for (int t = 0; t < aug.s; ++t) {
    const Matrix Xa = aug.aug(t);
    const Matrix H = em.trend.eval(Xa);
    const Index p = H.cols();
    const Index q = p + (t > 0 ? 1 : 0);
    const Index n = Xa.rows();
    const CholFactor fac =
        chol_factor(corr_matrix(Xa, em.phis[t]), em.config.base_jitter,
                    "level correlation");
    const ProfileWorkspace ws = make_profile_workspace(fac, H);
    Matrix bsum = Matrix::Zero(q, aug.N);
    Vector s2sum = Vector::Zero(aug.N);
    for (int k = 0; k < M; ++k) {
      const Matrix Ytil = augmented_outputs(aug, em.y_obs, em.retained, k, t);
      const Matrix Yw = fac.whiten(Ytil);
      const Matrix Z = ws.Hw.transpose() * Yw;
      if (t == 0) {
        const Matrix B = ws.A_llt.solve(Z);
        bsum += B;
        for (Index j = 0; j < aug.N; ++j)
          s2sum[j] += std::max(
              0.0, Yw.col(j).squaredNorm() - Z.col(j).dot(B.col(j)));
      } else {
        const Matrix W = w_columns(aug, em.y_obs, em.retained, k, t);
        const Matrix Ww = fac.whiten(W);
        Matrix A(q, q);
        A.topLeftCorner(p, p) = ws.Hw.transpose() * ws.Hw;
        Vector rhs(q);
        for (Index j = 0; j < aug.N; ++j) {
          const Vector hv = ws.Hw.transpose() * Ww.col(j);
          A.block(0, p, p, 1) = hv;
          A.block(p, 0, 1, p) = hv.transpose();
          A(p, p) = Ww.col(j).squaredNorm();
          rhs.head(p) = Z.col(j);
          rhs[p] = Ww.col(j).dot(Yw.col(j));
          const Vector b = Eigen::LDLT<Matrix>(A).solve(rhs);
          bsum.col(j) += b;
          s2sum[j] += std::max(0.0, Yw.col(j).squaredNorm() - rhs.dot(b));
        }
      }
    }
    em.b_hat[t] = bsum / static_cast<double>(M);
    em.sigma2[t] = s2sum / (static_cast<double>(M) *
                            static_cast<double>(n - q));
  }
  (void)threads;
}

}  // namespace

FittedEmulator run_mcem(const std::vector<FidelityData>& levels,
                        const McemConfig& cfg) {
  if (cfg.m_init < 1 || cfg.m_growth < 0 || cfg.m_max < cfg.m_init)
    throw ValidationError("run_mcem: invalid Monte Carlo schedule");
  if (!valid_smoothness(cfg.nu))
    throw ValidationError("run_mcem: smoothness must be one of 0.5, 1.5, 2.5");

  FittedEmulator em;
  em.aug = build_augmentation(levels);
  em.trend = TrendBasis{cfg.trend_degree};
  em.config = cfg;
  const int s = em.aug.s;
  const int threads = resolve_threads(cfg.threads);

  em.x_raw.resize(s);
  em.y_obs.resize(s);
  for (int t = 0; t < s; ++t) {
    em.x_raw[t] = levels[t].X;
    em.y_obs[t] = levels[t].Y;
  }

  em.jr.resize(s);
  em.phis.clear();
  for (int t = 0; t < s; ++t) {
    const Index q = em.trend.size(em.aug.d) + (t > 0 ? 1 : 0);
    if (em.aug.n_aug(t) <= q)
      throw ValidationError("run_mcem: level " + std::to_string(t + 1) +
                            " has too few runs for the trend basis");
    em.jr[t] = JrPriorConfig::defaults(em.aug.n_aug(t), em.aug.d);
    em.phis.emplace_back(Vector::Constant(em.aug.d, 0.5), cfg.nu);
  }

  MissingDraws draws;
  int streak = 0;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const auto t_start = std::chrono::steady_clock::now();
    const int M = cfg.schedule_m(iter);
    draws = sample_missing(em.phis, em.aug, em.y_obs, em.trend, cfg.seed, M,
                           cfg.base_jitter, threads);

    TraceRow row;
    row.iter = iter;
    row.M = M;
    double change = 0.0;
    std::vector<CorrelationParams> next;
    next.reserve(s);
    for (int t = 0; t < s; ++t) {
      const LevelQ q(em.aug, em.y_obs, em.trend, draws, t, em.jr[t],
                     cfg.base_jitter, threads);
      if (iter == 1) q(em.phis[t]);  // surface data problems unprotected
      CorrelationParams phi_t = m_step(q, em.phis[t], cfg.optimizer);
      row.q.push_back(q(phi_t));
      change = std::max(change, (phi_t.phis.array().log() -
                                 em.phis[t].phis.array().log())
                                    .abs()
                                    .maxCoeff());
      next.push_back(std::move(phi_t));
    }
    em.phis = std::move(next);
    for (int t = 0; t < s; ++t) row.phis.push_back(em.phis[t].phis);
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();
    em.trace.push_back(std::move(row));

    streak = change < cfg.tol_log_phi ? streak + 1 : 0;
    if (streak >= cfg.tol_streak) {
      em.converged = true;
      break;
    }
  }
  em.iterations = static_cast<int>(em.trace.size());
  em.retained = std::move(draws);
  point_estimates(em, threads);
  return em;
}

}  // namespace ppck
