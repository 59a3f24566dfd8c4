#include "ppck/predict.hpp"

#include <algorithm>
#include <cmath>

#include "ppck/threading.hpp"

namespace ppck {

namespace {

constexpr uint32_t kDomainPredict = 2;

}  // namespace

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  const double h = (static_cast<double>(n) - 1.0) * p;
  const auto lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= n) return values[n - 1];
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

PredictionSummary summarize(const Matrix& draws) {
  const Index M = draws.rows();
  const Index N = draws.cols();
  if (M < 2) throw ValidationError("summarize: need at least two draws");
  PredictionSummary s;
  s.m_draws = static_cast<int>(M);
  s.mean.resize(N);
  s.sd.resize(N);
  s.lower.resize(N);
  s.upper.resize(N);
  std::vector<double> col(M);
  for (Index j = 0; j < N; ++j) {
    const double mean = draws.col(j).mean();
    s.mean[j] = mean;
    s.sd[j] = std::sqrt((draws.col(j).array() - mean).square().sum() /
                        static_cast<double>(M - 1));
    for (Index i = 0; i < M; ++i) col[static_cast<size_t>(i)] = draws(i, j);
    s.lower[j] = quantile_type7(col, 0.025);
    s.upper[j] = quantile_type7(col, 0.975);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Predictor

Predictor::Predictor(const FittedEmulator& em, int threads)
    : em_(&em), threads_(resolve_threads(threads)) {
  const int s = em.aug.s;
  retained_ = std::max(1, em.retained.M());
  if (em.retained.M() == 0) {
    for (int t = 0; t < s; ++t)
      if (em.aug.n_miss(t) > 0)
        throw ValidationError(
            "Predictor: emulator has missing inputs but no retained draws");
  }
  ctx_.resize(s);
  for (int t = 0; t < s; ++t) {
    LevelCtx& L = ctx_[t];
    L.x_aug = em.aug.aug(t);
    L.H = em.trend.eval(L.x_aug);
    L.q = L.H.cols() + (t > 0 ? 1 : 0);
    L.df = em.aug.n_obs(t) - L.q;
    if (L.df <= 0)
      throw ValidationError("Predictor: level " + std::to_string(t + 1) +
                            " has nonpositive degrees of freedom");
    L.fac = chol_factor(corr_matrix(L.x_aug, em.phis[t]),
                        em.config.base_jitter, "level correlation");
    L.ws = make_profile_workspace(L.fac, L.H);
    L.per_draw.resize(retained_);
  }
}

void Predictor::ensure_draw(int k) const {
  std::scoped_lock lock(build_mutex_);
  if (ctx_[0].per_draw[k].ready) return;
  const auto& em = *em_;
  const MissingDraws* draws = &em.retained;
  MissingDraws empty;
  if (em.retained.M() == 0) {
    empty.y.assign(1, std::vector<Matrix>(em.aug.s));
    for (int t = 0; t < em.aug.s; ++t)
      empty.y[0][t].resize(em.aug.n_miss(t), em.aug.N);
    draws = &empty;
  }
  for (int t = 0; t < em.aug.s; ++t) {
    LevelCtx& L = ctx_[t];
    PerDraw& pd = L.per_draw[k];
    const Index N = em.aug.N;
    const Index p = L.H.cols();
    pd.ytil = augmented_outputs(em.aug, em.y_obs, *draws, k, t);
    const Matrix Yw = L.fac.whiten(pd.ytil);
    const Matrix Z = L.ws.Hw.transpose() * Yw;
    pd.bhat.resize(L.q, N);
    pd.s2.resize(N);
    pd.tt_inv.resize(L.q * L.q, N);
    Matrix resid(L.x_aug.rows(), N);
    if (t == 0) {
      const Matrix B = L.ws.A_llt.solve(Z);
      const Matrix a_inv =
          L.ws.A_llt.solve(Matrix::Identity(p, p));
      pd.bhat = B;
      for (Index j = 0; j < N; ++j) {
        pd.s2[j] = std::max(
            0.0, Yw.col(j).squaredNorm() - Z.col(j).dot(B.col(j)));
        pd.tt_inv.col(j) =
            Eigen::Map<const Vector>(a_inv.data(), p * p);
      }
      resid = pd.ytil - L.H * B;
    } else {
      pd.w = w_columns(em.aug, em.y_obs, *draws, k, t);
      const Matrix Ww = L.fac.whiten(pd.w);
      Matrix A(L.q, L.q);
      const Matrix Ahh = L.ws.Hw.transpose() * L.ws.Hw;
      Vector rhs(L.q);
      for (Index j = 0; j < N; ++j) {
        const Vector hv = L.ws.Hw.transpose() * Ww.col(j);
        A.topLeftCorner(p, p) = Ahh;
        A.block(0, p, p, 1) = hv;
        A.block(p, 0, 1, p) = hv.transpose();
        A(p, p) = Ww.col(j).squaredNorm();
        rhs.head(p) = Z.col(j);
        rhs[p] = Ww.col(j).dot(Yw.col(j));
        const Eigen::LDLT<Matrix> ldlt(A);
        const Vector b = ldlt.solve(rhs);
        const Matrix a_inv = ldlt.solve(Matrix::Identity(L.q, L.q));
        pd.bhat.col(j) = b;
        pd.tt_inv.col(j) =
            Eigen::Map<const Vector>(a_inv.data(), L.q * L.q);
        pd.s2[j] =
            std::max(0.0, Yw.col(j).squaredNorm() - rhs.dot(b));
        resid.col(j) =
            pd.ytil.col(j) - L.H * b.head(p) - pd.w.col(j) * b[p];
      }
    }
    pd.resid_rinv = L.fac.solve(resid);
    pd.ready = true;
  }
}

Predictor::QueryCtx Predictor::make_query(const Vector& x0_raw) const {
  const auto& em = *em_;
  if (x0_raw.size() != em.aug.d)
    throw ValidationError("predict: query dimension mismatch");
  if (!x0_raw.allFinite())
    throw ValidationError("predict: non-finite query input");
  QueryCtx q;
  q.x0n = em.aug.norm.apply(x0_raw);
  const int s = em.aug.s;
  q.exact.resize(s);
  q.r.resize(s);
  q.rinv_r.resize(s);
  q.h_r.resize(s);
  q.rr.resize(s);
  q.hx.resize(s);
  q.ctr_offset.resize(s);
  uint64_t offset = 0;
  for (int t = 0; t < s; ++t) {
    const LevelCtx& L = ctx_[t];
    q.exact[t] = find_row(L.x_aug, q.x0n.transpose(), em.aug.match_tol);
    const Index n = L.x_aug.rows();
    q.r[t].resize(n);
    Vector row(em.aug.d);
    for (Index i = 0; i < n; ++i) {
      row = L.x_aug.row(i);
      q.r[t][i] = product_corr(row, q.x0n, em.phis[t]);
    }
    q.rinv_r[t] = L.fac.solve(q.r[t]);
    q.h_r[t] = L.H.transpose() * q.rinv_r[t];
    q.rr[t] = q.r[t].dot(q.rinv_r[t]);
    q.hx[t] = em.trend.eval(q.x0n);
    q.ctr_offset[t] = offset;
    offset += static_cast<uint64_t>(em.aug.N) *
              static_cast<uint64_t>(1 + L.df);
  }
  return q;
}

Matrix Predictor::chain_draw(const QueryCtx& q, int k,
                             const rng::Stream& stream) const {
  const auto& em = *em_;
  const int s = em.aug.s;
  const Index N = em.aug.N;
  Matrix out(s, N);
  Vector tvec, mvec, tmp;
  for (int t = 0; t < s; ++t) {
    const LevelCtx& L = ctx_[t];
    const PerDraw& pd = L.per_draw[k];
    const Index p = L.H.cols();
    const double df = static_cast<double>(L.df);
    tvec.resize(L.q);
    mvec.resize(L.q);
    tmp.resize(L.q);
    const uint64_t stride = 1 + static_cast<uint64_t>(L.df);
    for (Index j = 0; j < N; ++j) {
      // Inputs already in the augmented set interpolate exactly.
      if (q.exact[t] >= 0) {
        out(t, j) = pd.ytil(q.exact[t], j);
        continue;
      }
      tvec.head(p) = q.hx[t];
      if (t > 0) tvec[p] = out(t - 1, j);
      const double mu =
          tvec.dot(pd.bhat.col(j)) + q.r[t].dot(pd.resid_rinv.col(j));
      mvec.head(p) = q.hx[t] - q.h_r[t];
      if (t > 0) mvec[p] = tvec[p] - pd.w.col(j).dot(q.rinv_r[t]);
      Eigen::Map<const Matrix> tti(pd.tt_inv.col(j).data(), L.q, L.q);
      tmp.noalias() = tti * mvec;
      const double c = std::max(0.0, 1.0 - q.rr[t] + mvec.dot(tmp));
      const double scale2 = pd.s2[j] / df * c;
      const uint64_t base =
          q.ctr_offset[t] + static_cast<uint64_t>(j) * stride;
      const double z = stream.normal(base);
      const double w = stream.chisq(base + 1, L.df);
      out(t, j) = mu + std::sqrt(scale2 * df / w) * z;
    }
  }
  return out;
}

Matrix Predictor::sequential_draw(const Vector& x0_raw, int k,
                                  const rng::Stream& stream) const {
  if (k < 0 || k >= retained_)
    throw ValidationError("sequential_draw: draw index out of range");
  ensure_draw(k);
  return chain_draw(make_query(x0_raw), k, stream);
}

PredictionSummary Predictor::predict(const Vector& x0_raw, int m_pred,
                                     uint64_t seed, Matrix* raw_draws) const {
  if (m_pred < 2) throw ValidationError("predict: need at least two draws");
  for (int m = 0; m < std::min(m_pred, retained_); ++m) ensure_draw(m);
  const QueryCtx q = make_query(x0_raw);
  Matrix draws(m_pred, em_->aug.N);
  parallel_for(m_pred, threads_, [&](int64_t m) {
    const rng::Stream stream(seed, kDomainPredict, static_cast<uint64_t>(m),
                             0);
    const int k = static_cast<int>(m % retained_);
    draws.row(m) = chain_draw(q, k, stream).row(em_->aug.s - 1);
  });
  if (raw_draws != nullptr) *raw_draws = draws;
  return summarize(draws);
}

// ---------------------------------------------------------------------------
// One-step validation path (stacked joint-Gaussian conditioning)

OneStepParams plugin_params(const FittedEmulator& em) {
  OneStepParams pars;
  const int s = em.aug.s;
  const Index p = em.trend.size(em.aug.d);
  pars.phis = em.phis;
  pars.sigma2 = em.sigma2;
  pars.beta.resize(s);
  pars.gamma.resize(s > 0 ? s - 1 : 0);
  for (int t = 0; t < s; ++t) {
    pars.beta[t] = em.b_hat[t].topRows(p);
    if (t > 0) pars.gamma[t - 1] = em.b_hat[t].row(p);
  }
  return pars;
}

std::pair<Vector, Vector> one_step_predict(const AugmentedDesign& aug,
                                           const std::vector<Matrix>& y_til,
                                           const TrendBasis& trend,
                                           const OneStepParams& pars,
                                           const Vector& x0_raw,
                                           double base_jitter) {
  const int s = aug.s;
  const Index N = aug.N;
  const Index d = aug.d;
  if (static_cast<int>(y_til.size()) != s ||
      static_cast<int>(pars.beta.size()) != s ||
      static_cast<int>(pars.sigma2.size()) != s ||
      static_cast<int>(pars.gamma.size()) != s - 1 ||
      static_cast<int>(pars.phis.size()) != s)
    throw ValidationError("one_step_predict: per-level inputs have wrong length");
  if (x0_raw.size() != d)
    throw ValidationError("one_step_predict: query dimension mismatch");
  const Vector x0 = aug.norm.apply(x0_raw);
  const Index p = trend.size(d);

  std::vector<Matrix> X(s);
  std::vector<Index> n(s), offset(s);
  Index n_tot = 0;
  for (int t = 0; t < s; ++t) {
    X[t] = aug.aug(t);
    n[t] = X[t].rows();
    if (y_til[t].rows() != n[t] || y_til[t].cols() != N)
      throw ValidationError("one_step_predict: augmented outputs have wrong shape");
    offset[t] = n_tot;
    n_tot += n[t];
  }

  // r_k(A, B) for k <= min(i, i'), cached by (k, i, i').
  std::vector<std::vector<std::vector<Matrix>>> rk(s);
  for (int k = 0; k < s; ++k) {
    rk[k].resize(s);
    for (int i = k; i < s; ++i) rk[k][i].resize(s);
  }
  for (int k = 0; k < s; ++k)
    for (int i = k; i < s; ++i)
      for (int ip = i; ip < s; ++ip)
        rk[k][i][ip] = corr_matrix(X[i], X[ip], pars.phis[k]);
  // rxk[k][t]: r_k(x0, X_t) for k <= t.
  std::vector<std::vector<Vector>> rxk(s, std::vector<Vector>(s));
  std::vector<Matrix> hX(s);
  for (int t = 0; t < s; ++t) {
    for (int k = 0; k <= t; ++k)
      rxk[k][t] =
          corr_matrix(x0.transpose(), X[t], pars.phis[k]).transpose().col(0);
    hX[t] = trend.eval(X[t]);
  }
  const Vector hx = trend.eval(x0);

  Vector mean(N), var(N);
  for (Index j = 0; j < N; ++j) {
    std::vector<double> gam(s, 1.0);  // gam[t] = gamma_{t,j}, gam[s-1] unused
    for (int t = 0; t + 1 < s; ++t) gam[t] = pars.gamma[t][j];
    auto gamma_prod = [&](int from, int to) {  // product over [from, to)
      double g = 1.0;
      for (int l = from; l < to; ++l) g *= gam[l];
      return g;
    };

    // Covariance of the stacked augmented outputs.
    Matrix Sigma(n_tot, n_tot);
    for (int i = 0; i < s; ++i)
      for (int ip = i; ip < s; ++ip) {
        Matrix block = Matrix::Zero(n[i], n[ip]);
        for (int k = 0; k <= i; ++k) {
          const double w = gamma_prod(k, i) * gamma_prod(k, ip) *
                           pars.sigma2[k][j];
          if (w != 0.0) block += w * rk[k][i][ip];
        }
        Sigma.block(offset[i], offset[ip], n[i], n[ip]) = block;
        if (ip != i)
          Sigma.block(offset[ip], offset[i], n[ip], n[i]) = block.transpose();
      }

    // Cross-covariance with y_s(x0) and its prior variance.
    Vector c(n_tot);
    for (int t = 0; t < s; ++t) {
      Vector ct = Vector::Zero(n[t]);
      for (int k = 0; k <= t; ++k) {
        const double w = gamma_prod(k, t) * gamma_prod(k, s - 1) *
                         pars.sigma2[k][j];
        if (w != 0.0) ct += w * rxk[k][t];
      }
      c.segment(offset[t], n[t]) = ct;
    }
    double prior_var = 0.0;
    for (int k = 0; k < s; ++k) {
      const double g = gamma_prod(k, s - 1);
      prior_var += g * g * pars.sigma2[k][j];
    }

    // Stacked trend and its value at x0.
    Matrix F = Matrix::Zero(n_tot, static_cast<Index>(s) * p);
    Vector f = Vector::Zero(static_cast<Index>(s) * p);
    Vector beta(static_cast<Index>(s) * p);
    for (int i = 0; i < s; ++i)
      for (int k = 0; k <= i; ++k)
        F.block(offset[i], static_cast<Index>(k) * p, n[i], p) =
            gamma_prod(k, i) * hX[i];
    for (int k = 0; k < s; ++k) {
      f.segment(static_cast<Index>(k) * p, p) = gamma_prod(k, s - 1) * hx;
      beta.segment(static_cast<Index>(k) * p, p) = pars.beta[k].col(j);
    }

    Vector y(n_tot);
    for (int t = 0; t < s; ++t) y.segment(offset[t], n[t]) = y_til[t].col(j);

    const double dscale = std::max(1.0, Sigma.diagonal().maxCoeff());
    const CholFactor fac =
        chol_factor(Sigma, base_jitter * dscale, "stacked covariance");
    const Vector alpha = fac.solve(Vector(y - F * beta));
    mean[j] = f.dot(beta) + c.dot(alpha);
    var[j] = prior_var - c.dot(fac.solve(c));
  }
  return {mean, var};
}

}  // namespace ppck
