#include "ppck/synth.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "ppck/gls.hpp"
#include "ppck/rng.hpp"

namespace ppck {

namespace {

constexpr uint32_t kDomainSynth = 3;

// Fisher-Yates driven by addressed uniforms.
std::vector<Index> permutation(Index n, const rng::Stream& st) {
  std::vector<Index> p(n);
  std::iota(p.begin(), p.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(st.uniform(static_cast<uint64_t>(i)) *
                                      static_cast<double>(i + 1));
    std::swap(p[i], p[std::min(j, i)]);
  }
  return p;
}

// Plain stratified Latin hypercube on [0,1]^d, no maximin optimization.
Matrix latin_hypercube(Index n, Index d, uint64_t seed, uint64_t tag) {
  Matrix X(n, d);
  for (Index dim = 0; dim < d; ++dim) {
    const rng::Stream perm_st(seed, kDomainSynth, 1000 + tag, dim);
    const rng::Stream jit_st(seed, kDomainSynth, 1500 + tag, dim);
    const auto strata = permutation(n, perm_st);
    for (Index i = 0; i < n; ++i)
      X(i, dim) = (static_cast<double>(strata[i]) +
                   jit_st.uniform(static_cast<uint64_t>(i))) /
                  static_cast<double>(n);
  }
  return X;
}

}  // namespace

double toy_low(double x) {
  const double a = 6.0 * x - 2.0;
  return 0.5 * a * a * std::sin(12.0 * x - 4.0) + 10.0 * (x - 0.5) - 5.0;
}

double toy_high(double x) {
  return 2.0 * toy_low(x) - 20.0 * x + 20.0 + std::sin(10.0 * std::cos(5.0 * x));
}

ToyData make_toy(bool nested) {
  ToyData toy;
  Matrix x1(21, 1);
  for (int i = 0; i <= 20; ++i) x1(i, 0) = -1.0 + 0.1 * i;
  Matrix x2(10, 1);
  const double off_grid = nested ? -0.6 : -0.55;
  const double pts[10] = {-1.0, -0.8, off_grid, -0.4, -0.2,
                          0.0,  0.2,  0.4,      0.6,  1.0};
  for (int i = 0; i < 10; ++i) x2(i, 0) = pts[i];

  FidelityData low{1, x1, Matrix(21, 1)};
  FidelityData high{2, x2, Matrix(10, 1)};
  for (int i = 0; i < 21; ++i) low.Y(i, 0) = toy_low(x1(i, 0));
  for (int i = 0; i < 10; ++i) high.Y(i, 0) = toy_high(x2(i, 0));
  toy.levels = {low, high};

  toy.test_x.resize(200, 1);
  toy.test_y.resize(200, 1);
  for (int i = 0; i < 200; ++i) {
    const double x = -1.0 + 2.0 * i / 199.0;
    toy.test_x(i, 0) = x;
    toy.test_y(i, 0) = toy_high(x);
  }
  return toy;
}

std::pair<std::vector<FidelityData>, SynthTruth> gen_from_model(
    const SynthConfig& cfg) {
  const int s = cfg.s;
  if (s < 1) throw ValidationError("gen_from_model: need at least one level");
  if (static_cast<int>(cfg.n.size()) != s ||
      static_cast<int>(cfg.phi.size()) != s ||
      static_cast<int>(cfg.beta.size()) != s ||
      static_cast<int>(cfg.sigma2.size()) != s ||
      static_cast<int>(cfg.gamma.size()) != s - 1)
    throw ValidationError("gen_from_model: per-level settings have wrong length");
  for (int t = 0; t < s; ++t) {
    if (cfg.n[t] < 1) throw ValidationError("gen_from_model: empty level");
    if (cfg.phi[t].size() != cfg.d)
      throw ValidationError("gen_from_model: phi dimension mismatch");
    if (cfg.sigma2[t] < 0.0)
      throw ValidationError("gen_from_model: negative variance");
  }

  SynthTruth truth;
  truth.config = cfg;
  for (int t = 1; t < s; ++t)
    if (cfg.n[t] > cfg.n[t - 1])
      truth.warnings.push_back("level " + std::to_string(t + 1) +
                               " has more runs than level " + std::to_string(t));

  // Designs, with the requested nested overlap copied from the level below.
  std::vector<Matrix> X(s);
  X[0] = latin_hypercube(cfg.n[0], cfg.d, cfg.seed, 0);
  for (int t = 1; t < s; ++t) {
    const Index n_nested = std::min<Index>(
        cfg.n[t], static_cast<Index>(
                      std::llround(cfg.nested_fraction *
                                   static_cast<double>(cfg.n[t]))));
    const Index n_new = cfg.n[t] - n_nested;
    X[t].resize(cfg.n[t], cfg.d);
    const rng::Stream pick(cfg.seed, kDomainSynth, 4000 + t, 0);
    const auto order = permutation(X[t - 1].rows(), pick);
    for (Index i = 0; i < n_nested; ++i) X[t].row(i) = X[t - 1].row(order[i]);
    if (n_new > 0)
      X[t].bottomRows(n_new) =
          latin_hypercube(n_new, cfg.d, cfg.seed, static_cast<uint64_t>(t));
  }

  // Master input list; each level's rows located inside it.
  Matrix U = X[0];
  std::vector<std::vector<Index>> rows_in_union(s);
  for (Index r = 0; r < X[0].rows(); ++r) rows_in_union[0].push_back(r);
  for (int t = 1; t < s; ++t) {
    for (Index r = 0; r < X[t].rows(); ++r) {
      Index hit = find_row(U, X[t].row(r), 0.0);
      if (hit < 0) {
        U.conservativeResize(U.rows() + 1, cfg.d);
        U.row(U.rows() - 1) = X[t].row(r);
        hit = U.rows() - 1;
      }
      rows_in_union[t].push_back(hit);
    }
  }
  const Index m = U.rows();

  // Per-coordinate parameters, optionally spread around the configured value.
  if (!cfg.beta_spread.empty() &&
      static_cast<int>(cfg.beta_spread.size()) != s)
    throw ValidationError("gen_from_model: beta_spread has wrong length");
  if (!cfg.gamma_spread.empty() &&
      static_cast<int>(cfg.gamma_spread.size()) != s - 1)
    throw ValidationError("gen_from_model: gamma_spread has wrong length");
  truth.beta_j.resize(s);
  truth.gamma_j.resize(std::max(0, s - 1));
  for (int t = 0; t < s; ++t) {
    truth.beta_j[t] = Vector::Constant(cfg.N, cfg.beta[t]);
    if (!cfg.beta_spread.empty() && cfg.beta_spread[t] != 0.0) {
      const rng::Stream st(cfg.seed, kDomainSynth, 2000 + t, 0);
      for (Index j = 0; j < cfg.N; ++j)
        truth.beta_j[t][j] +=
            cfg.beta_spread[t] * (2.0 * st.uniform(static_cast<uint64_t>(j)) - 1.0);
    }
  }
  for (int t = 0; t + 1 < s; ++t) {
    truth.gamma_j[t] = Vector::Constant(cfg.N, cfg.gamma[t]);
    if (!cfg.gamma_spread.empty() && cfg.gamma_spread[t] != 0.0) {
      const rng::Stream st(cfg.seed, kDomainSynth, 3000 + t, 0);
      for (Index j = 0; j < cfg.N; ++j)
        truth.gamma_j[t][j] +=
            cfg.gamma_spread[t] * (2.0 * st.uniform(static_cast<uint64_t>(j)) - 1.0);
    }
  }

  // Level fields over the union, composed by the autoregressive rule.
  Matrix y = Matrix::Zero(m, cfg.N);
  std::vector<FidelityData> levels(s);
  for (int t = 0; t < s; ++t) {
    Matrix delta(m, cfg.N);
    for (Index j = 0; j < cfg.N; ++j)
      delta.col(j).setConstant(truth.beta_j[t][j]);
    if (cfg.sigma2[t] > 0.0) {
      const CorrelationParams pars(cfg.phi[t], cfg.nu);
      const CholFactor fac = chol_factor(corr_matrix(U, pars), 0.0,
                                         "synthetic level field");
      if (fac.jitter_used > 0.0)
        truth.warnings.push_back("level " + std::to_string(t + 1) +
                                 " field required jitter " +
                                 std::to_string(fac.jitter_used));
      const double sd = std::sqrt(cfg.sigma2[t]);
      const rng::Stream field(cfg.seed, kDomainSynth, static_cast<uint64_t>(t),
                              1);
      Vector z(m);
      for (Index j = 0; j < cfg.N; ++j) {
        for (Index i = 0; i < m; ++i)
          z[i] = field.normal(static_cast<uint64_t>(j) * m + i);
        delta.col(j) += sd * (fac.L * z);
      }
    }
    if (t == 0) {
      y = delta;
    } else {
      for (Index j = 0; j < cfg.N; ++j)
        y.col(j) = truth.gamma_j[t - 1][j] * y.col(j) + delta.col(j);
    }
    levels[t].level = t + 1;
    levels[t].X = X[t];
    levels[t].Y.resize(cfg.n[t], cfg.N);
    for (Index r = 0; r < cfg.n[t]; ++r)
      levels[t].Y.row(r) = y.row(rows_in_union[t][r]);
  }

  return {levels, truth};
}

}  // namespace ppck
