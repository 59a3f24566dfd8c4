#include <doctest.h>

#include <cmath>
#include <random>

#include "ppck/gls.hpp"
#include "ppck/kernels.hpp"

using namespace ppck;

namespace {

// Dense-inverse oracle, kept deliberately independent of the Cholesky path.
struct DenseFit {
  Vector b;
  double s2;
  double logdet;
};

DenseFit dense_gls(const Matrix& R, const Matrix& T, const Vector& y) {
  const Matrix Rinv = R.inverse();
  const Matrix A = T.transpose() * Rinv * T;
  DenseFit fit;
  fit.b = A.inverse() * T.transpose() * Rinv * y;
  const Matrix Q =
      Rinv * (Matrix::Identity(R.rows(), R.rows()) -
              T * A.inverse() * T.transpose() * Rinv);
  fit.s2 = y.dot(Q * y);
  fit.logdet = std::log(A.determinant());
  return fit;
}

Matrix random_inputs(int n, int d, std::mt19937& gen) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = unif(gen);
  return X;
}

}  // namespace

TEST_SUITE("gls") {

TEST_CASE("chol_factor on the identity") {
  const CholFactor fac = chol_factor(Matrix::Identity(3, 3), 0.0);
  CHECK((fac.L - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(fac.logdet == 0.0);
  CHECK(fac.jitter_used == 0.0);
}

TEST_CASE("chol_factor two-by-two determinant") {
  Matrix R(2, 2);
  R << 1.0, 0.5, 0.5, 1.0;
  const CholFactor fac = chol_factor(R, 0.0);
  CHECK(fac.logdet == doctest::Approx(std::log(0.75)).epsilon(1e-12));
  // logdet equals twice the sum of log-diagonals by construction
  double s = 0.0;
  for (int i = 0; i < 2; ++i) s += std::log(fac.L(i, i));
  CHECK(fac.logdet == doctest::Approx(2 * s).epsilon(1e-12));
}

TEST_CASE("chol_factor degenerate matrix escalates jitter or reports") {
  Matrix R(3, 3);
  R << 1.0, 1.0, 0.2, 1.0, 1.0, 0.2, 0.2, 0.2, 1.0;  // duplicated rows
  try {
    const CholFactor fac = chol_factor(R, 0.0);
    CHECK(fac.jitter_used > 0.0);
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("3x3") != std::string::npos);
  }
  Matrix bad = -Matrix::Identity(2, 2);
  CHECK_THROWS_AS(chol_factor(bad, 0.0), NumericalError);
}

TEST_CASE("gls_fit trivial cases") {
  const Matrix R = Matrix::Identity(2, 2);
  const CholFactor fac = chol_factor(R, 0.0);
  const Matrix T = Matrix::Ones(2, 1);

  Vector y = Vector::Constant(2, 3.25);
  GlsFit fit = gls_fit(fac, T, y);
  CHECK(fit.b_hat[0] == doctest::Approx(3.25).epsilon(1e-14));
  CHECK(fit.s2 <= 1e-10 * y.squaredNorm());

  y << 0.0, 2.0;
  fit = gls_fit(fac, T, y);
  CHECK(fit.b_hat[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fit.s2 == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("gls_fit error contracts") {
  const CholFactor fac = chol_factor(Matrix::Identity(2, 2), 0.0);
  Matrix T(2, 2);
  T << 1.0, 2.0, 1.0, 2.0;  // rank one
  Vector y(2);
  y << 1.0, 2.0;
  CHECK_THROWS_AS(gls_fit(fac, T, y), ValidationError);  // n <= q
  const CholFactor fac3 = chol_factor(Matrix::Identity(3, 3), 0.0);
  Matrix T3(3, 2);
  T3 << 1.0, 2.0, 1.0, 2.0, 1.0, 2.0;
  Vector y3(3);
  y3 << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(gls_fit(fac3, T3, y3), ValidationError);
}

TEST_CASE("gls_fit matches the dense-inverse oracle") {
  std::mt19937 gen(17);
  std::normal_distribution<double> norm(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix X = random_inputs(6, 2, gen);
    const CorrelationParams pars(Vector::Constant(2, 0.8), 2.5);
    const Matrix R = corr_matrix(X, pars);
    Matrix T(6, 2);
    Vector y(6);
    for (int i = 0; i < 6; ++i) {
      T(i, 0) = 1.0;
      T(i, 1) = norm(gen);
      y[i] = norm(gen);
    }
    const CholFactor fac = chol_factor(R, 0.0);
    const GlsFit fit = gls_fit(fac, T, y);
    const DenseFit oracle = dense_gls(R, T, y);
    CHECK((fit.b_hat - oracle.b).norm() <= 1e-10 * (1.0 + oracle.b.norm()));
    CHECK(fit.s2 == doctest::Approx(oracle.s2).epsilon(1e-10));
    CHECK(fit.logdet_TtRT == doctest::Approx(oracle.logdet).epsilon(1e-10));
  }
}

TEST_CASE("fast_profile_terms single coordinate reduces to gls_fit") {
  std::mt19937 gen(29);
  std::normal_distribution<double> norm(0.0, 1.0);
  const Matrix X = random_inputs(7, 1, gen);
  const CorrelationParams pars(Vector::Constant(1, 0.6), 2.5);
  const CholFactor fac = chol_factor(corr_matrix(X, pars), 1e-8);
  Matrix H = Matrix::Ones(7, 1);
  Matrix W(7, 1), Y(7, 1);
  for (int i = 0; i < 7; ++i) {
    W(i, 0) = norm(gen);
    Y(i, 0) = norm(gen);
  }
  const ProfileTerms terms = fast_profile_terms(fac, H, &W, Y);
  Matrix T(7, 2);
  T << H, W;
  const GlsFit fit = gls_fit(fac, T, Y.col(0));
  CHECK(terms.logdet_TtRT[0] == doctest::Approx(fit.logdet_TtRT).epsilon(1e-10));
  CHECK(terms.s2[0] == doctest::Approx(fit.s2).epsilon(1e-10));
}

TEST_CASE("fast_profile_terms matches the naive per-coordinate loop") {
  std::mt19937 gen(31);
  std::normal_distribution<double> norm(0.0, 1.0);
  const int n = 5, N = 3;
  const Matrix X = random_inputs(n, 2, gen);
  const CorrelationParams pars(Vector::Constant(2, 0.7), 2.5);
  const Matrix R = corr_matrix(X, pars);
  const CholFactor fac = chol_factor(R, 1e-8);
  Matrix H(n, 1);
  H.setOnes();
  Matrix W(n, N), Y(n, N);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < N; ++j) {
      W(i, j) = norm(gen);
      Y(i, j) = norm(gen);
    }
  const ProfileTerms terms = fast_profile_terms(fac, H, &W, Y);
  Matrix Rj = R;
  Rj.diagonal().array() += fac.jitter_used;
  for (int j = 0; j < N; ++j) {
    Matrix T(n, 2);
    T << H, W.col(j);
    const DenseFit oracle = dense_gls(Rj, T, Y.col(j));
    CHECK(terms.logdet_TtRT[j] ==
          doctest::Approx(oracle.logdet).epsilon(1e-8));
    CHECK(terms.s2[j] == doctest::Approx(oracle.s2).epsilon(1e-8));
  }
}

TEST_CASE("fast_profile_terms without W shares one log-determinant") {
  std::mt19937 gen(37);
  std::normal_distribution<double> norm(0.0, 1.0);
  const int n = 6, N = 4;
  const Matrix X = random_inputs(n, 1, gen);
  const CorrelationParams pars(Vector::Constant(1, 0.5), 2.5);
  const CholFactor fac = chol_factor(corr_matrix(X, pars), 1e-8);
  const Matrix H = Matrix::Ones(n, 1);
  Matrix Y(n, N);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < N; ++j) Y(i, j) = norm(gen);
  const ProfileTerms terms = fast_profile_terms(fac, H, nullptr, Y);
  for (int j = 1; j < N; ++j)
    CHECK(terms.logdet_TtRT[j] == terms.logdet_TtRT[0]);
  // and each coordinate agrees with gls_fit on T = H
  for (int j = 0; j < N; ++j) {
    const GlsFit fit = gls_fit(fac, H, Y.col(j));
    CHECK(terms.s2[j] == doctest::Approx(fit.s2).epsilon(1e-10));
  }
}

TEST_CASE("lemma-1 equivalence over random instances") {
  std::mt19937 gen(41);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int n : {5, 10, 25}) {
    for (int N : {1, 10}) {
      for (int p : {1, 2}) {
        const Matrix X = random_inputs(n, 2, gen);
        const CorrelationParams pars(Vector::Constant(2, 0.4 + unif(gen)), 2.5);
        const CholFactor fac = chol_factor(corr_matrix(X, pars), 1e-8);
        Matrix H(n, p);
        H.col(0).setOnes();
        if (p > 1)
          for (int i = 0; i < n; ++i) H(i, 1) = X(i, 0);
        Matrix W(n, N), Y(n, N);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < N; ++j) {
            W(i, j) = norm(gen);
            Y(i, j) = norm(gen);
          }
        const ProfileTerms fast = fast_profile_terms(fac, H, &W, Y);
        for (int j = 0; j < N; ++j) {
          Matrix T(n, p + 1);
          T << H, W.col(j);
          const GlsFit fit = gls_fit(fac, T, Y.col(j));
          CHECK(fast.logdet_TtRT[j] ==
                doctest::Approx(fit.logdet_TtRT).epsilon(1e-8));
          CHECK(fast.s2[j] == doctest::Approx(fit.s2).epsilon(1e-8));
        }
      }
    }
  }
}

TEST_CASE("s2 is invariant under column reparameterization") {
  std::mt19937 gen(43);
  std::normal_distribution<double> norm(0.0, 1.0);
  const int n = 8;
  const Matrix X = random_inputs(n, 1, gen);
  const CorrelationParams pars(Vector::Constant(1, 0.9), 2.5);
  const CholFactor fac = chol_factor(corr_matrix(X, pars), 1e-8);
  Matrix T(n, 2);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    T(i, 0) = 1.0;
    T(i, 1) = norm(gen);
    y[i] = norm(gen);
  }
  Matrix C(2, 2);
  C << 2.0, 1.0, -0.5, 3.0;  // invertible column mixing
  const GlsFit a = gls_fit(fac, T, y);
  const GlsFit b = gls_fit(fac, Matrix(T * C), y);
  CHECK(a.s2 == doctest::Approx(b.s2).epsilon(1e-9));
}

TEST_CASE("jitter perturbs well-conditioned results mildly") {
  std::mt19937 gen(47);
  const Matrix X = random_inputs(10, 2, gen);
  const CorrelationParams pars(Vector::Constant(2, 0.25), 2.5);
  const Matrix R = corr_matrix(X, pars);
  const CholFactor a = chol_factor(R, 1e-8);
  const CholFactor b = chol_factor(R, 1e-10);
  CHECK(a.logdet == doctest::Approx(b.logdet).epsilon(1e-4));
}

}  // TEST_SUITE
