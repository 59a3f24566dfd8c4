#include <doctest.h>

#include <cmath>
#include <random>

#include "ppck/gls.hpp"
#include "ppck/kernels.hpp"

using namespace ppck;

TEST_SUITE("kernels") {

TEST_CASE("matern closed forms") {
  CHECK(matern(0.0, 1.0, 2.5) == 1.0);
  const double s5 = std::sqrt(5.0);
  CHECK(matern(1.0, 1.0, 2.5) ==
        doctest::Approx((1.0 + s5 + 5.0 / 3.0) * std::exp(-s5)).epsilon(1e-14));
  CHECK(matern(1.0, 1.0, 2.5) == doctest::Approx(0.52399).epsilon(1e-4));
  CHECK(matern(1.0, 1.0, 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  const double s3 = std::sqrt(3.0);
  CHECK(matern(2.0, 1.5, 1.5) ==
        doctest::Approx((1.0 + s3 * 2.0 / 1.5) * std::exp(-s3 * 2.0 / 1.5)));
}

TEST_CASE("matern rejects bad arguments") {
  CHECK_THROWS_AS(matern(-0.1, 1.0, 2.5), ValidationError);
  CHECK_THROWS_AS(matern(std::nan(""), 1.0, 2.5), ValidationError);
  CHECK_THROWS_AS(matern(1.0, 0.0, 2.5), ValidationError);
  CHECK_THROWS_AS(matern(1.0, -1.0, 2.5), ValidationError);
  CHECK_THROWS_AS(matern(1.0, 1.0, 2.0), ValidationError);
  CHECK_THROWS_AS(CorrelationParams(Vector::Constant(2, 1.0), 3.0),
                  ValidationError);
  CHECK_THROWS_AS(CorrelationParams(Vector::Constant(2, -1.0), 2.5),
                  ValidationError);
}

TEST_CASE("matern is nonincreasing in distance") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> unif(0.0, 4.0);
  for (double nu : {0.5, 1.5, 2.5}) {
    for (int rep = 0; rep < 200; ++rep) {
      double u1 = unif(gen), u2 = unif(gen);
      if (u1 > u2) std::swap(u1, u2);
      CHECK(matern(u1, 0.7, nu) >= matern(u2, 0.7, nu));
    }
  }
}

TEST_CASE("product correlation") {
  CorrelationParams pars(Vector::Constant(2, 1.0), 2.5);
  Vector x(2), y(2);
  x << 0.3, 0.8;
  CHECK(product_corr(x, x, pars) == 1.0);
  y << 0.3 + 1.0, 0.8;
  const double m1 = matern(1.0, 1.0, 2.5);
  CHECK(product_corr(x, y, pars) == doctest::Approx(m1).epsilon(1e-14));
  y << 0.3 + 1.0, 0.8 + 1.0;
  CHECK(product_corr(x, y, pars) == doctest::Approx(m1 * m1).epsilon(1e-14));
  CHECK(product_corr(x, y, pars) == doctest::Approx(0.27457).epsilon(1e-4));
  CHECK(product_corr(x, y, pars) == product_corr(y, x, pars));

  Vector z(3);
  CHECK_THROWS_AS(product_corr(x, z, pars), ValidationError);
}

TEST_CASE("product correlation is invariant to simultaneous permutation") {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector x(3), y(3), phi(3);
  for (int rep = 0; rep < 50; ++rep) {
    for (int i = 0; i < 3; ++i) {
      x[i] = unif(gen);
      y[i] = unif(gen);
      phi[i] = 0.2 + unif(gen);
    }
    const CorrelationParams pars(phi, 2.5);
    Vector xp(3), yp(3), phip(3);
    const int perm[3] = {2, 0, 1};
    for (int i = 0; i < 3; ++i) {
      xp[i] = x[perm[i]];
      yp[i] = y[perm[i]];
      phip[i] = phi[perm[i]];
    }
    const CorrelationParams parsp(phip, 2.5);
    CHECK(product_corr(x, y, pars) ==
          doctest::Approx(product_corr(xp, yp, parsp)).epsilon(1e-14));
  }
}

TEST_CASE("corr_matrix matches the brute-force double loop") {
  std::mt19937 gen(23);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix A(3, 2), B(3, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) {
      A(i, j) = unif(gen);
      B(i, j) = unif(gen);
    }
  Vector phi(2);
  phi << 0.4, 1.3;
  const CorrelationParams pars(phi, 2.5);
  const Matrix R = corr_matrix(A, B, pars);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double expect = 1.0;
      for (int l = 0; l < 2; ++l)
        expect *= matern(std::abs(A(i, l) - B(j, l)), phi[l], 2.5);
      CHECK(R(i, j) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("self correlation is symmetric with unit diagonal") {
  Matrix A(4, 1);
  A << 0.0, 0.25, 0.5, 1.0;
  const CorrelationParams pars(Vector::Constant(1, 0.7), 2.5);
  const Matrix R = corr_matrix(A, pars);
  CHECK(R == R.transpose());
  for (int i = 0; i < 4; ++i) CHECK(R(i, i) == 1.0);
  const Matrix R2 = corr_matrix(A, A, pars);
  CHECK((R - R2).cwiseAbs().maxCoeff() < 1e-15);

  Matrix single(1, 1);
  single << 0.0;
  Matrix pair(2, 1);
  pair << 0.0, 1.0;
  const Matrix row = corr_matrix(single, pair, pars);
  CHECK(row(0, 0) == 1.0);
  CHECK(row(0, 1) == doctest::Approx(matern(1.0, 0.7, 2.5)));
}

TEST_CASE("correlation matrices factor with jitter") {
  std::mt19937 gen(91);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix A(12, 2);
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 2; ++j) A(i, j) = unif(gen);
    const CorrelationParams pars(Vector::Constant(2, 0.5), 2.5);
    const Matrix R = corr_matrix(A, pars);
    const CholFactor fac = chol_factor(R, 1e-8);
    CHECK(fac.L.rows() == 12);
    CHECK(std::isfinite(fac.logdet));
  }
}

}  // TEST_SUITE
