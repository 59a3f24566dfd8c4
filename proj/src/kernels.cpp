#include "ppck/kernels.hpp"

#include <cmath>

namespace ppck {

namespace {

const double kSqrt3 = std::sqrt(3.0);
const double kSqrt5 = std::sqrt(5.0);

void check_phi(double phi) {
  if (!(phi > 0.0) || !std::isfinite(phi))
    throw ValidationError("matern: range parameter must be positive and finite");
}

}  // namespace

bool valid_smoothness(double nu) {
  return nu == 0.5 || nu == 1.5 || nu == 2.5;
}

CorrelationParams::CorrelationParams(Vector phis_, double nu_)
    : phis(std::move(phis_)), nu(nu_) {
  if (!valid_smoothness(nu))
    throw ValidationError("smoothness must be one of 0.5, 1.5, 2.5");
  for (Index i = 0; i < phis.size(); ++i) check_phi(phis[i]);
}

double matern(double u, double phi, double nu) {
  if (!(u >= 0.0) || !std::isfinite(u))
    throw ValidationError("matern: distance must be nonnegative and finite");
  check_phi(phi);
  if (nu == 0.5) return std::exp(-u / phi);
  if (nu == 1.5) {
    const double a = kSqrt3 * u / phi;
    return (1.0 + a) * std::exp(-a);
  }
  if (nu == 2.5) {
    const double a = kSqrt5 * u / phi;
    return (1.0 + a + a * a / 3.0) * std::exp(-a);
  }
  throw ValidationError("matern: smoothness must be one of 0.5, 1.5, 2.5");
}

double product_corr(const Vector& x, const Vector& x_prime,
                    const CorrelationParams& params) {
  if (x.size() != x_prime.size() || x.size() != params.phis.size())
    throw ValidationError("product_corr: dimension mismatch");
  double r = 1.0;
  for (Index i = 0; i < x.size(); ++i)
    r *= matern(std::abs(x[i] - x_prime[i]), params.phis[i], params.nu);
  return r;
}

Matrix corr_matrix(const Matrix& A, const Matrix& B,
                   const CorrelationParams& params) {
  if (A.cols() != B.cols() || A.cols() != params.phis.size())
    throw ValidationError("corr_matrix: dimension mismatch");
  Matrix R(A.rows(), B.rows());
  Vector a(A.cols()), b(B.cols());
  for (Index i = 0; i < A.rows(); ++i) {
    a = A.row(i);
    for (Index j = 0; j < B.rows(); ++j) {
      b = B.row(j);
      R(i, j) = product_corr(a, b, params);
    }
  }
  return R;
}

Matrix corr_matrix(const Matrix& A, const CorrelationParams& params) {
  if (A.cols() != params.phis.size())
    throw ValidationError("corr_matrix: dimension mismatch");
  const Index n = A.rows();
  Matrix R = Matrix::Identity(n, n);
  Vector a(A.cols()), b(A.cols());
  for (Index i = 0; i < n; ++i) {
    a = A.row(i);
    for (Index j = i + 1; j < n; ++j) {
      b = A.row(j);
      const double v = product_corr(a, b, params);
      R(i, j) = v;
      R(j, i) = v;
    }
  }
  return R;
}

}  // namespace ppck
