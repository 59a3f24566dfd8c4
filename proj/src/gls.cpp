#include "ppck/gls.hpp"

#include <cmath>

namespace ppck {

namespace {

constexpr double kJitterCap = 1e-4;
constexpr double kZeroJitterStart = 1e-12;

double tri_logdet(const Matrix& L) {
  double s = 0.0;
  for (Index i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
  return 2.0 * s;
}

// LLT may report success on a semidefinite matrix; require a sane diagonal.
bool factor_ok(const Eigen::LLT<Matrix>& llt, Index n) {
  if (llt.info() != Eigen::Success) return false;
  const auto& L = llt.matrixLLT();
  double dmax = 0.0;
  for (Index i = 0; i < n; ++i) dmax = std::max(dmax, L(i, i));
  if (!(dmax > 0.0) || !std::isfinite(dmax)) return false;
  for (Index i = 0; i < n; ++i) {
    const double d = L(i, i);
    if (!std::isfinite(d) || d <= dmax * 1e-15) return false;
  }
  return true;
}

}  // namespace

Matrix CholFactor::whiten(const Matrix& B) const {
  return L.triangularView<Eigen::Lower>().solve(B);
}

Vector CholFactor::whiten(const Vector& b) const {
  return L.triangularView<Eigen::Lower>().solve(b);
}

Matrix CholFactor::solve(const Matrix& B) const {
  Matrix X = L.triangularView<Eigen::Lower>().solve(B);
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(X);
  return X;
}

Vector CholFactor::solve(const Vector& b) const {
  Vector x = L.triangularView<Eigen::Lower>().solve(b);
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

CholFactor chol_factor(const Matrix& R, double base_jitter,
                       const std::string& label) {
  if (R.rows() != R.cols()) throw ValidationError("chol_factor: matrix not square");
  if (base_jitter < 0.0) throw ValidationError("chol_factor: negative jitter");
  const Index n = R.rows();
  double jitter = base_jitter;
  while (true) {
    Matrix A = R;
    if (jitter > 0.0) A.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(A);
    if (factor_ok(llt, n)) {
      CholFactor fac;
      fac.L = llt.matrixL();
      fac.logdet = tri_logdet(fac.L);
      fac.jitter_used = jitter;
      return fac;
    }
    const double next = jitter == 0.0 ? kZeroJitterStart : jitter * 10.0;
    if (next > kJitterCap)
      throw NumericalError("chol_factor: " + label + " of size " +
                           std::to_string(n) + "x" + std::to_string(n) +
                           " not positive definite at jitter cap 1e-4");
    jitter = next;
  }
}

GlsFit gls_fit(const CholFactor& fac, const Matrix& T, const Vector& y) {
  const Index n = T.rows();
  const Index q = T.cols();
  if (n != fac.size() || y.size() != n)
    throw ValidationError("gls_fit: shape mismatch");
  if (n <= q)
    throw ValidationError("gls_fit: need more observations than regressors (n=" +
                          std::to_string(n) + ", q=" + std::to_string(q) + ")");
  const Matrix Tw = fac.whiten(T);
  const Vector yw = fac.whiten(y);
  const Matrix A = Tw.transpose() * Tw;
  Eigen::LLT<Matrix> llt(A);
  if (!factor_ok(llt, q))
    throw ValidationError("gls_fit: rank-deficient regressor matrix");
  const Vector z = Tw.transpose() * yw;
  GlsFit fit;
  fit.b_hat = llt.solve(z);
  fit.s2 = std::max(0.0, yw.squaredNorm() - z.dot(fit.b_hat));
  fit.logdet_TtRT = tri_logdet(llt.matrixLLT());
  return fit;
}

ProfileWorkspace make_profile_workspace(const CholFactor& fac,
                                        const Matrix& H) {
  ProfileWorkspace ws;
  ws.p = H.cols();
  ws.Hw = fac.whiten(H);
  ws.A_llt.compute(ws.Hw.transpose() * ws.Hw);
  if (!factor_ok(ws.A_llt, ws.p))
    throw ValidationError("profile terms: rank-deficient trend matrix");
  ws.logdet_A = tri_logdet(ws.A_llt.matrixLLT());
  return ws;
}

void ProfileWorkspace::terms(const Vector& yw, const Vector* ww,
                             double& logdet, double& s2) const {
  const Vector z = Hw.transpose() * yw;
  const Vector az = A_llt.solve(z);
  const double yQy = yw.squaredNorm() - z.dot(az);
  if (ww == nullptr) {
    logdet = logdet_A;
    s2 = yQy;
    return;
  }
  const Vector v = Hw.transpose() * (*ww);
  const Vector av = A_llt.solve(v);
  const double wQw = ww->squaredNorm() - v.dot(av);
  if (!(wQw > 0.0))
    throw ValidationError("profile terms: regressor collinear with trend");
  const double yQw = yw.dot(*ww) - z.dot(av);
  logdet = logdet_A + std::log(wQw);
  s2 = yQy - yQw * yQw / wQw;
}

ProfileTerms fast_profile_terms(const CholFactor& fac, const Matrix& H,
                                const Matrix* W, const Matrix& Y) {
  const Index n = H.rows();
  const Index N = Y.cols();
  const Index q = H.cols() + (W != nullptr ? 1 : 0);
  if (Y.rows() != n || (W != nullptr && (W->rows() != n || W->cols() != N)))
    throw ValidationError("fast_profile_terms: shape mismatch");
  if (n <= q)
    throw ValidationError("fast_profile_terms: need n > q (n=" +
                          std::to_string(n) + ", q=" + std::to_string(q) + ")");
  const ProfileWorkspace ws = make_profile_workspace(fac, H);

  const Matrix Yw = fac.whiten(Y);
  const Matrix Z = ws.Hw.transpose() * Yw;    // p x N
  const Matrix AZ = ws.A_llt.solve(Z);

  ProfileTerms out;
  out.logdet_TtRT.resize(N);
  out.s2.resize(N);

  if (W == nullptr) {
    for (Index j = 0; j < N; ++j) {
      out.logdet_TtRT[j] = ws.logdet_A;
      out.s2[j] = Yw.col(j).squaredNorm() - Z.col(j).dot(AZ.col(j));
    }
    return out;
  }

  const Matrix Ww = fac.whiten(*W);
  const Matrix V = ws.Hw.transpose() * Ww;    // p x N
  const Matrix AV = ws.A_llt.solve(V);
  for (Index j = 0; j < N; ++j) {
    const double wQw = Ww.col(j).squaredNorm() - V.col(j).dot(AV.col(j));
    if (!(wQw > 0.0))
      throw ValidationError(
          "fast_profile_terms: regressor collinear with trend at coordinate " +
          std::to_string(j));
    const double yQy = Yw.col(j).squaredNorm() - Z.col(j).dot(AZ.col(j));
    const double yQw = Yw.col(j).dot(Ww.col(j)) - Z.col(j).dot(AV.col(j));
    out.logdet_TtRT[j] = ws.logdet_A + std::log(wQw);
    out.s2[j] = yQy - yQw * yQw / wQw;
  }
  return out;
}

}  // namespace ppck
