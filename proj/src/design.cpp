#include "ppck/design.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ppck {

namespace {

void check_finite(const Matrix& M, const std::string& what, int level) {
  if (!M.allFinite())
    throw ValidationError(what + " at level " + std::to_string(level) +
                          " contains non-finite entries");
}

std::vector<std::vector<Index>> rebuild_maps(const AugmentedDesign& aug) {
  std::vector<std::vector<Index>> maps(aug.s);
  for (int t = 1; t < aug.s; ++t) {
    const Matrix cur = aug.aug(t);
    const Matrix prev = aug.aug(t - 1);
    maps[t].resize(cur.rows());
    for (Index r = 0; r < cur.rows(); ++r) {
      const Index hit = find_row(prev, cur.row(r), aug.match_tol);
      if (hit < 0)
        throw ValidationError("augmented design not nested at level " +
                              std::to_string(t + 1) + ", row " +
                              std::to_string(r));
      maps[t][r] = hit;
    }
  }
  return maps;
}

}  // namespace

bool rows_match(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                const Eigen::Ref<const Eigen::RowVectorXd>& b, double tol) {
  return (a - b).cwiseAbs().maxCoeff() <= tol;
}

Index find_row(const Matrix& X, const Eigen::Ref<const Eigen::RowVectorXd>& x,
               double tol) {
  for (Index r = 0; r < X.rows(); ++r)
    if (rows_match(X.row(r), x, tol)) return r;
  return -1;
}

Normalization Normalization::fit(const std::vector<const Matrix*>& designs) {
  if (designs.empty() || designs[0]->cols() == 0)
    throw ValidationError("normalization: no design data");
  const Index d = designs[0]->cols();
  Normalization n;
  n.lo = Vector::Constant(d, std::numeric_limits<double>::infinity());
  Vector hi = Vector::Constant(d, -std::numeric_limits<double>::infinity());
  for (const Matrix* X : designs) {
    if (X->cols() != d) throw ValidationError("normalization: dimension mismatch");
    for (Index j = 0; j < d; ++j) {
      n.lo[j] = std::min(n.lo[j], X->col(j).minCoeff());
      hi[j] = std::max(hi[j], X->col(j).maxCoeff());
    }
  }
  n.range = hi - n.lo;
  for (Index j = 0; j < d; ++j)
    if (!(n.range[j] > 0.0)) n.range[j] = 1.0;
  return n;
}

Matrix Normalization::apply(const Matrix& X) const {
  Matrix Z = X;
  for (Index j = 0; j < X.cols(); ++j)
    Z.col(j) = (X.col(j).array() - lo[j]) / range[j];
  return Z;
}

Vector Normalization::apply(const Vector& x) const {
  return (x - lo).cwiseQuotient(range);
}

Matrix AugmentedDesign::aug(int t) const {
  Matrix A(n_aug(t), d);
  A.topRows(n_obs(t)) = x_obs[t];
  if (n_miss(t) > 0) A.bottomRows(n_miss(t)) = x_miss[t];
  return A;
}

AugmentedDesign build_augmentation(const std::vector<FidelityData>& levels,
                                   double match_tol) {
  if (levels.empty()) throw ValidationError("build_augmentation: no levels");
  const Index d = levels[0].X.cols();
  const Index N = levels[0].Y.cols();
  AugmentedDesign aug;
  aug.s = static_cast<int>(levels.size());
  aug.d = d;
  aug.N = N;
  aug.match_tol = match_tol;

  std::vector<const Matrix*> designs;
  for (const auto& lv : levels) designs.push_back(&lv.X);
  aug.norm = Normalization::fit(designs);

  aug.x_obs.resize(aug.s);
  aug.x_miss.resize(aug.s);
  for (int t = 0; t < aug.s; ++t) {
    const auto& lv = levels[t];
    if (lv.X.cols() != d)
      throw ValidationError("level " + std::to_string(t + 1) +
                            ": input dimension differs from level 1");
    if (lv.Y.cols() != N)
      throw ValidationError("level " + std::to_string(t + 1) +
                            ": output dimension differs from level 1");
    if (lv.X.rows() != lv.Y.rows())
      throw ValidationError("level " + std::to_string(t + 1) +
                            ": design and output row counts differ");
    if (lv.X.rows() < 1)
      throw ValidationError("level " + std::to_string(t + 1) + ": empty design");
    check_finite(lv.X, "design", t + 1);
    check_finite(lv.Y, "output", t + 1);
    aug.x_obs[t] = aug.norm.apply(lv.X);
    for (Index r = 1; r < aug.x_obs[t].rows(); ++r)
      if (find_row(aug.x_obs[t].topRows(r), aug.x_obs[t].row(r), match_tol) >= 0)
        throw ValidationError("level " + std::to_string(t + 1) +
                              ": duplicate design row " + std::to_string(r));
  }

  // Missing sets top-down: aug(t+1) equals the union of observed inputs from
  // level t+1 upward, so the set difference against one level suffices.
  aug.x_miss[aug.s - 1] = Matrix(0, d);
  for (int t = aug.s - 2; t >= 0; --t) {
    const Matrix upper = aug.aug(t + 1);
    std::vector<Index> missing;
    for (Index r = 0; r < upper.rows(); ++r)
      if (find_row(aug.x_obs[t], upper.row(r), match_tol) < 0)
        missing.push_back(r);
    aug.x_miss[t].resize(static_cast<Index>(missing.size()), d);
    for (size_t i = 0; i < missing.size(); ++i)
      aug.x_miss[t].row(static_cast<Index>(i)) = upper.row(missing[i]);
  }

  aug.map_to_prev = rebuild_maps(aug);
  return aug;
}

NestingReport validate_nested(const AugmentedDesign& aug) {
  NestingReport report;
  for (int t = 1; t < aug.s; ++t) {
    const Matrix cur = aug.aug(t);
    const Matrix prev = aug.aug(t - 1);
    for (Index r = 0; r < cur.rows(); ++r)
      if (find_row(prev, cur.row(r), aug.match_tol) < 0) {
        report.nested = false;
        report.violations.emplace_back(t, r);
      }
  }
  return report;
}

AugmentedDesign add_prediction_point(const AugmentedDesign& aug,
                                     const Vector& x0_raw) {
  if (x0_raw.size() != aug.d)
    throw ValidationError("add_prediction_point: dimension mismatch");
  if (!x0_raw.allFinite())
    throw ValidationError("add_prediction_point: non-finite input");
  const Vector x0 = aug.norm.apply(x0_raw);
  AugmentedDesign out = aug;
  for (int t = 0; t < out.s; ++t) {
    if (find_row(out.x_obs[t], x0.transpose(), out.match_tol) >= 0) continue;
    if (find_row(out.x_miss[t], x0.transpose(), out.match_tol) >= 0) continue;
    out.x_miss[t].conservativeResize(out.x_miss[t].rows() + 1, out.d);
    out.x_miss[t].row(out.x_miss[t].rows() - 1) = x0.transpose();
  }
  out.map_to_prev = rebuild_maps(out);
  return out;
}

}  // namespace ppck
