#include "ppck/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace ppck {

void check_validation_set(const ValidationSet& v, bool need_intervals) {
  if (v.truth.rows() == 0 || v.truth.cols() == 0)
    throw ValidationError("validation set is empty");
  if (!v.truth.allFinite())
    throw ValidationError("validation truth contains non-finite values");
  if (v.mean.rows() != v.truth.rows() || v.mean.cols() != v.truth.cols())
    throw ValidationError("validation shapes do not match");
  if (need_intervals &&
      (v.lower.rows() != v.truth.rows() || v.upper.rows() != v.truth.rows() ||
       v.lower.cols() != v.truth.cols() || v.upper.cols() != v.truth.cols()))
    throw ValidationError("validation intervals missing or mis-shaped");
}

double rmspe(const ValidationSet& v) {
  check_validation_set(v, false);
  return std::sqrt((v.mean - v.truth).array().square().mean());
}

double coverage95(const ValidationSet& v) {
  check_validation_set(v, true);
  Index hits = 0;
  for (Index i = 0; i < v.points(); ++i)
    for (Index j = 0; j < v.coords(); ++j)
      if (v.lower(i, j) <= v.truth(i, j) && v.truth(i, j) <= v.upper(i, j))
        ++hits;
  return static_cast<double>(hits) /
         static_cast<double>(v.points() * v.coords());
}

double alci95(const ValidationSet& v) {
  check_validation_set(v, true);
  return (v.upper - v.lower).array().mean();
}

double crps_empirical(const Vector& draws, double truth) {
  const Index m = draws.size();
  if (m < 1) throw ValidationError("crps: need at least one draw");
  double abs_err = 0.0;
  for (Index i = 0; i < m; ++i) abs_err += std::abs(draws[i] - truth);
  abs_err /= static_cast<double>(m);

  // Pairwise term via sorted prefix sums: sum_{i<j}(x_j - x_i).
  std::vector<double> x(draws.data(), draws.data() + m);
  std::sort(x.begin(), x.end());
  double pairwise = 0.0;
  double prefix = 0.0;
  for (Index i = 0; i < m; ++i) {
    pairwise += x[i] * static_cast<double>(i) - prefix;
    prefix += x[i];
  }
  const double md = static_cast<double>(m);
  return abs_err - pairwise / (md * md);
}

double mean_crps(const ValidationSet& v) {
  check_validation_set(v, false);
  if (static_cast<Index>(v.draws.size()) != v.points())
    throw ValidationError("crps: raw draws missing");
  double total = 0.0;
  for (Index i = 0; i < v.points(); ++i) {
    if (v.draws[i].cols() != v.coords())
      throw ValidationError("crps: draw shape mismatch");
    for (Index j = 0; j < v.coords(); ++j)
      total += crps_empirical(v.draws[i].col(j), v.truth(i, j));
  }
  return total / static_cast<double>(v.points() * v.coords());
}

double nsme(const ValidationSet& v, const Vector& train_means,
            bool printed_denominator) {
  check_validation_set(v, false);
  if (train_means.size() != v.coords())
    throw ValidationError("nsme: training means have wrong length");
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < v.points(); ++i)
    for (Index j = 0; j < v.coords(); ++j) {
      const double e = v.mean(i, j) - v.truth(i, j);
      num += e * e;
      const double centered = printed_denominator
                                  ? v.mean(i, j) - train_means[j]
                                  : v.truth(i, j) - train_means[j];
      den += centered * centered;
    }
  if (den == 0.0) throw ValidationError("nsme: zero denominator");
  return 1.0 - num / den;
}

}  // namespace ppck
