#pragma once

#include <vector>

#include "ppck/types.hpp"

namespace ppck {

// Observed runs at one fidelity level, in raw input units. Levels are
// numbered 1..s, lowest fidelity first; the ordering is the caller's claim.
struct FidelityData {
  int level = 0;
  Matrix X;  // n_t x d
  Matrix Y;  // n_t x N
};

// Per-dimension affine map onto [0,1] fitted from the training inputs.
struct Normalization {
  Vector lo;
  Vector range;  // > 0 (degenerate dimensions map with range 1)

  static Normalization fit(const std::vector<const Matrix*>& designs);
  Matrix apply(const Matrix& X) const;
  Vector apply(const Vector& x) const;
};

// Union bookkeeping that turns a possibly non-nested design into a nested
// one: per level the observed inputs, the inputs observed only at higher
// levels (missing set), and index maps into the previous level's augmented
// set. All stored inputs are normalized. Immutable after construction.
struct AugmentedDesign {
  Normalization norm;
  int s = 0;
  Index d = 0;
  Index N = 0;
  double match_tol = 1e-9;

  std::vector<Matrix> x_obs;   // n_t x d
  std::vector<Matrix> x_miss;  // m_t x d, empty at the top level
  // map_to_prev[t][r]: row of aug(t-1) equal to row r of aug(t); empty at t=0.
  std::vector<std::vector<Index>> map_to_prev;

  Index n_obs(int t) const { return x_obs[t].rows(); }
  Index n_miss(int t) const { return x_miss[t].rows(); }
  Index n_aug(int t) const { return n_obs(t) + n_miss(t); }

  // [x_obs; x_miss], the augmented input set for level t (0-based).
  Matrix aug(int t) const;
};

// True if rows a and b agree within tol in every dimension.
bool rows_match(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                const Eigen::Ref<const Eigen::RowVectorXd>& b, double tol);

// Row of X matching x within tol, or -1.
Index find_row(const Matrix& X, const Eigen::Ref<const Eigen::RowVectorXd>& x,
               double tol);

AugmentedDesign build_augmentation(const std::vector<FidelityData>& levels,
                                   double match_tol = 1e-9);

struct NestingReport {
  bool nested = true;
  // (level t, row r of aug(t)) pairs with no match in aug(t-1)
  std::vector<std::pair<int, Index>> violations;
};

NestingReport validate_nested(const AugmentedDesign& aug);

// Appends x0 (raw units) to every level's missing set unless that level
// already contains it; returns a new design with maps rebuilt.
AugmentedDesign add_prediction_point(const AugmentedDesign& aug,
                                     const Vector& x0_raw);

}  // namespace ppck
