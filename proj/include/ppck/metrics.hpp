#pragma once

#include <vector>

#include "ppck/types.hpp"

namespace ppck {

// Held-out predictions against truth; one row per held-out input, one
// column per output coordinate. draws (per input, m x N) enable CRPS.
struct ValidationSet {
  Matrix mean;
  Matrix lower;
  Matrix upper;
  Matrix truth;
  std::vector<Matrix> draws;  // optional

  Index points() const { return truth.rows(); }
  Index coords() const { return truth.cols(); }
};

void check_validation_set(const ValidationSet& v, bool need_intervals);

double rmspe(const ValidationSet& v);
double coverage95(const ValidationSet& v);
double alci95(const ValidationSet& v);

// Empirical-distribution CRPS: mean |X_k - y| - mean pairwise |X_k - X_m|/2.
double crps_empirical(const Vector& draws, double truth);

// Mean CRPS over all cells; requires raw draws.
double mean_crps(const ValidationSet& v);

// Nash-Sutcliffe efficiency. The denominator uses the predictions around the
// per-coordinate training means when printed_denominator is true, and the
// conventional truth-around-mean form otherwise.
double nsme(const ValidationSet& v, const Vector& train_means,
            bool printed_denominator = true);

}  // namespace ppck
