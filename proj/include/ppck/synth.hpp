#pragma once

#include <vector>

#include "ppck/design.hpp"
#include "ppck/kernels.hpp"
#include "ppck/types.hpp"

namespace ppck {

// Two-fidelity closed-form test functions on [-1, 1].
double toy_low(double x);
double toy_high(double x);

struct ToyData {
  std::vector<FidelityData> levels;  // s = 2, d = 1, N = 1
  Matrix test_x;                     // 200 x 1 uniformly spaced
  Matrix test_y;                     // 200 x 1 true high-fidelity values
};

// 21 low-fidelity points {-1.0, -0.9, ..., 1.0} and 10 high-fidelity points;
// the nested variant swaps the off-grid point -0.55 for -0.6.
ToyData make_toy(bool nested = false);

// Generative configuration for simulating from the cokriging model itself.
struct SynthConfig {
  int s = 2;
  Index d = 2;
  Index N = 1;
  std::vector<Index> n;            // runs per level, lowest fidelity first
  std::vector<Vector> phi;         // true ranges per level (input units)
  std::vector<double> beta;        // constant trend per level
  std::vector<double> gamma;       // scale discrepancy, levels 2..s
  std::vector<double> sigma2;      // process variance per level
  // Optional per-coordinate heterogeneity: value + spread * U(-1, 1).
  std::vector<double> beta_spread;   // empty or one entry per level
  std::vector<double> gamma_spread;  // empty or one entry per coupling
  double nu = 2.5;
  double nested_fraction = 0.5;    // share of level-t inputs copied from t-1
  uint64_t seed = 1;
};

struct SynthTruth {
  SynthConfig config;
  std::vector<Vector> beta_j;    // per level, per coordinate (constant basis)
  std::vector<Vector> gamma_j;   // per coupling, per coordinate
  std::vector<std::string> warnings;
};

// Stratified Latin-hypercube inputs per level (with the requested nested
// overlap), Gaussian-process fields with the true parameters, and outputs
// composed by the autoregressive rule.
std::pair<std::vector<FidelityData>, SynthTruth> gen_from_model(
    const SynthConfig& cfg);

}  // namespace ppck
