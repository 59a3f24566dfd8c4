#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ppck {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Bad inputs, shapes, files, or degrees of freedom. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Factorization failures and degenerate numerics. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ppck
