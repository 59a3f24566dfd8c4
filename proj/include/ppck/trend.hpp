#pragma once

#include "ppck/types.hpp"

namespace ppck {

// Per-dimension monomials up to `degree` plus an intercept, evaluated on
// normalized inputs. Degree 0 is the constant basis.
struct TrendBasis {
  int degree = 0;

  Index size(Index d) const { return 1 + static_cast<Index>(degree) * d; }

  Vector eval(const Vector& x) const {
    Vector h(size(x.size()));
    h[0] = 1.0;
    Index pos = 1;
    for (int k = 1; k <= degree; ++k)
      for (Index i = 0; i < x.size(); ++i) h[pos++] = std::pow(x[i], k);
    return h;
  }

  Matrix eval(const Matrix& X) const {
    Matrix H(X.rows(), size(X.cols()));
    Vector x(X.cols());
    for (Index r = 0; r < X.rows(); ++r) {
      x = X.row(r);
      H.row(r) = eval(x);
    }
    return H;
  }
};

}  // namespace ppck
