#include <doctest.h>

#include <random>

#include "ppck/design.hpp"

using namespace ppck;

namespace {

Matrix grid1d(double lo, double step, int n) {
  Matrix X(n, 1);
  for (int i = 0; i < n; ++i) X(i, 0) = lo + step * i;
  return X;
}

FidelityData with_outputs(int level, Matrix X, Index N = 1) {
  FidelityData f;
  f.level = level;
  f.Y = Matrix::Constant(X.rows(), N, 1.0);
  for (Index i = 0; i < X.rows(); ++i) f.Y(i, 0) = 0.1 * i;
  f.X = std::move(X);
  return f;
}

}  // namespace

TEST_SUITE("design") {

TEST_CASE("nested design needs no augmentation") {
  const Matrix x1 = grid1d(0.0, 0.1, 11);
  Matrix x2(3, 1);
  x2 << 0.0, 0.5, 1.0;
  const auto aug = build_augmentation({with_outputs(1, x1), with_outputs(2, x2)});
  CHECK(aug.n_miss(0) == 0);
  CHECK(aug.n_miss(1) == 0);
  CHECK(aug.n_aug(0) == 11);
  CHECK((aug.aug(0) - aug.x_obs[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(validate_nested(aug).nested);
}

TEST_CASE("two off-grid points induce two missing inputs") {
  const Matrix x1 = grid1d(0.0, 0.1, 20);  // {0, 0.1, ..., 1.9}
  Matrix x2(4, 1);
  x2 << 0.2, 0.55, 1.0, 1.95;  // two rows absent from the grid
  const auto aug = build_augmentation({with_outputs(1, x1), with_outputs(2, x2)});
  CHECK(aug.n_miss(0) == 2);
  CHECK(aug.n_aug(0) == 22);
  CHECK(aug.n_miss(1) == 0);
  CHECK(validate_nested(aug).nested);
}

TEST_CASE("storm-design shape: 200/60 with 50 nested") {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix x1(200, 3);
  for (Index i = 0; i < 200; ++i)
    for (int j = 0; j < 3; ++j) x1(i, j) = unif(gen);
  Matrix x2(60, 3);
  for (int i = 0; i < 50; ++i) x2.row(i) = x1.row(2 * i);  // nested subset
  for (int i = 50; i < 60; ++i)
    for (int j = 0; j < 3; ++j) x2(i, j) = unif(gen);
  const auto aug =
      build_augmentation({with_outputs(1, x1, 2), with_outputs(2, x2, 2)});
  CHECK(aug.n_miss(0) == 10);
  CHECK(aug.n_aug(0) == 210);
  CHECK(aug.n_miss(1) == 0);
}

TEST_CASE("validation failures") {
  Matrix x1(3, 1);
  x1 << 0.0, 0.5, 0.5 + 1e-12;  // duplicates under tolerance
  CHECK_THROWS_AS(build_augmentation({with_outputs(1, x1)}), ValidationError);

  Matrix xa(3, 1), xb(2, 2);
  xa << 0.0, 0.5, 1.0;
  xb << 0.0, 0.0, 1.0, 1.0;
  CHECK_THROWS_AS(
      build_augmentation({with_outputs(1, xa), with_outputs(2, xb)}),
      ValidationError);

  FidelityData bad = with_outputs(1, xa);
  bad.Y(1, 0) = std::nan("");
  CHECK_THROWS_AS(build_augmentation({bad}), ValidationError);

  FidelityData misaligned = with_outputs(1, xa);
  misaligned.Y.conservativeResize(2, 1);
  CHECK_THROWS_AS(build_augmentation({misaligned}), ValidationError);
}

TEST_CASE("validate_nested reports injected violations") {
  const Matrix x1 = grid1d(0.0, 0.25, 5);
  Matrix x2(2, 1);
  x2 << 0.25, 0.75;
  auto aug = build_augmentation({with_outputs(1, x1), with_outputs(2, x2)});
  CHECK(validate_nested(aug).nested);

  aug.x_obs[1](1, 0) = 0.41;  // orphan top-level point
  const auto report = validate_nested(aug);
  CHECK(!report.nested);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].first == 1);
  CHECK(report.violations[0].second == 1);

  const auto single = build_augmentation({with_outputs(1, x1)});
  CHECK(validate_nested(single).nested);  // vacuous for s = 1
}

TEST_CASE("add_prediction_point") {
  const Matrix x1 = grid1d(0.0, 0.5, 3);
  Matrix x2(2, 1);
  x2 << 0.0, 1.0;
  const auto aug = build_augmentation({with_outputs(1, x1), with_outputs(2, x2)});

  Vector inside(1);
  inside << 0.5;  // observed at level 1 but not level 2
  auto one = add_prediction_point(aug, inside);
  CHECK(one.n_aug(0) == aug.n_aug(0));
  CHECK(one.n_aug(1) == aug.n_aug(1) + 1);
  CHECK(validate_nested(one).nested);

  Vector everywhere(1);
  everywhere << 1.0;  // already observed at both levels
  auto unchanged = add_prediction_point(aug, everywhere);
  CHECK(unchanged.n_aug(0) == aug.n_aug(0));
  CHECK(unchanged.n_aug(1) == aug.n_aug(1));

  Vector fresh(1);
  fresh << 0.3;
  auto grown = add_prediction_point(aug, fresh);
  CHECK(grown.n_aug(0) == aug.n_aug(0) + 1);
  CHECK(grown.n_aug(1) == aug.n_aug(1) + 1);
  CHECK(validate_nested(grown).nested);
  const Vector x0n = aug.norm.apply(fresh);
  CHECK(find_row(grown.aug(0), x0n.transpose(), grown.match_tol) >= 0);
}

TEST_CASE("index maps round-trip") {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix x1(15, 2), x2(8, 2), x3(4, 2);
  for (Index i = 0; i < 15; ++i)
    for (int j = 0; j < 2; ++j) x1(i, j) = unif(gen);
  for (Index i = 0; i < 8; ++i)
    for (int j = 0; j < 2; ++j) x2(i, j) = unif(gen);
  x2.row(0) = x1.row(3);
  for (Index i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) x3(i, j) = unif(gen);
  x3.row(0) = x2.row(1);
  const auto aug = build_augmentation(
      {with_outputs(1, x1), with_outputs(2, x2), with_outputs(3, x3)});
  CHECK(validate_nested(aug).nested);
  for (int t = 1; t < aug.s; ++t) {
    const Matrix cur = aug.aug(t);
    const Matrix prev = aug.aug(t - 1);
    for (Index r = 0; r < cur.rows(); ++r)
      CHECK(rows_match(prev.row(aug.map_to_prev[t][r]), cur.row(r),
                       aug.match_tol));
  }
}

}  // TEST_SUITE
