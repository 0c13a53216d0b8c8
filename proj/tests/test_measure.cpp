#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "ensoc/measure.hpp"
#include "support.hpp"

using namespace ensoc;
using test::column;
using test::line_space;

TEST_CASE("parameter space validation") {
  Eigen::MatrixXd d(2, 2);
  d << 0, 1, 1, 0;
  CHECK_NOTHROW(ParameterSpace({"a", "b"}, Eigen::Vector2d(0.5, 0.5), d));
  CHECK_THROWS_AS(ParameterSpace({"a", "b"}, Eigen::Vector2d(0.5, -0.5), d), ValidationError);
  CHECK_THROWS_AS(ParameterSpace({"a", "a"}, Eigen::Vector2d(0.5, 0.5), d), ValidationError);

  Eigen::MatrixXd asym = d;
  asym(0, 1) = 2;
  CHECK_THROWS_AS(ParameterSpace({"a", "b"}, Eigen::Vector2d(1, 1), asym), ValidationError);

  Eigen::MatrixXd tri(3, 3);
  tri << 0, 1, 5, 1, 0, 1, 5, 1, 0;  // 5 > 1 + 1
  CHECK_THROWS_AS(ParameterSpace({"a", "b", "c"}, Eigen::Vector3d(1, 1, 1), tri), ValidationError);

  Eigen::MatrixXd same(2, 2);
  same.setZero();
  CHECK_THROWS_AS(ParameterSpace({"a", "b"}, Eigen::Vector2d(1, 1), same), ValidationError);

  const auto s = ParameterSpace::uniform_line(4, 2.0);
  CHECK(s.total_mass() == doctest::Approx(2.0));
  CHECK(s.diameter() == doctest::Approx(1.0));
  CHECK(s.index_of(s.ids()[2]) == 2);
  CHECK_THROWS_AS(s.index_of("nope"), LookupError);
}

TEST_CASE("l2_inner examples") {
  auto sp = line_space({0.5, 0.5}, {0, 1});
  CHECK(l2_inner(EnsembleState(sp, 1), EnsembleState(sp, 1)) == 0.0);
  CHECK(l2_inner(EnsembleState(sp, column({2, -2})), EnsembleState(sp, column({1, 1}))) == 0.0);

  auto other = line_space({0.25, 0.75}, {0, 1});
  CHECK_THROWS_AS(l2_inner(EnsembleState(sp, 1), EnsembleState(other, 1)), Error);
  CHECK_THROWS_AS(l2_inner(EnsembleState(sp, 1), EnsembleState(sp, 2)), DimensionError);
}

TEST_CASE("l2_inner against extended precision summation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> wd(0.1, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w(4);
    for (auto& x : w) x = wd(rng);
    auto sp = line_space(w, {0, 1, 2, 3});
    const Matrix a = test::random_block(rng, 4, 3, 10.0), b = test::random_block(rng, 4, 3, 10.0);
    long double ref = 0.0L;
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 3; ++k)
        ref += static_cast<long double>(w[static_cast<std::size_t>(i)]) * a(i, k) * b(i, k);
    CHECK(std::abs(l2_inner(EnsembleState(sp, a), EnsembleState(sp, b)) - static_cast<double>(ref)) <= 1e-12 * (1 + std::abs(static_cast<double>(ref))));
  }
}

TEST_CASE("l2_norm examples") {
  CHECK(l2_norm(EnsembleState(line_space({0.5, 0.5}, {0, 1}), 1)) == 0.0);
  CHECK(l2_norm(EnsembleState(line_space({1.0}, {0}), column({3}))) == 3.0);
  CHECK(l2_norm(EnsembleState(line_space({1, 1}, {0, 1}), column({3, 4}))) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("Cauchy-Schwarz on random pairs") {
  std::mt19937_64 rng(5);
  auto sp = line_space({0.1, 0.4, 0.2, 0.3, 1.0}, {0, 0.2, 0.5, 0.7, 1.0});
  for (int trial = 0; trial < 500; ++trial) {
    const EnsembleState a(sp, test::random_block(rng, 5, 2, 5.0)), b(sp, test::random_block(rng, 5, 2, 5.0));
    CHECK(std::abs(l2_inner(a, b)) <= l2_norm(a) * l2_norm(b) * (1 + 1e-14));
  }
}

TEST_CASE("ball_mass") {
  auto sp = line_space({0.3, 0.7}, {0, 1});
  CHECK(ball_mass(*sp, 0.5) == doctest::Approx(0.3));
  CHECK(ball_mass(*sp, 1.0) == doctest::Approx(0.3));  // open ball excludes distance 1
  CHECK(ball_mass(*sp, 1.0001) == doctest::Approx(1.0));
  CHECK(ball_mass(*line_space({2.5}, {0}), 0.01) == 2.5);
  CHECK_THROWS_AS(ball_mass(*sp, 0.0), ArgumentError);

  auto wide = line_space({0.1, 0.4, 0.2, 0.3}, {0, 0.1, 0.5, 1.3});
  double prev = 0.0;
  for (double r = 0.01; r < 2.0; r += 0.01) {
    const double h = ball_mass(*wide, r);
    CHECK(h >= prev);
    CHECK(h > 0.0);
    prev = h;
  }
  CHECK(ball_mass(*wide, wide->diameter() + 1e-9) == doctest::Approx(wide->total_mass()));
}

TEST_CASE("ball_average examples") {
  auto sp = line_space({1, 1}, {0, 1});
  const Matrix F = column({0, 4});
  const Matrix avg = ball_average(*sp, F, 2.0);
  CHECK(avg(0, 0) == doctest::Approx(2.0));
  CHECK(avg(1, 0) == doctest::Approx(2.0));
  CHECK(ball_average(*sp, F, 0.5) == F);  // singleton balls, bit-exact

  const Matrix constant = Matrix::Constant(2, 3, 1.7);
  const Matrix ca = ball_average(*sp, constant, 2.0);
  CHECK((ca - constant).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("ball_average is linear and an L2 contraction") {
  std::mt19937_64 rng(9);
  auto sp = line_space({0.1, 0.4, 0.2, 0.3, 0.6}, {0, 0.2, 0.5, 0.7, 1.0});
  for (double r : {0.1, 0.25, 0.35, 0.6, 2.0})
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix a = test::random_block(rng, 5, 2, 3.0), b = test::random_block(rng, 5, 2, 3.0);
      const Matrix lin = ball_average(*sp, Matrix(2.0 * a - 3.0 * b), r);
      const Matrix sep = 2.0 * ball_average(*sp, a, r) - 3.0 * ball_average(*sp, b, r);
      CHECK((lin - sep).cwiseAbs().maxCoeff() <= 1e-12);
      const EnsembleState A(sp, a);
      CHECK(l2_norm(ball_average(*sp, A, r)) <= l2_norm(A) * (1 + 1e-12));
    }
}

TEST_CASE("stacked coordinates are atom-major") {
  auto sp = line_space({1, 1}, {0, 1});
  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  const EnsembleState s(sp, x);
  CHECK(s.stacked() == Eigen::Vector4d(1, 2, 3, 4));
  CHECK(EnsembleState::from_stacked(sp, 2, s.stacked()).values() == x);
  CHECK_THROWS_AS(EnsembleState(sp, Matrix::Zero(3, 1)), DimensionError);
  Matrix bad = x;
  bad(0, 0) = std::nan("");
  CHECK_THROWS(EnsembleState(sp, bad));
}
