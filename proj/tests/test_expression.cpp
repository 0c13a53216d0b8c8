#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "ensoc/errors.hpp"
#include "ensoc/expression.hpp"

using ensoc::Expression;

namespace {

double ev(const std::string& src, std::vector<double> vals = {}, std::vector<std::string> vars = {}) {
  return Expression::parse(src, vars).eval(vals);
}

}  // namespace

TEST_CASE("arithmetic and precedence") {
  CHECK(ev("1 + 2 * 3") == 7);
  CHECK(ev("(1 + 2) * 3") == 9);
  CHECK(ev("8 / 4 / 2") == 1);
  CHECK(ev("2 ^ 3 ^ 2") == 512);  // right associative
  CHECK(ev("-2 ^ 2") == -4);
  CHECK(ev("2 ^ -1") == 0.5);
  CHECK(ev("1.5e2 - 50") == 100);
  CHECK(ev("--3") == 3);
}

TEST_CASE("functions and constants") {
  CHECK(ev("exp(0) + cos(0)") == 2);
  CHECK(ev("sin(pi / 2)") == doctest::Approx(1.0));
  CHECK(ev("pi") == std::numbers::pi);
  CHECK(ev("abs(-3)") == 3);
  CHECK(ev("min(3, 1, 2)") == 1);
  CHECK(ev("max(3, 1, 2)") == 3);
}

TEST_CASE("variables") {
  const auto e = Expression::parse("w1 * x1 + u1 - t", {"t", "x1", "u1", "w1"});
  CHECK(e.eval(std::vector<double>{1, 2, 3, 4}) == 4 * 2 + 3 - 1);
  CHECK(e.uses(3));
  const auto f = Expression::parse("x1 + 1", {"t", "x1"});
  CHECK_FALSE(f.uses(0));
  CHECK(f.uses(1));
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(ev("1 +"), ensoc::ParseError);
  CHECK_THROWS_AS(ev("(1"), ensoc::ParseError);
  CHECK_THROWS_AS(ev("y"), ensoc::ParseError);
  CHECK_THROWS_AS(ev("exp(1, 2)"), ensoc::ParseError);
  CHECK_THROWS_AS(ev("min(1)"), ensoc::ParseError);
  CHECK_THROWS_AS(ev("foo(1)"), ensoc::ParseError);
  CHECK_THROWS_AS(ev("1 2"), ensoc::ParseError);
  CHECK_THROWS_AS(ev("3 $ 4"), ensoc::ParseError);
}
