#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ensoc/io.hpp"
#include "ensoc/problem.hpp"
#include "ensoc/value.hpp"
#include "support.hpp"

using namespace ensoc;
using test::line_space;
using test::scalar_problem;

namespace {

auto zero_cost = [](const Vector&, int) { return 0.0; };

ProblemSpec with_field(DynamicsSpec::Field f, double c, double k, SpacePtr sp = line_space({0.5, 0.5}, {0, 1})) {
  return scalar_problem(std::move(sp), std::move(f), zero_cost, c, k);
}

/// Simpson's rule on a fine grid, used as an independent quadrature oracle.
template <typename F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("growth validator") {
  auto zero = with_field([](double, const Vector& x, const Vector&, int) -> Vector { return 0 * x; }, 1, 1);
  auto r0 = validate_growth(zero, 500);
  CHECK(r0.pass);
  CHECK(r0.worst == 0.0);

  auto lin = with_field([](double, const Vector& x, const Vector&, int) -> Vector { return x; }, 1, 1);
  auto r1 = validate_growth(lin, 500);
  CHECK(r1.pass);
  CHECK(r1.worst < 1.0);
  CHECK(r1.worst > 0.85);  // |x|/(1+|x|) with samples on the sphere |x| = 10

  auto sq = with_field([](double, const Vector& x, const Vector&, int) -> Vector { return x.array().square(); }, 1, 1);
  auto r2 = validate_growth(sq, 2000);
  CHECK_FALSE(r2.pass);
  REQUIRE_FALSE(r2.violations.empty());
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;  // root of x^2 = 1 + x
  for (const auto& v : r2.violations) CHECK(v.x.norm() > golden);
}

TEST_CASE("lipschitz validator") {
  auto constant = with_field([](double, const Vector& x, const Vector&, int) -> Vector { return Vector::Constant(x.size(), 3.0); }, 3, 0.1);
  CHECK(validate_lipschitz(constant, 500).pass);

  auto twice = with_field([](double, const Vector& x, const Vector&, int) -> Vector { return 2 * x; }, 2, 1);
  auto r = validate_lipschitz(twice, 500);
  CHECK_FALSE(r.pass);
  CHECK(r.worst == doctest::Approx(2.0).epsilon(1e-9));

  auto sine = with_field([](double, const Vector& x, const Vector&, int) -> Vector { return x.array().sin(); }, 1, 1);
  CHECK(validate_lipschitz(sine, 2000).pass);
}

TEST_CASE("cost bound validator") {
  auto sp = line_space({0.5, 0.5}, {0, 1});
  auto f0 = [](double, const Vector& x, const Vector&, int) -> Vector { return 0 * x; };
  auto p = scalar_problem(sp, f0, zero_cost, 1, 1);
  auto r = validate_cost_bound(p, 500);
  CHECK(r.pass);
  CHECK(r.worst == 0.0);

  auto q = scalar_problem(sp, f0, [](const Vector& x, int) { return -x.squaredNorm(); }, 1, 1);
  q.cost.lower_bound_b = 1.0;
  auto rq = validate_cost_bound(q, 500);
  CHECK(rq.pass);
  CHECK(std::abs(rq.worst) <= 1e-12);

  auto quartic = scalar_problem(sp, f0, [](const Vector& x, int) { return -std::pow(x.squaredNorm(), 2); }, 1, 1);
  quartic.cost.lower_bound_b = 1.0;
  quartic.box.state_radius = 2.0;
  auto r4 = validate_cost_bound(quartic, 2000);
  CHECK_FALSE(r4.pass);
  REQUIRE_FALSE(r4.violations.empty());
  for (const auto& v : r4.violations) CHECK(v.x.norm() > 1.0);
}

TEST_CASE("modulus check") {
  auto indep = with_field([](double, const Vector& x, const Vector& u, int) -> Vector { return x + u; }, 2, 1);
  CHECK_THROWS_AS(modulus_check(indep, 10), CapabilityError);
  indep.dynamics.omega_modulus = [](double) { return 0.0; };
  auto r = modulus_check(indep, 10);
  CHECK(r.pass);
  CHECK(r.worst == 0.0);

  // f = a(w) x with a Lipschitz in w: theta(r) = T L R r
  const double L = 1.5, R = 10.0, T = 1.0;
  auto sp = line_space({0.25, 0.25, 0.5}, {0, 0.4, 1});
  auto lin = with_field([sp, L](double, const Vector& x, const Vector&, int i) -> Vector {
    return L * sp->coordinates()(i, 0) * x;
  }, L, L, sp);
  lin.dynamics.omega_modulus = [=](double rr) { return T * L * R * rr; };
  auto rl = modulus_check(lin, 20);
  CHECK(rl.pass);
  CHECK(rl.worst <= 1.0 + 1e-9);
  CHECK(rl.worst > 0.9);  // attained on the sphere |x| = R

  lin.dynamics.omega_modulus = [=](double rr) { return 0.5 * T * L * R * rr; };
  CHECK_FALSE(modulus_check(lin, 20).pass);

  auto single = with_field([](double, const Vector& x, const Vector&, int) -> Vector { return x; }, 1, 1, line_space({1.0}, {0}));
  single.dynamics.omega_modulus = [](double) { return 0.0; };
  CHECK(modulus_check(single, 5).pass);
}

TEST_CASE("every builtin passes its own certificates") {
  for (const auto& name : builtin_names())
    for (int atoms : {1, 2, 5})
      for (int n : {1, 2}) {
        BuiltinParams params;
        params.set("atoms", atoms).set("n", n);
        const ProblemSpec p = builtin(name, params);
        CAPTURE(name);
        CAPTURE(atoms);
        CAPTURE(n);
        CHECK_NOTHROW(p.validate_structure());
        CHECK(validate_growth(p, 1000, 3).pass);
        CHECK(validate_lipschitz(p, 1000, 3).pass);
        CHECK(validate_cost_bound(p, 1000, 3).pass);
        CHECK(modulus_check(p, 10, 3).pass);
        CHECK(p.differentiable());
      }
  CHECK_THROWS_AS(builtin("nope"), LookupError);
}

TEST_CASE("decoupled-quadratic with one atom is a single system") {
  BuiltinParams params;
  params.set("atoms", 1);
  const ProblemSpec p = builtin("decoupled-quadratic", params);
  CHECK(p.space->size() == 1);
  CHECK(p.space->total_mass() == 1.0);
}

TEST_CASE("control schedule") {
  Matrix a(1, 2), b(1, 1);
  a << -1, 1;
  b << 0;
  ControlSchedule s({0.0, 0.5, 1.0}, {a, b}, Vector::Constant(1, -1), Vector::Constant(1, 1));
  CHECK(s.interval_at(0.0) == 0);
  CHECK(s.interval_at(0.4999) == 0);
  CHECK(s.interval_at(0.5) == 1);  // right-continuous
  CHECK(s.interval_at(1.0) == 1);  // last interval closed
  CHECK_THROWS(s.interval_at(1.5));
  CHECK(s.active_hull_is_box(0.2));
  CHECK(s.active_hull_is_box(0.7));  // a point is its own box
  Matrix diag(2, 2);
  diag << 0, 1, 0, 1;  // (0,0) and (1,1): hull is a segment, box is a square
  ControlSchedule d({0.0, 1.0}, {diag}, Vector::Zero(2), Vector::Ones(2));
  CHECK_FALSE(d.active_hull_is_box(0.3));

  Matrix out(1, 1);
  out << 2;
  CHECK_THROWS_AS(ControlSchedule({0.0, 1.0}, {out}, Vector::Constant(1, -1), Vector::Constant(1, 1)), ValidationError);
  CHECK_THROWS_AS(ControlSchedule({0.0, 1.0}, {a, b}, Vector::Constant(1, -1), Vector::Constant(1, 1)), ValidationError);

  const auto lat = ControlSchedule::lattice(1.0, Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 2), 3);
  REQUIRE(lat.sets().front().cols() == 9);
  CHECK(lat.sets().front().col(1) == Eigen::Vector2d(-1, 1));  // last axis fastest
  CHECK(ControlSchedule::lattice(1.0, Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 2), 1).sets().front().col(0) ==
        Eigen::Vector2d(0, 1));
}

TEST_CASE("linear-ensemble closed form against quadrature") {
  BuiltinParams params;
  params.set("a", {1.0, -1.0}).set("c", {1.0, -2.0}).set("rho", 0.7);
  const ProblemSpec p = builtin("linear-ensemble", params);
  const auto oracle = LinearEnsembleOracle::from_params(*p.space, params);
  auto psi = [](double s) { return 0.5 * std::exp(1 - s) - std::exp(-(1 - s)); };
  CHECK(oracle.psi(0.3) == doctest::Approx(psi(0.3)).epsilon(1e-14));

  const auto zeros = oracle.psi_zeros(0.0);
  REQUIRE(zeros.size() == 1);
  CHECK(std::abs(zeros[0] - (1.0 - std::log(2.0) / 2.0)) <= 1e-12);

  for (double s : {0.0, 0.2, 0.9}) {
    const double ref = simpson([&](double t) { return std::abs(psi(t)); }, s, 1.0, 200000);
    CHECK(std::abs(oracle.abs_psi_integral(s) - ref) <= 1e-9);
    const Matrix phi = test::column({0.3, -1.2});
    const double v = 0.5 * std::exp(1 - s) * 0.3 + 0.5 * (-2) * std::exp(-(1 - s)) * -1.2 - 0.7 * ref;
    CHECK(std::abs(oracle.value(s, phi) - v) <= 1e-9);
  }
  CHECK(oracle.optimal_control(0.0) == -0.7 * (psi(0.0) > 0 ? 1 : -1));
  CHECK(oracle.optimal_control(0.9) == -0.7 * (psi(0.9) > 0 ? 1 : -1));
}

TEST_CASE("linear-ensemble with c = 0 makes every control optimal") {
  BuiltinParams params;
  params.set("c", 0.0);
  const ProblemSpec p = builtin("linear-ensemble", params);
  const TimeGrid grid(0, 1, 3);
  const EnsembleState phi(p.space, test::column({1, -1}));
  CHECK(value_oracle(p, 0, phi, grid).value == 0.0);
  for (int k = 0; k < 3; ++k)
    CHECK(reduced_cost(p, 0, phi, ControlSignal::from_indices(p, grid, {k, 2 - k, k})) == 0.0);
}

TEST_CASE("space and problem files round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ensoc_test_problem";
  fs::create_directories(dir);

  auto sp = line_space({0.2, 0.8}, {0.0, 2.5});
  save_space(dir / "space.json", *sp);
  const ParameterSpace back = load_space(dir / "space.json");
  CHECK(back.ids() == sp->ids());
  CHECK(back.weights() == sp->weights());
  CHECK(back.metric() == sp->metric());
  CHECK(back.coordinates() == sp->coordinates());

  {
    std::ofstream out(dir / "problem.json");
    out << R"({"format": "ensoc-problem", "version": 1, "grammar": 1,
      "space": "space.json", "state_dim": 1, "control_dim": 1, "horizon": 1,
      "dynamics": ["w1 * x + u"], "cost": "x^2",
      "growth_c": 3.5, "lipschitz_k": 2.5, "modulus": "10 * r",
      "cost_lower_a": 0, "cost_lower_b": 0,
      "controls": {"box_lo": [-1], "box_hi": [1], "levels": 3},
      "differentiable": true, "validation_radius": 10})";
  }
  const ProblemSpec p = load_problem(dir / "problem.json");
  CHECK(p.space->size() == 2);
  Vector x(1), u(1);
  x << 2.0;
  u << 0.5;
  CHECK(p.dynamics.eval(0.0, x, u, 1)[0] == doctest::Approx(2.5 * 2 + 0.5));
  CHECK(p.cost.eval(x, 0) == doctest::Approx(4.0));
  CHECK((*p.dynamics.omega_modulus)(0.5) == doctest::Approx(5.0));
  REQUIRE(p.differentiable());
  CHECK((*p.dynamics.jacobian_x)(0.0, x, u, 1)(0, 0) == doctest::Approx(2.5).epsilon(1e-6));
  CHECK((*p.cost.gradient)(x, 0)[0] == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(validate_growth(p, 500).pass);
  CHECK(validate_lipschitz(p, 500).pass);
  CHECK(modulus_check(p, 4).pass);

  Json bad = Json::parse(R"({"format": "ensoc-problem", "version": 1, "grammar": 1,
      "space": "space.json", "state_dim": 1, "control_dim": 1, "horizon": 1,
      "dynamics": ["x + v"], "cost": "x", "growth_c": 1, "lipschitz_k": 1,
      "cost_lower_a": 0, "cost_lower_b": 0,
      "controls": {"box_lo": [-1], "box_hi": [1], "levels": 2}})");
  CHECK_THROWS_AS(problem_from_json(bad, dir), ParseError);

  const Json ref = Json::parse(R"({"format": "ensoc-problem", "version": 1,
      "builtin": "linear-ensemble", "parameters": {"a": [0.5, -0.5], "rho": 2}})");
  const ProblemSpec b = problem_from_json(ref);
  CHECK(b.name == "linear-ensemble");
  CHECK(b.controls.box_hi()[0] == 2.0);
  fs::remove_all(dir);
}
