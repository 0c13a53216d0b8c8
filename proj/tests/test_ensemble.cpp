#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "ensoc/ensemble.hpp"
#include "support.hpp"

using namespace ensoc;
using test::column;
using test::line_space;
using test::scalar_problem;

namespace {

auto zero_cost = [](const Vector&, int) { return 0.0; };

ProblemSpec exponential(const std::vector<double>& a) {
  std::vector<double> w(a.size(), 1.0 / a.size()), c;
  for (std::size_t i = 0; i < a.size(); ++i) c.push_back(static_cast<double>(i));
  double amax = 0.0;
  for (double v : a) amax = std::max(amax, std::abs(v));
  return scalar_problem(line_space(w, c), [a](double, const Vector& x, const Vector&, int i) -> Vector {
    return a[static_cast<std::size_t>(i)] * x;
  }, zero_cost, amax, amax, {0.0});
}

}  // namespace

TEST_CASE("time grid") {
  const TimeGrid g(0.1, 0.7, 7);
  CHECK(g.node(0) == 0.1);
  CHECK(g.end() == 0.7);
  CHECK(g.steps() == 7);
  const TimeGrid sub = g.subgrid(3);
  CHECK(sub.steps() == 4);
  for (int j = 0; j <= 4; ++j) CHECK(sub.node(j) == g.node(j + 3));
  CHECK(g.subgrid(1, 3).end() == g.node(3));
  CHECK(g.node_index(g.node(5)) == 5);
  CHECK_THROWS_AS(g.node_index(0.123456), ArgumentError);
  CHECK_THROWS(TimeGrid(1.0, 0.5, 3));
  CHECK_THROWS(TimeGrid(0.0, 1.0, 0));
}

TEST_CASE("zero dynamics keep the initial state") {
  auto p = scalar_problem(line_space({0.5, 0.5}, {0, 1}), [](double, const Vector& x, const Vector&, int) -> Vector {
    return 0 * x;
  }, zero_cost, 1, 1);
  const TimeGrid g(0, 1, 10);
  const EnsembleState phi(p.space, column({1.5, -2}));
  const auto traj = integrate(p, phi, ControlSignal::from_indices(p, g, std::vector<int>(10, 2)));
  for (const auto& x : traj.states) CHECK(x == phi.values());
}

TEST_CASE("exponential flow against the closed form") {
  const std::vector<double> a = {-2.0, -0.7, 0.0, 1.3, 2.0};
  const auto p = exponential(a);
  const Matrix phi = column({1, -0.5, 2, 0.25, -1});
  const TimeGrid g(0, 1, 100);
  const auto traj = integrate(p, EnsembleState(p.space, phi), ControlSignal::constant(g, Vector::Zero(1)));
  for (int i = 0; i < 5; ++i) {
    const double exact = std::exp(a[static_cast<std::size_t>(i)]) * phi(i, 0);
    // RK4 relative error here is about a^5 h^4 / 120 = 2.7e-9 at a = 2
    CHECK(std::abs(traj.final_state()(i, 0) - exact) <= 1e-8 * std::abs(exact));
  }
}

TEST_CASE("affine dynamics are integrated exactly") {
  auto p = scalar_problem(line_space({0.5, 0.5}, {0, 1}), [](double, const Vector&, const Vector& u, int) -> Vector {
    return u;
  }, zero_cost, 1, 0.0);
  const TimeGrid g(0.25, 1.0, 9);
  const EnsembleState phi(p.space, column({0.3, -1.1}));
  const auto traj = integrate(p, phi, ControlSignal::constant(g, Vector::Constant(1, 1.0)));
  for (int i = 0; i < 2; ++i) CHECK(std::abs(traj.final_state()(i, 0) - (phi.values()(i, 0) + 0.75)) <= 1e-15);
}

TEST_CASE("fourth-order convergence under step halving") {
  BuiltinParams params;
  params.set("a", {1.5, -2.0});
  const ProblemSpec p = builtin("linear-ensemble", params);
  const Matrix phi = column({1.0, -0.5});
  const double u = 0.7;
  auto error = [&](int N) {
    const TimeGrid g(0, 1, N);
    const auto x = integrate(p, EnsembleState(p.space, phi), ControlSignal::constant(g, Vector::Constant(1, u))).final_state();
    double err = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double a = i == 0 ? 1.5 : -2.0;
      const double exact = std::exp(a) * phi(i, 0) + u * std::expm1(a) / a;
      err = std::max(err, std::abs(x(i, 0) - exact));
    }
    return err;
  };
  for (int N : {10, 20, 40}) {
    const double ratio = error(N) / error(2 * N);
    CAPTURE(N);
    CHECK(ratio > 14.0);
    CHECK(ratio < 18.0);
  }
}

TEST_CASE("determinism, worker independence and per-atom decoupling") {
  BuiltinParams params;
  params.set("atoms", 7).set("n", 2);
  const ProblemSpec p = builtin("bilinear", params);
  std::mt19937_64 rng(1);
  const Matrix phi = test::random_block(rng, 7, 2);
  const TimeGrid g(0, 1, 50);
  std::vector<int> idx;
  for (int j = 0; j < 50; ++j) idx.push_back(j % 3);
  const auto u = ControlSignal::from_indices(p, g, idx);
  const auto a = integrate(p, EnsembleState(p.space, phi), u, 1);
  const auto b = integrate(p, EnsembleState(p.space, phi), u, 1);
  const auto c = integrate(p, EnsembleState(p.space, phi), u, 4);
  for (std::size_t j = 0; j < a.states.size(); ++j) {
    CHECK(a.states[j] == b.states[j]);
    CHECK(a.states[j] == c.states[j]);
  }
  CHECK(consistency_defect(p, a) == 0.0);

  const std::vector<int> odd = {1, 3, 5}, even = {0, 2, 4, 6};
  auto rows = [&](const std::vector<int>& list) {
    Matrix m(static_cast<Eigen::Index>(list.size()), 2);
    for (std::size_t r = 0; r < list.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = phi.row(list[r]);
    return m;
  };
  const auto to = integrate_atoms(p, rows(odd), u, odd);
  const auto te = integrate_atoms(p, rows(even), u, even);
  for (std::size_t j = 0; j < a.states.size(); ++j) {
    for (std::size_t r = 0; r < odd.size(); ++r)
      CHECK(to.states[j].row(static_cast<Eigen::Index>(r)) == a.states[j].row(odd[r]));
    for (std::size_t r = 0; r < even.size(); ++r)
      CHECK(te.states[j].row(static_cast<Eigen::Index>(r)) == a.states[j].row(even[r]));
  }
}

TEST_CASE("restart from a node reproduces the tail bit for bit") {
  const ProblemSpec p = builtin("linear-ensemble");
  const TimeGrid g(0, 1, 20);
  const auto u = ControlSignal::from_indices(p, g, std::vector<int>(20, 0));
  const EnsembleState phi(p.space, column({0.4, -0.9}));
  const auto whole = integrate(p, phi, u);
  const auto tail = integrate(p, g.node(8), whole.state(p.space, 8), u.restrict(8));
  CHECK(tail.final_state() == whole.final_state());
}

TEST_CASE("divergence is reported with time and atom") {
  auto p = scalar_problem(line_space({0.5, 0.5}, {0, 1}), [](double, const Vector& x, const Vector&, int i) -> Vector {
    return (i == 1 ? 1.0 : 0.0) * x.array().square().matrix();
  }, zero_cost, 1, 1);
  const TimeGrid g(0, 1, 20);
  try {
    integrate(p, EnsembleState(p.space, column({1, 1e200})), ControlSignal::constant(g, Vector::Zero(1)));
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.atom() == 1);
    CHECK(e.time() > 0.0);
  }
}

TEST_CASE("trajectory bounds: zero dynamics and identical data") {
  const ProblemSpec p = builtin("zero-dynamics", BuiltinParams().set("atoms", 3));
  const auto r = lemma21_suite(p, 100);
  CHECK(r.pass);
  CHECK(r.violations.empty());
  CHECK(r.worst_ratio[2] == 0.0);
  CHECK(r.worst_ratio[3] == 0.0);

  const TrajectoryBounds b{1.0, 1.0, 1.0};
  CHECK(b.stability_bound(0.0, 0.7) == 0.0);
}

TEST_CASE("stability bound is tight for a linear flow") {
  const double k = 1.3;
  const auto p = exponential({k, k});
  const TimeGrid g(0, 1, 400);
  const Matrix phi = column({0.2, -0.4});
  const Matrix delta = column({1e-3, 2e-3});
  const auto u = ControlSignal::constant(g, Vector::Zero(1));
  const auto x = integrate(p, EnsembleState(p.space, phi), u).final_state();
  const auto y = integrate(p, EnsembleState(p.space, phi + delta), u).final_state();
  const TrajectoryBounds b{k, k, p.space->total_mass()};
  const double gap = l2_norm(EnsembleState(p.space, delta));
  const double ratio = l2_norm(EnsembleState(p.space, y - x)) / b.stability_bound(gap, 1.0);
  CHECK(ratio <= 1.0 + 1e-12);
  CHECK(ratio > 1.0 - 1e-9);
}

TEST_CASE("trajectory bounds on random linear ensembles") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const int M = std::uniform_int_distribution<int>(1, 8)(rng);
    const int n = std::uniform_int_distribution<int>(1, 2)(rng);
    std::vector<double> a(static_cast<std::size_t>(M));
    for (auto& v : a) v = std::uniform_real_distribution<double>(-2, 2)(rng);
    BuiltinParams params;
    params.set("atoms", M).set("n", n).set("a", a);
    const auto r = lemma21_suite(builtin("linear-ensemble", params), 5, Lemma21Options{100, 0.05, 1.0, 100u + trial});
    CHECK(r.pass);
  }
}

TEST_CASE("trajectory CSV round trip") {
  BuiltinParams params;
  params.set("n", 2).set("atoms", 3);
  const ProblemSpec p = builtin("linear-ensemble", params);
  const TimeGrid g(0, 1, 5);
  std::mt19937_64 rng(2);
  const auto u = ControlSignal::from_indices(p, g, {0, 4, 8, 2, 3});
  const auto traj = integrate(p, EnsembleState(p.space, test::random_block(rng, 3, 2)), u);
  const auto path = std::filesystem::temp_directory_path() / "ensoc_traj.csv";
  write_trajectory_csv(path, traj, *p.space);
  const auto back = read_trajectory_csv(path, *p.space);
  REQUIRE(back.states.size() == traj.states.size());
  for (std::size_t j = 0; j < traj.states.size(); ++j) CHECK(back.states[j] == traj.states[j]);
  CHECK(back.control.values == traj.control.values);
  CHECK(back.grid.nodes() == traj.grid.nodes());
  std::filesystem::remove(path);
}
