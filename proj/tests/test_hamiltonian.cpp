#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ensoc/hamiltonian.hpp"
#include "support.hpp"

using namespace ensoc;
using test::column;
using test::line_space;

namespace {

ProblemSpec pure_control(SpacePtr sp) {
  return test::scalar_problem(std::move(sp), [](double, const Vector&, const Vector& u, int) -> Vector { return u; },
                              [](const Vector&, int) { return 0.0; }, 1, 0.0, {-1.0, 1.0});
}

}  // namespace

TEST_CASE("zero costate") {
  const ProblemSpec p = builtin("linear-ensemble");
  const EnsembleState phi(p.space, column({1, 2}));
  const auto h = hamiltonian(p, 0.3, phi, Costate{EnsembleState(p.space, 1)});
  CHECK(h.value == 0.0);
  CHECK(h.index == 0);
}

TEST_CASE("pure control field") {
  auto sp = line_space({0.25, 0.75}, {0, 1});
  const ProblemSpec p = pure_control(sp);
  const EnsembleState phi(sp, 1);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix costate = test::random_block(rng, 2, 1, 3.0);
    const double sum = 0.25 * costate(0, 0) + 0.75 * costate(1, 0);
    const auto h = hamiltonian(p, 0.5, phi, Costate{EnsembleState(sp, costate)});
    CHECK(h.value == doctest::Approx(-std::abs(sum)).epsilon(1e-14));
    CHECK(h.control[0] == (sum > 0 ? -1.0 : 1.0));
  }
  const auto tie = hamiltonian(p, 0.5, phi, Costate{EnsembleState(sp, column({3, -1}))});
  CHECK(tie.value == 0.0);
  CHECK(tie.index == 0);
}

TEST_CASE("linear-ensemble formula") {
  BuiltinParams params;
  params.set("a", {0.7, -1.2}).set("rho", 1.5).set("levels", 5);
  const ProblemSpec p = builtin("linear-ensemble", params);
  const Vector& w = p.space->weights();
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix phi = test::random_block(rng, 2, 1, 2.0), pc = test::random_block(rng, 2, 1, 2.0);
    const double expected = w[0] * pc(0, 0) * 0.7 * phi(0, 0) + w[1] * pc(1, 0) * -1.2 * phi(1, 0) -
                            1.5 * std::abs(w[0] * pc(0, 0) + w[1] * pc(1, 0));
    const auto h = hamiltonian(p, 0.1, EnsembleState(p.space, phi), Costate{EnsembleState(p.space, pc)});
    CHECK(h.value == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("stacked pairing drops the weights") {
  const ProblemSpec p = builtin("linear-ensemble");
  const Vector& w = p.space->weights();
  const Matrix phi = column({0.4, -0.3}), pc = column({1.2, -2.0});
  const Matrix grad = w.asDiagonal() * pc;
  const auto a = hamiltonian(p, 0.2, EnsembleState(p.space, phi), Costate{EnsembleState(p.space, pc)});
  const auto b = hamiltonian_stacked(p, 0.2, phi, grad);
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-15));
  CHECK(a.index == b.index);
}

TEST_CASE("homogeneity, concavity and brute-force equivalence") {
  BuiltinParams params;
  params.set("atoms", 4).set("n", 2).set("levels", 4);
  const ProblemSpec p = builtin("bilinear", params);
  std::mt19937_64 rng(12);
  const Matrix& set = p.controls.active(0.0);
  for (int trial = 0; trial < 200; ++trial) {
    const EnsembleState phi(p.space, test::random_block(rng, 4, 2, 2.0));
    const Matrix a = test::random_block(rng, 4, 2, 2.0), b = test::random_block(rng, 4, 2, 2.0);
    const auto ha = hamiltonian(p, 0.0, phi, Costate{EnsembleState(p.space, a)});

    const double lambda = std::uniform_real_distribution<double>(0.01, 10.0)(rng);
    const auto hl = hamiltonian(p, 0.0, phi, Costate{EnsembleState(p.space, lambda * a)});
    CHECK(hl.value == doctest::Approx(lambda * ha.value).epsilon(1e-12));
    CHECK(hl.index == ha.index);

    const auto hb = hamiltonian(p, 0.0, phi, Costate{EnsembleState(p.space, b)});
    const auto hm = hamiltonian(p, 0.0, phi, Costate{EnsembleState(p.space, Matrix(0.5 * (a + b)))});
    CHECK(hm.value >= 0.5 * (ha.value + hb.value) - 1e-12);

    // brute force in shuffled order
    std::vector<int> order(static_cast<std::size_t>(set.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double best = std::numeric_limits<double>::infinity();
    for (int k : order) {
      Matrix fk(4, 2);
      for (int i = 0; i < 4; ++i)
        fk.row(i) = p.dynamics.eval(0.0, phi.row(i), set.col(k), i).transpose();
      best = std::min(best, weighted_inner(p.space->weights(), a, fk));
    }
    CHECK(ha.value == best);
  }
}

TEST_CASE("shape and time checks") {
  const ProblemSpec p = builtin("linear-ensemble");
  const EnsembleState phi(p.space, 1);
  CHECK_THROWS_AS(hamiltonian(p, 0.0, phi, Costate{EnsembleState(p.space, 2)}), DimensionError);
  CHECK_THROWS_AS(hamiltonian(p, 1.5, phi, Costate{EnsembleState(p.space, 1)}), ArgumentError);
}
