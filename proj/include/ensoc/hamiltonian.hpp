#pragma once

#include "ensoc/problem.hpp"

namespace ensoc {

/// Dual variable paired with ensemble states through the L^2(mu) product.
struct Costate {
  EnsembleState state;
};

struct HamiltonianValue {
  double value = 0.0;
  Vector control;
  int index = 0;
};

/// min over the active control points u of <costate, f(t, phi, u, .)>.
/// Ties go to the lowest index.
HamiltonianValue hamiltonian(const ProblemSpec& p, double t, const EnsembleState& phi,
                             const Costate& costate);

/// Same minimum written on stacked coordinates: `gradient` holds dV/dz for
/// z = stacked(phi), so the pairing is sum_i dV/dz_i . f_i without weights.
HamiltonianValue hamiltonian_stacked(const ProblemSpec& p, double t, const Matrix& phi,
                                     const Matrix& gradient);

}  // namespace ensoc
