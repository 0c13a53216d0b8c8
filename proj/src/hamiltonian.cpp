#include "ensoc/hamiltonian.hpp"

#include <limits>

namespace ensoc {

namespace {

template <typename Pairing>
HamiltonianValue minimize(const ProblemSpec& p, double t, Pairing&& pairing) {
  const Matrix& set = p.controls.active(t);
  if (set.cols() == 0) throw ScheduleError("hamiltonian: empty control set");
  HamiltonianValue best{std::numeric_limits<double>::infinity(), set.col(0), 0};
  for (Eigen::Index k = 0; k < set.cols(); ++k) {
    const double v = pairing(Vector(set.col(k)));
    if (v < best.value) best = {v, set.col(k), static_cast<int>(k)};
  }
  return best;
}

}  // namespace

HamiltonianValue hamiltonian(const ProblemSpec& p, double t, const EnsembleState& phi,
                             const Costate& costate) {
  const Matrix& x = phi.values();
  const Matrix& q = costate.state.values();
  if (x.rows() != p.space->size() || x.cols() != p.n || q.rows() != x.rows() || q.cols() != x.cols())
    throw DimensionError("hamiltonian: state and costate shapes must match the problem");
  if (t < 0.0 || t > p.horizon) throw ArgumentError("hamiltonian: t outside [0, T]");
  const Vector& w = p.space->weights();
  return minimize(p, t, [&](const Vector& u) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      acc += w[i] * q.row(i).dot(p.dynamics.eval(t, x.row(i).transpose(), u, static_cast<int>(i)));
    return acc;
  });
}

HamiltonianValue hamiltonian_stacked(const ProblemSpec& p, double t, const Matrix& phi,
                                     const Matrix& gradient) {
  if (phi.rows() != gradient.rows() || phi.cols() != gradient.cols())
    throw DimensionError("hamiltonian_stacked: shape mismatch");
  return minimize(p, t, [&](const Vector& u) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < phi.rows(); ++i)
      acc += gradient.row(i).dot(p.dynamics.eval(t, phi.row(i).transpose(), u, static_cast<int>(i)));
    return acc;
  });
}

}  // namespace ensoc
