#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ensoc/problem.hpp"

namespace ensoc {

/// Uniform time nodes s = t_0 < ... < t_N = T. Subgrids share node values
/// bit-for-bit with their parent, so trajectories restarted from a node
/// reproduce the parent's steps exactly.
class TimeGrid {
 public:
  /// Single step [0, 1]; placeholder for results filled in later.
  TimeGrid() : nodes_{0.0, 1.0} {}
  TimeGrid(double s, double T, int steps);
  /// Explicit nodes (strictly increasing, at least two).
  static TimeGrid from_nodes(std::vector<double> nodes);

  double start() const { return nodes_.front(); }
  double end() const { return nodes_.back(); }
  int steps() const { return static_cast<int>(nodes_.size()) - 1; }
  double node(int j) const { return nodes_[static_cast<std::size_t>(j)]; }
  double step(int j) const { return node(j + 1) - node(j); }
  const std::vector<double>& nodes() const { return nodes_; }
  /// Largest step length.
  double max_step() const;

  /// Nodes t_from..t_to (inclusive), default to the end.
  TimeGrid subgrid(int from, int to = -1) const;
  /// Index of the node equal to t; ArgumentError if t is not a node.
  int node_index(double t) const;

 private:
  std::vector<double> nodes_;
};

/// Piecewise-constant control: column j acts on [t_j, t_{j+1}).
struct ControlSignal {
  TimeGrid grid;
  Matrix values;  // m x N
  /// Indices into the active control set, when the signal comes from enumeration.
  std::vector<int> indices;

  Vector at(int interval) const { return values.col(interval); }
  /// Restriction to the intervals of grid.subgrid(from, to).
  ControlSignal restrict(int from, int to = -1) const;

  /// Signal built from per-interval indices into the problem's active sets.
  static ControlSignal from_indices(const ProblemSpec& p, const TimeGrid& grid, std::vector<int> indices);
  static ControlSignal constant(const TimeGrid& grid, const Vector& u);
};

/// True if every value lies in its interval's active set (exact match) or,
/// with `hull`, in the bounding box of that set.
bool admissible(const ProblemSpec& p, const ControlSignal& u, bool hull = false);

struct Trajectory {
  TimeGrid grid;
  std::vector<Matrix> states;  // N + 1 blocks of M x n
  ControlSignal control;

  EnsembleState state(const SpacePtr& space, int j) const { return EnsembleState(space, states[static_cast<std::size_t>(j)]); }
  const Matrix& final_state() const { return states.back(); }
};

/// One classical fourth-order Runge-Kutta step for a single atom.
Vector rk4_step(const DynamicsSpec& f, double t, double h, const Vector& x, const Vector& u, int atom);

/// Integrates every atom of phi under the shared control from u.grid.start().
/// Atoms are independent and may be processed on `workers` threads; the
/// result does not depend on the worker count.
Trajectory integrate(const ProblemSpec& p, const EnsembleState& phi, const ControlSignal& u,
                     int workers = 1);
/// Same as above, checking that the grid starts at s.
Trajectory integrate(const ProblemSpec& p, double s, const EnsembleState& phi, const ControlSignal& u,
                     int workers = 1);

/// Integrates only the listed atoms (rows of the result follow `atoms`).
Trajectory integrate_atoms(const ProblemSpec& p, const Matrix& phi, const ControlSignal& u,
                           const std::vector<int>& atoms);

/// Re-evaluates every step and returns the largest deviation from rk4_step.
double consistency_defect(const ProblemSpec& p, const Trajectory& traj);

// --- trajectory bounds ----------------------------------------------------

/// Explicit constants for the trajectory bounds obtained from Gronwall's lemma
/// with the growth constant c and Lipschitz constant k:
///   (1) |x_{s,phi}(t)|                 <= e^{c(t-s)} (|phi| + c(t-s) mu^{1/2})
///   (2) |x_{s,phi}(t) - x_{s,psi}(t)|  <= e^{k(t-s)} |phi - psi|
///   (3) |x_{tau,phi}(t) - x_{s,phi}(t)| <= e^{k(t-tau)} c e^{c(tau-s)} (mu^{1/2} + |phi|)(tau - s)
///   (4) |x_{s,phi}(t) - x_{s,phi}(tau)| <= c e^{c(t-s)} (mu^{1/2} + |phi|)(t - tau)
/// Norms are L^2(mu); mu is the total mass.
struct TrajectoryBounds {
  double c, k, mass;

  double norm_bound(double phi_norm, double elapsed) const;
  double stability_bound(double gap_norm, double elapsed) const;
  double restart_bound(double phi_norm, double delay, double after) const;
  double time_lipschitz_bound(double phi_norm, double since_start, double dt) const;
};

struct BoundWitness {
  int bound = 0;  // 1..4
  double s = 0.0, tau = 0.0, t = 0.0;
  double lhs = 0.0, rhs = 0.0;
  std::uint64_t trial = 0;
};

struct PropertyReport {
  std::string name;
  int trials = 0;
  double slack = 0.0;
  /// Largest lhs / rhs per bound (index 0..3); 0 when every lhs vanished.
  double worst_ratio[4] = {0, 0, 0, 0};
  std::vector<BoundWitness> violations;
  std::uint64_t seed = 0;
  bool pass = true;
};

struct Lemma21Options {
  int steps = 200;
  double slack = 0.05;
  double phi_radius = 1.0;
  std::uint64_t seed = 7;
};

/// Randomized check of the four trajectory bounds on problem p.
PropertyReport lemma21_suite(const ProblemSpec& p, int trials, const Lemma21Options& opt = {});

// --- CSV export -------------------------------------------------------------

/// Header: `t,atom,x1..xn,u1..um`; one row per (node, atom); the control
/// column of node j is the value on [t_j, t_{j+1}) (the last node repeats
/// the final interval). Numbers are written with 17 significant digits.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const ParameterSpace& space);
Trajectory read_trajectory_csv(const std::filesystem::path& path, const ParameterSpace& space);

}  // namespace ensoc
