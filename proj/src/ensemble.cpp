#include "ensoc/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ensoc/parallel.hpp"

namespace ensoc {

TimeGrid::TimeGrid(double s, double T, int steps) {
  if (!(s >= 0.0) || !(T > s)) throw ArgumentError("time grid needs 0 <= s < T");
  if (steps < 1) throw ArgumentError("time grid needs at least one step");
  nodes_.resize(static_cast<std::size_t>(steps) + 1);
  const double h = (T - s) / steps;
  for (int j = 0; j <= steps; ++j) nodes_[static_cast<std::size_t>(j)] = s + j * h;
  nodes_.back() = T;
}

TimeGrid TimeGrid::from_nodes(std::vector<double> nodes) {
  if (nodes.size() < 2) throw ArgumentError("time grid needs at least two nodes");
  if (nodes.front() < 0.0) throw ArgumentError("time grid must start at a nonnegative time");
  for (std::size_t j = 1; j < nodes.size(); ++j)
    if (!(nodes[j] > nodes[j - 1])) throw ArgumentError("time grid nodes must increase");
  TimeGrid g;
  g.nodes_ = std::move(nodes);
  return g;
}

double TimeGrid::max_step() const {
  double h = 0.0;
  for (int j = 0; j < steps(); ++j) h = std::max(h, step(j));
  return h;
}

TimeGrid TimeGrid::subgrid(int from, int to) const {
  if (to < 0) to = steps();
  if (from < 0 || to > steps() || from >= to) throw ArgumentError("subgrid: invalid node range");
  return from_nodes(std::vector<double>(nodes_.begin() + from, nodes_.begin() + to + 1));
}

int TimeGrid::node_index(double t) const {
  const auto it = std::find(nodes_.begin(), nodes_.end(), t);
  if (it == nodes_.end()) throw ArgumentError("time " + std::to_string(t) + " is not a grid node");
  return static_cast<int>(it - nodes_.begin());
}

ControlSignal ControlSignal::restrict(int from, int to) const {
  if (to < 0) to = grid.steps();
  ControlSignal out{grid.subgrid(from, to), values.middleCols(from, to - from), {}};
  if (!indices.empty()) out.indices.assign(indices.begin() + from, indices.begin() + to);
  return out;
}

ControlSignal ControlSignal::from_indices(const ProblemSpec& p, const TimeGrid& grid,
                                          std::vector<int> indices) {
  if (static_cast<int>(indices.size()) != grid.steps())
    throw DimensionError("control indices: one index per interval required");
  Matrix values(p.m, grid.steps());
  for (int j = 0; j < grid.steps(); ++j) {
    const Matrix& set = p.controls.active(grid.node(j));
    const int k = indices[static_cast<std::size_t>(j)];
    if (k < 0 || k >= set.cols()) throw ArgumentError("control index out of range on interval " + std::to_string(j));
    values.col(j) = set.col(k);
  }
  return ControlSignal{grid, std::move(values), std::move(indices)};
}

ControlSignal ControlSignal::constant(const TimeGrid& grid, const Vector& u) {
  return ControlSignal{grid, u.replicate(1, grid.steps()), {}};
}

bool admissible(const ProblemSpec& p, const ControlSignal& u, bool hull) {
  for (int j = 0; j < u.grid.steps(); ++j) {
    const double t = u.grid.node(j);
    const Vector v = u.at(j);
    if (hull) {
      const auto [lo, hi] = p.controls.active_hull_box(t);
      if ((v.array() < lo.array()).any() || (v.array() > hi.array()).any()) return false;
    } else {
      const Matrix& set = p.controls.active(t);
      bool found = false;
      for (Eigen::Index k = 0; k < set.cols() && !found; ++k) found = set.col(k) == v;
      if (!found) return false;
    }
  }
  return true;
}

Vector rk4_step(const DynamicsSpec& f, double t, double h, const Vector& x, const Vector& u, int atom) {
  const double half = 0.5 * h;
  const Vector k1 = f.eval(t, x, u, atom);
  const Vector k2 = f.eval(t + half, x + half * k1, u, atom);
  const Vector k3 = f.eval(t + half, x + half * k2, u, atom);
  const Vector k4 = f.eval(t + h, x + h * k3, u, atom);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

void check_signal(const ProblemSpec& p, const Matrix& phi, const ControlSignal& u) {
  if (phi.rows() != p.space->size() || phi.cols() != p.n)
    throw DimensionError("initial state shape does not match the problem");
  if (u.values.rows() != p.m || u.values.cols() != u.grid.steps())
    throw DimensionError("control signal shape does not match its grid");
  if (u.grid.end() > p.horizon * (1.0 + 1e-12))
    throw ArgumentError("control grid extends beyond the horizon");
}

/// Integrates one atom; returns the first failing step (or -1).
int integrate_row(const ProblemSpec& p, const ControlSignal& u, int atom, const Vector& x0,
                  std::vector<Matrix>& states, int row) {
  Vector x = x0;
  states[0].row(row) = x.transpose();
  for (int j = 0; j < u.grid.steps(); ++j) {
    x = rk4_step(p.dynamics, u.grid.node(j), u.grid.step(j), x, u.values.col(j), atom);
    if (!x.allFinite()) return j + 1;
    states[static_cast<std::size_t>(j) + 1].row(row) = x.transpose();
  }
  return -1;
}

double block_norm(const Vector& w, const Matrix& x) { return std::sqrt(weighted_inner(w, x, x)); }

}  // namespace

Trajectory integrate(const ProblemSpec& p, const EnsembleState& phi, const ControlSignal& u,
                     int workers) {
  check_signal(p, phi.values(), u);
  const int M = p.space->size();
  Trajectory traj{u.grid, std::vector<Matrix>(static_cast<std::size_t>(u.grid.steps()) + 1, Matrix(M, p.n)), u};
  std::vector<int> failed(static_cast<std::size_t>(M), -1);
  parallel_for(static_cast<std::size_t>(M), workers, [&](std::size_t i) {
    const int atom = static_cast<int>(i);
    failed[i] = integrate_row(p, u, atom, phi.values().row(atom).transpose(), traj.states, atom);
  });
  int bad_step = -1, bad_atom = -1;
  for (int i = 0; i < M; ++i) {
    const int j = failed[static_cast<std::size_t>(i)];
    if (j >= 0 && (bad_step < 0 || j < bad_step)) bad_step = j, bad_atom = i;
  }
  if (bad_step >= 0) throw DivergenceError(u.grid.node(bad_step), bad_atom);
  return traj;
}

Trajectory integrate(const ProblemSpec& p, double s, const EnsembleState& phi, const ControlSignal& u,
                     int workers) {
  if (u.grid.start() != s) throw ArgumentError("control grid does not start at s");
  return integrate(p, phi, u, workers);
}

Trajectory integrate_atoms(const ProblemSpec& p, const Matrix& phi, const ControlSignal& u,
                           const std::vector<int>& atoms) {
  if (phi.rows() != static_cast<Eigen::Index>(atoms.size()) || phi.cols() != p.n)
    throw DimensionError("integrate_atoms: one state row per listed atom required");
  Trajectory traj{u.grid,
                  std::vector<Matrix>(static_cast<std::size_t>(u.grid.steps()) + 1,
                                      Matrix(static_cast<Eigen::Index>(atoms.size()), p.n)),
                  u};
  for (std::size_t r = 0; r < atoms.size(); ++r) {
    const int j = integrate_row(p, u, atoms[r], phi.row(static_cast<Eigen::Index>(r)).transpose(),
                                traj.states, static_cast<int>(r));
    if (j >= 0) throw DivergenceError(u.grid.node(j), atoms[r]);
  }
  return traj;
}

double consistency_defect(const ProblemSpec& p, const Trajectory& traj) {
  double worst = 0.0;
  for (int j = 0; j < traj.grid.steps(); ++j)
    for (int i = 0; i < p.space->size(); ++i) {
      const Vector next = rk4_step(p.dynamics, traj.grid.node(j), traj.grid.step(j),
                                   traj.states[static_cast<std::size_t>(j)].row(i).transpose(),
                                   traj.control.at(j), i);
      worst = std::max(worst, (next.transpose() - traj.states[static_cast<std::size_t>(j) + 1].row(i)).norm());
    }
  return worst;
}

// --- trajectory bounds ------------------------------------------------------

double TrajectoryBounds::norm_bound(double phi_norm, double elapsed) const {
  return std::exp(c * elapsed) * (phi_norm + c * elapsed * std::sqrt(mass));
}

double TrajectoryBounds::stability_bound(double gap_norm, double elapsed) const {
  return std::exp(k * elapsed) * gap_norm;
}

double TrajectoryBounds::restart_bound(double phi_norm, double delay, double after) const {
  return std::exp(k * after) * c * std::exp(c * delay) * (std::sqrt(mass) + phi_norm) * delay;
}

double TrajectoryBounds::time_lipschitz_bound(double phi_norm, double since_start, double dt) const {
  return c * std::exp(c * since_start) * (std::sqrt(mass) + phi_norm) * dt;
}

PropertyReport lemma21_suite(const ProblemSpec& p, int trials, const Lemma21Options& opt) {
  if (trials < 1) throw ArgumentError("lemma21_suite: trials must be positive");
  PropertyReport report;
  report.name = "trajectory-bounds";
  report.trials = trials;
  report.slack = opt.slack;
  report.seed = opt.seed;
  const TrajectoryBounds bounds{p.dynamics.growth_c, p.dynamics.lipschitz_k, p.space->total_mass()};
  const Vector& w = p.space->weights();
  const TimeGrid grid(0.0, p.horizon, opt.steps);
  const int N = grid.steps();
  const int M = p.space->size();

  auto check = [&](int which, double lhs, double rhs, double s, double tau, double t, std::uint64_t trial) {
    double& worst = report.worst_ratio[which - 1];
    if (rhs > 0.0) worst = std::max(worst, lhs / rhs);
    if (lhs > rhs * (1.0 + opt.slack) + 1e-13) {
      report.pass = false;
      if (report.violations.size() < 32) report.violations.push_back({which, s, tau, t, lhs, rhs, trial});
    }
  };

  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(opt.seed + static_cast<std::uint64_t>(trial));
    const int js = std::uniform_int_distribution<int>(0, N - 1)(rng);
    const int jt = std::uniform_int_distribution<int>(js, N)(rng);
    std::uniform_real_distribution<double> coord(-opt.phi_radius, opt.phi_radius);
    Matrix phi(M, p.n), phi_bar(M, p.n);
    for (Eigen::Index q = 0; q < phi.size(); ++q) phi.data()[q] = coord(rng);
    for (Eigen::Index q = 0; q < phi_bar.size(); ++q) phi_bar.data()[q] = coord(rng);
    std::vector<int> idx(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
      const int count = static_cast<int>(p.controls.active(grid.node(j)).cols());
      idx[static_cast<std::size_t>(j)] = std::uniform_int_distribution<int>(0, count - 1)(rng);
    }
    const ControlSignal full = ControlSignal::from_indices(p, grid, idx);
    const ControlSignal from_s = full.restrict(js);
    const double s = grid.node(js), tau = grid.node(jt);

    const Trajectory x = integrate(p, EnsembleState(p.space, phi), from_s);
    const Trajectory y = integrate(p, EnsembleState(p.space, phi_bar), from_s);
    const double phi_norm = block_norm(w, phi);
    const double gap = block_norm(w, phi - phi_bar);
    for (int j = js; j <= N; ++j) {
      const double t = grid.node(j);
      const auto& xs = x.states[static_cast<std::size_t>(j - js)];
      check(1, block_norm(w, xs), bounds.norm_bound(phi_norm, t - s), s, tau, t, static_cast<std::uint64_t>(trial));
      check(2, block_norm(w, xs - y.states[static_cast<std::size_t>(j - js)]),
            bounds.stability_bound(gap, t - s), s, tau, t, static_cast<std::uint64_t>(trial));
    }
    const Matrix& x_tau = x.states[static_cast<std::size_t>(jt - js)];
    std::vector<Matrix> restarted{phi};
    if (jt < N) restarted = integrate(p, EnsembleState(p.space, phi), full.restrict(jt)).states;
    for (int j = jt; j <= N; ++j) {
      const double t = grid.node(j);
      const auto& xs = x.states[static_cast<std::size_t>(j - js)];
      check(3, block_norm(w, restarted[static_cast<std::size_t>(j - jt)] - xs),
            bounds.restart_bound(phi_norm, tau - s, t - tau), s, tau, t, static_cast<std::uint64_t>(trial));
      check(4, block_norm(w, xs - x_tau), bounds.time_lipschitz_bound(phi_norm, t - s, t - tau), s, tau,
            t, static_cast<std::uint64_t>(trial));
    }
  }
  return report;
}

}  // namespace ensoc
