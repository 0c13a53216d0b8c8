#include "ensoc/value.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "ensoc/parallel.hpp"

namespace ensoc {

double terminal_functional(const ProblemSpec& p, const Matrix& phi) {
  if (phi.rows() != p.space->size() || phi.cols() != p.n)
    throw DimensionError("terminal_functional: state shape does not match the problem");
  const Vector& w = p.space->weights();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < phi.rows(); ++i)
    acc += w[i] * p.cost.eval(phi.row(i).transpose(), static_cast<int>(i));
  return acc;
}

double terminal_functional(const ProblemSpec& p, const EnsembleState& phi) {
  return terminal_functional(p, phi.values());
}

double reduced_cost(const ProblemSpec& p, double s, const EnsembleState& phi, const ControlSignal& u) {
  return terminal_functional(p, integrate(p, s, phi, u).final_state());
}

double signal_count(const ProblemSpec& p, const TimeGrid& grid) {
  double count = 1.0;
  for (int j = 0; j < grid.steps(); ++j) count *= static_cast<double>(p.controls.active(grid.node(j)).cols());
  return count;
}

namespace {

/// Depth-first walk over control index prefixes in lexicographic order,
/// advancing every atom by one RK4 step per level.
class PrefixWalker {
 public:
  using Leaf = std::function<void(const std::vector<int>& path, const Matrix& state)>;

  PrefixWalker(const ProblemSpec& p, const TimeGrid& grid, int depth)
      : p_(p), grid_(grid), depth_(depth), stack_(static_cast<std::size_t>(depth) + 1), path_(static_cast<std::size_t>(depth)) {
    for (int j = 0; j < depth; ++j) sets_.push_back(&p.controls.active(grid.node(j)));
  }

  /// `first` restricts the first level to one index (-1: all).
  void walk(const Matrix& phi, const Leaf& leaf, int first = -1) {
    stack_[0] = phi;
    descend(0, leaf, first);
  }

  int branching(int level) const { return static_cast<int>(sets_[static_cast<std::size_t>(level)]->cols()); }

 private:
  void descend(int j, const Leaf& leaf, int first) {
    if (j == depth_) {
      leaf(path_, stack_[static_cast<std::size_t>(j)]);
      return;
    }
    const Matrix& set = *sets_[static_cast<std::size_t>(j)];
    const Matrix& cur = stack_[static_cast<std::size_t>(j)];
    Matrix& next = stack_[static_cast<std::size_t>(j) + 1];
    next.resize(cur.rows(), cur.cols());
    const double t = grid_.node(j), h = grid_.step(j);
    for (Eigen::Index k = 0; k < set.cols(); ++k) {
      if (first >= 0 && j == 0 && k != first) continue;
      const Vector u = set.col(k);
      for (Eigen::Index i = 0; i < cur.rows(); ++i) {
        const Vector x = rk4_step(p_.dynamics, t, h, cur.row(i).transpose(), u, static_cast<int>(i));
        if (!x.allFinite()) throw DivergenceError(grid_.node(j + 1), static_cast<int>(i));
        next.row(i) = x.transpose();
      }
      path_[static_cast<std::size_t>(j)] = static_cast<int>(k);
      descend(j + 1, leaf, first);
    }
  }

  const ProblemSpec& p_;
  const TimeGrid& grid_;
  int depth_;
  std::vector<const Matrix*> sets_;
  std::vector<Matrix> stack_;
  std::vector<int> path_;
};

struct Best {
  double value = std::numeric_limits<double>::infinity();
  std::vector<int> path;
  bool found = false;

  void offer(double v, const std::vector<int>& candidate) {
    if (!found || v < value) {
      value = v;
      path = candidate;
      found = true;
    }
  }
};

}  // namespace

OracleResult value_oracle(const ProblemSpec& p, const Matrix& phi, const TimeGrid& grid,
                          const OracleOptions& opt) {
  if (phi.rows() != p.space->size() || phi.cols() != p.n)
    throw DimensionError("value_oracle: state shape does not match the problem");
  if (grid.end() > p.horizon * (1.0 + 1e-12)) throw ArgumentError("value_oracle: grid beyond horizon");
  const double count = signal_count(p, grid);
  if (count > opt.budget)
    throw CapacityError("value_oracle: " + std::to_string(count) + " signals exceed the budget of " +
                        std::to_string(opt.budget));
  const int N = grid.steps();
  const int first_level = static_cast<int>(p.controls.active(grid.node(0)).cols());
  std::vector<Best> branch(static_cast<std::size_t>(first_level));
  parallel_for(branch.size(), opt.workers, [&](std::size_t k) {
    PrefixWalker walker(p, grid, N);
    Best& b = branch[k];
    walker.walk(phi, [&](const std::vector<int>& path, const Matrix& x) {
      b.offer(terminal_functional(p, x), path);
    }, static_cast<int>(k));
  });
  Best best;
  for (const auto& b : branch)
    if (b.found) best.offer(b.value, b.path);
  OracleResult r;
  r.value = best.value;
  r.best = ControlSignal::from_indices(p, grid, best.path);
  r.signals = static_cast<std::uint64_t>(count);
  return r;
}

OracleResult value_oracle(const ProblemSpec& p, double s, const EnsembleState& phi, const TimeGrid& grid,
                          const OracleOptions& opt) {
  if (grid.start() != s) throw ArgumentError("value_oracle: grid does not start at s");
  return value_oracle(p, phi.values(), grid, opt);
}

std::vector<double> value_along(const ProblemSpec& p, const Matrix& phi, const ControlSignal& u,
                                const OracleOptions& opt) {
  const Trajectory traj = integrate(p, EnsembleState(p.space, phi), u);
  const int N = u.grid.steps();
  std::vector<double> out;
  for (int j = 0; j < N; ++j)
    out.push_back(value_oracle(p, traj.states[static_cast<std::size_t>(j)], u.grid.subgrid(j), opt).value);
  out.push_back(terminal_functional(p, traj.final_state()));
  return out;
}

DppResult dpp_residual(const ProblemSpec& p, double s1, double s2, const EnsembleState& phi,
                       const TimeGrid& grid, const OracleOptions& opt) {
  if (grid.start() != s1) throw ArgumentError("dpp_residual: grid must start at s1");
  if (s2 < s1) throw ArgumentError("dpp_residual: need s1 <= s2");
  const int j2 = grid.node_index(s2);
  const OracleResult direct = value_oracle(p, phi.values(), grid, opt);
  DppResult r;
  r.direct = direct.value;
  if (j2 == 0) {
    r.two_stage = direct.value;
    r.residual = 0.0;
    r.one_sided = 0.0;
    r.witness = ControlSignal{grid, Matrix(p.m, 0), {}};
    r.worst_prefix = r.witness;
    return r;
  }
  const int N = grid.steps();
  const TimeGrid head = grid.subgrid(0, j2);
  Best best;
  double one_sided = -std::numeric_limits<double>::infinity();
  std::vector<int> worst;
  PrefixWalker walker(p, head, j2);
  walker.walk(phi.values(), [&](const std::vector<int>& path, const Matrix& x) {
    const double v = j2 == N ? terminal_functional(p, x) : value_oracle(p, x, grid.subgrid(j2), opt).value;
    best.offer(v, path);
    if (direct.value - v > one_sided) {
      one_sided = direct.value - v;
      worst = path;
    }
  });
  r.two_stage = best.value;
  r.residual = r.direct - r.two_stage;
  r.one_sided = one_sided;
  r.witness = ControlSignal::from_indices(p, head, best.path);
  r.worst_prefix = ControlSignal::from_indices(p, head, worst);
  return r;
}

}  // namespace ensoc
