#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ensoc/parallel.hpp"
#include "ensoc/value.hpp"

namespace ensoc {

ValueGrid::ValueGrid(TimeGrid grid, std::vector<Axis> axes) : grid_(std::move(grid)), axes_(std::move(axes)) {
  if (axes_.empty()) throw DimensionError("value grid needs at least one axis");
  if (static_cast<int>(axes_.size()) > kMaxGridDimension)
    throw CapacityError("value grid dimension " + std::to_string(axes_.size()) + " exceeds " +
                        std::to_string(kMaxGridDimension));
  strides_.assign(axes_.size(), 1);
  for (int d = static_cast<int>(axes_.size()) - 1; d >= 0; --d) {
    const Axis& a = axes_[static_cast<std::size_t>(d)];
    if (a.count < 2 || !(a.hi > a.lo)) throw ArgumentError("value grid axis needs count >= 2 and hi > lo");
    strides_[static_cast<std::size_t>(d)] = slice_size_;
    slice_size_ *= static_cast<std::size_t>(a.count);
  }
  const auto slices = static_cast<std::size_t>(grid_.steps()) + 1;
  values_.assign(slices, std::vector<double>(slice_size_, 0.0));
  argmin_.assign(slices, std::vector<std::int32_t>(slice_size_, 0));
}

double ValueGrid::max_spacing() const {
  double h = 0.0;
  for (const auto& a : axes_) h = std::max(h, a.spacing());
  return h;
}

std::vector<int> ValueGrid::unflatten(std::size_t flat) const {
  std::vector<int> idx(axes_.size());
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    idx[d] = static_cast<int>(flat / strides_[d]);
    flat %= strides_[d];
  }
  return idx;
}

std::size_t ValueGrid::flatten(const std::vector<int>& idx) const {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < axes_.size(); ++d) flat += static_cast<std::size_t>(idx[d]) * strides_[d];
  return flat;
}

Vector ValueGrid::point(std::size_t flat) const {
  const auto idx = unflatten(flat);
  Vector z(dims());
  for (int d = 0; d < dims(); ++d) z[d] = axes_[static_cast<std::size_t>(d)].node(idx[static_cast<std::size_t>(d)]);
  return z;
}

bool ValueGrid::contains(const Vector& z) const {
  for (int d = 0; d < dims(); ++d) {
    const Axis& a = axes_[static_cast<std::size_t>(d)];
    if (z[d] < a.lo || z[d] > a.hi) return false;
  }
  return true;
}

double ValueGrid::interpolate(int j, const Vector& z, bool* clamped) const {
  if (z.size() != dims()) throw DimensionError("value grid: query dimension mismatch");
  const auto& slice = values_[static_cast<std::size_t>(j)];
  const int D = dims();
  std::size_t base = 0;
  double frac[kMaxGridDimension];
  bool outside = false;
  for (int d = 0; d < D; ++d) {
    const Axis& a = axes_[static_cast<std::size_t>(d)];
    double c = (z[d] - a.lo) / a.spacing();
    // snap to nodes so node queries return stored values exactly
    const double nearest = std::round(c);
    if (std::abs(c - nearest) < 1e-9) c = nearest;
    if (!(c >= 0.0)) {  // also catches NaN
      outside = outside || z[d] < a.lo || std::isnan(z[d]);
      c = 0.0;
    }
    if (c > a.count - 1) {
      outside = true;
      c = a.count - 1;
    }
    int cell = std::min(static_cast<int>(c), a.count - 2);
    frac[d] = c - cell;
    base += static_cast<std::size_t>(cell) * strides_[static_cast<std::size_t>(d)];
  }
  if (clamped) *clamped = outside;
  double acc = 0.0;
  for (int corner = 0; corner < (1 << D); ++corner) {
    double weight = 1.0;
    std::size_t offset = base;
    for (int d = 0; d < D; ++d) {
      if (corner & (1 << d)) {
        weight *= frac[d];
        offset += strides_[static_cast<std::size_t>(d)];
      } else {
        weight *= 1.0 - frac[d];
      }
    }
    if (weight != 0.0) acc += weight * slice[offset];
  }
  return acc;
}

double ValueGrid::value(double t, const Vector& z, bool* clamped) const {
  const auto& nodes = grid_.nodes();
  if (t < nodes.front() || t > nodes.back()) throw ArgumentError("value grid: time outside the grid");
  auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
  int j = static_cast<int>(it - nodes.begin()) - 1;
  j = std::min(j, grid_.steps() - 1);
  const double lam = (t - grid_.node(j)) / grid_.step(j);
  bool c0 = false, c1 = false;
  const double v0 = interpolate(j, z, &c0);
  if (lam == 0.0) {
    if (clamped) *clamped = c0;
    return v0;
  }
  const double v1 = interpolate(j + 1, z, &c1);
  if (clamped) *clamped = c0 || c1;
  return (1.0 - lam) * v0 + lam * v1;
}

ValueGrid value_dp(const ProblemSpec& p, const std::vector<Axis>& axes, const TimeGrid& grid,
                   const DpOptions& opt) {
  const int M = p.space->size();
  const int D = M * p.n;
  if (D > kMaxGridDimension)
    throw CapacityError("value_dp: stacked state dimension n*M = " + std::to_string(D) + " exceeds " +
                        std::to_string(kMaxGridDimension));
  if (static_cast<int>(axes.size()) != D)
    throw DimensionError("value_dp: need one axis per stacked coordinate (" + std::to_string(D) + ")");
  if (grid.end() > p.horizon * (1.0 + 1e-12)) throw ArgumentError("value_dp: grid beyond horizon");

  ValueGrid vg(grid, axes);
  const int N = grid.steps();

  // per-atom reach radius from the trajectory norm bound
  const double elapsed = p.horizon - grid.start();
  const double c = p.dynamics.growth_c;
  const double reach =
      (opt.query_radius * std::sqrt(double(p.n)) + c * elapsed) * std::exp(c * elapsed);
  for (int d = 0; d < D; ++d)
    if (axes[static_cast<std::size_t>(d)].lo > -reach || axes[static_cast<std::size_t>(d)].hi < reach) {
      std::ostringstream os;
      os << "axes may not cover the reachable set: reach radius " << reach << " (query radius "
         << opt.query_radius << "), axis " << d << " is [" << axes[static_cast<std::size_t>(d)].lo
         << ", " << axes[static_cast<std::size_t>(d)].hi << "]";
      vg.warnings.push_back(os.str());
      break;
    }

  auto as_state = [&](const Vector& z) {
    Matrix x(M, p.n);
    for (int i = 0; i < M; ++i)
      for (int k = 0; k < p.n; ++k) x(i, k) = z[i * p.n + k];
    return x;
  };

  const std::size_t S = vg.slice_size();
  {
    auto& terminal = vg.values(N);
    std::vector<int> bad(S, 0);
    parallel_for(S, opt.workers, [&](std::size_t q) {
      terminal[q] = terminal_functional(p, as_state(vg.point(q)));
      bad[q] = std::isfinite(terminal[q]) ? 0 : 1;
    });
    for (std::size_t q = 0; q < S; ++q)
      if (bad[q]) {
        std::ostringstream os;
        os << "value_dp: terminal cost not finite at grid node " << vg.point(q).transpose();
        throw TerminalError(os.str());
      }
  }

  std::vector<std::uint32_t> clamps(S, 0);
  for (int j = N - 1; j >= 0; --j) {
    const double t = grid.node(j), h = grid.step(j);
    const Matrix& set = p.controls.active(t);
    auto& out = vg.values(j);
    auto& arg = vg.argmin(j);
    parallel_for(S, opt.workers, [&](std::size_t q) {
      const Vector z = vg.point(q);
      double best = std::numeric_limits<double>::infinity();
      std::int32_t best_k = 0;
      std::uint32_t clamped_here = 0;
      Vector next(D);
      for (Eigen::Index k = 0; k < set.cols(); ++k) {
        const Vector u = set.col(k);
        for (int i = 0; i < M; ++i) {
          const Vector x = z.segment(i * p.n, p.n);
          next.segment(i * p.n, p.n) = x + h * p.dynamics.eval(t, x, u, i);
        }
        bool clamped = false;
        const double v = vg.interpolate(j + 1, next, &clamped);
        clamped_here += clamped ? 1u : 0u;
        if (v < best) {
          best = v;
          best_k = static_cast<std::int32_t>(k);
        }
      }
      out[q] = best;
      arg[q] = best_k;
      clamps[q] += clamped_here;
    });
  }
  for (auto v : clamps) vg.clamp_count += v;
  // terminal slice argmin is unused; mark it
  std::fill(vg.argmin(N).begin(), vg.argmin(N).end(), -1);
  return vg;
}

ControlSignal dp_feedback(const ProblemSpec& p, const ValueGrid& vg, const EnsembleState& phi) {
  const int M = p.space->size();
  if (vg.dims() != M * p.n) throw DimensionError("dp_feedback: grid dimension does not match the problem");
  const TimeGrid& grid = vg.grid();
  const int N = grid.steps();
  Matrix x = phi.values();
  std::vector<int> idx(static_cast<std::size_t>(N));
  Vector next(vg.dims());
  for (int j = 0; j < N; ++j) {
    const double t = grid.node(j), h = grid.step(j);
    const Matrix& set = p.controls.active(t);
    double best = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (Eigen::Index k = 0; k < set.cols(); ++k) {
      const Vector u = set.col(k);
      for (int i = 0; i < M; ++i) {
        const Vector xi = x.row(i).transpose();
        next.segment(i * p.n, p.n) = xi + h * p.dynamics.eval(t, xi, u, i);
      }
      const double v = vg.interpolate(j + 1, next);
      if (v < best) {
        best = v;
        best_k = static_cast<int>(k);
      }
    }
    idx[static_cast<std::size_t>(j)] = best_k;
    for (int i = 0; i < M; ++i)
      x.row(i) = rk4_step(p.dynamics, t, h, x.row(i).transpose(), set.col(best_k), i).transpose();
  }
  return ControlSignal::from_indices(p, grid, std::move(idx));
}

}  // namespace ensoc
