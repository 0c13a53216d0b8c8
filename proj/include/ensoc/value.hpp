#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ensoc/ensemble.hpp"

namespace ensoc {

/// sum_i w_i g(phi_i, w_i); +inf propagates.
double terminal_functional(const ProblemSpec& p, const EnsembleState& phi);
double terminal_functional(const ProblemSpec& p, const Matrix& phi);

/// Terminal functional of the trajectory driven by u from (u.grid.start(), phi).
double reduced_cost(const ProblemSpec& p, double s, const EnsembleState& phi, const ControlSignal& u);

// --- exhaustive enumeration ---------------------------------------------------

struct OracleOptions {
  /// Largest admissible number of enumerated signals.
  double budget = 1e6;
  int workers = 1;
};

struct OracleResult {
  double value = 0.0;
  ControlSignal best;
  std::uint64_t signals = 0;
};

/// Number of piecewise-constant signals on `grid` built from the active sets.
double signal_count(const ProblemSpec& p, const TimeGrid& grid);

/// Exact minimum of the reduced cost over every signal taking values in the
/// active finite sets on the intervals of `grid` (which starts at s).
/// Ties resolve to the lexicographically smallest index sequence.
OracleResult value_oracle(const ProblemSpec& p, double s, const EnsembleState& phi,
                          const TimeGrid& grid, const OracleOptions& opt = {});
/// Raw-matrix variant used by the verification code.
OracleResult value_oracle(const ProblemSpec& p, const Matrix& phi, const TimeGrid& grid,
                          const OracleOptions& opt = {});

/// V at every node of `grid` along the trajectory driven by `u`, each
/// computed by enumeration over the remaining intervals.
std::vector<double> value_along(const ProblemSpec& p, const Matrix& phi, const ControlSignal& u,
                                const OracleOptions& opt = {});

// --- semi-Lagrangian dynamic programming ---------------------------------------

struct Axis {
  double lo = -1.0;
  double hi = 1.0;
  int count = 2;

  double spacing() const { return (hi - lo) / (count - 1); }
  double node(int k) const { return k == count - 1 ? hi : lo + k * spacing(); }
};

inline constexpr int kMaxGridDimension = 4;

/// Tabulated value function on the stacked ensemble coordinates
/// z = (x_1, ..., x_M) in R^{nM}, atom-major. Slices are row-major with the
/// last axis varying fastest.
class ValueGrid {
 public:
  ValueGrid(TimeGrid grid, std::vector<Axis> axes);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<Axis>& axes() const { return axes_; }
  int dims() const { return static_cast<int>(axes_.size()); }
  std::size_t slice_size() const { return slice_size_; }
  double max_spacing() const;

  std::vector<double>& values(int j) { return values_[static_cast<std::size_t>(j)]; }
  const std::vector<double>& values(int j) const { return values_[static_cast<std::size_t>(j)]; }
  std::vector<std::int32_t>& argmin(int j) { return argmin_[static_cast<std::size_t>(j)]; }
  const std::vector<std::int32_t>& argmin(int j) const { return argmin_[static_cast<std::size_t>(j)]; }

  /// Multi-index of a flat slice offset and back.
  std::vector<int> unflatten(std::size_t flat) const;
  std::size_t flatten(const std::vector<int>& idx) const;
  Vector point(std::size_t flat) const;

  /// Multilinear interpolation on slice j; points outside are clamped and
  /// reported through `clamped`.
  double interpolate(int j, const Vector& z, bool* clamped = nullptr) const;
  /// Linear in time between slices, multilinear in state.
  double value(double t, const Vector& z, bool* clamped = nullptr) const;
  /// True if z lies inside every axis range.
  bool contains(const Vector& z) const;

  std::uint64_t clamp_count = 0;
  std::vector<std::string> warnings;

 private:
  TimeGrid grid_;
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t slice_size_ = 1;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<std::int32_t>> argmin_;
};

struct DpOptions {
  int workers = 1;
  /// Initial data of interest satisfy |z_k| <= query_radius; the axes are
  /// checked against the reach radius from the trajectory norm bound.
  double query_radius = 0.0;
};

/// Backward sweep V_N = terminal functional,
/// V_j(z) = min_u V_{j+1}(z + dt f(t_j, z, u)).
ValueGrid value_dp(const ProblemSpec& p, const std::vector<Axis>& axes, const TimeGrid& grid,
                   const DpOptions& opt = {});

/// Control synthesised from a value table: on each interval the point that
/// minimises the interpolated V_{j+1} at the Euler prediction, followed by
/// one RK4 step of the true dynamics. Ties go to the lowest index.
ControlSignal dp_feedback(const ProblemSpec& p, const ValueGrid& vg, const EnsembleState& phi);

/// Binary layout (little endian):
///   char[8]  magic "ENSOCVG1"
///   u32      format version (1)
///   u32      D (state dimension), u32 N (steps)
///   f64[N+1] time nodes
///   D x { f64 lo, f64 hi, u32 count }
///   u64      clamp count
///   f64[(N+1) * prod(count)]  values, slice-major, row-major inside slices
///   i32[(N+1) * prod(count)]  argmin indices, same layout
void write_value_grid(const std::filesystem::path& path, const ValueGrid& vg);
ValueGrid read_value_grid(const std::filesystem::path& path);
/// CSV of slice j: `z1..zD,value,argmin`.
void write_value_slice_csv(const std::filesystem::path& path, const ValueGrid& vg, int j);

// --- adjoint descent -----------------------------------------------------------

struct AdjointOptions {
  int iterations = 200;
  double tolerance = 1e-12;
  int workers = 1;
};

struct AdjointResult {
  double value = 0.0;
  ControlSignal control;
  int iterations = 0;
  /// Objective after every accepted iteration (first entry: initial guess).
  std::vector<double> history;
  /// False if some interval's control set is not the full corner lattice of
  /// its bounding box; projection then targets the box, not the hull.
  bool hull_is_box = true;
};

/// Gradient of the reduced cost with respect to every interval's control
/// value, by a reverse sweep through the RK4 stages of each atom.
Matrix reduced_cost_gradient(const ProblemSpec& p, const Matrix& phi, const ControlSignal& u,
                             double* cost = nullptr);

/// Projected descent on the per-interval controls; returns an upper bound
/// on V(s, phi) over the hull-relaxed signal class.
AdjointResult value_adjoint(const ProblemSpec& p, double s, const EnsembleState& phi,
                            const TimeGrid& grid, const AdjointOptions& opt = {});

// --- dynamic programming principle ---------------------------------------------

struct DppResult {
  /// A - B: enumeration over [s1,T] minus the two-stage minimum.
  double residual = 0.0;
  double direct = 0.0;
  double two_stage = 0.0;
  /// max over enumerated prefixes u of V(s1,phi) - V(s2, x_u(s2)); <= 0 in theory.
  double one_sided = 0.0;
  /// Best prefix on [s1, s2].
  ControlSignal witness;
  /// Prefix achieving one_sided.
  ControlSignal worst_prefix;
};

/// `grid` spans [s1, T]; s2 must be one of its nodes.
DppResult dpp_residual(const ProblemSpec& p, double s1, double s2, const EnsembleState& phi,
                       const TimeGrid& grid, const OracleOptions& opt = {});

}  // namespace ensoc
