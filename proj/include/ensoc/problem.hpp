#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ensoc/measure.hpp"

namespace ensoc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Right-hand side f(t, x, u, atom) and the constants it is certified against.
struct DynamicsSpec {
  using Field = std::function<Vector(double t, const Vector& x, const Vector& u, int atom)>;
  using Jacobian = std::function<Matrix(double t, const Vector& x, const Vector& u, int atom)>;
  using Modulus = std::function<double(double r)>;

  Field eval;
  /// |f(t,x,u,w)| <= growth_c (1 + |x|)
  double growth_c = 1.0;
  /// |f(t,x,u,w) - f(t,x',u,w)| <= lipschitz_k |x - x'|
  double lipschitz_k = 1.0;
  /// theta_f: modulus of continuity in the parameter, integrated over [0,T].
  std::optional<Modulus> omega_modulus;
  /// df/dx (n x n) and df/du (n x m); both needed by the adjoint solver.
  std::optional<Jacobian> jacobian_x;
  std::optional<Jacobian> jacobian_u;
};

/// Terminal cost g(x, atom) with its quadratic lower bound a(w) - b|x|^2.
struct TerminalCostSpec {
  using Cost = std::function<double(const Vector& x, int atom)>;
  using Gradient = std::function<Vector(const Vector& x, int atom)>;

  Cost eval;
  Vector lower_bound_a;
  double lower_bound_b = 0.0;
  std::optional<Gradient> gradient;
};

/// Piecewise-constant finite control sets inside a global box.
class ControlSchedule {
 public:
  ControlSchedule() = default;
  /// `breakpoints` t_0 < ... < t_K; `sets[k]` holds the control points
  /// (one per column, m rows) active on [t_k, t_{k+1}).
  ControlSchedule(std::vector<double> breakpoints, std::vector<Matrix> sets, Vector box_lo,
                  Vector box_hi);

  /// One interval over [0, T] carrying a regular lattice with `levels`
  /// points per axis on [lo, hi]^m (levels == 1 gives the box center).
  static ControlSchedule lattice(double T, const Vector& lo, const Vector& hi, int levels);

  int control_dim() const { return static_cast<int>(box_lo_.size()); }
  const Vector& box_lo() const { return box_lo_; }
  const Vector& box_hi() const { return box_hi_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Matrix>& sets() const { return sets_; }

  /// Index of the interval containing t (right-continuous, last one closed).
  int interval_at(double t) const;
  /// Control points active at t, one per column.
  const Matrix& active(double t) const { return sets_[static_cast<std::size_t>(interval_at(t))]; }

  /// Bounding box of the points active at t.
  std::pair<Vector, Vector> active_hull_box(double t) const;
  /// True when the active points at t form a full lattice of their bounding box
  /// corners, so projecting onto the box is projecting onto the convex hull.
  bool active_hull_is_box(double t) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<Matrix> sets_;
  Vector box_lo_;
  Vector box_hi_;
};

/// Sampling domain over which the validators check certificates.
struct ValidationBox {
  /// States are sampled in the Euclidean ball |x| <= state_radius.
  double state_radius = 10.0;
};

struct ProblemSpec {
  SpacePtr space;
  int n = 1;
  int m = 1;
  double horizon = 1.0;
  DynamicsSpec dynamics;
  TerminalCostSpec cost;
  ControlSchedule controls;
  ValidationBox box;
  std::string name = "custom";

  /// Throws DimensionError / ValidationError on inconsistency.
  void validate_structure() const;
  bool differentiable() const {
    return dynamics.jacobian_x && dynamics.jacobian_u && cost.gradient;
  }
};

struct Violation {
  double t = 0.0;
  Vector x;
  Vector y;
  Vector u;
  int atom = 0;
  int other_atom = -1;
  double value = 0.0;
};

/// Outcome of a sampled certificate check. A pass is evidence on the
/// reported domain, not a proof.
struct ValidationReport {
  std::string check;
  std::string domain;
  int samples = 0;
  /// growth/lipschitz/modulus: worst ratio observed / certified (<= 1 passes).
  /// cost bound: smallest slack g - (a - b|x|^2) (>= 0 passes).
  double worst = 0.0;
  std::vector<Violation> violations;
  bool pass = true;
  std::string note = "sampled evidence on the stated domain, not a proof";
};

ValidationReport validate_growth(const ProblemSpec& p, int samples, std::uint64_t seed = 1);
ValidationReport validate_lipschitz(const ProblemSpec& p, int samples, std::uint64_t seed = 1);
ValidationReport validate_cost_bound(const ProblemSpec& p, int samples, std::uint64_t seed = 1);
/// Compares int_0^T sup_{x,u} |f(t,x,u,w_i) - f(t,x,u,w_j)| dt with theta_f(d(w_i,w_j)).
/// The sup is sampled over a shared state x for both atoms (see README).
ValidationReport modulus_check(const ProblemSpec& p, int pairs, std::uint64_t seed = 1,
                               int time_nodes = 16, int state_samples = 64);

// --- builtin problem library ---------------------------------------------

/// Loosely typed parameter bag for builtins (numbers and number lists).
struct BuiltinParams {
  std::vector<std::pair<std::string, std::vector<double>>> entries;

  BuiltinParams& set(const std::string& key, std::vector<double> value);
  BuiltinParams& set(const std::string& key, double value) { return set(key, std::vector<double>{value}); }
  const std::vector<double>* find(const std::string& key) const;
  double scalar(const std::string& key, double fallback) const;
};

/// Known names: "linear-ensemble", "decoupled-quadratic", "bilinear", "zero-dynamics".
/// Without `space` one is built from "atoms", "weights" and "coords".
ProblemSpec builtin(const std::string& name, const BuiltinParams& params = {},
                    SpacePtr space = nullptr);
std::vector<std::string> builtin_names();

/// Closed-form solution of "linear-ensemble" (dx = a(w) x + u, g = c(w) sum_k x_k,
/// controls in [-rho, rho]^n). psi(s) = sum_i w_i c_i exp(a_i (T - s)).
class LinearEnsembleOracle {
 public:
  LinearEnsembleOracle(Vector weights, Vector a, Vector c, double rho, double T, int n);
  /// Reads a, c, rho, T back from a builtin parameter bag.
  static LinearEnsembleOracle from_params(const ParameterSpace& space, const BuiltinParams& params);

  const Vector& a() const { return a_; }
  const Vector& c() const { return c_; }
  double rho() const { return rho_; }

  double psi(double s) const;
  /// -rho sign(psi(s)) in every component (0 where psi vanishes).
  double optimal_control(double s) const;
  /// V(s, phi) = sum_i w_i c_i e^{a_i(T-s)} sum_k phi_ik - n rho int_s^T |psi|.
  double value(double s, const Matrix& phi) const;
  /// int_s^T |psi(sigma)| d sigma, exact per sign-constant piece.
  double abs_psi_integral(double s) const;
  /// Zeros of psi in (s, T).
  std::vector<double> psi_zeros(double s) const;

 private:
  double psi_antiderivative(double s) const;

  Vector w_, a_, c_;
  double rho_, T_;
  int n_;
};

}  // namespace ensoc
