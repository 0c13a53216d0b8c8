#include "ensoc/problem.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace ensoc {

namespace {

constexpr std::size_t kMaxRecordedViolations = 16;

Vector sample_ball(std::mt19937_64& rng, int n, double radius, bool on_sphere) {
  std::normal_distribution<double> gauss;
  Vector dir(n);
  do {
    for (int k = 0; k < n; ++k) dir[k] = gauss(rng);
  } while (dir.norm() == 0.0);
  dir.normalize();
  if (on_sphere) return radius * dir;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return radius * std::pow(unif(rng), 1.0 / n) * dir;
}

Vector sample_box(std::mt19937_64& rng, const Vector& lo, const Vector& hi) {
  Vector u(lo.size());
  for (Eigen::Index k = 0; k < lo.size(); ++k)
    u[k] = std::uniform_real_distribution<double>(lo[k], hi[k])(rng);
  return u;
}

std::string state_domain(const ProblemSpec& p) {
  std::ostringstream os;
  os << "t in [0," << p.horizon << "], |x| <= " << p.box.state_radius
     << ", u in control box, all " << p.space->size() << " atoms";
  return os.str();
}

void record(ValidationReport& r, Violation v) {
  r.pass = false;
  if (r.violations.size() < kMaxRecordedViolations) r.violations.push_back(std::move(v));
}

}  // namespace

ControlSchedule::ControlSchedule(std::vector<double> breakpoints, std::vector<Matrix> sets,
                                 Vector box_lo, Vector box_hi)
    : breakpoints_(std::move(breakpoints)),
      sets_(std::move(sets)),
      box_lo_(std::move(box_lo)),
      box_hi_(std::move(box_hi)) {
  if (breakpoints_.size() < 2) throw ValidationError("control schedule needs >= 2 breakpoints");
  if (sets_.size() + 1 != breakpoints_.size())
    throw ValidationError("control schedule: one control set per interval required");
  for (std::size_t k = 1; k < breakpoints_.size(); ++k)
    if (!(breakpoints_[k] > breakpoints_[k - 1]))
      throw ValidationError("control schedule: breakpoints must increase");
  if (box_lo_.size() != box_hi_.size() || box_lo_.size() < 1)
    throw DimensionError("control schedule: box bounds must share a positive dimension");
  if ((box_hi_.array() < box_lo_.array()).any())
    throw ValidationError("control schedule: box lower bound exceeds upper bound");
  for (std::size_t k = 0; k < sets_.size(); ++k) {
    const Matrix& s = sets_[k];
    if (s.cols() == 0) throw ScheduleError("control schedule: interval " + std::to_string(k) + " has an empty set");
    if (s.rows() != box_lo_.size())
      throw DimensionError("control schedule: interval " + std::to_string(k) +
                           " has points of the wrong dimension");
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      if ((s.col(j).array() < box_lo_.array()).any() || (s.col(j).array() > box_hi_.array()).any())
        throw ValidationError("control schedule: point " + std::to_string(j) + " of interval " +
                              std::to_string(k) + " lies outside the control box");
  }
}

ControlSchedule ControlSchedule::lattice(double T, const Vector& lo, const Vector& hi, int levels) {
  if (levels < 1) throw ArgumentError("control lattice needs at least one level");
  const int m = static_cast<int>(lo.size());
  long total = 1;
  for (int k = 0; k < m; ++k) total *= levels;
  Matrix pts(m, total);
  for (long j = 0; j < total; ++j) {
    long rest = j;
    // last axis varies fastest
    for (int k = m - 1; k >= 0; --k) {
      const int level = static_cast<int>(rest % levels);
      rest /= levels;
      pts(k, j) = levels == 1 ? 0.5 * (lo[k] + hi[k])
                              : lo[k] + (hi[k] - lo[k]) * level / (levels - 1);
    }
  }
  return ControlSchedule({0.0, T}, {pts}, lo, hi);
}

int ControlSchedule::interval_at(double t) const {
  if (sets_.empty()) throw ScheduleError("control schedule is empty");
  if (t < breakpoints_.front() || t > breakpoints_.back())
    throw ScheduleError("time " + std::to_string(t) + " outside the control schedule");
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  const auto idx = static_cast<int>(it - breakpoints_.begin()) - 1;
  return std::min(idx, static_cast<int>(sets_.size()) - 1);
}

std::pair<Vector, Vector> ControlSchedule::active_hull_box(double t) const {
  const Matrix& s = active(t);
  return {s.rowwise().minCoeff(), s.rowwise().maxCoeff()};
}

bool ControlSchedule::active_hull_is_box(double t) const {
  const Matrix& s = active(t);
  const auto [lo, hi] = active_hull_box(t);
  const int m = static_cast<int>(lo.size());
  if (m > 20) return false;
  for (long corner = 0; corner < (1L << m); ++corner) {
    Vector c(m);
    for (int k = 0; k < m; ++k) c[k] = (corner >> k) & 1 ? hi[k] : lo[k];
    bool found = false;
    for (Eigen::Index j = 0; j < s.cols() && !found; ++j) found = (s.col(j) - c).norm() == 0.0;
    if (!found) return false;
  }
  return true;
}

void ProblemSpec::validate_structure() const {
  if (!space) throw ValidationError("problem has no parameter space");
  if (n < 1 || m < 1) throw DimensionError("problem dimensions must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw ValidationError("problem horizon must be positive and finite");
  if (!dynamics.eval) throw ValidationError("problem has no dynamics");
  if (!cost.eval) throw ValidationError("problem has no terminal cost");
  if (!(dynamics.growth_c > 0.0) || !(dynamics.lipschitz_k > 0.0))
    throw ValidationError("growth and Lipschitz certificates must be positive");
  if (cost.lower_bound_a.size() != space->size())
    throw DimensionError("cost lower bound a must have one entry per atom");
  if (cost.lower_bound_b < 0.0) throw ValidationError("cost lower bound b must be >= 0");
  if (controls.control_dim() != m) throw DimensionError("control schedule dimension != m");
  if (controls.breakpoints().front() > 0.0 || controls.breakpoints().back() < horizon)
    throw ScheduleError("control schedule does not cover [0, T]");
}

ValidationReport validate_growth(const ProblemSpec& p, int samples, std::uint64_t seed) {
  if (samples < 1) throw ArgumentError("validate_growth: samples must be positive");
  ValidationReport r;
  r.check = "growth";
  r.domain = state_domain(p);
  r.samples = samples;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(0.0, p.horizon);
  std::uniform_int_distribution<int> atom(0, p.space->size() - 1);
  for (int s = 0; s < samples; ++s) {
    const double t = time(rng);
    const Vector x = sample_ball(rng, p.n, p.box.state_radius, s % 4 == 0);
    const Vector u = sample_box(rng, p.controls.box_lo(), p.controls.box_hi());
    const int i = atom(rng);
    const double ratio =
        p.dynamics.eval(t, x, u, i).norm() / (p.dynamics.growth_c * (1.0 + x.norm()));
    r.worst = std::max(r.worst, ratio);
    if (!(ratio <= 1.0)) record(r, {t, x, {}, u, i, -1, ratio});
  }
  return r;
}

ValidationReport validate_lipschitz(const ProblemSpec& p, int samples, std::uint64_t seed) {
  if (samples < 1) throw ArgumentError("validate_lipschitz: samples must be positive");
  ValidationReport r;
  r.check = "lipschitz";
  r.domain = state_domain(p);
  r.samples = samples;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(0.0, p.horizon);
  std::uniform_int_distribution<int> atom(0, p.space->size() - 1);
  for (int s = 0; s < samples; ++s) {
    const double t = time(rng);
    const Vector x = sample_ball(rng, p.n, p.box.state_radius, false);
    const Vector y = sample_ball(rng, p.n, p.box.state_radius, false);
    const Vector u = sample_box(rng, p.controls.box_lo(), p.controls.box_hi());
    const int i = atom(rng);
    const double gap = (x - y).norm();
    if (gap == 0.0) continue;
    const double ratio = (p.dynamics.eval(t, x, u, i) - p.dynamics.eval(t, y, u, i)).norm() /
                         (p.dynamics.lipschitz_k * gap);
    r.worst = std::max(r.worst, ratio);
    if (!(ratio <= 1.0 + 1e-12)) record(r, {t, x, y, u, i, -1, ratio});
  }
  return r;
}

ValidationReport validate_cost_bound(const ProblemSpec& p, int samples, std::uint64_t seed) {
  if (samples < 1) throw ArgumentError("validate_cost_bound: samples must be positive");
  std::ostringstream dom;
  dom << "|x| <= " << p.box.state_radius << ", all " << p.space->size() << " atoms";
  ValidationReport r;
  r.check = "cost-bound";
  r.domain = dom.str();
  r.samples = samples;
  r.worst = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> atom(0, p.space->size() - 1);
  for (int s = 0; s < samples; ++s) {
    const Vector x = sample_ball(rng, p.n, p.box.state_radius, s % 4 == 0);
    const int i = atom(rng);
    const double bound = p.cost.lower_bound_a[i] - p.cost.lower_bound_b * x.squaredNorm();
    const double slack = p.cost.eval(x, i) - bound;
    r.worst = std::min(r.worst, slack);
    const double tol = 1e-12 * (1.0 + std::abs(bound));
    if (std::isnan(slack) || slack < -tol) record(r, {0.0, x, {}, {}, i, -1, slack});
  }
  return r;
}

ValidationReport modulus_check(const ProblemSpec& p, int pairs, std::uint64_t seed,
                               int time_nodes, int state_samples) {
  if (!p.dynamics.omega_modulus)
    throw CapabilityError("modulus_check: problem declares no parameter modulus");
  if (pairs < 1 || time_nodes < 1 || state_samples < 1)
    throw ArgumentError("modulus_check: sample counts must be positive");
  std::ostringstream dom;
  dom << "t midpoint rule with " << time_nodes << " nodes on [0," << p.horizon << "], shared x with |x| <= "
      << p.box.state_radius << ", u over active control points";
  ValidationReport r;
  r.check = "modulus";
  r.domain = dom.str();
  const int M = p.space->size();
  if (M == 1) {
    r.note = "single atom: vacuously satisfied";
    return r;
  }
  const auto& theta = *p.dynamics.omega_modulus;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> atom(0, M - 1);
  const double dt = p.horizon / time_nodes;
  for (int s = 0; s < pairs; ++s) {
    const int i = atom(rng);
    int j = atom(rng);
    if (M > 1)
      while (j == i) j = atom(rng);
    double integral = 0.0;
    Vector worst_x;
    for (int q = 0; q < time_nodes; ++q) {
      const double t = (q + 0.5) * dt;
      const Matrix& us = p.controls.active(t);
      double sup = 0.0;
      for (int k = 0; k < state_samples; ++k) {
        const Vector x = sample_ball(rng, p.n, p.box.state_radius, k % 2 == 0);
        for (Eigen::Index c = 0; c < us.cols(); ++c) {
          const Vector u = us.col(c);
          const double d = (p.dynamics.eval(t, x, u, i) - p.dynamics.eval(t, x, u, j)).norm();
          if (d > sup) {
            sup = d;
            worst_x = x;
          }
        }
      }
      integral += dt * sup;
    }
    ++r.samples;
    const double bound = theta(p.space->distance(i, j));
    const double ratio = bound > 0.0 ? integral / bound : (integral > 0.0 ? HUGE_VAL : 0.0);
    r.worst = std::max(r.worst, ratio);
    if (!(integral <= bound * (1.0 + 1e-9) + 1e-14)) record(r, {0.0, worst_x, {}, {}, i, j, ratio});
  }
  return r;
}

}  // namespace ensoc
