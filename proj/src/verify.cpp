#include "ensoc/verify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace ensoc {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shortest round-trip form, used in metric names.
std::string label(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

Matrix unstack(const Vector& z, int M, int n) {
  Matrix x(M, n);
  for (int i = 0; i < M; ++i)
    for (int k = 0; k < n; ++k) x(i, k) = z[i * n + k];
  return x;
}

Vector cost_gradient(const ProblemSpec& p, const Vector& x, int atom) {
  if (p.cost.gradient) return (*p.cost.gradient)(x, atom);
  Vector g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-6 * (1.0 + std::abs(x[k]));
    Vector a = x, b = x;
    a[k] += h;
    b[k] -= h;
    g[k] = (p.cost.eval(a, atom) - p.cost.eval(b, atom)) / (2.0 * h);
  }
  return g;
}

/// Rows: per-atom gradients of g at phi.
Matrix functional_gradient(const ProblemSpec& p, const Matrix& phi) {
  Matrix g(phi.rows(), phi.cols());
  for (Eigen::Index i = 0; i < phi.rows(); ++i)
    g.row(i) = cost_gradient(p, phi.row(i).transpose(), static_cast<int>(i)).transpose();
  return g;
}

/// L^2(mu) norm of a raw M x n block.
double block_norm(const Vector& w, const Matrix& x) { return std::sqrt(weighted_inner(w, x, x)); }

}  // namespace

// --- HJB residual -------------------------------------------------------------

std::vector<HjbSample> interior_samples(const ValueGrid& vg, int stride, double fraction) {
  if (stride < 1) throw ArgumentError("interior_samples: stride must be positive");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("interior_samples: fraction must be in (0, 1]");
  std::vector<HjbSample> out;
  const int N = vg.grid().steps();
  for (int j = 1; j < N; j += stride)
    for (std::size_t q = 0; q < vg.slice_size(); ++q) {
      const auto idx = vg.unflatten(q);
      bool keep = true;
      for (int d = 0; d < vg.dims() && keep; ++d) {
        const Axis& a = vg.axes()[static_cast<std::size_t>(d)];
        const int i = idx[static_cast<std::size_t>(d)];
        const double centre = 0.5 * (a.lo + a.hi), half = 0.5 * (a.hi - a.lo);
        keep = i >= 1 && i <= a.count - 2 && i % stride == 0 && std::abs(a.node(i) - centre) <= fraction * half + 1e-12;
      }
      if (keep) out.push_back({vg.grid().node(j), vg.point(q)});
    }
  return out;
}

CheckReport hjb_residual(const ValueGrid& vg, const ProblemSpec& p, const std::vector<HjbSample>& samples,
                         const HjbOptions& opt) {
  const int M = p.space->size();
  const int D = vg.dims();
  if (D != M * p.n) throw DimensionError("hjb_residual: grid dimension does not match the problem");
  const TimeGrid& grid = vg.grid();
  const int N = grid.steps();

  CheckReport r;
  r.name = "hjb_residual";
  r.instance = p.name;
  r.tolerance = opt.tolerance >= 0.0 ? opt.tolerance : first_order_tolerance(opt.kappa, grid.max_step(), vg.max_spacing());
  r.metrics["dt"] = grid.max_step();
  r.metrics["dz"] = vg.max_spacing();

  for (const auto& s : samples) {
    if (s.z.size() != D) throw DimensionError("hjb_residual: sample dimension mismatch");
    // nearest node
    const auto& nodes = grid.nodes();
    const int j = static_cast<int>(std::lower_bound(nodes.begin(), nodes.end(), s.t) - nodes.begin());
    int jn = j;
    if (jn > 0 && (jn > N || std::abs(nodes[static_cast<std::size_t>(jn - 1)] - s.t) <= std::abs(nodes[static_cast<std::size_t>(jn)] - s.t)))
      --jn;
    if (jn < 1 || jn > N - 1) throw ArgumentError("hjb_residual: sample time has no central stencil in the grid");
    const double dt = grid.step(jn);
    if (s.t - dt < grid.start() - 1e-12 || s.t + dt > grid.end() + 1e-12)
      throw ArgumentError("hjb_residual: time stencil leaves the grid");
    std::vector<int> idx(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
      const Axis& a = vg.axes()[static_cast<std::size_t>(d)];
      const double h = a.spacing();
      if (s.z[d] - h < a.lo - 1e-12 || s.z[d] + h > a.hi + 1e-12)
        throw ArgumentError("hjb_residual: state stencil leaves the grid on axis " + std::to_string(d));
      idx[static_cast<std::size_t>(d)] = std::clamp(static_cast<int>(std::lround((s.z[d] - a.lo) / h)), 1, a.count - 2);
    }

    // skip samples near a switch of the discrete argmin
    const std::int32_t centre = vg.argmin(jn)[vg.flatten(idx)];
    bool kink = vg.argmin(jn - 1)[vg.flatten(idx)] != centre;
    if (jn + 1 < N) kink = kink || vg.argmin(jn + 1)[vg.flatten(idx)] != centre;
    for (int d = 0; d < D && !kink; ++d)
      for (int off : {-1, 1}) {
        auto nb = idx;
        nb[static_cast<std::size_t>(d)] += off;
        if (vg.argmin(jn)[vg.flatten(nb)] != centre) kink = true;
      }
    if (kink) {
      ++r.skipped;
      continue;
    }

    const double vt = (vg.value(s.t + dt, s.z) - vg.value(s.t - dt, s.z)) / (2.0 * dt);
    Vector grad(D);
    for (int d = 0; d < D; ++d) {
      const double h = vg.axes()[static_cast<std::size_t>(d)].spacing();
      Vector zp = s.z, zm = s.z;
      zp[d] += h;
      zm[d] -= h;
      grad[d] = (vg.value(s.t, zp) - vg.value(s.t, zm)) / (2.0 * h);
    }
    const HamiltonianValue H = hamiltonian_stacked(p, s.t, unstack(s.z, M, p.n), unstack(grad, M, p.n));
    const double res = std::abs(vt + H.value);
    ++r.evaluated;
    if (res > r.worst || r.evaluated == 1) {
      r.worst = res;
      std::ostringstream os;
      os << "t=" << fmt(s.t) << " z=";
      for (int d = 0; d < D; ++d) os << (d ? " " : "") << fmt(s.z[d]);
      r.witness = os.str();
    }
  }
  r.pass = r.evaluated > 0 && r.worst <= r.tolerance;
  return r;
}

// --- epigraph invariance --------------------------------------------------------

CheckReport epigraph_invariance(const ProblemSpec& p, const EnsembleState& phi, const TimeGrid& grid,
                                const EpigraphOptions& opt) {
  CheckReport r;
  r.name = "epigraph_invariance";
  r.instance = p.name;
  r.tolerance = opt.tolerance;
  r.seed = opt.seed;
  const int N = grid.steps();

  // weak direction
  const OracleResult best = value_oracle(p, phi.values(), grid, opt.oracle);
  const std::vector<double> along = value_along(p, phi.values(), best.best, opt.oracle);
  double drift = 0.0;
  for (double v : along) drift = std::max(drift, std::abs(v - best.value));
  r.metrics["drift"] = drift;
  r.worst = drift;
  r.witness = "optimal " + join(best.best.indices);

  // strong direction
  double decrease = 0.0, increase = 0.0;
  std::vector<int> worst_path;
  auto offer = [&](double parent, double child, const std::vector<int>& path) {
    if (parent - child > decrease) {
      decrease = parent - child;
      worst_path = path;
    }
    increase = std::max(increase, child - parent);
  };
  const bool full = signal_count(p, grid) <= opt.full_budget;
  if (full) {
    std::vector<int> path;
    std::function<void(int, const Matrix&, double)> descend = [&](int j, const Matrix& x, double v) {
      const Matrix& set = p.controls.active(grid.node(j));
      const TimeGrid next_grid = j + 1 < N ? grid.subgrid(j + 1) : grid;
      for (Eigen::Index k = 0; k < set.cols(); ++k) {
        Matrix y(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i)
          y.row(i) = rk4_step(p.dynamics, grid.node(j), grid.step(j), x.row(i).transpose(), set.col(k),
                              static_cast<int>(i)).transpose();
        path.push_back(static_cast<int>(k));
        const double w = j + 1 == N ? terminal_functional(p, y) : value_oracle(p, y, next_grid, opt.oracle).value;
        offer(v, w, path);
        ++r.evaluated;
        if (j + 1 < N) descend(j + 1, y, w);
        path.pop_back();
      }
    };
    descend(0, phi.values(), best.value);
  } else {
    std::mt19937_64 rng(opt.seed);
    for (int trial = 0; trial < opt.trials; ++trial) {
      std::vector<int> idx(static_cast<std::size_t>(N));
      for (int j = 0; j < N; ++j) {
        const int count = static_cast<int>(p.controls.active(grid.node(j)).cols());
        idx[static_cast<std::size_t>(j)] = std::uniform_int_distribution<int>(0, count - 1)(rng);
      }
      const auto values = value_along(p, phi.values(), ControlSignal::from_indices(p, grid, idx), opt.oracle);
      for (int j = 0; j < N; ++j) {
        offer(values[static_cast<std::size_t>(j)], values[static_cast<std::size_t>(j) + 1],
              std::vector<int>(idx.begin(), idx.begin() + j + 1));
        ++r.evaluated;
      }
    }
  }
  r.metrics["decrease"] = decrease;
  r.metrics["max_increase"] = increase;
  r.metrics["full_enumeration"] = full ? 1.0 : 0.0;
  if (decrease > r.worst) {
    r.worst = decrease;
    r.witness = "decreasing prefix " + join(worst_path);
  }
  r.pass = drift <= opt.tolerance && decrease <= opt.tolerance;
  return r;
}

// --- terminal limit -------------------------------------------------------------

CheckReport terminal_limit(const ProblemSpec& p, const EnsembleState& phi, const std::vector<double>& horizons,
                           const TerminalLimitOptions& opt) {
  if (horizons.empty()) throw ArgumentError("terminal_limit: no horizons");
  const double T = p.horizon;
  double h_max = 0.0;
  for (double h : horizons) {
    if (!(h >= 0.0 && h <= T)) throw ArgumentError("terminal_limit: horizons must lie in [0, T]");
    h_max = std::max(h_max, h);
  }
  CheckReport r;
  r.name = "terminal_limit";
  r.instance = p.name;
  r.seed = opt.seed;

  const Vector& w = p.space->weights();
  const double c = p.dynamics.growth_c;
  const double mass = p.space->total_mass();
  const double phi_norm = l2_norm(phi);
  const double J = terminal_functional(p, phi);

  // certified constant: gradient bound over the reachable ball times the time-Lipschitz bound
  const double spread = c * std::exp(c * h_max) * (std::sqrt(mass) + phi_norm);
  const double R = spread * h_max;
  const Matrix g0 = functional_gradient(p, phi.values());
  double lg = block_norm(w, g0);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  auto probe = [&](Matrix dir) {
    const double len = block_norm(w, dir);
    if (len == 0.0) return;
    const Matrix x = phi.values() + (R / len) * dir;
    lg = std::max(lg, block_norm(w, functional_gradient(p, x)));
  };
  probe(g0);
  probe(-g0);
  for (int q = 0; q < opt.gradient_samples; ++q) {
    Matrix dir(phi.values().rows(), phi.values().cols());
    for (Eigen::Index e = 0; e < dir.size(); ++e) dir.data()[e] = normal(rng);
    probe(dir);
  }
  const double L = lg * spread;

  // first-order rate: |d/ds V| at s = T equals |H(T, phi, DJ(phi))|
  const HamiltonianValue H = hamiltonian(p, T, phi, Costate{EnsembleState(p.space, g0)});
  const double local = std::abs(H.value);

  double num = 0.0, den = 0.0, lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  bool bounded = true;
  for (double h : horizons) {
    if (h == 0.0) {
      // s = T: V is the terminal functional itself
      r.metrics["diff@0"] = 0.0;
      ++r.evaluated;
      continue;
    }
    const double s = T - h;
    const TimeGrid grid(s, T, opt.steps);
    const double V = value_oracle(p, phi.values(), grid, opt.oracle).value;
    const double diff = std::abs(V - J);
    r.metrics["diff@" + label(h)] = diff;
    num += diff * h;
    den += h * h;
    lo = std::min(lo, diff / h);
    hi = std::max(hi, diff / h);
    ++r.evaluated;
    const double ratio = diff / (L * h);
    if (ratio > r.worst) {
      r.worst = ratio;
      r.witness = "T-s=" + fmt(h) + " |V-J|=" + fmt(diff);
    }
    if (diff > L * h * (1.0 + 1e-9) + 1e-14) bounded = false;
  }
  if (den == 0.0) {
    r.metrics["lipschitz"] = L;
    r.pass = true;
    return r;
  }
  const double slope = num / den;
  r.tolerance = 1.0;
  r.metrics["lipschitz"] = L;
  r.metrics["lipschitz_local"] = local;
  r.metrics["slope"] = slope;
  r.metrics["slope_ratio"] = local > 0.0 ? slope / local : std::numeric_limits<double>::infinity();
  r.metrics["spread"] = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  const double sr = r.metrics["slope_ratio"];
  if (local <= 1e-14) {
    // no first-order motion at T: the gap must vanish to rounding
    r.pass = bounded && hi * h_max <= 1e-12;
  } else {
    r.pass = bounded && sr >= 0.5 && sr <= 2.0 && r.metrics["spread"] <= 2.0;
  }
  return r;
}

// --- oscillation ------------------------------------------------------------------

double mean_oscillation(const ParameterSpace& space, const Matrix& F, double r) {
  const Matrix avg = ball_average(space, F, r);
  return weighted_inner(space.weights(), F - avg, F - avg);
}

CheckReport oscillation_diagnostic(const ProblemSpec& p, const EnsembleState& phi,
                                   const std::vector<ControlSignal>& controls, const std::vector<double>& radii) {
  if (!p.dynamics.omega_modulus) throw CapabilityError("oscillation_diagnostic: problem declares no modulus");
  const ParameterSpace& space = *p.space;
  const double mass = space.total_mass();
  CheckReport r;
  r.name = "oscillation";
  r.instance = p.name;
  r.tolerance = 1.0;
  bool ok = true;
  std::vector<double> worst_osc(radii.size(), 0.0);
  for (std::size_t c = 0; c < controls.size(); ++c) {
    const Trajectory traj = integrate(p, phi, controls[c]);
    for (std::size_t j = 0; j < traj.states.size(); ++j) {
      const Matrix F = traj.states[j] - phi.values();
      for (std::size_t q = 0; q < radii.size(); ++q) {
        const double rad = radii[q];
        const double theta = (*p.dynamics.omega_modulus)(rad);
        const double bound = mass * theta * theta;
        const double osc = mean_oscillation(space, F, rad);
        worst_osc[q] = std::max(worst_osc[q], osc);
        ++r.evaluated;
        const double ratio = bound > 0.0 ? osc / bound : (osc > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > r.worst) {
          r.worst = ratio;
          r.witness = "control " + std::to_string(c) + " t=" + fmt(traj.grid.node(static_cast<int>(j))) +
                      " r=" + fmt(rad);
        }
        if (osc > bound * (1.0 + 1e-9) + 1e-15) ok = false;
      }
    }
  }
  for (std::size_t q = 0; q < radii.size(); ++q) {
    const double rad = radii[q];
    const double theta = (*p.dynamics.omega_modulus)(rad);
    const double h = ball_mass(space, rad);
    r.metrics["osc@" + label(rad)] = worst_osc[q];
    r.metrics["bound@" + label(rad)] = mass * theta * theta;
    r.metrics["h@" + label(rad)] = h;
    if (rad > 0.0 && !(h > 0.0)) ok = false;
  }
  r.pass = ok;
  return r;
}

// --- reporting ------------------------------------------------------------------

void write_reports_csv(const std::filesystem::path& path, const std::vector<CheckReport>& reports) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << "name,instance,tolerance,worst,pass,evaluated,skipped,seed,witness\n";
  for (const auto& r : reports)
    out << r.name << ',' << r.instance << ',' << fmt(r.tolerance) << ',' << fmt(r.worst) << ','
        << (r.pass ? "pass" : "fail") << ',' << r.evaluated << ',' << r.skipped << ',' << r.seed << ','
        << csv_quote(r.witness) << '\n';
}

std::string summarize(const std::vector<CheckReport>& reports) {
  std::ostringstream os;
  int failed = 0;
  for (const auto& r : reports) {
    os << (r.pass ? "PASS " : "FAIL ") << r.name << " [" << r.instance << "] worst=" << fmt(r.worst)
       << " tol=" << fmt(r.tolerance);
    if (r.skipped) os << " skipped=" << r.skipped;
    for (const auto& [k, v] : r.metrics) os << ' ' << k << '=' << fmt(v);
    if (!r.witness.empty()) os << " witness: " << r.witness;
    os << '\n';
    failed += r.pass ? 0 : 1;
  }
  os << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed") << '\n';
  return os.str();
}

}  // namespace ensoc
