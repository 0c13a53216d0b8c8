#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>

#include "CLI11.hpp"
#include "ensoc/expression.hpp"

namespace ensoc::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Mean wall time of `fn`, repeated until at least 20 ms have elapsed.
double time_it(const std::function<void()>& fn) {
  int reps = 0;
  const auto t0 = std::chrono::steady_clock::now();
  double elapsed = 0.0;
  do {
    fn();
    ++reps;
    elapsed = seconds_since(t0);
  } while (elapsed < 0.02 && reps < 1000);
  return elapsed / reps;
}

std::vector<std::string> method_list(const std::string& m) {
  if (m == "all") return {"oracle", "dp", "adjoint"};
  if (m == "oracle" || m == "dp" || m == "adjoint") return {m};
  throw ArgumentError("unknown method '" + m + "' (expected oracle, dp, adjoint or all)");
}

void check_dp_guard(const ProblemSpec& p) {
  const int D = p.space->size() * p.n;
  if (D > kMaxGridDimension)
    throw CapacityError("dp needs n*M <= " + std::to_string(kMaxGridDimension) + ", problem has n*M = " +
                        std::to_string(D));
}

CheckReport from_validation(const std::string& name, const ProblemSpec& p, const ValidationReport& v,
                            double tolerance, std::uint64_t seed) {
  CheckReport r;
  r.name = name;
  r.instance = p.name;
  r.tolerance = tolerance;
  r.worst = v.worst;
  r.pass = v.pass;
  r.seed = seed;
  r.evaluated = v.samples;
  if (!v.violations.empty()) {
    const Violation& w = v.violations.front();
    r.witness = "t=" + num(w.t) + " atom=" + std::to_string(w.atom) + " value=" + num(w.value);
  }
  r.metrics["violations"] = static_cast<double>(v.violations.size());
  return r;
}

std::vector<double> oscillation_radii(const ParameterSpace& space) {
  std::set<double> d;
  for (int i = 0; i < space.size(); ++i)
    for (int j = i + 1; j < space.size(); ++j) d.insert(space.distance(i, j));
  std::vector<double> all(d.begin(), d.end());
  std::vector<double> radii;
  const std::size_t stride = std::max<std::size_t>(1, all.size() / 8);
  for (std::size_t q = 0; q < all.size(); q += stride) {
    radii.push_back(0.5 * all[q]);
    radii.push_back(all[q]);
  }
  radii.push_back(space.diameter() * 1.5 + 1e-9);
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  return radii;
}

}  // namespace

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

// --- configuration ------------------------------------------------------------

RunConfig merge_config(RunConfig c, const Json& input) {
  if (!input.is_object()) throw ParseError("config must be a JSON object");
  const Json& j = input.contains("config") ? input.at("config") : input;
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  static const std::set<std::string> known = {
      "problem", "parameters", "method", "start", "steps", "dp_steps", "grid", "grid_radius", "tol",
      "seed", "out", "workers", "phi", "budget", "trials", "lemma_trials", "lemma_steps",
      "adjoint_iterations", "kappa", "bench_steps", "bench_grid", "bench_oracle_steps"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ParseError("unknown config key '" + key + "'");
  try {
    if (j.contains("problem")) c.problem = j.at("problem");
    if (j.contains("parameters")) c.parameters = j.at("parameters");
    c.method = j.value("method", c.method);
    c.start = j.value("start", c.start);
    c.steps = j.value("steps", c.steps);
    c.dp_steps = j.value("dp_steps", c.dp_steps);
    c.grid = j.value("grid", c.grid);
    c.grid_radius = j.value("grid_radius", c.grid_radius);
    if (j.contains("tol")) {
      if (j.at("tol").is_null())
        c.tol.reset();
      else
        c.tol = j.at("tol").get<double>();
    }
    c.seed = j.value("seed", c.seed);
    c.out = j.value("out", c.out);
    c.workers = j.value("workers", c.workers);
    if (j.contains("phi")) c.phi = j.at("phi");
    c.budget = j.value("budget", c.budget);
    c.trials = j.value("trials", c.trials);
    c.lemma_trials = j.value("lemma_trials", c.lemma_trials);
    c.lemma_steps = j.value("lemma_steps", c.lemma_steps);
    c.adjoint_iterations = j.value("adjoint_iterations", c.adjoint_iterations);
    c.kappa = j.value("kappa", c.kappa);
    c.bench_steps = j.value("bench_steps", c.bench_steps);
    c.bench_grid = j.value("bench_grid", c.bench_grid);
    c.bench_oracle_steps = j.value("bench_oracle_steps", c.bench_oracle_steps);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (c.steps < 1 || c.dp_steps < 0 || c.grid < 2 || c.workers < 1 || c.trials < 0 || c.lemma_trials < 0 ||
      c.lemma_steps < 1 || c.budget <= 0 || c.grid_radius < 0)
    throw ArgumentError("config: values out of range");
  method_list(c.method);
  return c;
}

Json config_to_json(const RunConfig& c) {
  Json j;
  j["problem"] = c.problem;
  j["parameters"] = c.parameters;
  j["method"] = c.method;
  j["start"] = c.start;
  j["steps"] = c.steps;
  j["dp_steps"] = c.dp_steps;
  j["grid"] = c.grid;
  j["grid_radius"] = c.grid_radius;
  j["tol"] = c.tol ? Json(*c.tol) : Json(nullptr);
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["workers"] = c.workers;
  j["phi"] = c.phi;
  j["budget"] = c.budget;
  j["trials"] = c.trials;
  j["lemma_trials"] = c.lemma_trials;
  j["lemma_steps"] = c.lemma_steps;
  j["adjoint_iterations"] = c.adjoint_iterations;
  j["kappa"] = c.kappa;
  j["bench_steps"] = c.bench_steps;
  j["bench_grid"] = c.bench_grid;
  j["bench_oracle_steps"] = c.bench_oracle_steps;
  return j;
}

ProblemSpec resolve_problem(const RunConfig& c) {
  ProblemSpec p;
  if (c.problem.is_object()) {
    p = problem_from_json(c.problem, fs::current_path());
  } else if (c.problem.is_string()) {
    const auto name = c.problem.get<std::string>();
    const auto names = builtin_names();
    if (std::find(names.begin(), names.end(), name) != names.end()) {
      p = builtin(name, params_from_json(c.parameters));
    } else {
      if (!fs::exists(name)) throw ParseError("problem '" + name + "' is neither a builtin nor an existing file");
      p = load_problem(name);
    }
  } else {
    throw ParseError("problem must be a builtin name, a file path or an object");
  }
  p.validate_structure();
  if (!(c.start >= 0.0 && c.start < p.horizon)) throw ArgumentError("start time must lie in [0, T)");
  return p;
}

EnsembleState resolve_phi(const ProblemSpec& p, const Json& phi) {
  const int M = p.space->size();
  Matrix x(M, p.n);
  try {
    if (phi.is_number()) {
      x.setConstant(phi.get<double>());
    } else if (phi.is_array() && static_cast<int>(phi.size()) == M) {
      for (int i = 0; i < M; ++i) {
        const Json& row = phi.at(static_cast<std::size_t>(i));
        if (row.is_number()) {
          x.row(i).setConstant(row.get<double>());
        } else {
          if (!row.is_array() || static_cast<int>(row.size()) != p.n)
            throw DimensionError("phi row " + std::to_string(i) + " must have " + std::to_string(p.n) + " entries");
          for (int k = 0; k < p.n; ++k) x(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
        }
      }
    } else {
      throw DimensionError("phi must be a number or a list with one entry per atom (" + std::to_string(M) + ")");
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("phi: ") + e.what());
  }
  return EnsembleState(p.space, x);
}

namespace {

double query_radius(const EnsembleState& phi) { return phi.values().rowwise().norm().maxCoeff(); }

}  // namespace

std::vector<Axis> resolve_axes(const ProblemSpec& p, const RunConfig& c, const EnsembleState& phi) {
  double R = c.grid_radius;
  if (R == 0.0) {
    const double elapsed = p.horizon - c.start;
    const double cg = p.dynamics.growth_c;
    R = 1.05 * (query_radius(phi) * std::sqrt(double(p.n)) + cg * elapsed) * std::exp(cg * elapsed);
    if (R == 0.0) R = 1.0;
  }
  return std::vector<Axis>(static_cast<std::size_t>(p.space->size() * p.n), Axis{-R, R, c.grid});
}

fs::path output_dir(const RunConfig& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("ENSOC_OUT"); env && *env) return env;
  return "ensoc_out";
}

// --- solve ----------------------------------------------------------------------

int cmd_solve(const RunConfig& c, std::ostream& log) {
  const ProblemSpec p = resolve_problem(c);
  const EnsembleState phi = resolve_phi(p, c.phi);
  const auto methods = method_list(c.method);
  const bool wants_dp = std::find(methods.begin(), methods.end(), "dp") != methods.end();
  const bool wants_adjoint = std::find(methods.begin(), methods.end(), "adjoint") != methods.end();
  if (wants_dp) check_dp_guard(p);
  if (wants_adjoint && !p.differentiable())
    throw CapabilityError("adjoint needs a differentiable problem (jacobians and cost gradient)");

  const fs::path dir = output_dir(c);
  fs::create_directories(dir);
  const TimeGrid grid(c.start, p.horizon, c.steps);
  const OracleOptions oopt{c.budget, c.workers};

  Json manifest;
  manifest["config"] = config_to_json(c);
  manifest["versions"] = {{"ensoc", kVersion},
                          {"expression_grammar", kExpressionGrammarVersion},
                          {"space_format", kSpaceFormatVersion},
                          {"problem_format", kProblemFormatVersion},
                          {"value_grid_format", 1}};
  manifest["problem"] = p.name;
  manifest["artifacts"] = Json::array();

  std::ofstream values(dir / "value.csv");
  std::ofstream controls(dir / "control.csv");
  if (!values || !controls) throw ParseError("cannot write into '" + dir.string() + "'");
  values << "method,value\n";
  controls << "method,interval,t";
  for (int k = 1; k <= p.m; ++k) controls << ",u" << k;
  controls << '\n';
  manifest["artifacts"].push_back("value.csv");
  manifest["artifacts"].push_back("control.csv");

  std::vector<std::pair<std::string, double>> results;
  double dt = 0.0, dz = 0.0;
  for (const auto& m : methods) {
    const auto t0 = std::chrono::steady_clock::now();
    double value = 0.0;
    ControlSignal control{grid, Matrix(p.m, grid.steps()), {}};
    if (m == "oracle") {
      const OracleResult r = value_oracle(p, c.start, phi, grid, oopt);
      value = r.value;
      control = r.best;
      manifest["oracle"] = {{"signals", r.signals}, {"indices", r.best.indices}};
      dt = std::max(dt, grid.max_step());
    } else if (m == "dp") {
      const TimeGrid dgrid(c.start, p.horizon, c.dp_steps > 0 ? c.dp_steps : c.steps);
      DpOptions dopt;
      dopt.workers = c.workers;
      dopt.query_radius = query_radius(phi);
      const ValueGrid vg = value_dp(p, resolve_axes(p, c, phi), dgrid, dopt);
      bool clamped = false;
      value = vg.value(c.start, phi.stacked(), &clamped);
      control = dp_feedback(p, vg, phi);
      write_value_grid(dir / "valuegrid.bin", vg);
      write_value_slice_csv(dir / "value_slice0.csv", vg, 0);
      manifest["artifacts"].push_back("valuegrid.bin");
      manifest["artifacts"].push_back("value_slice0.csv");
      manifest["dp"] = {{"clamp_count", vg.clamp_count}, {"query_clamped", clamped},
                        {"warnings", vg.warnings}, {"dz", vg.max_spacing()}, {"dt", dgrid.max_step()}};
      for (const auto& w : vg.warnings) log << "warning: " << w << '\n';
      dt = std::max(dt, dgrid.max_step());
      dz = vg.max_spacing();
    } else {
      AdjointOptions aopt;
      aopt.iterations = c.adjoint_iterations;
      aopt.workers = c.workers;
      const AdjointResult r = value_adjoint(p, c.start, phi, grid, aopt);
      value = r.value;
      control = r.control;
      manifest["adjoint"] = {{"iterations", r.iterations}, {"hull_is_box", r.hull_is_box}};
      dt = std::max(dt, grid.max_step());
    }
    const double elapsed = seconds_since(t0);
    manifest["values"][m] = value;
    manifest["timings"][m] = elapsed;
    results.emplace_back(m, value);
    values << m << ',' << num(value) << '\n';
    for (int j = 0; j < control.grid.steps(); ++j) {
      controls << m << ',' << j << ',' << num(control.grid.node(j));
      for (int k = 0; k < p.m; ++k) controls << ',' << num(control.values(k, j));
      controls << '\n';
    }
    const Trajectory traj = integrate(p, phi, control, c.workers);
    const std::string tname = "trajectory_" + m + ".csv";
    write_trajectory_csv(dir / tname, traj, *p.space);
    manifest["artifacts"].push_back(tname);
    log << m << ": V(" << num(c.start) << ", phi) = " << num(value) << "  (" << elapsed << " s)\n";
  }

  if (results.size() > 1) {
    double spread = 0.0;
    for (const auto& a : results)
      for (const auto& b : results) spread = std::max(spread, std::abs(a.second - b.second));
    const double tol = first_order_tolerance(c.kappa, dt, dz);
    manifest["cross_check"] = {{"max_difference", spread}, {"tolerance", tol}, {"consistent", spread <= tol}};
    log << "cross-method spread " << num(spread) << " (tolerance " << num(tol) << ")\n";
  }
  write_json_file(dir / "manifest.json", manifest);
  log << "wrote " << (dir / "manifest.json").string() << '\n';
  return kOk;
}

// --- verify ---------------------------------------------------------------------

std::vector<CheckReport> verify_battery(const RunConfig& c, std::ostream& log) {
  const ProblemSpec p = resolve_problem(c);
  const EnsembleState phi = resolve_phi(p, c.phi);
  const OracleOptions oopt{c.budget, c.workers};
  const TimeGrid grid(c.start, p.horizon, c.steps);
  std::vector<CheckReport> reports;

  reports.push_back(from_validation("certificate_growth", p, validate_growth(p, 2000, c.seed), 1.0, c.seed));
  reports.push_back(from_validation("certificate_lipschitz", p, validate_lipschitz(p, 2000, c.seed), 1.0, c.seed));
  reports.push_back(from_validation("certificate_cost_bound", p, validate_cost_bound(p, 2000, c.seed), 0.0, c.seed));
  if (p.dynamics.omega_modulus)
    reports.push_back(from_validation("certificate_modulus", p, modulus_check(p, 64, c.seed), 1.0, c.seed));

  {
    Lemma21Options lopt;
    lopt.steps = c.lemma_steps;
    lopt.seed = c.seed;
    if (c.tol) lopt.slack = *c.tol;
    const PropertyReport pr = lemma21_suite(p, c.lemma_trials, lopt);
    CheckReport r;
    r.name = "trajectory_bounds";
    r.instance = p.name;
    r.tolerance = 1.0 + lopt.slack;
    r.seed = c.seed;
    r.evaluated = pr.trials;
    for (int b = 0; b < 4; ++b) {
      r.worst = std::max(r.worst, pr.worst_ratio[b]);
      r.metrics["ratio" + std::to_string(b + 1)] = pr.worst_ratio[b];
    }
    if (!pr.violations.empty()) {
      const BoundWitness& w = pr.violations.front();
      r.witness = "bound " + std::to_string(w.bound) + " trial " + std::to_string(w.trial) + " t=" + num(w.t);
    }
    r.pass = pr.pass;
    reports.push_back(r);
  }

  {
    CheckReport r;
    r.name = "dpp_residual";
    r.instance = p.name;
    r.tolerance = c.tol.value_or(1e-10);
    r.seed = c.seed;
    double one_sided = -std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    for (int trial = 0; trial < c.trials; ++trial) {
      Matrix x(p.space->size(), p.n);
      for (Eigen::Index q = 0; q < x.size(); ++q) x.data()[q] = coord(rng);
      const EnsembleState start(p.space, x);
      for (int j2 = 1; j2 < grid.steps(); ++j2) {
        const DppResult d = dpp_residual(p, c.start, grid.node(j2), start, grid, oopt);
        ++r.evaluated;
        one_sided = std::max(one_sided, d.one_sided);
        if (std::abs(d.residual) > r.worst || r.evaluated == 1) {
          r.worst = std::abs(d.residual);
          r.witness = "trial " + std::to_string(trial) + " s2=" + num(grid.node(j2));
        }
      }
    }
    r.metrics["one_sided"] = r.evaluated ? one_sided : 0.0;
    r.pass = r.worst <= r.tolerance;
    reports.push_back(r);
  }

  {
    EpigraphOptions eopt;
    if (c.tol) eopt.tolerance = *c.tol;
    eopt.trials = c.trials;
    eopt.seed = c.seed;
    eopt.oracle = oopt;
    reports.push_back(epigraph_invariance(p, phi, grid, eopt));
  }

  if (p.space->size() * p.n <= kMaxGridDimension) {
    const TimeGrid dgrid(c.start, p.horizon, c.dp_steps > 0 ? c.dp_steps : 50);
    DpOptions dopt;
    dopt.workers = c.workers;
    dopt.query_radius = query_radius(phi);
    const ValueGrid vg = value_dp(p, resolve_axes(p, c, phi), dgrid, dopt);
    HjbOptions hopt;
    hopt.kappa = c.kappa;
    if (c.tol) hopt.tolerance = *c.tol;
    reports.push_back(hjb_residual(vg, p, interior_samples(vg, 1, 0.5), hopt));
  } else {
    log << "note: hjb_residual not run, stacked dimension exceeds " << kMaxGridDimension << '\n';
  }

  {
    std::vector<double> horizons;
    for (double h : {0.2, 0.1, 0.05, 0.025})
      if (h <= p.horizon - c.start) horizons.push_back(h);
    if (!horizons.empty()) {
      TerminalLimitOptions topt;
      topt.seed = c.seed;
      topt.oracle = oopt;
      reports.push_back(terminal_limit(p, phi, horizons, topt));
    }
  }

  if (p.dynamics.omega_modulus) {
    std::vector<ControlSignal> controls;
    const int first = static_cast<int>(p.controls.active(grid.node(0)).cols());
    for (int k = 0; k < first; ++k) {
      std::vector<int> idx;
      for (int j = 0; j < grid.steps(); ++j)
        idx.push_back(std::min(k, static_cast<int>(p.controls.active(grid.node(j)).cols()) - 1));
      controls.push_back(ControlSignal::from_indices(p, grid, idx));
    }
    controls.push_back(value_oracle(p, phi.values(), grid, oopt).best);
    reports.push_back(oscillation_diagnostic(p, phi, controls, oscillation_radii(*p.space)));
  }
  return reports;
}

int cmd_verify(const RunConfig& c, std::ostream& log) {
  const auto reports = verify_battery(c, log);
  const fs::path dir = output_dir(c);
  fs::create_directories(dir);
  write_reports_csv(dir / "reports.csv", reports);
  const std::string summary = summarize(reports);
  {
    std::ofstream out(dir / "summary.txt");
    if (!out) throw ParseError("cannot write '" + (dir / "summary.txt").string() + "'");
    out << summary;
  }
  Json manifest;
  manifest["config"] = config_to_json(c);
  manifest["versions"] = {{"ensoc", kVersion}};
  write_json_file(dir / "manifest.json", manifest);
  log << summary;
  const bool ok = std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
  return ok ? kOk : kCheckFailed;
}

// --- bench ----------------------------------------------------------------------

int cmd_bench(const RunConfig& c, std::ostream& log) {
  const ProblemSpec p = resolve_problem(c);
  const EnsembleState phi = resolve_phi(p, c.phi);
  const fs::path dir = output_dir(c);
  fs::create_directories(dir);
  std::ofstream out(dir / "bench.csv");
  if (!out) throw ParseError("cannot write '" + (dir / "bench.csv").string() + "'");
  out << "task,steps,grid,signals,seconds\n";
  auto row = [&](const std::string& task, int steps, int g, double signals, double secs) {
    out << task << ',' << steps << ',' << g << ',' << num(signals) << ',' << num(secs) << '\n';
    log << task << " steps=" << steps << " grid=" << g << " " << secs << " s\n";
  };
  for (int N : c.bench_steps) {
    const TimeGrid grid(c.start, p.horizon, N);
    const auto u = ControlSignal::from_indices(p, grid, std::vector<int>(static_cast<std::size_t>(N), 0));
    row("integrate", N, 0, 1, time_it([&] { (void)integrate(p, phi, u, c.workers); }));
  }
  if (!c.bench_grid.empty()) check_dp_guard(p);
  for (int g : c.bench_grid) {
    RunConfig cg = c;
    cg.grid = g;
    const int N = c.dp_steps > 0 ? c.dp_steps : 10;
    const TimeGrid grid(c.start, p.horizon, N);
    DpOptions dopt;
    dopt.workers = c.workers;
    dopt.query_radius = query_radius(phi);
    const auto axes = resolve_axes(p, cg, phi);
    row("value_dp", N, g, 0, time_it([&] { (void)value_dp(p, axes, grid, dopt); }));
  }
  for (int N : c.bench_oracle_steps) {
    const TimeGrid grid(c.start, p.horizon, N);
    const double count = signal_count(p, grid);
    const OracleOptions oopt{c.budget, c.workers};
    row("value_oracle", N, 0, count, time_it([&] { (void)value_oracle(p, phi.values(), grid, oopt); }));
  }
  return kOk;
}

// --- entry point ----------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ensemble optimal control solver and verification harness", "ensoc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string problem, method, config_path, out_dir;
  std::vector<std::string> params;
  int steps = 0, grid = 0, workers = 0;
  double tol = 0.0;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--problem", problem, "builtin name or problem file");
    sub->add_option("--param", params, "builtin parameter key=value (value may be a comma list)");
    sub->add_option("--steps", steps, "time steps")->check(CLI::PositiveNumber);
    sub->add_option("--grid", grid, "nodes per stacked axis (dp)")->check(CLI::Range(2, 1 << 20));
    sub->add_option("--tol", tol, "override check tolerances");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--out", out_dir, "output directory (default $ENSOC_OUT or ./ensoc_out)");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--config", config_path, "JSON config or run manifest; overrides flags");
  };
  CLI::App* solve = app.add_subcommand("solve", "compute the value by the selected method(s)");
  add_common(solve);
  solve->add_option("--method", method, "oracle | dp | adjoint | all");
  CLI::App* verify = app.add_subcommand("verify", "run the verification battery");
  add_common(verify);
  CLI::App* bench = app.add_subcommand("bench", "time integrate, value_dp and value_oracle");
  add_common(bench);

  std::string grid_file;
  double query_t = 0.0;
  std::vector<double> query_z;
  CLI::App* query = app.add_subcommand("query", "evaluate a saved value grid");
  query->add_option("--file", grid_file, "valuegrid.bin")->required();
  query->add_option("--t", query_t, "time")->required();
  query->add_option("--z", query_z, "stacked state (comma separated)")->required()->delimiter(',');

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (query->parsed()) {
      const ValueGrid vg = read_value_grid(grid_file);
      Vector z = Eigen::Map<const Vector>(query_z.data(), static_cast<Eigen::Index>(query_z.size()));
      bool clamped = false;
      out << num(vg.value(query_t, z, &clamped)) << '\n';
      if (clamped) err << "warning: query outside the grid, value clamped\n";
      return kOk;
    }
    CLI::App* sub = solve->parsed() ? solve : verify->parsed() ? verify : bench;
    RunConfig c;
    if (sub->count("--problem")) c.problem = problem;
    if (!params.empty()) {
      Json pj = Json::object();
      for (const auto& kv : params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ArgumentError("--param expects key=value, got '" + kv + "'");
        std::vector<double> vals;
        std::string rest = kv.substr(eq + 1);
        std::size_t pos = 0;
        while (pos <= rest.size()) {
          const auto comma = rest.find(',', pos);
          const std::string tok = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
          try {
            vals.push_back(std::stod(tok));
          } catch (const std::exception&) {
            throw ArgumentError("--param value '" + tok + "' is not a number");
          }
          if (comma == std::string::npos) break;
          pos = comma + 1;
        }
        pj[kv.substr(0, eq)] = vals.size() == 1 ? Json(vals.front()) : Json(vals);
      }
      c.parameters = pj;
    }
    if (sub == solve && solve->count("--method")) c.method = method;
    if (sub->count("--steps")) c.steps = steps;
    if (sub->count("--grid")) c.grid = grid;
    if (sub->count("--tol")) c.tol = tol;
    if (sub->count("--seed")) c.seed = seed;
    if (sub->count("--out")) c.out = out_dir;
    if (sub->count("--workers")) c.workers = workers;
    if (!config_path.empty()) c = merge_config(c, read_json_file(config_path));
    // a manifest echoes its own output directory; --out still wins when given
    if (sub->count("--out")) c.out = out_dir;
    c = merge_config(c, Json::object());
    if (sub == solve) return cmd_solve(c, out);
    if (sub == verify) return cmd_verify(c, out);
    return cmd_bench(c, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace ensoc::cli
