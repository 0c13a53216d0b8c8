#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ensoc/io.hpp"
#include "ensoc/verify.hpp"

namespace ensoc::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2 };

/// Everything a run needs; the manifest echoes it so `--config manifest.json`
/// repeats the run.
struct RunConfig {
  /// Builtin name, path to a problem file, or an inline problem object.
  Json problem = "linear-ensemble";
  /// Builtin parameters (ignored for problem files).
  Json parameters = Json::object();
  std::string method = "oracle";  // oracle | dp | adjoint | all
  double start = 0.0;
  int steps = 6;
  /// Steps of the dp time grid; 0 means `steps`.
  int dp_steps = 0;
  /// Nodes per stacked axis.
  int grid = 41;
  /// Half width of every axis; 0 derives it from the reach radius.
  double grid_radius = 0.0;
  /// Overrides check tolerances in verify when set.
  std::optional<double> tol;
  std::uint64_t seed = 42;
  std::string out;
  int workers = 1;
  /// Initial ensemble state: number, per-atom list, or M x n rows.
  Json phi = 1.0;
  double budget = 1e6;
  int trials = 20;
  int lemma_trials = 50;
  int lemma_steps = 200;
  int adjoint_iterations = 200;
  double kappa = 5.0;
  std::vector<int> bench_steps = {100, 200};
  std::vector<int> bench_grid = {21, 41};
  std::vector<int> bench_oracle_steps = {4, 6};
};

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

/// Keys of `j` override the matching fields; a manifest (object with a
/// "config" key) is unwrapped first.
RunConfig merge_config(RunConfig base, const Json& j);
Json config_to_json(const RunConfig& c);

ProblemSpec resolve_problem(const RunConfig& c);
EnsembleState resolve_phi(const ProblemSpec& p, const Json& phi);
/// Symmetric axes covering the reach radius of phi (or `grid_radius`).
std::vector<Axis> resolve_axes(const ProblemSpec& p, const RunConfig& c, const EnsembleState& phi);
/// Output directory: `out`, else $ENSOC_OUT, else "ensoc_out".
std::filesystem::path output_dir(const RunConfig& c);

int cmd_solve(const RunConfig& c, std::ostream& log);
/// Runs the battery and returns the reports (also written to the output dir).
std::vector<CheckReport> verify_battery(const RunConfig& c, std::ostream& log);
int cmd_verify(const RunConfig& c, std::ostream& log);
int cmd_bench(const RunConfig& c, std::ostream& log);

/// argv-style entry point; args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ensoc::cli
