#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ensoc/hamiltonian.hpp"
#include "ensoc/value.hpp"

namespace ensoc {

struct CheckReport {
  std::string name;
  std::string instance;
  double tolerance = 0.0;
  double worst = 0.0;
  std::string witness;
  bool pass = true;
  std::uint64_t seed = 0;
  int evaluated = 0;
  int skipped = 0;
  /// Named auxiliary quantities (slopes, margins, per-level values).
  std::map<std::string, double> metrics;
};

/// tol(dt, dz) = kappa (dt + max dz).
inline double first_order_tolerance(double kappa, double dt, double dz) { return kappa * (dt + dz); }

// --- HJB residual -------------------------------------------------------------

struct HjbSample {
  double t = 0.0;
  Vector z;
};

struct HjbOptions {
  double kappa = 5.0;
  /// Overrides kappa (dt + dz) when >= 0.
  double tolerance = -1.0;
};

/// Grid nodes whose finite-difference stencil stays inside the table, every
/// `stride` nodes, restricted to the central `fraction` of each state axis.
std::vector<HjbSample> interior_samples(const ValueGrid& vg, int stride = 1, double fraction = 1.0);

/// max |V_t + H(t, phi, V_phi)| over the samples with central differences.
/// Samples whose nearest node sees a change of the stored argmin among its
/// axis neighbours are skipped and counted.
CheckReport hjb_residual(const ValueGrid& vg, const ProblemSpec& p, const std::vector<HjbSample>& samples,
                         const HjbOptions& opt = {});

// --- epigraph invariance --------------------------------------------------------

struct EpigraphOptions {
  double tolerance = 1e-8;
  /// Full tree enumeration when the signal count is at most this, else sampling.
  double full_budget = 2e4;
  int trials = 200;
  std::uint64_t seed = 11;
  OracleOptions oracle;
};

/// Weak direction: V(t, xbar(t)) stays at V(s, phi) along the enumerated
/// optimum. Strong direction: t -> V(t, x_u(t)) is nondecreasing along every
/// (or every sampled) signal.
CheckReport epigraph_invariance(const ProblemSpec& p, const EnsembleState& phi, const TimeGrid& grid,
                                const EpigraphOptions& opt = {});

// --- terminal limit -------------------------------------------------------------

struct TerminalLimitOptions {
  int steps = 4;
  int gradient_samples = 64;
  std::uint64_t seed = 5;
  OracleOptions oracle;
};

/// Checks |V(T - h_k, phi) - J(phi)| <= L h_k with L from the time-Lipschitz
/// trajectory bound and a sampled bound on the L^2 gradient of the terminal
/// functional, and compares the least-squares slope with the first-order
/// rate |H(T, phi, DJ(phi))| (within 2x) and the spread of |V - J| / h_k
/// (at most 2). h_k = 0 is allowed and contributes an exact zero.
/// Metrics: "lipschitz", "lipschitz_local", "slope", "slope_ratio", "spread".
CheckReport terminal_limit(const ProblemSpec& p, const EnsembleState& phi, const std::vector<double>& horizons,
                           const TerminalLimitOptions& opt = {});

// --- oscillation ------------------------------------------------------------------

/// Mean oscillation sum_i w_i |F_i - (F)_{B_r(w_i)}|^2 of F(t) = int_s^t f along
/// each control's trajectory, against mu(Omega) theta_f(r)^2, at every node and
/// radius. Also requires h(r) > 0. Metrics per radius: "osc@r", "bound@r", "h@r".
CheckReport oscillation_diagnostic(const ProblemSpec& p, const EnsembleState& phi,
                                   const std::vector<ControlSignal>& controls, const std::vector<double>& radii);

double mean_oscillation(const ParameterSpace& space, const Matrix& F, double r);

// --- reporting ------------------------------------------------------------------

void write_reports_csv(const std::filesystem::path& path, const std::vector<CheckReport>& reports);
std::string summarize(const std::vector<CheckReport>& reports);

}  // namespace ensoc
