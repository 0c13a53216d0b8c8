#include <cstdio>
#include <fstream>
#include <sstream>

#include "ensoc/ensemble.hpp"

namespace ensoc {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const ParameterSpace& space) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  const auto n = traj.states.front().cols();
  const auto m = traj.control.values.rows();
  out << "t,atom";
  for (Eigen::Index k = 1; k <= n; ++k) out << ",x" << k;
  for (Eigen::Index k = 1; k <= m; ++k) out << ",u" << k;
  out << '\n';
  const int N = traj.grid.steps();
  for (int j = 0; j <= N; ++j) {
    const Vector u = traj.control.at(std::min(j, N - 1));
    for (int i = 0; i < space.size(); ++i) {
      out << fmt17(traj.grid.node(j)) << ',' << space.ids()[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < n; ++k) out << ',' << fmt17(traj.states[static_cast<std::size_t>(j)](i, k));
      for (Eigen::Index k = 0; k < m; ++k) out << ',' << fmt17(u[k]);
      out << '\n';
    }
  }
}

Trajectory read_trajectory_csv(const std::filesystem::path& path, const ParameterSpace& space) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("trajectory csv: missing header");
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "t" || header[1] != "atom")
    throw ParseError("trajectory csv: header must start with 't,atom'");
  int n = 0, m = 0;
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (header[c] == "x" + std::to_string(n + 1) && m == 0)
      ++n;
    else if (header[c] == "u" + std::to_string(m + 1))
      ++m;
    else
      throw ParseError("trajectory csv: unexpected column '" + header[c] + "'");
  }
  if (n == 0 || m == 0) throw ParseError("trajectory csv: need state and control columns");

  const int M = space.size();
  std::vector<double> nodes;
  std::vector<Matrix> states;
  std::vector<Vector> controls;
  std::vector<int> seen;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (static_cast<int>(cells.size()) != 2 + n + m)
      throw ParseError("trajectory csv: row " + std::to_string(row) + " has wrong column count");
    const double t = std::stod(cells[0]);
    if (nodes.empty() || t != nodes.back()) {
      if (!nodes.empty() && seen.size() != static_cast<std::size_t>(M))
        throw ParseError("trajectory csv: node before row " + std::to_string(row) + " misses atoms");
      nodes.push_back(t);
      states.emplace_back(M, n);
      controls.emplace_back(m);
      seen.clear();
    }
    const int atom = space.index_of(cells[1]);
    seen.push_back(atom);
    for (int k = 0; k < n; ++k) states.back()(atom, k) = std::stod(cells[static_cast<std::size_t>(2 + k)]);
    for (int k = 0; k < m; ++k) controls.back()[k] = std::stod(cells[static_cast<std::size_t>(2 + n + k)]);
  }
  if (nodes.size() < 2) throw ParseError("trajectory csv: need at least two time nodes");
  TimeGrid grid = TimeGrid::from_nodes(nodes);
  Matrix values(m, grid.steps());
  for (int j = 0; j < grid.steps(); ++j) values.col(j) = controls[static_cast<std::size_t>(j)];
  return Trajectory{grid, std::move(states), ControlSignal{grid, std::move(values), {}}};
}

}  // namespace ensoc
