#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ensoc/ensemble.hpp"
#include "ensoc/problem.hpp"

namespace test {

using ensoc::Matrix;
using ensoc::Vector;

inline ensoc::SpacePtr line_space(std::vector<double> weights, std::vector<double> coords) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < weights.size(); ++i) ids.push_back("w" + std::to_string(i));
  Eigen::MatrixXd c(static_cast<Eigen::Index>(coords.size()), 1);
  for (std::size_t i = 0; i < coords.size(); ++i) c(static_cast<Eigen::Index>(i), 0) = coords[i];
  return std::make_shared<const ensoc::ParameterSpace>(ensoc::ParameterSpace::from_coordinates(
      std::move(ids), Eigen::Map<const Vector>(weights.data(), static_cast<Eigen::Index>(weights.size())), c));
}

inline Matrix column(std::vector<double> v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Matrix random_block(std::mt19937_64& rng, int rows, int cols, double radius = 1.0) {
  std::uniform_real_distribution<double> d(-radius, radius);
  Matrix m(rows, cols);
  for (Eigen::Index q = 0; q < m.size(); ++q) m.data()[q] = d(rng);
  return m;
}

/// Scalar problem with dynamics f(t, x, u, atom) and cost g on the given space.
inline ensoc::ProblemSpec scalar_problem(ensoc::SpacePtr space, ensoc::DynamicsSpec::Field f,
                                         ensoc::TerminalCostSpec::Cost g, double c, double k,
                                         std::vector<double> points = {-1.0, 0.0, 1.0}, double T = 1.0) {
  ensoc::ProblemSpec p;
  p.space = space;
  p.n = 1;
  p.m = 1;
  p.horizon = T;
  p.dynamics.eval = std::move(f);
  p.dynamics.growth_c = c;
  p.dynamics.lipschitz_k = k;
  p.cost.eval = std::move(g);
  p.cost.lower_bound_a = Vector::Zero(space->size());
  p.cost.lower_bound_b = 0.0;
  Matrix set(1, static_cast<Eigen::Index>(points.size()));
  for (std::size_t q = 0; q < points.size(); ++q) set(0, static_cast<Eigen::Index>(q)) = points[q];
  const auto [lo, hi] = std::minmax_element(points.begin(), points.end());
  p.controls = ensoc::ControlSchedule({0.0, T}, {set}, Vector::Constant(1, *lo), Vector::Constant(1, *hi));
  return p;
}

}  // namespace test
