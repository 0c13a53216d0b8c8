#include <algorithm>
#include <cmath>

#include "ensoc/parallel.hpp"
#include "ensoc/value.hpp"

namespace ensoc {

namespace {

/// Reverse sweep through one RK4 step. On entry `lambda` is dJ/dx_{j+1};
/// on exit it is dJ/dx_j, and the control sensitivity is added to `grad_u`.
void rk4_step_adjoint(const DynamicsSpec& f, double t, double h, const Vector& x, const Vector& u,
                      int atom, Vector& lambda, Eigen::Ref<Vector> grad_u) {
  const double half = 0.5 * h;
  const Vector y1 = x;
  const Vector k1 = f.eval(t, y1, u, atom);
  const Vector y2 = x + half * k1;
  const Vector k2 = f.eval(t + half, y2, u, atom);
  const Vector y3 = x + half * k2;
  const Vector k3 = f.eval(t + half, y3, u, atom);
  const Vector y4 = x + h * k3;

  Vector bar_k1 = (h / 6.0) * lambda;
  Vector bar_k2 = (h / 3.0) * lambda;
  Vector bar_k3 = (h / 3.0) * lambda;
  const Vector bar_k4 = (h / 6.0) * lambda;
  Vector bar_x = lambda;

  const auto& Jx = *f.jacobian_x;
  const auto& Ju = *f.jacobian_u;

  const Vector bar_y4 = Jx(t + h, y4, u, atom).transpose() * bar_k4;
  grad_u += Ju(t + h, y4, u, atom).transpose() * bar_k4;
  bar_x += bar_y4;
  bar_k3 += h * bar_y4;

  const Vector bar_y3 = Jx(t + half, y3, u, atom).transpose() * bar_k3;
  grad_u += Ju(t + half, y3, u, atom).transpose() * bar_k3;
  bar_x += bar_y3;
  bar_k2 += half * bar_y3;

  const Vector bar_y2 = Jx(t + half, y2, u, atom).transpose() * bar_k2;
  grad_u += Ju(t + half, y2, u, atom).transpose() * bar_k2;
  bar_x += bar_y2;
  bar_k1 += half * bar_y2;

  bar_x += Jx(t, y1, u, atom).transpose() * bar_k1;
  grad_u += Ju(t, y1, u, atom).transpose() * bar_k1;
  lambda = std::move(bar_x);
}

Matrix project(const ProblemSpec& p, const TimeGrid& grid, Matrix u) {
  for (int j = 0; j < grid.steps(); ++j) {
    const auto [lo, hi] = p.controls.active_hull_box(grid.node(j));
    u.col(j) = u.col(j).cwiseMax(lo).cwiseMin(hi);
  }
  return u;
}

}  // namespace

Matrix reduced_cost_gradient(const ProblemSpec& p, const Matrix& phi, const ControlSignal& u, double* cost) {
  if (!p.differentiable())
    throw CapabilityError("reduced_cost_gradient: problem declares no derivatives");
  const Trajectory traj = integrate(p, EnsembleState(p.space, phi), u);
  const int M = p.space->size();
  const int N = u.grid.steps();
  const Vector& w = p.space->weights();
  std::vector<Matrix> per_atom(static_cast<std::size_t>(M), Matrix::Zero(p.m, N));
  for (int i = 0; i < M; ++i) {
    Matrix& g = per_atom[static_cast<std::size_t>(i)];
    Vector lambda = w[i] * (*p.cost.gradient)(traj.final_state().row(i).transpose(), i);
    for (int j = N - 1; j >= 0; --j)
      rk4_step_adjoint(p.dynamics, u.grid.node(j), u.grid.step(j),
                       traj.states[static_cast<std::size_t>(j)].row(i).transpose(), u.at(j), i, lambda,
                       g.col(j));
  }
  Matrix grad = Matrix::Zero(p.m, N);
  for (const auto& g : per_atom) grad += g;
  if (cost) *cost = terminal_functional(p, traj.final_state());
  return grad;
}

AdjointResult value_adjoint(const ProblemSpec& p, double s, const EnsembleState& phi, const TimeGrid& grid,
                            const AdjointOptions& opt) {
  if (!p.differentiable()) throw CapabilityError("value_adjoint: problem declares no derivatives");
  if (grid.start() != s) throw ArgumentError("value_adjoint: grid does not start at s");
  const int N = grid.steps();

  AdjointResult r;
  Matrix u(p.m, N);
  double width = 0.0;
  for (int j = 0; j < N; ++j) {
    const double t = grid.node(j);
    const auto [lo, hi] = p.controls.active_hull_box(t);
    u.col(j) = 0.5 * (lo + hi);
    width = std::max(width, (hi - lo).maxCoeff());
    r.hull_is_box = r.hull_is_box && p.controls.active_hull_is_box(t);
  }

  double J = 0.0;
  Matrix g = reduced_cost_gradient(p, phi.values(), ControlSignal{grid, u, {}}, &J);
  r.history.push_back(J);
  double alpha = 0.0;
  for (int it = 0; it < opt.iterations; ++it) {
    const double gmax = g.cwiseAbs().maxCoeff();
    if (gmax == 0.0 || width == 0.0) break;
    if (alpha == 0.0) alpha = width / gmax;
    bool accepted = false;
    Matrix candidate;
    double J_new = J;
    for (int back = 0; back < 60; ++back) {
      candidate = project(p, grid, u - alpha * g);
      const double decrease = (g.array() * (u - candidate).array()).sum();
      if (decrease <= 0.0) break;  // projected step vanished: stationary on the box
      J_new = reduced_cost(p, s, phi, ControlSignal{grid, candidate, {}});
      if (J_new <= J - 1e-4 * decrease) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    const double gain = J - J_new;
    u = std::move(candidate);
    J = J_new;
    r.history.push_back(J);
    ++r.iterations;
    if (gain <= opt.tolerance * (1.0 + std::abs(J))) break;
    g = reduced_cost_gradient(p, phi.values(), ControlSignal{grid, u, {}});
    alpha *= 4.0;
  }
  r.value = J;
  r.control = ControlSignal{grid, std::move(u), {}};
  return r;
}

}  // namespace ensoc
