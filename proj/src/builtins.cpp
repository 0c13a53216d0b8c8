#include <algorithm>
#include <cmath>

#include "ensoc/problem.hpp"

namespace ensoc {

namespace {

double certificate(double value) { return std::max(value, 1e-6); }

SpacePtr space_from_params(const BuiltinParams& params) {
  const int M = static_cast<int>(params.scalar("atoms", 2));
  if (M < 1) throw ArgumentError("builtin: 'atoms' must be >= 1");
  Vector weights = Vector::Constant(M, 1.0 / M);
  if (const auto* w = params.find("weights")) {
    if (static_cast<int>(w->size()) != M) throw DimensionError("builtin: 'weights' needs one entry per atom");
    weights = Eigen::Map<const Vector>(w->data(), M);
  }
  Matrix coords(M, 1);
  for (int i = 0; i < M; ++i) coords(i, 0) = M == 1 ? 0.0 : static_cast<double>(i) / (M - 1);
  if (const auto* c = params.find("coords")) {
    if (static_cast<int>(c->size()) != M) throw DimensionError("builtin: 'coords' needs one entry per atom");
    coords.col(0) = Eigen::Map<const Vector>(c->data(), M);
  }
  std::vector<std::string> ids;
  for (int i = 0; i < M; ++i) ids.push_back("w" + std::to_string(i));
  return std::make_shared<const ParameterSpace>(
      ParameterSpace::from_coordinates(std::move(ids), weights, coords));
}

double atom_coordinate(const ParameterSpace& space, int i) {
  if (space.has_coordinates()) return space.coordinates()(i, 0);
  return space.size() == 1 ? 0.0 : static_cast<double>(i) / (space.size() - 1);
}

/// Per-atom field: explicit list `key`, else key0 + key1 * coordinate.
Vector atom_field(const ParameterSpace& space, const BuiltinParams& params, const std::string& key,
                  double default0, double default1) {
  const int M = space.size();
  if (const auto* v = params.find(key)) {
    if (static_cast<int>(v->size()) == 1) return Vector::Constant(M, v->front());
    if (static_cast<int>(v->size()) != M)
      throw DimensionError("builtin: '" + key + "' needs one entry per atom");
    return Eigen::Map<const Vector>(v->data(), M);
  }
  const double c0 = params.scalar(key + "0", default0);
  const double c1 = params.scalar(key + "1", default1);
  Vector out(M);
  for (int i = 0; i < M; ++i) out[i] = c0 + c1 * atom_coordinate(space, i);
  return out;
}

/// Largest |v_i - v_j| / d(w_i, w_j): Lipschitz constant of an atom field.
double field_lipschitz(const ParameterSpace& space, const Vector& v) {
  double L = 0.0;
  for (int i = 0; i < space.size(); ++i)
    for (int j = i + 1; j < space.size(); ++j)
      L = std::max(L, std::abs(v[i] - v[j]) / space.distance(i, j));
  return L;
}

struct Common {
  SpacePtr space;
  int n;
  double rho;
  int levels;
  double T;
  double radius;
};

Common common(const BuiltinParams& params, SpacePtr space) {
  Common c{space ? std::move(space) : space_from_params(params),
           static_cast<int>(params.scalar("n", 1)),
           params.scalar("rho", 1.0),
           static_cast<int>(params.scalar("levels", 3)),
           params.scalar("T", 1.0),
           params.scalar("state_radius", 10.0)};
  if (c.n < 1) throw ArgumentError("builtin: 'n' must be >= 1");
  if (!(c.rho > 0.0)) throw ArgumentError("builtin: 'rho' must be positive");
  if (!(c.T > 0.0)) throw ArgumentError("builtin: 'T' must be positive");
  return c;
}

ProblemSpec linear_ensemble(const BuiltinParams& params, SpacePtr space) {
  const Common cm = common(params, std::move(space));
  const Vector a = atom_field(*cm.space, params, "a", 0.5, -1.0);
  const Vector c = atom_field(*cm.space, params, "c", 1.0, 0.0);
  const int n = cm.n;
  const double amax = a.cwiseAbs().maxCoeff();
  const double cmax = c.cwiseAbs().maxCoeff();
  const double L = field_lipschitz(*cm.space, a);
  const double T = cm.T, R = cm.radius;

  ProblemSpec p;
  p.name = "linear-ensemble";
  p.space = cm.space;
  p.n = n;
  p.m = n;
  p.horizon = T;
  p.box.state_radius = R;
  p.dynamics.eval = [a](double, const Vector& x, const Vector& u, int i) -> Vector {
    return a[i] * x + u;
  };
  p.dynamics.growth_c = certificate(std::max(amax, cm.rho * std::sqrt(double(n))));
  p.dynamics.lipschitz_k = certificate(amax);
  p.dynamics.omega_modulus = [T, L, R](double r) { return T * L * R * r; };
  p.dynamics.jacobian_x = [a, n](double, const Vector&, const Vector&, int i) -> Matrix {
    return a[i] * Matrix::Identity(n, n);
  };
  p.dynamics.jacobian_u = [n](double, const Vector&, const Vector&, int) -> Matrix {
    return Matrix::Identity(n, n);
  };
  p.cost.eval = [c](const Vector& x, int i) { return c[i] * x.sum(); };
  p.cost.gradient = [c](const Vector& x, int i) -> Vector {
    return Vector::Constant(x.size(), c[i]);
  };
  // c_i sum(x) >= -|c_i| sqrt(n) |x| >= -|c_i| sqrt(n) (1 + |x|^2) / 2
  p.cost.lower_bound_a = -0.5 * std::sqrt(double(n)) * c.cwiseAbs();
  p.cost.lower_bound_b = 0.5 * std::sqrt(double(n)) * cmax;
  p.controls = ControlSchedule::lattice(T, Vector::Constant(n, -cm.rho), Vector::Constant(n, cm.rho),
                                        cm.levels);
  return p;
}

ProblemSpec decoupled_quadratic(const BuiltinParams& params, SpacePtr space, bool zero_dynamics) {
  const Common cm = common(params, std::move(space));
  const Vector tau = atom_field(*cm.space, params, "tau", 0.0, 1.0);
  const int n = cm.n;

  ProblemSpec p;
  p.name = zero_dynamics ? "zero-dynamics" : "decoupled-quadratic";
  p.space = cm.space;
  p.n = n;
  p.m = n;
  p.horizon = cm.T;
  p.box.state_radius = cm.radius;
  if (zero_dynamics) {
    p.dynamics.eval = [n](double, const Vector&, const Vector&, int) -> Vector {
      return Vector::Zero(n);
    };
    p.dynamics.jacobian_u = [n](double, const Vector&, const Vector&, int) -> Matrix {
      return Matrix::Zero(n, n);
    };
    p.dynamics.growth_c = certificate(0.0);
  } else {
    p.dynamics.eval = [](double, const Vector&, const Vector& u, int) -> Vector { return u; };
    p.dynamics.jacobian_u = [n](double, const Vector&, const Vector&, int) -> Matrix {
      return Matrix::Identity(n, n);
    };
    p.dynamics.growth_c = certificate(cm.rho * std::sqrt(double(n)));
  }
  p.dynamics.lipschitz_k = certificate(0.0);
  p.dynamics.omega_modulus = [](double) { return 0.0; };
  p.dynamics.jacobian_x = [n](double, const Vector&, const Vector&, int) -> Matrix {
    return Matrix::Zero(n, n);
  };
  p.cost.eval = [tau](const Vector& x, int i) {
    return (x - Vector::Constant(x.size(), tau[i])).squaredNorm();
  };
  p.cost.gradient = [tau](const Vector& x, int i) -> Vector {
    return 2.0 * (x - Vector::Constant(x.size(), tau[i]));
  };
  p.cost.lower_bound_a = Vector::Zero(cm.space->size());
  p.cost.lower_bound_b = 0.0;
  p.controls = ControlSchedule::lattice(cm.T, Vector::Constant(n, -cm.rho),
                                        Vector::Constant(n, cm.rho), cm.levels);
  return p;
}

ProblemSpec bilinear(const BuiltinParams& params, SpacePtr space) {
  const Common cm = common(params, std::move(space));
  const Vector a = atom_field(*cm.space, params, "a", 1.0, 0.5);
  const int n = cm.n;
  const double amax = a.cwiseAbs().maxCoeff();
  const double L = field_lipschitz(*cm.space, a);
  const double T = cm.T, R = cm.radius, rho = cm.rho;

  ProblemSpec p;
  p.name = "bilinear";
  p.space = cm.space;
  p.n = n;
  p.m = 1;
  p.horizon = T;
  p.box.state_radius = R;
  p.dynamics.eval = [a](double, const Vector& x, const Vector& u, int i) -> Vector {
    return u[0] * a[i] * x;
  };
  p.dynamics.growth_c = certificate(rho * amax);
  p.dynamics.lipschitz_k = certificate(rho * amax);
  p.dynamics.omega_modulus = [T, L, R, rho](double r) { return T * rho * L * R * r; };
  p.dynamics.jacobian_x = [a, n](double, const Vector&, const Vector& u, int i) -> Matrix {
    return u[0] * a[i] * Matrix::Identity(n, n);
  };
  p.dynamics.jacobian_u = [a](double, const Vector& x, const Vector&, int i) -> Matrix {
    return a[i] * x;
  };
  p.cost.eval = [](const Vector& x, int) { return x.squaredNorm(); };
  p.cost.gradient = [](const Vector& x, int) -> Vector { return 2.0 * x; };
  p.cost.lower_bound_a = Vector::Zero(cm.space->size());
  p.cost.lower_bound_b = 0.0;
  p.controls = ControlSchedule::lattice(T, Vector::Constant(1, -rho), Vector::Constant(1, rho),
                                        cm.levels);
  return p;
}

}  // namespace

BuiltinParams& BuiltinParams::set(const std::string& key, std::vector<double> value) {
  for (auto& [k, v] : entries)
    if (k == key) {
      v = std::move(value);
      return *this;
    }
  entries.emplace_back(key, std::move(value));
  return *this;
}

const std::vector<double>* BuiltinParams::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

double BuiltinParams::scalar(const std::string& key, double fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (v->size() != 1) throw DimensionError("builtin parameter '" + key + "' must be a scalar");
  return v->front();
}

std::vector<std::string> builtin_names() {
  return {"linear-ensemble", "decoupled-quadratic", "bilinear", "zero-dynamics"};
}

ProblemSpec builtin(const std::string& name, const BuiltinParams& params, SpacePtr space) {
  ProblemSpec p;
  if (name == "linear-ensemble")
    p = linear_ensemble(params, std::move(space));
  else if (name == "decoupled-quadratic")
    p = decoupled_quadratic(params, std::move(space), false);
  else if (name == "zero-dynamics")
    p = decoupled_quadratic(params, std::move(space), true);
  else if (name == "bilinear")
    p = bilinear(params, std::move(space));
  else
    throw LookupError("unknown builtin problem '" + name + "'");
  p.validate_structure();
  return p;
}

// --- closed form for linear-ensemble ---------------------------------------

LinearEnsembleOracle::LinearEnsembleOracle(Vector weights, Vector a, Vector c, double rho, double T,
                                           int n)
    : w_(std::move(weights)), a_(std::move(a)), c_(std::move(c)), rho_(rho), T_(T), n_(n) {}

LinearEnsembleOracle LinearEnsembleOracle::from_params(const ParameterSpace& space,
                                                       const BuiltinParams& params) {
  return LinearEnsembleOracle(space.weights(), atom_field(space, params, "a", 0.5, -1.0),
                              atom_field(space, params, "c", 1.0, 0.0), params.scalar("rho", 1.0),
                              params.scalar("T", 1.0), static_cast<int>(params.scalar("n", 1)));
}

double LinearEnsembleOracle::psi(double s) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w_.size(); ++i) acc += w_[i] * c_[i] * std::exp(a_[i] * (T_ - s));
  return acc;
}

double LinearEnsembleOracle::optimal_control(double s) const {
  const double p = psi(s);
  return p > 0.0 ? -rho_ : (p < 0.0 ? rho_ : 0.0);
}

double LinearEnsembleOracle::psi_antiderivative(double s) const {
  // d/ds of -(T-s) * expm1(a(T-s)) / (a(T-s)) is exp(a(T-s)); the a -> 0 limit is -(T-s)
  double acc = 0.0;
  const double h = T_ - s;
  for (Eigen::Index i = 0; i < w_.size(); ++i) {
    const double z = a_[i] * h;
    const double ratio = z == 0.0 ? 1.0 : std::expm1(z) / z;
    acc += -w_[i] * c_[i] * h * ratio;
  }
  return acc;
}

std::vector<double> LinearEnsembleOracle::psi_zeros(double s) const {
  std::vector<double> zeros;
  constexpr int kScan = 4096;
  double lo = s, plo = psi(s);
  for (int q = 1; q <= kScan; ++q) {
    const double hi = s + (T_ - s) * q / kScan;
    const double phi = psi(hi);
    if ((plo < 0.0 && phi > 0.0) || (plo > 0.0 && phi < 0.0)) {
      double a = lo, b = hi, pa = plo;
      for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
        const double mid = 0.5 * (a + b);
        const double pm = psi(mid);
        if ((pm < 0.0) == (pa < 0.0)) {
          a = mid;
          pa = pm;
        } else {
          b = mid;
        }
      }
      zeros.push_back(0.5 * (a + b));
    }
    lo = hi;
    plo = phi;
  }
  return zeros;
}

double LinearEnsembleOracle::abs_psi_integral(double s) const {
  std::vector<double> cuts{s};
  for (double z : psi_zeros(s)) cuts.push_back(z);
  cuts.push_back(T_);
  double total = 0.0;
  for (std::size_t k = 1; k < cuts.size(); ++k)
    total += std::abs(psi_antiderivative(cuts[k]) - psi_antiderivative(cuts[k - 1]));
  return total;
}

double LinearEnsembleOracle::value(double s, const Matrix& phi) const {
  double affine = 0.0;
  for (Eigen::Index i = 0; i < w_.size(); ++i)
    affine += w_[i] * c_[i] * std::exp(a_[i] * (T_ - s)) * phi.row(i).sum();
  return affine - n_ * rho_ * abs_psi_integral(s);
}

}  // namespace ensoc
