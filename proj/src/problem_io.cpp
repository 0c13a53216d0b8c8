#include <cmath>
#include <fstream>

#include "ensoc/expression.hpp"
#include "ensoc/io.hpp"

namespace ensoc {

namespace {

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

void check_header(const Json& j, const std::string& format, int version) {
  if (j.contains("format") && j.at("format") != format)
    throw ParseError("expected format '" + format + "', got " + j.at("format").dump());
  if (j.contains("version") && j.at("version").get<int>() != version)
    throw ParseError(format + ": unsupported version " + j.at("version").dump());
}

Vector vector_field(const Json& j, int size, const std::string& what) {
  if (j.is_number()) return Vector::Constant(size, j.get<double>());
  const auto v = j.get<std::vector<double>>();
  if (static_cast<int>(v.size()) != size)
    throw DimensionError(what + ": expected " + std::to_string(size) + " entries");
  return Eigen::Map<const Vector>(v.data(), size);
}

SpacePtr resolve_space(const Json& j, const std::filesystem::path& base) {
  if (j.is_string()) return std::make_shared<const ParameterSpace>(load_space(base / j.get<std::string>()));
  return std::make_shared<const ParameterSpace>(space_from_json(j));
}

/// Evaluation slots shared by all expressions of one problem.
struct Slots {
  int n, m, d;
  std::vector<std::string> names;

  Slots(int n_, int m_, int d_) : n(n_), m(m_), d(d_) {
    names.push_back("t");
    for (int k = 1; k <= n; ++k) names.push_back("x" + std::to_string(k));
    for (int k = 1; k <= m; ++k) names.push_back("u" + std::to_string(k));
    for (int k = 1; k <= d; ++k) names.push_back("w" + std::to_string(k));
    if (n == 1) names.push_back("x");
    if (m == 1) names.push_back("u");
    if (d == 1) names.push_back("w");
  }

  void fill(std::vector<double>& buf, double t, const Vector& x, const Vector& u,
            const Eigen::RowVectorXd& w) const {
    buf.resize(names.size());
    std::size_t k = 0;
    buf[k++] = t;
    for (int q = 0; q < n; ++q) buf[k++] = x[q];
    for (int q = 0; q < m; ++q) buf[k++] = u[q];
    for (int q = 0; q < d; ++q) buf[k++] = w[q];
    if (n == 1) buf[k++] = x[0];
    if (m == 1) buf[k++] = u[0];
    if (d == 1) buf[k++] = w[0];
  }
};

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& at, int rows) {
  Matrix J(rows, at.size());
  for (Eigen::Index k = 0; k < at.size(); ++k) {
    const double h = 1e-6 * (1.0 + std::abs(at[k]));
    Vector lo = at, hi = at;
    lo[k] -= h;
    hi[k] += h;
    J.col(k) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return J;
}

ControlSchedule controls_from_json(const Json& j, int m, double T) {
  const Vector lo = vector_field(j.at("box_lo"), m, "controls.box_lo");
  const Vector hi = vector_field(j.at("box_hi"), m, "controls.box_hi");
  if (j.contains("levels")) return ControlSchedule::lattice(T, lo, hi, j.at("levels").get<int>());
  auto breaks = j.at("breakpoints").get<std::vector<double>>();
  std::vector<Matrix> sets;
  for (const auto& set : j.at("sets")) {
    Matrix pts(m, static_cast<Eigen::Index>(set.size()));
    Eigen::Index c = 0;
    for (const auto& point : set) pts.col(c++) = vector_field(point, m, "controls.sets point");
    sets.push_back(std::move(pts));
  }
  return ControlSchedule(std::move(breaks), std::move(sets), lo, hi);
}

ProblemSpec expression_problem(const Json& j, const std::filesystem::path& base) {
  if (j.contains("grammar") && j.at("grammar").get<int>() != kExpressionGrammarVersion)
    throw ParseError("unsupported expression grammar version " + j.at("grammar").dump());
  ProblemSpec p;
  p.name = j.value("name", std::string("expression"));
  p.space = resolve_space(j.at("space"), base);
  p.n = j.at("state_dim").get<int>();
  p.m = j.at("control_dim").get<int>();
  p.horizon = j.at("horizon").get<double>();
  const SpacePtr space = p.space;
  const auto slots = std::make_shared<const Slots>(p.n, p.m, space->coordinate_dim());

  std::vector<Expression> fields;
  for (const auto& src : j.at("dynamics")) fields.push_back(Expression::parse(src.get<std::string>(), slots->names));
  if (static_cast<int>(fields.size()) != p.n)
    throw DimensionError("dynamics: expected " + std::to_string(p.n) + " component expressions");
  const auto dyn = std::make_shared<const std::vector<Expression>>(std::move(fields));
  const auto cost = std::make_shared<const Expression>(Expression::parse(j.at("cost").get<std::string>(), slots->names));

  p.dynamics.eval = [dyn, slots, space](double t, const Vector& x, const Vector& u, int i) -> Vector {
    thread_local std::vector<double> buf;
    slots->fill(buf, t, x, u, space->coordinates().row(i));
    Vector out(static_cast<Eigen::Index>(dyn->size()));
    for (std::size_t k = 0; k < dyn->size(); ++k) out[static_cast<Eigen::Index>(k)] = (*dyn)[k].eval(buf);
    return out;
  };
  const Vector zero_u = Vector::Zero(p.m);
  p.cost.eval = [cost, slots, space, zero_u](const Vector& x, int i) {
    thread_local std::vector<double> buf;
    slots->fill(buf, 0.0, x, zero_u, space->coordinates().row(i));
    return cost->eval(buf);
  };
  p.dynamics.growth_c = j.at("growth_c").get<double>();
  p.dynamics.lipschitz_k = j.at("lipschitz_k").get<double>();
  if (j.contains("modulus")) {
    const auto mod = std::make_shared<const Expression>(
        Expression::parse(j.at("modulus").get<std::string>(), {"r"}));
    p.dynamics.omega_modulus = [mod](double r) { return mod->eval(std::span<const double>(&r, 1)); };
  }
  p.cost.lower_bound_a = vector_field(j.value("cost_lower_a", Json(0.0)), space->size(), "cost_lower_a");
  p.cost.lower_bound_b = j.value("cost_lower_b", 0.0);
  p.controls = controls_from_json(j.at("controls"), p.m, p.horizon);
  p.box.state_radius = j.value("validation_radius", 10.0);

  if (j.value("differentiable", false)) {
    const auto f = p.dynamics.eval;
    const auto g = p.cost.eval;
    const int n = p.n;
    p.dynamics.jacobian_x = [f, n](double t, const Vector& x, const Vector& u, int i) {
      return fd_jacobian([&](const Vector& y) { return f(t, y, u, i); }, x, n);
    };
    p.dynamics.jacobian_u = [f, n](double t, const Vector& x, const Vector& u, int i) {
      return fd_jacobian([&](const Vector& v) { return f(t, x, v, i); }, u, n);
    };
    p.cost.gradient = [g](const Vector& x, int i) -> Vector {
      const Matrix J = fd_jacobian([&](const Vector& y) { return Vector::Constant(1, g(y, i)); }, x, 1);
      return J.row(0).transpose();
    };
  }
  p.validate_structure();
  return p;
}

}  // namespace

Json space_to_json(const ParameterSpace& space) {
  Json atoms = Json::array();
  for (int i = 0; i < space.size(); ++i) {
    Json a{{"id", space.ids()[static_cast<std::size_t>(i)]}};
    if (space.has_coordinates()) {
      std::vector<double> c;
      for (int k = 0; k < space.coordinate_dim(); ++k) c.push_back(space.coordinates()(i, k));
      a["coords"] = c;
    }
    atoms.push_back(std::move(a));
  }
  Json metric = Json::array();
  for (int i = 0; i < space.size(); ++i) {
    std::vector<double> row;
    for (int k = 0; k < space.size(); ++k) row.push_back(space.distance(i, k));
    metric.push_back(row);
  }
  std::vector<double> w(space.weights().data(), space.weights().data() + space.size());
  return Json{{"format", "ensoc-space"},
              {"version", kSpaceFormatVersion},
              {"atoms", atoms},
              {"weights", w},
              {"metric", metric}};
}

ParameterSpace space_from_json(const Json& j) {
  try {
    check_header(j, "ensoc-space", kSpaceFormatVersion);
    const Json& atoms = j.at("atoms");
    const int M = static_cast<int>(atoms.size());
    std::vector<std::string> ids;
    Matrix coords;
    bool with_coords = M > 0 && atoms[0].contains("coords");
    for (int i = 0; i < M; ++i) {
      const Json& a = atoms[static_cast<std::size_t>(i)];
      ids.push_back(a.contains("id") ? a.at("id").get<std::string>() : "w" + std::to_string(i));
      if (a.contains("coords") != with_coords)
        throw ValidationError("space: atom " + std::to_string(i) +
                              " disagrees with atom 0 on having coordinates");
      if (with_coords) {
        const auto c = a.at("coords").get<std::vector<double>>();
        if (i == 0) coords.resize(M, static_cast<Eigen::Index>(c.size()));
        if (static_cast<Eigen::Index>(c.size()) != coords.cols())
          throw DimensionError("space: atom " + std::to_string(i) + " has " +
                               std::to_string(c.size()) + " coordinates, atom 0 has " +
                               std::to_string(coords.cols()));
        for (std::size_t k = 0; k < c.size(); ++k) coords(i, static_cast<Eigen::Index>(k)) = c[k];
      }
    }
    const Vector weights = vector_field(j.at("weights"), M, "space.weights");
    if (j.contains("metric")) {
      const auto rows = j.at("metric").get<std::vector<std::vector<double>>>();
      Matrix metric(M, M);
      if (static_cast<int>(rows.size()) != M) throw ValidationError("space: metric must have one row per atom");
      for (int i = 0; i < M; ++i) {
        if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != M)
          throw ValidationError("space: metric row " + std::to_string(i) + " has wrong length");
        for (int k = 0; k < M; ++k) metric(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      }
      return ParameterSpace(std::move(ids), weights, std::move(metric), std::move(coords));
    }
    if (!with_coords) throw ValidationError("space: need either coordinates or an explicit metric");
    return ParameterSpace::from_coordinates(std::move(ids), weights, std::move(coords));
  } catch (const Json::exception& e) {
    throw ParseError(std::string("space: ") + e.what());
  }
}

ParameterSpace load_space(const std::filesystem::path& path) { return space_from_json(read_json(path)); }

void save_space(const std::filesystem::path& path, const ParameterSpace& space) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << space_to_json(space).dump(2) << '\n';
}

BuiltinParams params_from_json(const Json& j) {
  BuiltinParams p;
  if (j.is_null()) return p;
  for (const auto& [key, value] : j.items()) {
    if (value.is_number())
      p.set(key, value.get<double>());
    else if (value.is_array())
      p.set(key, value.get<std::vector<double>>());
    else
      throw ParseError("builtin parameter '" + key + "' must be a number or a list of numbers");
  }
  return p;
}

Json params_to_json(const BuiltinParams& params) {
  Json j = Json::object();
  for (const auto& [k, v] : params.entries) {
    if (v.size() == 1)
      j[k] = v.front();
    else
      j[k] = v;
  }
  return j;
}

ProblemSpec problem_from_json(const Json& j, const std::filesystem::path& base_dir) {
  try {
    check_header(j, "ensoc-problem", kProblemFormatVersion);
    if (j.contains("builtin")) {
      SpacePtr space;
      if (j.contains("space")) space = resolve_space(j.at("space"), base_dir);
      return builtin(j.at("builtin").get<std::string>(),
                     params_from_json(j.value("parameters", Json::object())), space);
    }
    return expression_problem(j, base_dir);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("problem: ") + e.what());
  }
}

ProblemSpec load_problem(const std::filesystem::path& path) {
  return problem_from_json(read_json(path), path.parent_path());
}

}  // namespace ensoc
