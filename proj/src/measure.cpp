#include "ensoc/measure.hpp"

#include <limits>
#include <sstream>

namespace ensoc {

namespace {

std::string atom_label(const std::vector<std::string>& ids, int i) {
  std::ostringstream os;
  os << i << " ('" << ids[static_cast<std::size_t>(i)] << "')";
  return os.str();
}

}  // namespace

ParameterSpace::ParameterSpace(std::vector<std::string> ids, Eigen::VectorXd weights,
                               Eigen::MatrixXd metric, Eigen::MatrixXd coordinates)
    : ids_(std::move(ids)),
      weights_(std::move(weights)),
      metric_(std::move(metric)),
      coordinates_(std::move(coordinates)) {
  const auto m = weights_.size();
  if (m < 1) throw ValidationError("parameter space needs at least one atom");
  if (static_cast<Eigen::Index>(ids_.size()) != m)
    throw ValidationError("parameter space: " + std::to_string(ids_.size()) + " ids for " +
                          std::to_string(m) + " weights");
  if (metric_.rows() != m || metric_.cols() != m)
    throw ValidationError("parameter space: metric must be " + std::to_string(m) + "x" +
                          std::to_string(m));
  if (coordinates_.size() > 0 && coordinates_.rows() != m)
    throw ValidationError("parameter space: coordinate rows must match atom count");
  if (coordinates_.size() == 0) coordinates_.resize(m, 0);

  for (Eigen::Index i = 0; i < m; ++i) {
    const double w = weights_[i];
    if (!std::isfinite(w) || w <= 0.0)
      throw ValidationError("parameter space: weight of atom " +
                            atom_label(ids_, static_cast<int>(i)) + " must be positive and finite");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (metric_(i, i) != 0.0)
      throw ValidationError("parameter space: metric diagonal nonzero at atom " +
                            atom_label(ids_, static_cast<int>(i)));
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d = metric_(i, j);
      if (!std::isfinite(d) || d < 0.0)
        throw ValidationError("parameter space: metric entry (" + std::to_string(i) + "," +
                              std::to_string(j) + ") must be finite and nonnegative");
      if (d != metric_(j, i))
        throw ValidationError("parameter space: metric not symmetric at atoms (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
      if (i != j && d == 0.0)
        throw ValidationError("parameter space: distinct atoms (" + std::to_string(i) + "," +
                              std::to_string(j) + ") at distance zero");
    }
  }
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index k = 0; k < m; ++k) {
        const double lhs = metric_(i, j);
        const double rhs = metric_(i, k) + metric_(k, j);
        if (lhs > rhs * (1.0 + 1e-12) + 1e-300)
          throw ValidationError("parameter space: triangle inequality fails for atoms (" +
                                std::to_string(i) + "," + std::to_string(j) + ") via " +
                                std::to_string(k));
      }
  for (std::size_t i = 0; i < ids_.size(); ++i)
    for (std::size_t j = i + 1; j < ids_.size(); ++j)
      if (ids_[i] == ids_[j])
        throw ValidationError("parameter space: duplicate atom id '" + ids_[i] + "' at " +
                              std::to_string(i) + " and " + std::to_string(j));
}

ParameterSpace ParameterSpace::from_coordinates(std::vector<std::string> ids,
                                                Eigen::VectorXd weights,
                                                Eigen::MatrixXd coordinates) {
  const auto m = coordinates.rows();
  Eigen::MatrixXd metric(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      metric(i, j) = i == j ? 0.0 : (coordinates.row(i) - coordinates.row(j)).norm();
  return ParameterSpace(std::move(ids), std::move(weights), std::move(metric),
                        std::move(coordinates));
}

ParameterSpace ParameterSpace::uniform_line(int atoms, double total) {
  if (atoms < 1) throw ArgumentError("uniform_line: need at least one atom");
  std::vector<std::string> ids;
  Eigen::MatrixXd coords(atoms, 1);
  for (int i = 0; i < atoms; ++i) {
    ids.push_back("w" + std::to_string(i));
    coords(i, 0) = atoms == 1 ? 0.0 : static_cast<double>(i) / (atoms - 1);
  }
  return from_coordinates(std::move(ids), Eigen::VectorXd::Constant(atoms, total / atoms),
                          std::move(coords));
}

int ParameterSpace::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < ids_.size(); ++i)
    if (ids_[i] == id) return static_cast<int>(i);
  throw LookupError("no atom with id '" + id + "'");
}

EnsembleState::EnsembleState(SpacePtr space, Eigen::MatrixXd values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw ArgumentError("ensemble state requires a parameter space");
  if (values_.rows() != space_->size())
    throw DimensionError("ensemble state has " + std::to_string(values_.rows()) +
                         " rows, space has " + std::to_string(space_->size()) + " atoms");
  if (values_.cols() < 1) throw DimensionError("ensemble state dimension must be >= 1");
  if (!values_.allFinite()) throw ArgumentError("ensemble state contains non-finite entries");
}

EnsembleState::EnsembleState(SpacePtr space, int n)
    : EnsembleState(space, Eigen::MatrixXd::Zero(space ? space->size() : 0, n)) {}

Eigen::VectorXd EnsembleState::stacked() const {
  Eigen::VectorXd z(values_.size());
  for (int i = 0; i < atoms(); ++i)
    for (int k = 0; k < dim(); ++k) z[i * dim() + k] = values_(i, k);
  return z;
}

EnsembleState EnsembleState::from_stacked(SpacePtr space, int n, const Eigen::VectorXd& z) {
  const int m = space->size();
  if (z.size() != static_cast<Eigen::Index>(m) * n)
    throw DimensionError("stacked vector length does not match M*n");
  Eigen::MatrixXd v(m, n);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < n; ++k) v(i, k) = z[i * n + k];
  return EnsembleState(std::move(space), std::move(v));
}

double l2_inner(const EnsembleState& phi, const EnsembleState& psi) {
  if (phi.space() != psi.space() &&
      (phi.atoms() != psi.atoms() || phi.space()->weights() != psi.space()->weights()))
    throw DimensionError("l2_inner: states live on different parameter spaces");
  if (phi.dim() != psi.dim()) throw DimensionError("l2_inner: state dimensions differ");
  return weighted_inner(phi.space()->weights(), phi.values(), psi.values());
}

double l2_norm(const EnsembleState& phi) { return std::sqrt(l2_inner(phi, phi)); }

double ball_mass(const ParameterSpace& space, double r) {
  if (!(r > 0.0)) throw ArgumentError("ball_mass: radius must be positive");
  double h = std::numeric_limits<double>::infinity();
  for (int i = 0; i < space.size(); ++i) {
    double mass = 0.0;
    for (int j = 0; j < space.size(); ++j)
      if (space.distance(i, j) < r) mass += space.weights()[j];
    h = std::min(h, mass);
  }
  return h;
}

Eigen::MatrixXd ball_average(const ParameterSpace& space, const Eigen::MatrixXd& F, double r) {
  if (!(r > 0.0)) throw ArgumentError("ball_average: radius must be positive");
  if (F.rows() != space.size()) throw DimensionError("ball_average: row count mismatch");
  Eigen::MatrixXd out(F.rows(), F.cols());
  for (int i = 0; i < space.size(); ++i) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(F.cols());
    double mass = 0.0;
    int members = 0;
    for (int j = 0; j < space.size(); ++j)
      if (space.distance(i, j) < r) {
        acc += space.weights()[j] * F.row(j);
        mass += space.weights()[j];
        ++members;
      }
    // singleton balls keep the row bit-exact
    out.row(i) = members == 1 ? Eigen::RowVectorXd(F.row(i)) : Eigen::RowVectorXd(acc / mass);
  }
  return out;
}

EnsembleState ball_average(const ParameterSpace& space, const EnsembleState& F, double r) {
  return EnsembleState(F.space(), ball_average(space, F.values(), r));
}

}  // namespace ensoc
