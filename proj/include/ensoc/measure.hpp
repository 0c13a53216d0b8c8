#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ensoc/errors.hpp"

namespace ensoc {

/// Finite atomization of a compact metric measure space.
///
/// Atoms carry an opaque label and optionally a coordinate embedding in R^d.
/// Weights are positive masses whose sum is the total mass; they are not
/// normalized. The pairwise metric is validated eagerly (symmetry, zero
/// diagonal, triangle inequality), which costs O(M^3).
class ParameterSpace {
 public:
  /// Metric given explicitly. `coordinates` may be empty (0 columns).
  ParameterSpace(std::vector<std::string> ids, Eigen::VectorXd weights,
                 Eigen::MatrixXd metric, Eigen::MatrixXd coordinates = {});

  /// Metric induced by the Euclidean distance between coordinate rows.
  static ParameterSpace from_coordinates(std::vector<std::string> ids,
                                         Eigen::VectorXd weights,
                                         Eigen::MatrixXd coordinates);

  /// M equally weighted atoms on [0,1] (or a single atom at 0), mass `total`.
  static ParameterSpace uniform_line(int atoms, double total = 1.0);

  int size() const { return static_cast<int>(weights_.size()); }
  const std::vector<std::string>& ids() const { return ids_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::MatrixXd& metric() const { return metric_; }
  const Eigen::MatrixXd& coordinates() const { return coordinates_; }
  bool has_coordinates() const { return coordinates_.cols() > 0; }
  int coordinate_dim() const { return static_cast<int>(coordinates_.cols()); }

  double distance(int i, int j) const { return metric_(i, j); }
  double total_mass() const { return weights_.sum(); }
  double diameter() const { return metric_.maxCoeff(); }

  /// Index of the atom with the given label; LookupError if absent.
  int index_of(const std::string& id) const;

 private:
  std::vector<std::string> ids_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd metric_;
  Eigen::MatrixXd coordinates_;
};

using SpacePtr = std::shared_ptr<const ParameterSpace>;

/// A point of the discretized L^2(mu, Omega; R^n): one state row per atom.
class EnsembleState {
 public:
  EnsembleState(SpacePtr space, Eigen::MatrixXd values);
  /// Zero state of dimension n.
  EnsembleState(SpacePtr space, int n);

  const SpacePtr& space() const { return space_; }
  const Eigen::MatrixXd& values() const { return values_; }
  int atoms() const { return static_cast<int>(values_.rows()); }
  int dim() const { return static_cast<int>(values_.cols()); }
  Eigen::VectorXd row(int atom) const { return values_.row(atom).transpose(); }

  /// Stacked ensemble coordinates, atom-major: z[i*n + k] = x_i[k].
  Eigen::VectorXd stacked() const;
  static EnsembleState from_stacked(SpacePtr space, int n, const Eigen::VectorXd& z);

 private:
  SpacePtr space_;
  Eigen::MatrixXd values_;
};

/// Weighted pairing sum_i w_i <a_i, b_i> over atom rows.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar weighted_inner(const Eigen::VectorXd& weights,
                                         const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != weights.size())
    throw DimensionError("weighted_inner: shape mismatch");
  Scalar acc(0);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    acc += static_cast<Scalar>(weights[i]) * a.row(i).dot(b.row(i).template cast<Scalar>());
  return acc;
}

double l2_inner(const EnsembleState& phi, const EnsembleState& psi);
double l2_norm(const EnsembleState& phi);

/// h(r): smallest mass of an open r-ball centered at an atom.
double ball_mass(const ParameterSpace& space, double r);

/// Atom-wise mu-weighted mean of F over the open r-ball around each atom.
EnsembleState ball_average(const ParameterSpace& space, const EnsembleState& F, double r);

/// Same as ball_average on a raw M x n block.
Eigen::MatrixXd ball_average(const ParameterSpace& space, const Eigen::MatrixXd& F, double r);

}  // namespace ensoc
