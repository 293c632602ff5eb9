#pragma once

#include <Eigen/Dense>

#include "skewrd/mesh.hpp"

namespace skewrd {

enum class BasisKind {
  kOrthonormal,  // L2-orthonormal on the reference element
  kMonomial,     // reference-coordinate monomials, ordered by total degree
};

/// Polynomial basis of P_k on the reference element.
///
/// The orthonormal basis is obtained from the monomials through the inverse
/// Cholesky factor of their reference Gram matrix; in 1D this reproduces the
/// scaled Legendre polynomials, in 2D a Dubiner-equivalent orthonormal set.
class ReferenceBasis {
 public:
  ReferenceBasis(int dim, int degree, BasisKind kind);

  int dim() const noexcept { return dim_; }
  int degree() const noexcept { return degree_; }
  BasisKind kind() const noexcept { return kind_; }
  int size() const noexcept { return size_; }

  /// Basis values at a reference point.
  Eigen::VectorXd values(const Point& xi) const;
  /// Reference gradients, one row per basis function (size x dim).
  Eigen::MatrixXd gradients(const Point& xi) const;
  /// Gram matrix of the basis on the reference element.
  const Eigen::MatrixXd& reference_mass() const noexcept { return gram_; }
  /// Measure of the reference element (1 or 1/2).
  double reference_measure() const noexcept { return dim_ == 1 ? 1.0 : 0.5; }

 private:
  void monomials(const Point& xi, Eigen::VectorXd& m, Eigen::MatrixXd* grad) const;

  int dim_;
  int degree_;
  BasisKind kind_;
  int size_;
  Eigen::MatrixXd transform_;  // basis = transform_ * monomials
  Eigen::MatrixXd gram_;
};

/// Local dimension of P_k: k + 1 in 1D, (k + 1)(k + 2) / 2 in 2D.
int local_dimension(int dim, int degree);

}  // namespace skewrd
