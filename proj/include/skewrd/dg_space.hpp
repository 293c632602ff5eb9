#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "skewrd/basis.hpp"
#include "skewrd/errors.hpp"
#include "skewrd/mesh.hpp"
#include "skewrd/quadrature.hpp"

namespace skewrd {

using SparseOperator = Eigen::SparseMatrix<double>;

/// N x N matrix made of square blocks on the diagonal, one per element.
struct BlockDiagonal {
  int block = 0;
  Eigen::MatrixXd blocks;  // block x (block * count), blocks side by side

  std::size_t count() const noexcept {
    return block == 0 ? 0 : static_cast<std::size_t>(blocks.cols() / block);
  }
  auto operator[](std::size_t e) { return blocks.middleCols(static_cast<Eigen::Index>(e) * block, block); }
  auto operator[](std::size_t e) const {
    return blocks.middleCols(static_cast<Eigen::Index>(e) * block, block);
  }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  SparseOperator to_sparse() const;
};

/// Trace data of one interior face at its quadrature points.
struct FaceTrace {
  int left = -1;
  int right = -1;
  double h = 0.0;
  Eigen::VectorXd weights;      // physical weights (edge length folded in)
  Eigen::MatrixXd values_left;  // nq x nloc
  Eigen::MatrixXd values_right;
  Eigen::MatrixXd normal_derivative_left;  // grad(phi) . n, n from `left`
  Eigen::MatrixXd normal_derivative_right;
};

struct AssemblyOptions {
  /// Worker threads for the element-local kernels. Insertion into the global
  /// operator always runs in element, then face, index order.
  unsigned threads = 1;
};

/// Broken polynomial space D_k over a mesh, with one block of N_loc degrees of
/// freedom per element (DoF i lives on element i / N_loc).
class DgSpace {
 public:
  DgSpace(std::shared_ptr<const Mesh> mesh, int degree, BasisKind kind = BasisKind::kOrthonormal,
          std::optional<double> sigma = std::nullopt);

  const Mesh& mesh() const noexcept { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const noexcept { return mesh_; }
  int dim() const noexcept { return mesh_->dim(); }
  int degree() const noexcept { return basis_.degree(); }
  int local_size() const noexcept { return basis_.size(); }
  std::size_t num_elements() const noexcept { return mesh_->num_elements(); }
  std::size_t size() const noexcept { return num_elements() * static_cast<std::size_t>(local_size()); }
  double sigma() const noexcept { return sigma_; }
  const ReferenceBasis& basis() const noexcept { return basis_; }

  std::size_t element_of(std::size_t dof) const noexcept {
    return dof / static_cast<std::size_t>(local_size());
  }
  Eigen::Index first_dof(std::size_t element) const noexcept {
    return static_cast<Eigen::Index>(element) * local_size();
  }

  /// Reference quadrature and the basis tabulated on it (nq x nloc).
  const QuadratureRule& volume_rule() const noexcept { return volume_rule_; }
  const Eigen::MatrixXd& volume_values() const noexcept { return volume_values_; }
  /// |det J| of the affine map of an element.
  double jacobian_det(std::size_t element) const noexcept { return det_[element]; }
  /// Physical basis gradients at volume point q (nloc x dim).
  Eigen::MatrixXd physical_gradients(std::size_t element, std::size_t q) const;

  Point to_physical(std::size_t element, const Point& xi) const;
  Point to_reference(std::size_t element, const Point& x) const;

  const std::vector<FaceTrace>& interior_traces() const noexcept { return traces_; }

  /// Value of the discrete function at a physical point inside `element`.
  double evaluate(const Eigen::VectorXd& coeffs, std::size_t element, const Point& x) const;
  /// Values at the volume quadrature points of `element`.
  Eigen::VectorXd values_at_quadrature(const Eigen::VectorXd& coeffs, std::size_t element) const {
    return volume_values_ * coeffs.segment(first_dof(element), local_size());
  }

  /// Local L2 projection of a function.
  Eigen::VectorXd project(const std::function<double(const Point&)>& fn) const;
  /// Coefficients of the function that equals values[e] on element e.
  Eigen::VectorXd project_piecewise_constant(std::span<const double> values) const;
  /// Load vector b_i = integral of phi_i (equals M times the constant-one coefficients).
  Eigen::VectorXd constant_load() const;

  /// Element-local reaction kernel: out_i = int_E f(u_h) phi_i.
  template <class Fn>
  void element_reaction(std::size_t e, const Eigen::Ref<const Eigen::VectorXd>& local, Fn&& f,
                        Eigen::Ref<Eigen::VectorXd> out) const {
    const Eigen::VectorXd uq = volume_values_ * local;
    out.setZero();
    const double det = det_[e];
    for (Eigen::Index q = 0; q < uq.size(); ++q) {
      const double fv = f(uq(q));
      if (!std::isfinite(fv)) throw ElementEvaluationError(e, "non-finite reaction value");
      out.noalias() += (volume_rule_.weights[static_cast<std::size_t>(q)] * det * fv) *
                       volume_values_.row(q).transpose();
    }
  }

  /// Element-local reaction Jacobian block: out_ij = int_E f'(u_h) phi_j phi_i.
  template <class Fn>
  void element_reaction_jacobian(std::size_t e, const Eigen::Ref<const Eigen::VectorXd>& local,
                                 Fn&& fprime, Eigen::Ref<Eigen::MatrixXd> out) const {
    const Eigen::VectorXd uq = volume_values_ * local;
    out.setZero();
    const double det = det_[e];
    for (Eigen::Index q = 0; q < uq.size(); ++q) {
      const double fv = fprime(uq(q));
      if (!std::isfinite(fv)) throw ElementEvaluationError(e, "non-finite reaction derivative");
      out.noalias() += (volume_rule_.weights[static_cast<std::size_t>(q)] * det * fv) *
                       (volume_values_.row(q).transpose() * volume_values_.row(q));
    }
  }

 private:
  std::shared_ptr<const Mesh> mesh_;
  ReferenceBasis basis_;
  double sigma_;
  QuadratureRule volume_rule_;
  Eigen::MatrixXd volume_values_;
  std::vector<Eigen::MatrixXd> reference_gradients_;  // per volume point, nloc x dim
  std::vector<double> det_;
  std::vector<Eigen::Matrix2d> jac_;      // physical = origin + jac * xi
  std::vector<Eigen::Matrix2d> jac_inv_;
  std::vector<Point> origin_;
  std::vector<FaceTrace> traces_;
};

/// Default interior penalty 3k(k+1).
double default_penalty(int degree);

SparseOperator assemble_mass(const DgSpace& space, AssemblyOptions opts = {});
BlockDiagonal mass_blocks(const DgSpace& space);

/// SIPG stiffness for diffusion coefficient d >= 0.
SparseOperator assemble_stiffness(const DgSpace& space, double d, AssemblyOptions opts = {});

template <class Fn>
Eigen::VectorXd assemble_reaction_vector(const DgSpace& space, const Eigen::VectorXd& coeffs, Fn&& f) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(space.size()));
  const int nloc = space.local_size();
  for (std::size_t e = 0; e < space.num_elements(); ++e) {
    space.element_reaction(e, coeffs.segment(space.first_dof(e), nloc), f,
                           out.segment(space.first_dof(e), nloc));
  }
  return out;
}

template <class Fn>
BlockDiagonal reaction_jacobian_blocks(const DgSpace& space, const Eigen::VectorXd& coeffs,
                                       Fn&& fprime) {
  const int nloc = space.local_size();
  BlockDiagonal jac;
  jac.block = nloc;
  jac.blocks.resize(nloc, static_cast<Eigen::Index>(space.size()));
  for (std::size_t e = 0; e < space.num_elements(); ++e) {
    space.element_reaction_jacobian(e, coeffs.segment(space.first_dof(e), nloc), fprime, jac[e]);
  }
  return jac;
}

template <class Fn>
SparseOperator assemble_reaction_jacobian(const DgSpace& space, const Eigen::VectorXd& coeffs,
                                          Fn&& fprime) {
  return reaction_jacobian_blocks(space, coeffs, std::forward<Fn>(fprime)).to_sparse();
}

}  // namespace skewrd
