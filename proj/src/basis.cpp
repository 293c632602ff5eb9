#include "skewrd/basis.hpp"

#include <cmath>
#include <stdexcept>

#include "skewrd/quadrature.hpp"

namespace skewrd {

int local_dimension(int dim, int degree) {
  return dim == 1 ? degree + 1 : (degree + 1) * (degree + 2) / 2;
}

ReferenceBasis::ReferenceBasis(int dim, int degree, BasisKind kind)
    : dim_(dim), degree_(degree), kind_(kind), size_(local_dimension(dim, degree)) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("ReferenceBasis: dim must be 1 or 2");
  if (degree < 0) throw std::invalid_argument("ReferenceBasis: negative degree");

  const QuadratureRule rule = dim == 1 ? interval_rule(2 * degree) : triangle_rule(2 * degree);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(size_, size_);
  Eigen::VectorXd m(size_);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    monomials(rule.points[q], m, nullptr);
    gram.noalias() += rule.weights[q] * m * m.transpose();
  }

  if (kind == BasisKind::kMonomial) {
    transform_ = Eigen::MatrixXd::Identity(size_, size_);
    gram_ = gram;
  } else {
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("ReferenceBasis: monomial Gram matrix not positive definite");
    }
    const Eigen::MatrixXd lower = llt.matrixL();
    transform_ = lower.triangularView<Eigen::Lower>().solve(
        Eigen::MatrixXd::Identity(size_, size_));
    gram_ = Eigen::MatrixXd::Identity(size_, size_);
  }
}

void ReferenceBasis::monomials(const Point& xi, Eigen::VectorXd& m, Eigen::MatrixXd* grad) const {
  m.resize(size_);
  if (grad != nullptr) grad->setZero(size_, dim_);
  if (dim_ == 1) {
    const double x = xi[0];
    double p = 1.0;
    for (int j = 0; j <= degree_; ++j) {
      m(j) = p;
      if (grad != nullptr && j > 0) (*grad)(j, 0) = j * std::pow(x, j - 1);
      p *= x;
    }
    return;
  }
  const double x = xi[0], y = xi[1];
  int idx = 0;
  for (int total = 0; total <= degree_; ++total) {
    for (int b = 0; b <= total; ++b) {
      const int a = total - b;
      m(idx) = std::pow(x, a) * std::pow(y, b);
      if (grad != nullptr) {
        (*grad)(idx, 0) = a > 0 ? a * std::pow(x, a - 1) * std::pow(y, b) : 0.0;
        (*grad)(idx, 1) = b > 0 ? b * std::pow(x, a) * std::pow(y, b - 1) : 0.0;
      }
      ++idx;
    }
  }
}

Eigen::VectorXd ReferenceBasis::values(const Point& xi) const {
  Eigen::VectorXd m;
  monomials(xi, m, nullptr);
  return transform_ * m;
}

Eigen::MatrixXd ReferenceBasis::gradients(const Point& xi) const {
  Eigen::VectorXd m;
  Eigen::MatrixXd g;
  monomials(xi, m, &g);
  return transform_ * g;
}

}  // namespace skewrd
