#pragma once

#include <vector>

#include "skewrd/mesh.hpp"

namespace skewrd {

/// Points and weights on a reference element ([0,1] or the unit triangle).
/// In 1D only the first coordinate of each point is used.
struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1] (exact through degree 2n - 1).
QuadratureRule gauss_legendre(int n);

/// Gauss-Legendre on [0, 1] with the fewest points exact for `degree`.
QuadratureRule interval_rule(int degree);

/// Collapsed (Duffy) tensor Gauss rule on the triangle (0,0),(1,0),(0,1),
/// exact for polynomials of total degree `degree`.
QuadratureRule triangle_rule(int degree);

}  // namespace skewrd
