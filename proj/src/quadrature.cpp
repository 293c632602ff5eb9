#include "skewrd/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace skewrd {

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  QuadratureRule rule;
  rule.points.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-like initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (x * p0 - p1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.points[lo] = {-x, 0.0};
    rule.points[hi] = {x, 0.0};
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (n % 2 == 1) rule.points[static_cast<std::size_t>(n / 2)] = {0.0, 0.0};
  return rule;
}

QuadratureRule interval_rule(int degree) {
  const int n = degree < 1 ? 1 : (degree + 2) / 2;
  QuadratureRule rule = gauss_legendre(n);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    rule.points[q][0] = 0.5 * (rule.points[q][0] + 1.0);
    rule.weights[q] *= 0.5;
  }
  return rule;
}

QuadratureRule triangle_rule(int degree) {
  // On the unit square (r, s) -> (r (1 - s), s) with Jacobian (1 - s); the
  // pulled-back integrand has degree `degree` in r and `degree + 1` in s.
  const QuadratureRule line = interval_rule(degree + 1);
  QuadratureRule rule;
  rule.points.reserve(line.size() * line.size());
  rule.weights.reserve(line.size() * line.size());
  for (std::size_t j = 0; j < line.size(); ++j) {
    const double s = line.points[j][0];
    for (std::size_t i = 0; i < line.size(); ++i) {
      const double r = line.points[i][0];
      rule.points.push_back({r * (1.0 - s), s});
      rule.weights.push_back(line.weights[i] * line.weights[j] * (1.0 - s));
    }
  }
  return rule;
}

}  // namespace skewrd
