#pragma once

#include <array>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace skewrd {

/// c0 + c1 y + c2 y^2 + c3 y^3
struct Cubic {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;

  double operator()(double y) const noexcept { return c0 + y * (c1 + y * (c2 + y * c3)); }
  double derivative(double y) const noexcept { return c1 + y * (2.0 * c2 + y * 3.0 * c3); }
  /// Antiderivative vanishing at 0.
  double integral(double y) const noexcept {
    return y * (c0 + y * (c1 / 2.0 + y * (c2 / 3.0 + y * c3 / 4.0)));
  }
  Cubic prime() const noexcept { return {c1, 2.0 * c2, 3.0 * c3, 0.0}; }
  bool is_linear() const noexcept { return c2 == 0.0 && c3 == 0.0; }
};

/// Real roots of a polynomial of degree <= 3, ascending, polished by Newton.
std::vector<double> real_roots(const Cubic& p);

enum class TwoComponentVariant {
  kBistable,  // f1 = u(u - beta)(1 - u), g2 = -gamma v + epsilon (fronts and pulses)
  kTuring,    // f1 = u - u^3, g2 = -v (spots and labyrinths)
};

/// tau1 u_t = d1 Lap u + f1(u) + f2(v),  tau2 v_t = d2 Lap v + g1(u) + g2(v)
/// with f2 = -v + kappa, g1 = u.
struct TwoComponentModel {
  TwoComponentVariant variant = TwoComponentVariant::kBistable;
  double tau1 = 1.0, tau2 = 1.0;
  double d1 = 1.0, d2 = 1.0;
  double beta = 0.0;
  double gamma = 1.0;
  double epsilon = 0.0;
  double kappa = 0.0;

  static TwoComponentModel bistable(double beta, double gamma, double epsilon, double kappa = 0.0);
  static TwoComponentModel turing(double kappa, double d1, double d2);

  Cubic f1() const noexcept;
  double f2(double v) const noexcept { return -v + kappa; }
  double g1(double u) const noexcept { return u; }
  double g2(double v) const noexcept { return -gamma * v + epsilon; }
  void validate() const;
};

/// u_t = u_xx + u - u^3 - eps (alpha v + beta s + gamma)
/// tau v_t = eps^-2 v_xx + u - v,  theta s_t = d^2 eps^-2 s_xx + u - s
struct ThreeComponentModel {
  double eps = 0.01;
  double alpha = 1.0, beta = 1.0, gamma = 0.0;
  double d = 2.0;
  double tau = 1.0, theta = 1.0;

  void validate() const;
};

using Model = std::variant<TwoComponentModel, ThreeComponentModel>;

std::size_t component_count(const Model& model);

/// F(u, v) with dF/du = f1 + f2 and dF/dv = -(g1 + g2).
double eval_potential(const TwoComponentModel& model, double u, double v);
std::array<double, 2> potential_gradient(const TwoComponentModel& model, double u, double v);
/// Three-component potential; dF/du reproduces the u reaction,
/// dF/dv = -eps alpha (u - v), dF/ds = -eps beta (u - s).
double eval_potential(const ThreeComponentModel& model, double u, double v, double s);
double eval_potential(const Model& model, std::span<const double> values);

/// Signs and scalings of the quadratic gradient terms of the energy:
/// E = sum_c sign_c * scale_c / 2 * a_h(d_c; y_c, y_c) - (F(y), 1).
/// The energy increment of one step is sum_c -sign_c scale_c tau_c / dt ||dy_c||^2.
struct EnergyWeights {
  std::vector<double> sign;
  std::vector<double> scale;
};
EnergyWeights energy_weights(const Model& model);

struct SkewGradientCheck {
  bool holds = false;
  double residual = 0.0;
};
SkewGradientCheck check_skew_gradient(const TwoComponentModel& model);
SkewGradientCheck check_skew_gradient(const ThreeComponentModel& model);

enum class Stability { kMonostable, kBistable };

enum class StabilityCriterion {
  /// The homogeneous-state cubic has two distinct critical points (its
  /// derivative has positive discriminant). For beta = 2/25, epsilon = 7/10
  /// this is 2316/625 - 12/gamma > 0, i.e. gamma > 7500/2316.
  kNullclineFolds,
  /// The homogeneous-state cubic has three distinct real roots.
  kRootCount,
};

/// Cubic in u whose roots are the homogeneous steady states (v eliminated).
Cubic homogeneous_cubic(const TwoComponentModel& model);
Cubic homogeneous_cubic(const ThreeComponentModel& model);
/// Discriminant of the derivative of the homogeneous cubic, normalized to a
/// monic cubic: (2(1+beta))^2 - 12 (beta + 1/gamma) for the bistable variant.
double fold_discriminant(const TwoComponentModel& model);
Stability classify_stability(const TwoComponentModel& model,
                             StabilityCriterion criterion = StabilityCriterion::kNullclineFolds);

enum class LinearStability { kStable, kUnstable };

struct SteadyState {
  std::vector<double> values;  // (u0, v0[, s0])
  LinearStability stability = LinearStability::kUnstable;
  double residual = 0.0;
};

std::vector<SteadyState> find_steady_states(const TwoComponentModel& model);
std::vector<SteadyState> find_steady_states(const ThreeComponentModel& model);

struct TuringReport {
  double fu = 0.0, fv = 0.0, gu = 0.0, gv = 0.0;  // partials at the steady state
  // Each value is written so the condition holds iff value < 0 (first) or > 0 (others):
  //   fu + gv,  fu gv - fv gu,  d2 fu + d1 gv,  (d2 fu + d1 gv)^2 - 4 d1 d2 (fu gv - fv gu)
  std::array<double, 4> value{};
  std::array<bool, 4> holds{};
  bool unstable = false;
};
TuringReport check_turing(const TwoComponentModel& model, const SteadyState& steady);

struct TuringThresholds {
  double condition3 = 0.0;  // d2 must exceed this for condition 3
  double condition4 = 0.0;  // larger root of the condition-4 quadratic in d2
  double overall() const noexcept { return condition3 > condition4 ? condition3 : condition4; }
};
TuringThresholds turing_threshold(const TwoComponentModel& model, const SteadyState& steady);

/// Linear-in-coupling form of a model, consumed by the time integrator:
///   tau_c M y_c' = -S(d_c) y_c + P_c(y_c) + sum_c' coupling(c, c') M y_c'
/// where P_c is the Galerkin vector of the cubic self-reaction.
struct ComponentKinetics {
  double tau = 1.0;
  double diffusion = 0.0;
  Cubic self;
};

struct ReactionSystem {
  std::vector<ComponentKinetics> components;
  Eigen::MatrixXd coupling;  // zero diagonal
  /// Optional fixed load vectors added to each component's right-hand side
  /// (empty, or one entry per component; an empty vector means none).
  std::vector<Eigen::VectorXd> forcing;

  std::size_t size() const noexcept { return components.size(); }
};

ReactionSystem reaction_system(const TwoComponentModel& model);
ReactionSystem reaction_system(const ThreeComponentModel& model);
ReactionSystem reaction_system(const Model& model);

std::string to_string(Stability s);
std::string to_string(LinearStability s);

}  // namespace skewrd
