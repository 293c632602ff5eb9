#include "skewrd/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "skewrd/errors.hpp"

namespace skewrd {

namespace {

constexpr double kSkewTolerance = 1e-12;
constexpr double kSteadyResidual = 1e-10;

double polish(const Cubic& p, double x) {
  for (int it = 0; it < 4; ++it) {
    const double d = p.derivative(x);
    if (d == 0.0) break;
    const double step = p(x) / d;
    const double next = x - step;
    if (!(std::abs(p(next)) < std::abs(p(x)))) break;
    x = next;
  }
  return x;
}

std::vector<double> unique_sorted(std::vector<double> roots) {
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots) {
    if (out.empty() || std::abs(r - out.back()) > 1e-9 * std::max(1.0, std::abs(r))) out.push_back(r);
  }
  return out;
}

// Depressed form t^3 + p t + q of a monic cubic and its shift.
struct Depressed {
  double p, q, shift;
};

Depressed depress(const Cubic& c) {
  const double a = c.c2 / c.c3, b = c.c1 / c.c3, d = c.c0 / c.c3;
  return {b - a * a / 3.0, 2.0 * a * a * a / 27.0 - a * b / 3.0 + d, -a / 3.0};
}

}  // namespace

std::vector<double> real_roots(const Cubic& poly) {
  if (poly.c3 == 0.0) {
    if (poly.c2 == 0.0) {
      if (poly.c1 == 0.0) return {};
      return {-poly.c0 / poly.c1};
    }
    const double disc = poly.c1 * poly.c1 - 4.0 * poly.c2 * poly.c0;
    if (disc < 0.0) return {};
    const double sq = std::sqrt(disc);
    // Numerically stable pair.
    const double q = -0.5 * (poly.c1 + std::copysign(sq, poly.c1));
    std::vector<double> r;
    if (q != 0.0) r.push_back(q / poly.c2);
    if (q != 0.0) r.push_back(poly.c0 / q);
    if (q == 0.0) r.push_back(0.0);
    for (double& x : r) x = polish(poly, x);
    return unique_sorted(r);
  }

  const auto [p, q, shift] = depress(poly);
  std::vector<double> roots;
  const double disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
  if (p == 0.0 && q == 0.0) {
    roots.push_back(shift);
  } else if (disc > 0.0) {
    const double s = std::sqrt(disc);
    roots.push_back(std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s) + shift);
  } else {
    const double r = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) {
      roots.push_back(r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) + shift);
    }
  }
  for (double& x : roots) x = polish(poly, x);
  return unique_sorted(roots);
}

TwoComponentModel TwoComponentModel::bistable(double beta, double gamma, double epsilon, double kappa) {
  TwoComponentModel m;
  m.variant = TwoComponentVariant::kBistable;
  m.beta = beta;
  m.gamma = gamma;
  m.epsilon = epsilon;
  m.kappa = kappa;
  return m;
}

TwoComponentModel TwoComponentModel::turing(double kappa, double d1, double d2) {
  TwoComponentModel m;
  m.variant = TwoComponentVariant::kTuring;
  m.kappa = kappa;
  m.gamma = 1.0;
  m.epsilon = 0.0;
  m.d1 = d1;
  m.d2 = d2;
  return m;
}

Cubic TwoComponentModel::f1() const noexcept {
  if (variant == TwoComponentVariant::kTuring) return {0.0, 1.0, 0.0, -1.0};
  return {0.0, -beta, 1.0 + beta, -1.0};
}

void TwoComponentModel::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(tau1) || !finite(tau2) || tau1 <= 0.0 || tau2 <= 0.0) {
    throw std::invalid_argument("TwoComponentModel: time scales must be positive");
  }
  if (!finite(d1) || !finite(d2) || d1 < 0.0 || d2 < 0.0) {
    throw std::invalid_argument("TwoComponentModel: diffusions must be non-negative");
  }
  if (!finite(beta) || !finite(epsilon) || !finite(kappa) || !finite(gamma)) {
    throw std::invalid_argument("TwoComponentModel: non-finite parameter");
  }
  if (gamma <= 0.0) throw std::invalid_argument("TwoComponentModel: gamma must be positive");
}

void ThreeComponentModel::validate() const {
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("ThreeComponentModel: need 0 < eps < 0.5");
  if (!(tau > 0.0 && theta > 0.0)) throw std::invalid_argument("ThreeComponentModel: tau, theta must be positive");
  if (!(d > 1.0)) throw std::invalid_argument("ThreeComponentModel: need d > 1");
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma)) {
    throw std::invalid_argument("ThreeComponentModel: non-finite parameter");
  }
}

std::size_t component_count(const Model& model) {
  return std::holds_alternative<TwoComponentModel>(model) ? 2 : 3;
}

double eval_potential(const TwoComponentModel& m, double u, double v) {
  return m.f1().integral(u) - u * v + m.kappa * u + 0.5 * m.gamma * v * v - m.epsilon * v;
}

std::array<double, 2> potential_gradient(const TwoComponentModel& m, double u, double v) {
  return {m.f1()(u) + m.f2(v), -(m.g1(u) + m.g2(v))};
}

double eval_potential(const ThreeComponentModel& m, double u, double v, double s) {
  const double ea = m.eps * m.alpha, eb = m.eps * m.beta;
  return 0.5 * u * u - 0.25 * u * u * u * u - m.eps * m.gamma * u - ea * u * v - eb * u * s +
         0.5 * ea * v * v + 0.5 * eb * s * s;
}

double eval_potential(const Model& model, std::span<const double> y) {
  if (const auto* two = std::get_if<TwoComponentModel>(&model)) return eval_potential(*two, y[0], y[1]);
  return eval_potential(std::get<ThreeComponentModel>(model), y[0], y[1], y[2]);
}

EnergyWeights energy_weights(const Model& model) {
  if (std::holds_alternative<TwoComponentModel>(model)) return {{1.0, -1.0}, {1.0, 1.0}};
  const auto& m = std::get<ThreeComponentModel>(model);
  return {{1.0, -1.0, -1.0}, {1.0, m.eps * m.alpha, m.eps * m.beta}};
}

SkewGradientCheck check_skew_gradient(const TwoComponentModel& m) {
  // d(f/tau1)/dv = f2'/tau1 = -1/tau1 ; -d(g/tau2)/du = -g1'/tau2 = -1/tau2
  const double lhs = -1.0 / m.tau1;
  const double rhs = -1.0 / m.tau2;
  const double r = std::abs(lhs - rhs);
  return {r < kSkewTolerance, r};
}

SkewGradientCheck check_skew_gradient(const ThreeComponentModel& m) {
  const double target = 1.0 / m.theta;
  const double r = std::max(std::abs(m.eps * m.alpha / m.tau - target),
                            std::abs(m.eps * m.beta / m.tau - target));
  return {r < kSkewTolerance, r};
}

Cubic homogeneous_cubic(const TwoComponentModel& m) {
  // f1(u) - v + kappa = 0 and u - gamma v + epsilon = 0; eliminate v, make monic.
  Cubic p = m.f1();
  p.c0 += m.kappa - m.epsilon / m.gamma;
  p.c1 -= 1.0 / m.gamma;
  const double lead = p.c3;
  return {p.c0 / lead, p.c1 / lead, p.c2 / lead, 1.0};
}

Cubic homogeneous_cubic(const ThreeComponentModel& m) {
  return {m.eps * m.gamma, -1.0 + m.eps * (m.alpha + m.beta), 0.0, 1.0};
}

double fold_discriminant(const TwoComponentModel& m) {
  const Cubic p = homogeneous_cubic(m);
  return 4.0 * p.c2 * p.c2 - 12.0 * p.c1;
}

Stability classify_stability(const TwoComponentModel& m, StabilityCriterion criterion) {
  if (!(m.gamma > 0.0)) throw std::invalid_argument("classify_stability: gamma must be positive");
  const Cubic p = homogeneous_cubic(m);
  if (criterion == StabilityCriterion::kNullclineFolds) {
    const double a = 4.0 * p.c2 * p.c2, b = 12.0 * p.c1;
    const double disc = a - b;
    return disc > 1e-14 * (std::abs(a) + std::abs(b)) ? Stability::kBistable : Stability::kMonostable;
  }
  const auto [dp, dq, shift] = depress(p);
  (void)shift;
  const double cube = 4.0 * dp * dp * dp, square = 27.0 * dq * dq;
  const double disc = -cube - square;
  return disc > 1e-12 * (std::abs(cube) + square) ? Stability::kBistable : Stability::kMonostable;
}

namespace {

LinearStability classify_jacobian(const Eigen::MatrixXd& j) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(j, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (!(es.eigenvalues()(i).real() < 0.0)) return LinearStability::kUnstable;
  }
  return LinearStability::kStable;
}

}  // namespace

std::vector<SteadyState> find_steady_states(const TwoComponentModel& m) {
  m.validate();
  std::vector<SteadyState> out;
  const Cubic f1 = m.f1();
  for (double u : real_roots(homogeneous_cubic(m))) {
    const double v = (u + m.epsilon) / m.gamma;
    SteadyState s;
    s.values = {u, v};
    s.residual = std::max(std::abs(f1(u) + m.f2(v)), std::abs(m.g1(u) + m.g2(v)));
    if (!(s.residual < kSteadyResidual)) {
      throw NumericalError("find_steady_states: root polish did not reach residual 1e-10");
    }
    Eigen::Matrix2d j;
    j << f1.derivative(u) / m.tau1, -1.0 / m.tau1, 1.0 / m.tau2, -m.gamma / m.tau2;
    s.stability = classify_jacobian(j);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SteadyState> find_steady_states(const ThreeComponentModel& m) {
  m.validate();
  std::vector<SteadyState> out;
  for (double u : real_roots(homogeneous_cubic(m))) {
    SteadyState s;
    s.values = {u, u, u};
    s.residual = std::abs(u - u * u * u - m.eps * (m.alpha * u + m.beta * u + m.gamma));
    if (!(s.residual < kSteadyResidual)) {
      throw NumericalError("find_steady_states: root polish did not reach residual 1e-10");
    }
    Eigen::Matrix3d j;
    j << 1.0 - 3.0 * u * u, -m.eps * m.alpha, -m.eps * m.beta,  //
        1.0 / m.tau, -1.0 / m.tau, 0.0,                           //
        1.0 / m.theta, 0.0, -1.0 / m.theta;
    s.stability = classify_jacobian(j);
    out.push_back(std::move(s));
  }
  return out;
}

TuringReport check_turing(const TwoComponentModel& m, const SteadyState& steady) {
  TuringReport r;
  r.fu = m.f1().derivative(steady.values.at(0));
  r.fv = -1.0;
  r.gu = 1.0;
  r.gv = -m.gamma;
  const double det = r.fu * r.gv - r.fv * r.gu;
  const double mixed = m.d2 * r.fu + m.d1 * r.gv;
  r.value = {r.fu + r.gv, det, mixed, mixed * mixed - 4.0 * m.d1 * m.d2 * det};
  r.holds = {r.value[0] < 0.0, r.value[1] > 0.0, r.value[2] > 0.0, r.value[3] > 0.0};
  r.unstable = r.holds[0] && r.holds[1] && r.holds[2] && r.holds[3];
  return r;
}

TuringThresholds turing_threshold(const TwoComponentModel& m, const SteadyState& steady) {
  const TuringReport r = check_turing(m, steady);
  if (!r.holds[0] || !r.holds[1]) {
    throw DomainError("turing_threshold: steady state is not stable without diffusion");
  }
  TuringThresholds t;
  const double a = r.fu, b = r.gv, c = r.fu * r.gv - r.fv * r.gu;
  if (!(a > 0.0)) {
    // d2 a + d1 b > 0 cannot hold for d2 >= 0 when a <= 0 (b < 0 under condition 1).
    t.condition3 = std::numeric_limits<double>::infinity();
    t.condition4 = std::numeric_limits<double>::infinity();
    return t;
  }
  t.condition3 = std::max(0.0, -m.d1 * b / a);
  // a^2 x^2 + (2ab - 4c) x + b^2 = 0 with x = d2 / d1; c > 0 and c - ab = -fv gu.
  const double root = ((2.0 * c - a * b) + 2.0 * std::sqrt(c * (c - a * b))) / (a * a);
  t.condition4 = m.d1 * root;
  return t;
}

ReactionSystem reaction_system(const TwoComponentModel& m) {
  ReactionSystem sys;
  Cubic fu = m.f1();
  fu.c0 += m.kappa;
  sys.components = {{m.tau1, m.d1, fu}, {m.tau2, m.d2, Cubic{m.epsilon, -m.gamma, 0.0, 0.0}}};
  sys.coupling = Eigen::MatrixXd::Zero(2, 2);
  sys.coupling(0, 1) = -1.0;
  sys.coupling(1, 0) = 1.0;
  return sys;
}

ReactionSystem reaction_system(const ThreeComponentModel& m) {
  ReactionSystem sys;
  const double inv2 = 1.0 / (m.eps * m.eps);
  sys.components = {{1.0, 1.0, Cubic{-m.eps * m.gamma, 1.0, 0.0, -1.0}},
                    {m.tau, inv2, Cubic{0.0, -1.0, 0.0, 0.0}},
                    {m.theta, m.d * m.d * inv2, Cubic{0.0, -1.0, 0.0, 0.0}}};
  sys.coupling = Eigen::MatrixXd::Zero(3, 3);
  sys.coupling(0, 1) = -m.eps * m.alpha;
  sys.coupling(0, 2) = -m.eps * m.beta;
  sys.coupling(1, 0) = 1.0;
  sys.coupling(2, 0) = 1.0;
  return sys;
}

ReactionSystem reaction_system(const Model& model) {
  return std::visit([](const auto& m) { return reaction_system(m); }, model);
}

std::string to_string(Stability s) { return s == Stability::kBistable ? "bistable" : "monostable"; }
std::string to_string(LinearStability s) { return s == LinearStability::kStable ? "stable" : "unstable"; }

}  // namespace skewrd
