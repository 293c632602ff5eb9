#include "skewrd/diagnostics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "skewrd/errors.hpp"

namespace skewrd {

double EnergyBreakdown::total() const noexcept {
  double e = -potential;
  for (std::size_t c = 0; c < components.size(); ++c) e += sign[c] * scale[c] * components[c].total();
  return e;
}

ComponentEnergy component_energy(const Eigen::VectorXd& y, const DgSpace& space, double d) {
  if (y.size() != static_cast<Eigen::Index>(space.size())) {
    throw std::invalid_argument("component_energy: coefficient size mismatch");
  }
  ComponentEnergy out;
  const int nloc = space.local_size();
  const auto& rule = space.volume_rule();
  for (std::size_t e = 0; e < space.num_elements(); ++e) {
    const auto local = y.segment(space.first_dof(e), nloc);
    const double det = space.jacobian_det(e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Eigen::VectorXd g = space.physical_gradients(e, q).transpose() * local;
      out.gradient += 0.5 * d * rule.weights[q] * det * g.squaredNorm();
    }
  }
  const double sigma = space.sigma();
  for (const FaceTrace& t : space.interior_traces()) {
    const auto yl = y.segment(space.first_dof(static_cast<std::size_t>(t.left)), nloc);
    const auto yr = y.segment(space.first_dof(static_cast<std::size_t>(t.right)), nloc);
    const Eigen::VectorXd jump = t.values_left * yl - t.values_right * yr;
    const Eigen::VectorXd mean_dn = 0.5 * (t.normal_derivative_left * yl + t.normal_derivative_right * yr);
    out.consistency -= d * t.weights.dot(mean_dn.cwiseProduct(jump));
    out.penalty += 0.5 * sigma * d / t.h * t.weights.dot(jump.cwiseProduct(jump));
  }
  return out;
}

namespace {

std::vector<double> diffusions(const Model& model) {
  std::vector<double> d;
  for (const auto& c : reaction_system(model).components) d.push_back(c.diffusion);
  return d;
}

void check_state(const State& state, const DgSpace& space, const Model& model) {
  if (state.components() != component_count(model)) {
    throw std::invalid_argument("state component count does not match the model");
  }
  for (const auto& f : state.fields) {
    if (f.size() != static_cast<Eigen::Index>(space.size())) {
      throw std::invalid_argument("state field size does not match the space");
    }
  }
}

}  // namespace

EnergyBreakdown energy_breakdown(const State& state, const DgSpace& space, const Model& model) {
  check_state(state, space, model);
  const EnergyWeights w = energy_weights(model);
  const std::vector<double> d = diffusions(model);
  EnergyBreakdown out;
  out.sign = w.sign;
  out.scale = w.scale;
  for (std::size_t c = 0; c < state.components(); ++c) {
    out.components.push_back(component_energy(state.fields[c], space, d[c]));
  }
  const auto& rule = space.volume_rule();
  const std::size_t nc = state.components();
  std::vector<Eigen::VectorXd> vals(nc);
  std::vector<double> y(nc);
  for (std::size_t e = 0; e < space.num_elements(); ++e) {
    for (std::size_t c = 0; c < nc; ++c) vals[c] = space.values_at_quadrature(state.fields[c], e);
    const double det = space.jacobian_det(e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      for (std::size_t c = 0; c < nc; ++c) y[c] = vals[c](static_cast<Eigen::Index>(q));
      out.potential += rule.weights[q] * det * eval_potential(model, y);
    }
  }
  return out;
}

double discrete_energy(const State& state, const DgSpace& space, const Model& model) {
  return energy_breakdown(state, space, model).total();
}

bool energy_well_defined(const Model& model) {
  if (const auto* three = std::get_if<ThreeComponentModel>(&model)) return check_skew_gradient(*three).holds;
  return true;
}

IncrementCheck energy_increment_residual(const State& state, const State& next, double dt, const DgSpace& space,
                                         const Model& model) {
  if (!(dt > 0.0)) throw std::invalid_argument("energy_increment_residual: dt must be positive");
  check_state(next, space, model);
  const ReactionSystem sys = reaction_system(model);
  const EnergyWeights w = energy_weights(model);
  const SparseOperator mass = assemble_mass(space);
  IncrementCheck out;
  out.actual = discrete_energy(next, space, model) - discrete_energy(state, space, model);
  for (std::size_t c = 0; c < state.components(); ++c) {
    const Eigen::VectorXd dy = next.fields[c] - state.fields[c];
    out.predicted -= w.sign[c] * w.scale[c] * sys.components[c].tau / dt * dy.dot(mass * dy);
  }
  out.residual = std::abs(out.actual - out.predicted);
  return out;
}

Eigen::VectorXd stationary_residual(const State& state, const DgSpace& space, const Model& model) {
  check_state(state, space, model);
  const ReactionSystem sys = reaction_system(model);
  const SystemOperators ops = assemble_operators(space, sys);
  const DgAssembler assembler(space);
  const auto n = static_cast<Eigen::Index>(space.size());
  Eigen::VectorXd r(n * static_cast<Eigen::Index>(sys.size()));
  for (std::size_t c = 0; c < sys.size(); ++c) {
    Eigen::VectorXd rc = assembler.reaction(state.fields[c], sys.components[c].self) - ops.stiffness[c] * state.fields[c];
    for (std::size_t c2 = 0; c2 < sys.size(); ++c2) {
      const double l = sys.coupling(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c2));
      if (c2 != c && l != 0.0) rc += l * (ops.mass * state.fields[c2]);
    }
    r.segment(static_cast<Eigen::Index>(c) * n, n) = rc;
  }
  return r;
}

State constant_state(const DgSpace& space, std::span<const double> values) {
  State s;
  const std::vector<double> ones(space.num_elements(), 1.0);
  const Eigen::VectorXd unit = space.project_piecewise_constant(ones);
  for (double v : values) s.fields.push_back(v * unit);
  return s;
}

namespace {

// AVF flow of component `active` with the other one frozen; energies of the
// full pair are recorded after every step.
DirectionProbe frozen_flow(const State& start, std::size_t active, double direction, const DgSpace& space,
                           const TwoComponentModel& model, const ProbeOptions& opts) {
  const ReactionSystem full = reaction_system(model);
  const std::size_t frozen = 1 - active;
  ReactionSystem sys;
  sys.components = {full.components[active]};
  sys.coupling = Eigen::MatrixXd::Zero(1, 1);
  SystemOperators ops;
  ops.mass = assemble_mass(space);
  ops.stiffness = {assemble_stiffness(space, full.components[active].diffusion)};
  sys.forcing = {full.coupling(static_cast<Eigen::Index>(active), static_cast<Eigen::Index>(frozen)) *
                 (ops.mass * start.fields[frozen])};
  const DgAssembler assembler(space);
  AvfStepper stepper(ops, sys, assembler);

  DirectionProbe probe;
  State pair = start;
  probe.energies.push_back(discrete_energy(pair, space, model));
  State single;
  single.t = start.t;
  single.fields = {start.fields[active]};
  for (std::size_t j = 0; j < opts.steps; ++j) {
    single = stepper.step(single, opts.dt);
    pair.fields[active] = single.fields[0];
    const double e = discrete_energy(pair, space, model);
    const double prev = probe.energies.back();
    if (direction * (e - prev) > opts.slack * std::max(1.0, std::abs(prev))) ++probe.violations;
    probe.energies.push_back(e);
  }
  return probe;
}

}  // namespace

MiniMaximizerReport mini_maximizer_probe(const State& steady, const DgSpace& space, const TwoComponentModel& model,
                                         const ProbeOptions& opts) {
  MiniMaximizerReport report;
  report.steady_residual = stationary_residual(steady, space, Model{model}).norm();
  if (!(report.steady_residual < opts.steady_tolerance)) {
    throw DomainError("mini_maximizer_probe: state is not stationary (residual " +
                      std::to_string(report.steady_residual) + ")");
  }
  UniformSource src(opts.seed);
  auto perturbed = [&](std::size_t c) {
    State s = steady;
    for (Eigen::Index i = 0; i < s.fields[c].size(); ++i) s.fields[c](i) += opts.perturbation * src.next();
    return s;
  };
  report.minimizing = frozen_flow(perturbed(0), 0, 1.0, space, model, opts);
  report.maximizing = frozen_flow(perturbed(1), 1, -1.0, space, model, opts);
  return report;
}

void EnergyTrace::record(double t, double energy) {
  if (!std::isfinite(t) || !std::isfinite(energy)) throw NumericalError("EnergyTrace: non-finite record");
  if (!t_.empty() && !(t > t_.back())) throw std::invalid_argument("EnergyTrace: times must increase");
  t_.push_back(t);
  e_.push_back(energy);
}

void EnergyTrace::record_increment(const IncrementCheck& check) { inc_.push_back(check); }

void EnergyTrace::write_csv(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "t,E\n";
  for (std::size_t i = 0; i < t_.size(); ++i) os << t_[i] << ',' << e_[i] << '\n';
  os.precision(old);
}

}  // namespace skewrd
