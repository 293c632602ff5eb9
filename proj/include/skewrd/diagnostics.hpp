#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "skewrd/dg_space.hpp"
#include "skewrd/integrator.hpp"
#include "skewrd/kinetics.hpp"

namespace skewrd {

/// Pieces of 1/2 a_h(d; y, y) for one component.
struct ComponentEnergy {
  double gradient = 0.0;     // d/2 sum_K int_K |grad y|^2
  double consistency = 0.0;  // -sum_e int_e {d dn y} [y]
  double penalty = 0.0;      // sum_e sigma d / (2 h_e) int_e [y]^2

  double total() const noexcept { return gradient + consistency + penalty; }
  double jump_terms() const noexcept { return consistency + penalty; }
};

struct EnergyBreakdown {
  std::vector<ComponentEnergy> components;
  std::vector<double> sign;
  std::vector<double> scale;
  double potential = 0.0;  // int F(y_h)

  /// sum_c sign_c scale_c (gradient + faces) - int F
  double total() const noexcept;
};

EnergyBreakdown energy_breakdown(const State& state, const DgSpace& space, const Model& model);
double discrete_energy(const State& state, const DgSpace& space, const Model& model);

/// 1/2 a_h(d; y, y) split into its volume and face parts.
ComponentEnergy component_energy(const Eigen::VectorXd& y, const DgSpace& space, double d);

/// Whether the model's energy comes from a genuine skew-gradient potential.
/// The energy is still evaluated when this is false, but callers should flag it.
bool energy_well_defined(const Model& model);

struct IncrementCheck {
  double actual = 0.0;     // E(state_next) - E(state)
  double predicted = 0.0;  // sum_c -sign_c scale_c tau_c / dt ||dy_c||_M^2
  double residual = 0.0;   // |actual - predicted|
};

IncrementCheck energy_increment_residual(const State& state, const State& next, double dt, const DgSpace& space,
                                         const Model& model);

/// Stacked stationary residual -S_c y_c + P_c(y_c) + sum_c' L_cc' M y_c'.
Eigen::VectorXd stationary_residual(const State& state, const DgSpace& space, const Model& model);

struct ProbeOptions {
  double perturbation = 1e-3;
  std::size_t steps = 50;
  double dt = 0.5;
  std::uint64_t seed = 1;
  /// Allowed energy move against the expected direction, relative to
  /// max(1, |E|), to absorb round-off in the sums.
  double slack = 1e-13;
  /// Stationary residual above which the probe refuses to run.
  double steady_tolerance = 1e-8;
};

struct DirectionProbe {
  std::vector<double> energies;
  std::size_t violations = 0;
  bool holds() const noexcept { return violations == 0; }
};

struct MiniMaximizerReport {
  DirectionProbe minimizing;  // v frozen, u flows down: energies non-increasing
  DirectionProbe maximizing;  // u frozen, v flows: energies non-decreasing
  double steady_residual = 0.0;
};

/// Perturbs `steady` and runs the frozen-component AVF flows. Two-component
/// models only. Throws DomainError if `steady` is not stationary.
MiniMaximizerReport mini_maximizer_probe(const State& steady, const DgSpace& space, const TwoComponentModel& model,
                                         const ProbeOptions& opts = {});

/// Homogeneous constant state on the space (an exact discrete steady state
/// when `values` is a kinetic equilibrium).
State constant_state(const DgSpace& space, std::span<const double> values);

/// (t, E) records with optional increment checks.
class EnergyTrace {
 public:
  void record(double t, double energy);
  void record_increment(const IncrementCheck& check);

  const std::vector<double>& times() const noexcept { return t_; }
  const std::vector<double>& energies() const noexcept { return e_; }
  const std::vector<IncrementCheck>& increments() const noexcept { return inc_; }
  std::size_t size() const noexcept { return t_.size(); }

  /// Header `t,E`, one row per record, 17 significant digits.
  void write_csv(std::ostream& os) const;

 private:
  std::vector<double> t_;
  std::vector<double> e_;
  std::vector<IncrementCheck> inc_;
};

}  // namespace skewrd
