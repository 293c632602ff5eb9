#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "skewrd/dg_space.hpp"
#include "skewrd/kinetics.hpp"

namespace skewrd {

/// Coefficient vectors of every component at one time level.
struct State {
  double t = 0.0;
  std::vector<Eigen::VectorXd> fields;

  std::size_t components() const noexcept { return fields.size(); }
  Eigen::VectorXd stacked() const;
  static State from_stacked(double t, const Eigen::VectorXd& x, std::size_t components);
};

/// Uniform grid t_j = t0 + j dt, j = 0..steps.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1.0;
  std::size_t steps = 0;

  double final_time() const noexcept { return t0 + static_cast<double>(steps) * dt; }
  /// Grid over [t0, t_end]; (t_end - t0) / dt must be within 1e-9 of an integer.
  static TimeGrid over(double t0, double t_end, double dt);
};

/// kAuto factors with SparseLU up to `direct_limit` unknowns and uses
/// Jacobi-preconditioned BiCGSTAB above it, falling back to SparseLU when
/// BiCGSTAB does not converge.
enum class LinearSolverKind { kAuto, kSparseLU, kBiCgStab };

struct NewtonConfig {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  /// Also stop once ||dx|| < step_tol max(1, ||x||); catches residuals stuck at round-off.
  double step_tol = 1e-13;
  int max_iterations = 25;
  double linear_tol = 1e-10;
  LinearSolverKind linear_solver = LinearSolverKind::kAuto;
  std::size_t direct_limit = 5000;

  void validate() const;
};

struct NewtonResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual = 0.0;
  double initial_residual = 0.0;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using SparseJacobianFn = std::function<SparseOperator(const Eigen::VectorXd&)>;
using DenseJacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
/// Returns the Newton correction dx solving J(x) dx = -r.
using CorrectionFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& r)>;

/// Newton iteration: stops once ||r|| < abs_tol, ||r|| < rel_tol ||r0|| or the
/// correction falls below step_tol.
/// Throws NewtonFailure on divergence (residual growing three iterations in a
/// row) or when max_iterations is exhausted.
NewtonResult newton_iterate(const ResidualFn& residual, const CorrectionFn& correction,
                            Eigen::VectorXd x0, const NewtonConfig& cfg);
NewtonResult newton_solve(const ResidualFn& residual, const SparseJacobianFn& jacobian,
                          Eigen::VectorXd x0, const NewtonConfig& cfg);
NewtonResult newton_solve(const ResidualFn& residual, const DenseJacobianFn& jacobian,
                          Eigen::VectorXd x0, const NewtonConfig& cfg);

/// Nodes and weights of the n-point Gauss rule on [0, 1] used for the AVF
/// chord integral.
struct ChordRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
ChordRule chord_rule(int points);

/// int_0^1 f(xi y_new + (1 - xi) y_old) dxi by Gauss-Legendre in xi
/// (2 points integrate cubic f exactly).
Eigen::VectorXd avf_average(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& y_old, const Eigen::VectorXd& y_new,
                            int points = 2);

/// Galerkin reaction vectors P(y)_i = int p(y_h) phi_i and their Jacobians.
class NonlinearAssembler {
 public:
  virtual ~NonlinearAssembler() = default;
  virtual std::size_t size() const = 0;
  virtual Eigen::VectorXd reaction(const Eigen::VectorXd& y, const Cubic& p) const = 0;
  virtual BlockDiagonal reaction_jacobian(const Eigen::VectorXd& y, const Cubic& p) const = 0;
  /// b_i = int phi_i
  virtual Eigen::VectorXd constant_load() const = 0;
  virtual int block_size() const = 0;
};

class DgAssembler final : public NonlinearAssembler {
 public:
  explicit DgAssembler(const DgSpace& space) : space_(space) {}
  std::size_t size() const override { return space_.size(); }
  Eigen::VectorXd reaction(const Eigen::VectorXd& y, const Cubic& p) const override;
  BlockDiagonal reaction_jacobian(const Eigen::VectorXd& y, const Cubic& p) const override;
  Eigen::VectorXd constant_load() const override { return space_.constant_load(); }
  int block_size() const override { return space_.local_size(); }

 private:
  const DgSpace& space_;
};

/// Identity-mass surrogate: P(y)_i = p(y_i). Used for ODE-level checks.
class PointwiseAssembler final : public NonlinearAssembler {
 public:
  explicit PointwiseAssembler(std::size_t n) : n_(n) {}
  std::size_t size() const override { return n_; }
  Eigen::VectorXd reaction(const Eigen::VectorXd& y, const Cubic& p) const override;
  BlockDiagonal reaction_jacobian(const Eigen::VectorXd& y, const Cubic& p) const override;
  Eigen::VectorXd constant_load() const override { return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n_)); }
  int block_size() const override { return 1; }

 private:
  std::size_t n_;
};

/// Mass matrix and one stiffness per component.
struct SystemOperators {
  SparseOperator mass;
  std::vector<SparseOperator> stiffness;
};

SystemOperators assemble_operators(const DgSpace& space, const ReactionSystem& system,
                                   AssemblyOptions opts = {});

struct StepStats {
  int newton_iterations = 0;
  double residual = 0.0;
};

/// Fully discrete AVF scheme
///   tau_c M (y_c^{n+1} - y_c^n) + dt/2 S_c (y_c^{n+1} + y_c^n)
///     = dt int_0^1 P_c(chord) dxi + dt sum_c' L_cc' M (y_c'^{n+1} + y_c'^n) / 2
/// solved by Newton from the previous level. The Newton matrix pattern and
/// its symbolic factorization are reused across steps of equal dt.
class AvfStepper {
 public:
  AvfStepper(const SystemOperators& ops, ReactionSystem system, const NonlinearAssembler& assembler,
             NewtonConfig cfg = {}, int chord_points = 2);
  ~AvfStepper();
  AvfStepper(const AvfStepper&) = delete;
  AvfStepper& operator=(const AvfStepper&) = delete;

  State step(const State& current, double dt);
  const StepStats& last_stats() const noexcept { return stats_; }

  /// Stacked AVF residual of the pair (current, next).
  Eigen::VectorXd residual(const State& current, const State& next, double dt) const;

  const ReactionSystem& system() const noexcept { return system_; }
  const SystemOperators& operators() const noexcept { return ops_; }

 private:
  struct Factorization;
  void prepare(double dt);
  Eigen::VectorXd residual_stacked(const Eigen::VectorXd& y0, const Eigen::VectorXd& y1, double dt) const;

  const SystemOperators& ops_;
  ReactionSystem system_;
  const NonlinearAssembler& assembler_;
  NewtonConfig cfg_;
  ChordRule chord_;
  Eigen::VectorXd load_;
  StepStats stats_;
  std::unique_ptr<Factorization> fact_;
};

/// One AVF step with a freshly built stepper.
State avf_step(const State& current, double dt, const SystemOperators& ops, const ReactionSystem& system,
               const NonlinearAssembler& assembler, const NewtonConfig& cfg = {});

/// Initial data: one function per component, or seeded uniform random
/// element means on [-1, 1] for every component (higher modes zero).
struct InitialCondition {
  std::vector<std::function<double(const Point&)>> fields;
  std::optional<std::uint64_t> seed;
};

State make_initial_state(const DgSpace& space, std::size_t components, const InitialCondition& ic);

/// Uniform double in [-1, 1) from std::mt19937_64. The bit-to-double map is
/// explicit, so sequences do not depend on the standard library's
/// distribution implementation.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
  double next() { return -1.0 + 2.0 * static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

struct Observer {
  std::size_t stride = 1;
  std::function<void(std::size_t step, const State& state, const StepStats& stats)> fn;
};

struct SimulationResult {
  State final_state;
  std::vector<StepStats> stats;  // one per step
};

/// Advances `initial` over the grid. Observers run at step 0 and at every
/// multiple of their stride. Step failures are rethrown as StepFailure.
SimulationResult run_simulation(AvfStepper& stepper, const State& initial, const TimeGrid& grid,
                                std::span<const Observer> observers = {});

SimulationResult run_simulation(const DgSpace& space, const Model& model, const TimeGrid& grid,
                                const InitialCondition& ic, std::span<const Observer> observers = {},
                                const NewtonConfig& cfg = {});

}  // namespace skewrd
