#include "skewrd/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "skewrd/errors.hpp"
#include "skewrd/quadrature.hpp"

namespace skewrd {

Eigen::VectorXd State::stacked() const {
  Eigen::Index total = 0;
  for (const auto& f : fields) total += f.size();
  Eigen::VectorXd x(total);
  Eigen::Index off = 0;
  for (const auto& f : fields) {
    x.segment(off, f.size()) = f;
    off += f.size();
  }
  return x;
}

State State::from_stacked(double t, const Eigen::VectorXd& x, std::size_t components) {
  if (components == 0 || x.size() % static_cast<Eigen::Index>(components) != 0) {
    throw std::invalid_argument("State::from_stacked: size not divisible by component count");
  }
  const Eigen::Index n = x.size() / static_cast<Eigen::Index>(components);
  State s;
  s.t = t;
  for (std::size_t c = 0; c < components; ++c) s.fields.push_back(x.segment(static_cast<Eigen::Index>(c) * n, n));
  return s;
}

TimeGrid TimeGrid::over(double t0, double t_end, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("TimeGrid: dt must be positive");
  if (!(t_end >= t0)) throw std::invalid_argument("TimeGrid: t_end < t0");
  const double ratio = (t_end - t0) / dt;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("TimeGrid: interval is not a whole number of steps");
  }
  return {t0, dt, static_cast<std::size_t>(steps)};
}

void NewtonConfig::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || !(linear_tol > 0.0) || !(step_tol >= 0.0)) {
    throw std::invalid_argument("NewtonConfig: tolerances must be positive");
  }
  if (max_iterations < 1) throw std::invalid_argument("NewtonConfig: max_iterations must be >= 1");
}

NewtonResult newton_iterate(const ResidualFn& residual, const CorrectionFn& correction,
                            Eigen::VectorXd x0, const NewtonConfig& cfg) {
  cfg.validate();
  NewtonResult res;
  res.x = std::move(x0);
  Eigen::VectorXd r = residual(res.x);
  res.initial_residual = r.norm();
  res.residual = res.initial_residual;
  if (!std::isfinite(res.residual)) throw NewtonFailure("newton: non-finite initial residual", res.residual, 0);
  auto converged = [&](double norm) {
    return norm < cfg.abs_tol || norm < cfg.rel_tol * res.initial_residual;
  };
  int growth = 0;
  while (!converged(res.residual)) {
    if (res.iterations >= cfg.max_iterations) {
      throw NewtonFailure("newton: no convergence in " + std::to_string(cfg.max_iterations) + " iterations",
                          res.residual, res.iterations);
    }
    const Eigen::VectorXd dx = correction(res.x, r);
    if (!dx.allFinite()) throw NewtonFailure("newton: non-finite correction", res.residual, res.iterations);
    res.x += dx;
    ++res.iterations;
    r = residual(res.x);
    const double norm = r.norm();
    if (!std::isfinite(norm)) throw NewtonFailure("newton: non-finite residual", norm, res.iterations);
    if (dx.norm() < cfg.step_tol * std::max(1.0, res.x.norm())) {
      res.residual = norm;
      break;
    }
    growth = norm > res.residual ? growth + 1 : 0;
    res.residual = norm;
    if (growth >= 3) throw NewtonFailure("newton: diverging residual", norm, res.iterations);
  }
  return res;
}

namespace {

using Lu = Eigen::SparseLU<SparseOperator, Eigen::COLAMDOrdering<int>>;
using Krylov = Eigen::BiCGSTAB<SparseOperator, Eigen::DiagonalPreconditioner<double>>;

constexpr Eigen::Index kKrylovIterations = 400;

bool use_iterative(const NewtonConfig& cfg, Eigen::Index n) {
  return cfg.linear_solver == LinearSolverKind::kBiCgStab ||
         (cfg.linear_solver == LinearSolverKind::kAuto && static_cast<std::size_t>(n) > cfg.direct_limit);
}

// Returns false if BiCGSTAB did not reach the tolerance.
bool krylov_solve(Krylov& solver, const SparseOperator& a, const Eigen::VectorXd& rhs, const NewtonConfig& cfg,
                  Eigen::VectorXd& x) {
  solver.setTolerance(cfg.linear_tol);
  solver.setMaxIterations(kKrylovIterations);
  solver.compute(a);
  x = solver.solve(rhs);
  return solver.info() == Eigen::Success && x.allFinite();
}

Eigen::VectorXd lu_solve(Lu& lu, const SparseOperator& a, const Eigen::VectorXd& rhs, bool analyze) {
  if (analyze) lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) throw LinearSolverError("singular Newton matrix");
  return lu.solve(rhs);
}

}  // namespace

NewtonResult newton_solve(const ResidualFn& residual, const SparseJacobianFn& jacobian, Eigen::VectorXd x0,
                          const NewtonConfig& cfg) {
  auto correction = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& r) -> Eigen::VectorXd {
    SparseOperator j = jacobian(x);
    j.makeCompressed();
    if (use_iterative(cfg, j.rows())) {
      Krylov solver;
      Eigen::VectorXd dx;
      if (krylov_solve(solver, j, -r, cfg, dx)) return dx;
      if (cfg.linear_solver == LinearSolverKind::kBiCgStab) throw LinearSolverError("BiCGSTAB did not converge");
    }
    Lu lu;
    return lu_solve(lu, j, -r, true);
  };
  return newton_iterate(residual, correction, std::move(x0), cfg);
}

NewtonResult newton_solve(const ResidualFn& residual, const DenseJacobianFn& jacobian, Eigen::VectorXd x0,
                          const NewtonConfig& cfg) {
  auto correction = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& r) -> Eigen::VectorXd {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jacobian(x));
    const Eigen::MatrixXd& lu_m = lu.matrixLU();
    const double scale = lu_m.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < lu_m.rows(); ++i) {
      if (!(std::abs(lu_m(i, i)) > 1e-14 * scale)) throw LinearSolverError("newton: singular Jacobian");
    }
    return lu.solve(-r);
  };
  return newton_iterate(residual, correction, std::move(x0), cfg);
}

ChordRule chord_rule(int points) {
  if (points < 1) throw std::invalid_argument("chord_rule: need at least one point");
  const QuadratureRule g = gauss_legendre(points);
  ChordRule r;
  for (std::size_t i = 0; i < g.size(); ++i) {
    r.nodes.push_back(0.5 * (g.points[i][0] + 1.0));
    r.weights.push_back(0.5 * g.weights[i]);
  }
  return r;
}

Eigen::VectorXd avf_average(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& y_old, const Eigen::VectorXd& y_new, int points) {
  if (y_old.size() != y_new.size()) throw std::invalid_argument("avf_average: size mismatch");
  const ChordRule rule = chord_rule(points);
  Eigen::VectorXd acc;
  for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
    const Eigen::VectorXd y = y_old + rule.nodes[g] * (y_new - y_old);
    Eigen::VectorXd fy = f(y);
    if (g == 0) {
      acc = rule.weights[g] * fy;
    } else {
      acc += rule.weights[g] * fy;
    }
  }
  return acc;
}

Eigen::VectorXd DgAssembler::reaction(const Eigen::VectorXd& y, const Cubic& p) const {
  return assemble_reaction_vector(space_, y, p);
}

BlockDiagonal DgAssembler::reaction_jacobian(const Eigen::VectorXd& y, const Cubic& p) const {
  return reaction_jacobian_blocks(space_, y, [&p](double u) { return p.derivative(u); });
}

Eigen::VectorXd PointwiseAssembler::reaction(const Eigen::VectorXd& y, const Cubic& p) const {
  return y.unaryExpr([&p](double u) { return p(u); });
}

BlockDiagonal PointwiseAssembler::reaction_jacobian(const Eigen::VectorXd& y, const Cubic& p) const {
  BlockDiagonal j;
  j.block = 1;
  j.blocks = y.unaryExpr([&p](double u) { return p.derivative(u); }).transpose();
  return j;
}

SystemOperators assemble_operators(const DgSpace& space, const ReactionSystem& system, AssemblyOptions opts) {
  SystemOperators ops;
  ops.mass = assemble_mass(space, opts);
  for (const auto& c : system.components) ops.stiffness.push_back(assemble_stiffness(space, c.diffusion, opts));
  return ops;
}

// Newton matrix with a fixed sparsity pattern for one dt. The block diagonal
// of every nonlinear component is present explicitly, so each iteration only
// rewrites values in place and reuses the symbolic factorization.
struct AvfStepper::Factorization {
  double dt = 0.0;
  SparseOperator base;
  SparseOperator work;
  std::vector<std::vector<Eigen::Index>> positions;  // per component, empty when linear
  Lu lu;
  bool analyzed = false;
  Krylov krylov;
  bool krylov_failed = false;  // kAuto stays with SparseLU after a failure
};

AvfStepper::AvfStepper(const SystemOperators& ops, ReactionSystem system, const NonlinearAssembler& assembler,
                       NewtonConfig cfg, int chord_points)
    : ops_(ops),
      system_(std::move(system)),
      assembler_(assembler),
      cfg_(cfg),
      chord_(chord_rule(chord_points)),
      load_(assembler.constant_load()) {
  cfg_.validate();
  const auto n = static_cast<Eigen::Index>(assembler_.size());
  if (ops_.mass.rows() != n || ops_.mass.cols() != n) throw std::invalid_argument("AvfStepper: mass size mismatch");
  if (ops_.stiffness.size() != system_.size()) {
    throw std::invalid_argument("AvfStepper: one stiffness per component required");
  }
  for (const auto& s : ops_.stiffness) {
    if (s.rows() != n || s.cols() != n) throw std::invalid_argument("AvfStepper: stiffness size mismatch");
  }
  if (system_.coupling.rows() != static_cast<Eigen::Index>(system_.size()) ||
      system_.coupling.cols() != static_cast<Eigen::Index>(system_.size())) {
    throw std::invalid_argument("AvfStepper: coupling matrix size mismatch");
  }
  if (!system_.forcing.empty() && system_.forcing.size() != system_.size()) {
    throw std::invalid_argument("AvfStepper: forcing needs one entry per component");
  }
  for (const auto& f : system_.forcing) {
    if (f.size() != 0 && f.size() != n) throw std::invalid_argument("AvfStepper: forcing size mismatch");
  }
}

AvfStepper::~AvfStepper() = default;

void AvfStepper::prepare(double dt) {
  if (fact_ && fact_->dt == dt) return;
  auto f = std::make_unique<Factorization>();
  f->dt = dt;
  const auto n = static_cast<Eigen::Index>(assembler_.size());
  const auto nc = static_cast<Eigen::Index>(system_.size());
  const int b = assembler_.block_size();
  std::vector<Eigen::Triplet<double>> trip;
  auto add = [&](const SparseOperator& m, Eigen::Index r0, Eigen::Index c0, double scale) {
    if (scale == 0.0) return;
    for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
      for (SparseOperator::InnerIterator it(m, k); it; ++it) {
        trip.emplace_back(r0 + it.row(), c0 + it.col(), scale * it.value());
      }
    }
  };
  for (Eigen::Index c = 0; c < nc; ++c) {
    const auto& comp = system_.components[static_cast<std::size_t>(c)];
    double mass_scale = comp.tau;
    if (comp.self.is_linear()) mass_scale -= 0.5 * dt * comp.self.c1;
    add(ops_.mass, c * n, c * n, mass_scale);
    add(ops_.stiffness[static_cast<std::size_t>(c)], c * n, c * n, 0.5 * dt);
    for (Eigen::Index c2 = 0; c2 < nc; ++c2) {
      if (c2 != c) add(ops_.mass, c * n, c2 * n, -0.5 * dt * system_.coupling(c, c2));
    }
    if (!comp.self.is_linear()) {
      for (Eigen::Index e = 0; e < n / b; ++e) {
        for (int j = 0; j < b; ++j) {
          for (int i = 0; i < b; ++i) trip.emplace_back(c * n + e * b + i, c * n + e * b + j, 0.0);
        }
      }
    }
  }
  f->base.resize(nc * n, nc * n);
  f->base.setFromTriplets(trip.begin(), trip.end());
  f->base.makeCompressed();

  f->positions.resize(system_.size());
  const int* outer = f->base.outerIndexPtr();
  const int* inner = f->base.innerIndexPtr();
  for (Eigen::Index c = 0; c < nc; ++c) {
    if (system_.components[static_cast<std::size_t>(c)].self.is_linear()) continue;
    auto& pos = f->positions[static_cast<std::size_t>(c)];
    pos.reserve(static_cast<std::size_t>(n * b));
    // Same (element, column, row) order as BlockDiagonal::blocks storage.
    for (Eigen::Index e = 0; e < n / b; ++e) {
      for (int j = 0; j < b; ++j) {
        const Eigen::Index col = c * n + e * b + j;
        for (int i = 0; i < b; ++i) {
          const int row = static_cast<int>(c * n + e * b + i);
          const int* first = inner + outer[col];
          const int* last = inner + outer[col + 1];
          const int* hit = std::lower_bound(first, last, row);
          pos.push_back(hit - inner);
        }
      }
    }
  }
  f->work = f->base;
  fact_ = std::move(f);
}

Eigen::VectorXd AvfStepper::residual_stacked(const Eigen::VectorXd& y0, const Eigen::VectorXd& y1,
                                             double dt) const {
  const auto n = static_cast<Eigen::Index>(assembler_.size());
  const std::size_t nc = system_.size();
  Eigen::VectorXd r(y0.size());
  std::vector<Eigen::VectorXd> mid_mass(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto off = static_cast<Eigen::Index>(c) * n;
    mid_mass[c] = ops_.mass * (0.5 * (y0.segment(off, n) + y1.segment(off, n)));
  }
  for (std::size_t c = 0; c < nc; ++c) {
    const auto off = static_cast<Eigen::Index>(c) * n;
    const auto& comp = system_.components[c];
    const auto a = y0.segment(off, n);
    const auto b = y1.segment(off, n);
    Eigen::VectorXd rc = comp.tau * (ops_.mass * (b - a)) + (0.5 * dt) * (ops_.stiffness[c] * (a + b));
    if (comp.self.is_linear()) {
      rc -= dt * (comp.self.c1 * mid_mass[c] + comp.self.c0 * load_);
    } else {
      for (std::size_t g = 0; g < chord_.nodes.size(); ++g) {
        const Eigen::VectorXd yg = a + chord_.nodes[g] * (b - a);
        rc -= (dt * chord_.weights[g]) * assembler_.reaction(yg, comp.self);
      }
    }
    if (c < system_.forcing.size() && system_.forcing[c].size() > 0) rc -= dt * system_.forcing[c];
    for (std::size_t c2 = 0; c2 < nc; ++c2) {
      const double l = system_.coupling(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c2));
      if (c2 != c && l != 0.0) rc -= (dt * l) * mid_mass[c2];
    }
    r.segment(off, n) = rc;
  }
  return r;
}

Eigen::VectorXd AvfStepper::residual(const State& current, const State& next, double dt) const {
  return residual_stacked(current.stacked(), next.stacked(), dt);
}

State AvfStepper::step(const State& current, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("AvfStepper::step: dt must be positive");
  if (current.components() != system_.size()) {
    throw std::invalid_argument("AvfStepper::step: component count mismatch");
  }
  const Eigen::VectorXd y0 = current.stacked();
  if (!y0.allFinite()) throw NumericalError("AvfStepper::step: non-finite state");
  if (y0.size() != static_cast<Eigen::Index>(system_.size() * assembler_.size())) {
    throw std::invalid_argument("AvfStepper::step: field size mismatch");
  }
  prepare(dt);
  Factorization& f = *fact_;
  const auto n = static_cast<Eigen::Index>(assembler_.size());

  auto residual_fn = [&](const Eigen::VectorXd& y1) { return residual_stacked(y0, y1, dt); };
  auto correction = [&](const Eigen::VectorXd& y1, const Eigen::VectorXd& r) -> Eigen::VectorXd {
    std::copy_n(f.base.valuePtr(), f.base.nonZeros(), f.work.valuePtr());
    for (std::size_t c = 0; c < system_.size(); ++c) {
      const auto& comp = system_.components[c];
      if (comp.self.is_linear()) continue;
      const auto off = static_cast<Eigen::Index>(c) * n;
      const auto a = y0.segment(off, n);
      const auto b = y1.segment(off, n);
      double* values = f.work.valuePtr();
      const auto& pos = f.positions[c];
      for (std::size_t g = 0; g < chord_.nodes.size(); ++g) {
        const double xi = chord_.nodes[g];
        const Eigen::VectorXd yg = a + xi * (b - a);
        const BlockDiagonal jac = assembler_.reaction_jacobian(yg, comp.self);
        const double scale = dt * chord_.weights[g] * xi;
        const double* data = jac.blocks.data();
        for (std::size_t k = 0; k < pos.size(); ++k) values[pos[k]] -= scale * data[k];
      }
    }
    if (!f.krylov_failed && use_iterative(cfg_, f.work.rows())) {
      Eigen::VectorXd dx;
      if (krylov_solve(f.krylov, f.work, -r, cfg_, dx)) return dx;
      if (cfg_.linear_solver == LinearSolverKind::kBiCgStab) throw LinearSolverError("AVF: BiCGSTAB did not converge");
      f.krylov_failed = true;
    }
    const bool analyze = !f.analyzed;
    f.analyzed = true;
    return lu_solve(f.lu, f.work, -r, analyze);
  };

  NewtonResult res = newton_iterate(residual_fn, correction, y0, cfg_);
  stats_ = {res.iterations, res.residual};
  return State::from_stacked(current.t + dt, res.x, system_.size());
}

State avf_step(const State& current, double dt, const SystemOperators& ops, const ReactionSystem& system,
               const NonlinearAssembler& assembler, const NewtonConfig& cfg) {
  AvfStepper stepper(ops, system, assembler, cfg);
  return stepper.step(current, dt);
}

State make_initial_state(const DgSpace& space, std::size_t components, const InitialCondition& ic) {
  State s;
  if (ic.seed) {
    UniformSource src(*ic.seed);
    std::vector<double> means(space.num_elements());
    for (std::size_t c = 0; c < components; ++c) {
      for (double& m : means) m = src.next();
      s.fields.push_back(space.project_piecewise_constant(means));
    }
    return s;
  }
  if (ic.fields.size() != components) {
    throw std::invalid_argument("make_initial_state: need one initial function per component");
  }
  for (const auto& fn : ic.fields) s.fields.push_back(space.project(fn));
  return s;
}

SimulationResult run_simulation(AvfStepper& stepper, const State& initial, const TimeGrid& grid,
                                std::span<const Observer> observers) {
  SimulationResult out;
  out.final_state = initial;
  out.final_state.t = grid.t0;
  out.stats.reserve(grid.steps);
  auto notify = [&](std::size_t step, const StepStats& st) {
    for (const auto& o : observers) {
      if (o.fn && o.stride > 0 && step % o.stride == 0) o.fn(step, out.final_state, st);
    }
  };
  notify(0, StepStats{});
  for (std::size_t j = 1; j <= grid.steps; ++j) {
    try {
      out.final_state = stepper.step(out.final_state, grid.dt);
    } catch (const NewtonFailure& e) {
      throw StepFailure(e.what(), j, e.residual());
    } catch (const LinearSolverError& e) {
      throw StepFailure(e.what(), j, stepper.last_stats().residual);
    } catch (const ElementEvaluationError& e) {
      throw StepFailure(e.what(), j, std::numeric_limits<double>::quiet_NaN());
    }
    out.final_state.t = grid.t0 + static_cast<double>(j) * grid.dt;
    out.stats.push_back(stepper.last_stats());
    notify(j, out.stats.back());
  }
  return out;
}

SimulationResult run_simulation(const DgSpace& space, const Model& model, const TimeGrid& grid,
                                const InitialCondition& ic, std::span<const Observer> observers,
                                const NewtonConfig& cfg) {
  const ReactionSystem system = reaction_system(model);
  const SystemOperators ops = assemble_operators(space, system);
  const DgAssembler assembler(space);
  AvfStepper stepper(ops, system, assembler, cfg);
  const State initial = make_initial_state(space, system.size(), ic);
  return run_simulation(stepper, initial, grid, observers);
}

}  // namespace skewrd
