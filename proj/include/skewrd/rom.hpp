#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skewrd/dg_space.hpp"
#include "skewrd/integrator.hpp"
#include "skewrd/kinetics.hpp"

namespace skewrd {

/// State snapshots per component plus the nonlinear vectors of component 0.
struct SnapshotSet {
  std::vector<Eigen::MatrixXd> states;  // one N x J matrix per component
  Eigen::MatrixXd nonlinear;            // N x J, may be empty
  std::vector<double> times;

  std::size_t count() const noexcept { return times.size(); }
  void validate() const;
};

/// Observer collecting states (and P_0 without its constant term) every `stride` steps.
class SnapshotRecorder {
 public:
  SnapshotRecorder(const NonlinearAssembler& assembler, const ReactionSystem& system, std::size_t stride = 1);
  Observer observer();
  SnapshotSet snapshots() const;

 private:
  const NonlinearAssembler& assembler_;
  Cubic nonlinear_;
  std::size_t stride_;
  std::vector<std::vector<Eigen::VectorXd>> states_;  // [component][column]
  std::vector<Eigen::VectorXd> nonlinear_cols_;
  std::vector<double> times_;
};

/// Cubic with its constant coefficient removed.
Cubic without_constant(const Cubic& p);

struct PodBasis {
  Eigen::MatrixXd psi;              // N x k, M-orthonormal columns
  Eigen::VectorXd singular_values;  // all singular values, nonincreasing
};

/// Block diagonal identity (M = I).
BlockDiagonal identity_blocks(std::size_t n);

/// Mass-weighted POD: with M = L L^T, SVD of L^T U and psi = L^-T psi_hat.
/// Throws RankDeficiencyError if k exceeds the numerical rank.
PodBasis compute_pod_basis(const Eigen::MatrixXd& snapshots, const BlockDiagonal& mass, std::size_t k);

/// Smallest k with 1 - sum_{i<=k} s_i^2 / sum s_i^2 < tol.
std::size_t rank_for_energy(const Eigen::VectorXd& singular_values, double tol);

/// Greedy DEIM indices (0-based), ties broken by the lowest index.
/// Throws SelectionError when a residual vanishes.
std::vector<Eigen::Index> deim_select(const Eigen::MatrixXd& W);

/// Brute-force greedy with dense solves on explicit selection matrices.
/// Slower than deim_select; kept as an independent reference.
std::vector<Eigen::Index> deim_select_reference(const Eigen::MatrixXd& W);

struct DeimData {
  Eigen::MatrixXd W;                  // N x m
  std::vector<Eigen::Index> indices;  // m distinct rows
  Eigen::MatrixXd Q;                  // k x m = psi^T W (P^T W)^-1
  Eigen::PartialPivLU<Eigen::MatrixXd> ptw;

  /// Q f_sampled
  Eigen::VectorXd apply(const Eigen::VectorXd& sampled) const { return Q * sampled; }
  /// W (P^T W)^-1 f_sampled
  Eigen::VectorXd reconstruct(const Eigen::VectorXd& sampled) const { return W * ptw.solve(sampled); }
};

DeimData build_deim(const Eigen::MatrixXd& W, const Eigen::MatrixXd& psi);

/// Evaluates selected entries of a Galerkin reaction vector and of its
/// Jacobian times a reduced basis, touching only the elements holding them.
class DeimSampler {
 public:
  DeimSampler(const DgSpace& space, const std::vector<Eigen::Index>& indices, const Eigen::MatrixXd& psi);

  /// P^T P(psi a)
  Eigen::VectorXd sample(const Eigen::VectorXd& a, const Cubic& p) const;
  /// P^T J_P(psi a) psi  (m x k)
  Eigen::MatrixXd sample_jacobian(const Eigen::VectorXd& a, const Cubic& p) const;
  std::size_t element_count() const noexcept { return elements_.size(); }

 private:
  const DgSpace& space_;
  std::vector<std::size_t> elements_;
  Eigen::MatrixXd psi_rows_;                      // (elements * nloc) x k
  std::vector<std::pair<std::size_t, int>> slot_;  // per index: (element slot, local row)
};

enum class RomKind { kPod, kPodDeim };

/// Galerkin operators of the reduced system.
struct ReducedSystem {
  ReactionSystem system;
  std::vector<Eigen::MatrixXd> psi;          // per component, N x k_c
  std::vector<Eigen::MatrixXd> mass;         // psi_c^T M psi_c
  std::vector<Eigen::MatrixXd> stiffness;    // psi_c^T S_c psi_c
  std::vector<std::vector<Eigen::MatrixXd>> cross;  // [c][c'] psi_c^T M psi_c'
  std::vector<Eigen::VectorXd> load;         // psi_c^T b
  std::vector<Eigen::VectorXd> forcing;      // psi_c^T forcing_c (or empty)
  std::optional<DeimData> deim;              // for component 0
  std::optional<DeimSampler> sampler;

  std::size_t offset(std::size_t c) const noexcept;
  std::size_t size() const noexcept;
};

/// Reduced operators; `deim` (if any) must come with a nonlinear basis for component 0.
ReducedSystem build_reduced_system(const DgSpace& space, const SystemOperators& ops, const ReactionSystem& system,
                                   const std::vector<Eigen::MatrixXd>& psi, const Eigen::MatrixXd* deim_basis = nullptr);

/// AVF on the reduced system with a dense Newton solve.
class ReducedStepper {
 public:
  ReducedStepper(const ReducedSystem& rs, const DgSpace& space, RomKind kind, NewtonConfig cfg = {});

  Eigen::VectorXd step(const Eigen::VectorXd& a0, double dt);
  Eigen::VectorXd residual(const Eigen::VectorXd& a0, const Eigen::VectorXd& a1, double dt) const;
  const StepStats& last_stats() const noexcept { return stats_; }

  /// M-orthogonal projection of a full state.
  Eigen::VectorXd project(const State& full, const SparseOperator& mass) const;
  State lift(const Eigen::VectorXd& a, double t) const;

 private:
  Eigen::VectorXd nonlinear(std::size_t c, const Eigen::VectorXd& a) const;
  Eigen::MatrixXd nonlinear_jacobian(std::size_t c, const Eigen::VectorXd& a) const;

  const ReducedSystem& rs_;
  DgAssembler assembler_;
  RomKind kind_;
  NewtonConfig cfg_;
  ChordRule chord_;
  StepStats stats_;
};

/// Mean over time of ||y_full - y_rom||_M / ||y_full||_M, per component.
std::vector<double> mean_relative_errors(const std::vector<State>& full, const std::vector<State>& rom,
                                         const SparseOperator& mass);

struct RomReportRow {
  std::size_t elements = 0;
  std::size_t dofs = 0;  // per component
  double t_full = 0.0, t_pod = 0.0, t_deim = 0.0;
  double s_pod = 0.0, s_deim = 0.0;
  std::vector<double> err_pod, err_deim;
};

struct RomCompareOptions {
  std::size_t k = 10;       // POD modes per component
  std::size_t m = 50;       // DEIM points
  std::size_t repeats = 3;  // timed repetitions per online phase (median reported)
  std::size_t stride = 1;   // snapshot stride
  NewtonConfig newton;
};

/// Full run with snapshots, POD and POD-DEIM reduced runs on the same grid,
/// errors against the full trajectory and median wall-clock speed-ups.
/// Only the time-stepping loops are timed.
RomReportRow rom_compare(const DgSpace& space, const Model& model, const TimeGrid& grid, const InitialCondition& ic,
                         const RomCompareOptions& opts = {});

/// Time table (wall-clock seconds and speed-ups) followed by the error table.
void write_rom_report_csv(std::ostream& os, const std::vector<RomReportRow>& rows);

/// Flat snapshot matrix file: "SGRDSNP1", uint64 rows, uint64 cols,
/// uint32 component tag, uint32 zero, then column-major little-endian doubles.
void write_snapshot_file(const std::string& path, const Eigen::MatrixXd& data, std::uint32_t component);
Eigen::MatrixXd read_snapshot_file(const std::string& path, std::uint32_t* component = nullptr);

}  // namespace skewrd
