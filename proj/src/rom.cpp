#include "skewrd/rom.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

#include <Eigen/SVD>

#include "skewrd/errors.hpp"

namespace skewrd {

void SnapshotSet::validate() const {
  for (const auto& s : states) {
    if (s.cols() != static_cast<Eigen::Index>(times.size())) {
      throw std::invalid_argument("SnapshotSet: column count differs from number of times");
    }
    if (!states.empty() && s.rows() != states.front().rows()) {
      throw std::invalid_argument("SnapshotSet: components differ in size");
    }
  }
  if (nonlinear.size() != 0 && nonlinear.cols() != static_cast<Eigen::Index>(times.size())) {
    throw std::invalid_argument("SnapshotSet: nonlinear column count differs from number of times");
  }
}

Cubic without_constant(const Cubic& p) { return {0.0, p.c1, p.c2, p.c3}; }

SnapshotRecorder::SnapshotRecorder(const NonlinearAssembler& assembler, const ReactionSystem& system,
                                   std::size_t stride)
    : assembler_(assembler),
      nonlinear_(without_constant(system.components.at(0).self)),
      stride_(stride),
      states_(system.size()) {
  if (stride_ == 0) throw std::invalid_argument("SnapshotRecorder: stride must be positive");
}

Observer SnapshotRecorder::observer() {
  return {stride_, [this](std::size_t, const State& s, const StepStats&) {
            for (std::size_t c = 0; c < states_.size(); ++c) states_[c].push_back(s.fields.at(c));
            nonlinear_cols_.push_back(assembler_.reaction(s.fields[0], nonlinear_));
            times_.push_back(s.t);
          }};
}

SnapshotSet SnapshotRecorder::snapshots() const {
  SnapshotSet set;
  set.times = times_;
  const auto cols = static_cast<Eigen::Index>(times_.size());
  const auto n = static_cast<Eigen::Index>(assembler_.size());
  for (const auto& comp : states_) {
    Eigen::MatrixXd m(n, cols);
    for (Eigen::Index j = 0; j < cols; ++j) m.col(j) = comp[static_cast<std::size_t>(j)];
    set.states.push_back(std::move(m));
  }
  set.nonlinear.resize(n, cols);
  for (Eigen::Index j = 0; j < cols; ++j) set.nonlinear.col(j) = nonlinear_cols_[static_cast<std::size_t>(j)];
  return set;
}

BlockDiagonal identity_blocks(std::size_t n) {
  BlockDiagonal b;
  b.block = 1;
  b.blocks = Eigen::MatrixXd::Ones(1, static_cast<Eigen::Index>(n));
  return b;
}

PodBasis compute_pod_basis(const Eigen::MatrixXd& snapshots, const BlockDiagonal& mass, std::size_t k) {
  const Eigen::Index n = snapshots.rows();
  if (mass.blocks.cols() != n) throw std::invalid_argument("compute_pod_basis: mass size mismatch");
  if (k == 0) throw std::invalid_argument("compute_pod_basis: k must be positive");
  const int b = mass.block;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chol;
  chol.reserve(mass.count());
  Eigen::MatrixXd weighted(n, snapshots.cols());
  for (std::size_t e = 0; e < mass.count(); ++e) {
    chol.emplace_back(Eigen::MatrixXd(mass[e]));
    if (chol.back().info() != Eigen::Success) throw NumericalError("compute_pod_basis: mass block not SPD");
    const auto off = static_cast<Eigen::Index>(e) * b;
    weighted.middleRows(off, b) = chol.back().matrixU() * snapshots.middleRows(off, b);
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(weighted, Eigen::ComputeThinU);
  PodBasis out;
  out.singular_values = svd.singularValues();
  const double top = out.singular_values.size() > 0 ? out.singular_values(0) : 0.0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < out.singular_values.size(); ++i) {
    if (top > 0.0 && out.singular_values(i) > 1e-12 * top) ++rank;
  }
  if (k > rank) throw RankDeficiencyError("compute_pod_basis: requested " + std::to_string(k) + " modes", rank);

  Eigen::MatrixXd hat = svd.matrixU().leftCols(static_cast<Eigen::Index>(k));
  // Fix the sign so the largest entry of each column is positive.
  for (Eigen::Index j = 0; j < hat.cols(); ++j) {
    Eigen::Index at = 0;
    hat.col(j).cwiseAbs().maxCoeff(&at);
    if (hat(at, j) < 0.0) hat.col(j) = -hat.col(j);
  }
  out.psi.resize(n, hat.cols());
  for (std::size_t e = 0; e < mass.count(); ++e) {
    const auto off = static_cast<Eigen::Index>(e) * b;
    out.psi.middleRows(off, b) = chol[e].matrixU().solve(hat.middleRows(off, b));
  }
  return out;
}

std::size_t rank_for_energy(const Eigen::VectorXd& s, double tol) {
  const double total = s.squaredNorm();
  if (total == 0.0) return 0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    acc += s(i) * s(i);
    if (1.0 - acc / total < tol) return static_cast<std::size_t>(i + 1);
  }
  return static_cast<std::size_t>(s.size());
}

namespace {

// First index of the largest magnitude.
Eigen::Index argmax_abs(const Eigen::VectorXd& v, double* value) {
  Eigen::Index best = 0;
  double best_val = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best_val) {
      best_val = a;
      best = i;
    }
  }
  *value = best_val;
  return best;
}

constexpr double kSelectionTolerance = 1e-13;

}  // namespace

std::vector<Eigen::Index> deim_select(const Eigen::MatrixXd& W) {
  const Eigen::Index m = W.cols();
  if (m == 0 || m > W.rows()) throw std::invalid_argument("deim_select: need 1 <= m <= N");
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(m));
  double top = 0.0;
  idx.push_back(argmax_abs(W.col(0), &top));
  if (!(top > 0.0)) throw SelectionError("deim_select: first basis vector is zero");
  for (Eigen::Index l = 1; l < m; ++l) {
    Eigen::MatrixXd ptw(l, l);
    Eigen::VectorXd rhs(l);
    for (Eigen::Index i = 0; i < l; ++i) {
      ptw.row(i) = W.row(idx[static_cast<std::size_t>(i)]).head(l);
      rhs(i) = W(idx[static_cast<std::size_t>(i)], l);
    }
    const Eigen::VectorXd c = ptw.partialPivLu().solve(rhs);
    const Eigen::VectorXd r = W.col(l) - W.leftCols(l) * c;
    double rmax = 0.0;
    const Eigen::Index next = argmax_abs(r, &rmax);
    const double scale = W.col(l).cwiseAbs().maxCoeff();
    if (!(rmax > kSelectionTolerance * scale)) {
      throw SelectionError("deim_select: residual vanished at column " + std::to_string(l + 1));
    }
    idx.push_back(next);
  }
  return idx;
}

std::vector<Eigen::Index> deim_select_reference(const Eigen::MatrixXd& W) {
  const Eigen::Index n = W.rows(), m = W.cols();
  if (m == 0 || m > n) throw std::invalid_argument("deim_select_reference: need 1 <= m <= N");
  std::vector<Eigen::Index> idx;
  auto pick = [&](const Eigen::VectorXd& r) {
    std::vector<double> mag(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) mag[static_cast<std::size_t>(i)] = std::abs(r(i));
    const auto it = std::max_element(mag.begin(), mag.end());
    if (!(*it > kSelectionTolerance * W.cwiseAbs().maxCoeff())) throw SelectionError("reference: residual vanished");
    return static_cast<Eigen::Index>(it - mag.begin());
  };
  idx.push_back(pick(W.col(0)));
  for (Eigen::Index l = 1; l < m; ++l) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, l);
    for (Eigen::Index i = 0; i < l; ++i) P(idx[static_cast<std::size_t>(i)], i) = 1.0;
    const Eigen::MatrixXd A = P.transpose() * W.leftCols(l);
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(P.transpose() * W.col(l));
    idx.push_back(pick(W.col(l) - W.leftCols(l) * c));
  }
  return idx;
}

DeimData build_deim(const Eigen::MatrixXd& W, const Eigen::MatrixXd& psi) {
  if (psi.rows() != W.rows()) throw std::invalid_argument("build_deim: basis sizes differ");
  DeimData d;
  d.W = W;
  d.indices = deim_select(W);
  const auto m = static_cast<Eigen::Index>(d.indices.size());
  Eigen::MatrixXd ptw(m, m);
  for (Eigen::Index i = 0; i < m; ++i) ptw.row(i) = W.row(d.indices[static_cast<std::size_t>(i)]);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(ptw);
  const auto& sv = svd.singularValues();
  if (!(sv(m - 1) > 0.0) || !std::isfinite(sv(0) / sv(m - 1))) {
    throw SelectionError("build_deim: P^T W is singular");
  }
  d.ptw.compute(ptw);
  d.Q = (psi.transpose() * W) * d.ptw.inverse();
  return d;
}

DeimSampler::DeimSampler(const DgSpace& space, const std::vector<Eigen::Index>& indices, const Eigen::MatrixXd& psi)
    : space_(space) {
  if (psi.rows() != static_cast<Eigen::Index>(space.size())) {
    throw std::invalid_argument("DeimSampler: basis size differs from the space");
  }
  const int nloc = space.local_size();
  std::map<std::size_t, std::size_t> slot_of;
  for (Eigen::Index i : indices) {
    const std::size_t e = space.element_of(static_cast<std::size_t>(i));
    if (slot_of.emplace(e, elements_.size()).second) elements_.push_back(e);
  }
  for (Eigen::Index i : indices) {
    const std::size_t e = space.element_of(static_cast<std::size_t>(i));
    slot_.emplace_back(slot_of.at(e), static_cast<int>(i - space.first_dof(e)));
  }
  psi_rows_.resize(static_cast<Eigen::Index>(elements_.size()) * nloc, psi.cols());
  for (std::size_t s = 0; s < elements_.size(); ++s) {
    psi_rows_.middleRows(static_cast<Eigen::Index>(s) * nloc, nloc) = psi.middleRows(space.first_dof(elements_[s]), nloc);
  }
}

Eigen::VectorXd DeimSampler::sample(const Eigen::VectorXd& a, const Cubic& p) const {
  const int nloc = space_.local_size();
  const Eigen::VectorXd local = psi_rows_ * a;
  Eigen::VectorXd vals(local.size());
  for (std::size_t s = 0; s < elements_.size(); ++s) {
    const auto off = static_cast<Eigen::Index>(s) * nloc;
    space_.element_reaction(elements_[s], local.segment(off, nloc), p, vals.segment(off, nloc));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(slot_.size()));
  for (std::size_t i = 0; i < slot_.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = vals(static_cast<Eigen::Index>(slot_[i].first) * nloc + slot_[i].second);
  }
  return out;
}

Eigen::MatrixXd DeimSampler::sample_jacobian(const Eigen::VectorXd& a, const Cubic& p) const {
  const int nloc = space_.local_size();
  const Eigen::VectorXd local = psi_rows_ * a;
  std::vector<Eigen::MatrixXd> jac(elements_.size(), Eigen::MatrixXd(nloc, nloc));
  for (std::size_t s = 0; s < elements_.size(); ++s) {
    const auto off = static_cast<Eigen::Index>(s) * nloc;
    space_.element_reaction_jacobian(elements_[s], local.segment(off, nloc),
                                     [&p](double u) { return p.derivative(u); }, jac[s]);
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(slot_.size()), psi_rows_.cols());
  for (std::size_t i = 0; i < slot_.size(); ++i) {
    const auto [s, row] = slot_[i];
    out.row(static_cast<Eigen::Index>(i)) =
        jac[s].row(row) * psi_rows_.middleRows(static_cast<Eigen::Index>(s) * nloc, nloc);
  }
  return out;
}

std::size_t ReducedSystem::offset(std::size_t c) const noexcept {
  std::size_t off = 0;
  for (std::size_t i = 0; i < c; ++i) off += static_cast<std::size_t>(psi[i].cols());
  return off;
}

std::size_t ReducedSystem::size() const noexcept { return offset(psi.size()); }

ReducedSystem build_reduced_system(const DgSpace& space, const SystemOperators& ops, const ReactionSystem& system,
                                   const std::vector<Eigen::MatrixXd>& psi, const Eigen::MatrixXd* deim_basis) {
  if (psi.size() != system.size() || ops.stiffness.size() != system.size()) {
    throw std::invalid_argument("build_reduced_system: one basis and stiffness per component required");
  }
  const auto n = static_cast<Eigen::Index>(space.size());
  for (const auto& p : psi) {
    if (p.rows() != n || p.cols() == 0) throw std::invalid_argument("build_reduced_system: basis dimension mismatch");
  }
  ReducedSystem rs;
  rs.system = system;
  rs.psi = psi;
  const Eigen::VectorXd b = space.constant_load();
  std::vector<Eigen::MatrixXd> mpsi;
  for (const auto& p : psi) mpsi.push_back(ops.mass * p);
  for (std::size_t c = 0; c < psi.size(); ++c) {
    rs.mass.push_back(psi[c].transpose() * mpsi[c]);
    rs.stiffness.push_back(psi[c].transpose() * (ops.stiffness[c] * psi[c]));
    rs.cross.emplace_back();
    for (std::size_t c2 = 0; c2 < psi.size(); ++c2) rs.cross[c].push_back(psi[c].transpose() * mpsi[c2]);
    rs.load.push_back(psi[c].transpose() * b);
    if (c < system.forcing.size() && system.forcing[c].size() == n) {
      rs.forcing.push_back(psi[c].transpose() * system.forcing[c]);
    } else {
      rs.forcing.emplace_back();
    }
  }
  if (deim_basis) {
    rs.deim.emplace(build_deim(*deim_basis, psi[0]));
    rs.sampler.emplace(space, rs.deim->indices, psi[0]);
  }
  return rs;
}

ReducedStepper::ReducedStepper(const ReducedSystem& rs, const DgSpace& space, RomKind kind, NewtonConfig cfg)
    : rs_(rs), assembler_(space), kind_(kind), cfg_(cfg), chord_(chord_rule(2)) {
  if (kind_ == RomKind::kPodDeim && !rs_.deim) throw std::invalid_argument("ReducedStepper: DEIM data missing");
}

Eigen::VectorXd ReducedStepper::nonlinear(std::size_t c, const Eigen::VectorXd& a) const {
  const Cubic& p = rs_.system.components[c].self;
  if (c == 0 && kind_ == RomKind::kPodDeim) {
    return rs_.deim->apply(rs_.sampler->sample(a, without_constant(p))) + p.c0 * rs_.load[c];
  }
  return rs_.psi[c].transpose() * assembler_.reaction(rs_.psi[c] * a, p);
}

Eigen::MatrixXd ReducedStepper::nonlinear_jacobian(std::size_t c, const Eigen::VectorXd& a) const {
  const Cubic& p = rs_.system.components[c].self;
  if (c == 0 && kind_ == RomKind::kPodDeim) return rs_.deim->Q * rs_.sampler->sample_jacobian(a, p);
  const Eigen::MatrixXd& psi = rs_.psi[c];
  const BlockDiagonal j = assembler_.reaction_jacobian(psi * a, p);
  Eigen::MatrixXd jpsi(psi.rows(), psi.cols());
  for (std::size_t e = 0; e < j.count(); ++e) {
    const auto off = static_cast<Eigen::Index>(e) * j.block;
    jpsi.middleRows(off, j.block).noalias() = j[e] * psi.middleRows(off, j.block);
  }
  return psi.transpose() * jpsi;
}

Eigen::VectorXd ReducedStepper::residual(const Eigen::VectorXd& a0, const Eigen::VectorXd& a1, double dt) const {
  const std::size_t nc = rs_.psi.size();
  Eigen::VectorXd r(a0.size());
  for (std::size_t c = 0; c < nc; ++c) {
    const auto off = static_cast<Eigen::Index>(rs_.offset(c));
    const auto k = rs_.psi[c].cols();
    const auto& comp = rs_.system.components[c];
    const Eigen::VectorXd x0 = a0.segment(off, k), x1 = a1.segment(off, k);
    Eigen::VectorXd rc = comp.tau * (rs_.mass[c] * (x1 - x0)) + (0.5 * dt) * (rs_.stiffness[c] * (x0 + x1));
    if (comp.self.is_linear()) {
      rc -= dt * (comp.self.c1 * (rs_.mass[c] * (0.5 * (x0 + x1))) + comp.self.c0 * rs_.load[c]);
    } else {
      for (std::size_t g = 0; g < chord_.nodes.size(); ++g) {
        rc -= (dt * chord_.weights[g]) * nonlinear(c, x0 + chord_.nodes[g] * (x1 - x0));
      }
    }
    if (rs_.forcing[c].size() > 0) rc -= dt * rs_.forcing[c];
    for (std::size_t c2 = 0; c2 < nc; ++c2) {
      const double l = rs_.system.coupling(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c2));
      if (c2 == c || l == 0.0) continue;
      const auto off2 = static_cast<Eigen::Index>(rs_.offset(c2));
      const auto k2 = rs_.psi[c2].cols();
      rc -= (0.5 * dt * l) * (rs_.cross[c][c2] * (a0.segment(off2, k2) + a1.segment(off2, k2)));
    }
    r.segment(off, k) = rc;
  }
  return r;
}

Eigen::VectorXd ReducedStepper::step(const Eigen::VectorXd& a0, double dt) {
  if (a0.size() != static_cast<Eigen::Index>(rs_.size())) throw std::invalid_argument("ReducedStepper: size mismatch");
  const std::size_t nc = rs_.psi.size();
  auto res = [&](const Eigen::VectorXd& a1) { return residual(a0, a1, dt); };
  auto jac = [&](const Eigen::VectorXd& a1) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(a0.size(), a0.size());
    for (std::size_t c = 0; c < nc; ++c) {
      const auto off = static_cast<Eigen::Index>(rs_.offset(c));
      const auto k = rs_.psi[c].cols();
      const auto& comp = rs_.system.components[c];
      auto blk = j.block(off, off, k, k);
      blk = comp.tau * rs_.mass[c] + (0.5 * dt) * rs_.stiffness[c];
      if (comp.self.is_linear()) {
        blk -= (0.5 * dt * comp.self.c1) * rs_.mass[c];
      } else {
        const Eigen::VectorXd x0 = a0.segment(off, k), x1 = a1.segment(off, k);
        for (std::size_t g = 0; g < chord_.nodes.size(); ++g) {
          const double xi = chord_.nodes[g];
          blk -= (dt * chord_.weights[g] * xi) * nonlinear_jacobian(c, x0 + xi * (x1 - x0));
        }
      }
      for (std::size_t c2 = 0; c2 < nc; ++c2) {
        const double l = rs_.system.coupling(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c2));
        if (c2 == c || l == 0.0) continue;
        j.block(off, static_cast<Eigen::Index>(rs_.offset(c2)), k, rs_.psi[c2].cols()) = (-0.5 * dt * l) * rs_.cross[c][c2];
      }
    }
    return j;
  };
  const NewtonResult nr = newton_solve(res, DenseJacobianFn(jac), a0, cfg_);
  stats_ = {nr.iterations, nr.residual};
  return nr.x;
}

Eigen::VectorXd ReducedStepper::project(const State& full, const SparseOperator& mass) const {
  Eigen::VectorXd a(static_cast<Eigen::Index>(rs_.size()));
  for (std::size_t c = 0; c < rs_.psi.size(); ++c) {
    const Eigen::VectorXd rhs = rs_.psi[c].transpose() * (mass * full.fields.at(c));
    a.segment(static_cast<Eigen::Index>(rs_.offset(c)), rs_.psi[c].cols()) = rs_.mass[c].llt().solve(rhs);
  }
  return a;
}

State ReducedStepper::lift(const Eigen::VectorXd& a, double t) const {
  State s;
  s.t = t;
  for (std::size_t c = 0; c < rs_.psi.size(); ++c) {
    s.fields.push_back(rs_.psi[c] * a.segment(static_cast<Eigen::Index>(rs_.offset(c)), rs_.psi[c].cols()));
  }
  return s;
}

std::vector<double> mean_relative_errors(const std::vector<State>& full, const std::vector<State>& rom,
                                         const SparseOperator& mass) {
  if (full.size() != rom.size() || full.empty()) {
    throw std::invalid_argument("mean_relative_errors: trajectories must be nonempty and of equal length");
  }
  const std::size_t nc = full.front().components();
  std::vector<double> err(nc, 0.0);
  for (std::size_t j = 0; j < full.size(); ++j) {
    if (std::abs(full[j].t - rom[j].t) > 1e-9 * std::max(1.0, std::abs(full[j].t))) {
      throw std::invalid_argument("mean_relative_errors: trajectories sampled at different times");
    }
    for (std::size_t c = 0; c < nc; ++c) {
      const Eigen::VectorXd d = full[j].fields[c] - rom[j].fields[c];
      const double num = std::sqrt(std::max(0.0, d.dot(mass * d)));
      const double den = std::sqrt(std::max(0.0, full[j].fields[c].dot(mass * full[j].fields[c])));
      err[c] += den > 0.0 ? num / den : num;
    }
  }
  for (double& e : err) e /= static_cast<double>(full.size());
  return err;
}

void write_rom_report_csv(std::ostream& os, const std::vector<RomReportRow>& rows) {
  const auto old = os.precision(6);
  os << "elements,dofs,t_full,t_pod,t_pod_deim,speedup_pod,speedup_pod_deim\n";
  for (const auto& r : rows) {
    os << r.elements << ',' << r.dofs << ',' << r.t_full << ',' << r.t_pod << ',' << r.t_deim << ',' << r.s_pod
       << ',' << r.s_deim << '\n';
  }
  os << '\n' << "elements,component,error_pod,error_pod_deim\n";
  const char* names[] = {"u", "v", "s"};
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.err_pod.size(); ++c) {
      os << r.elements << ',' << (c < 3 ? names[c] : "?") << ',' << r.err_pod[c] << ','
         << (c < r.err_deim.size() ? r.err_deim[c] : 0.0) << '\n';
    }
  }
  os.precision(old);
}

namespace {

constexpr char kMagic[8] = {'S', 'G', 'R', 'D', 'S', 'N', 'P', '1'};

template <class T>
void put(std::ostream& os, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(bytes, sizeof(T));
}

template <class T>
T get(std::istream& is) {
  char bytes[sizeof(T)];
  if (!is.read(bytes, sizeof(T))) throw std::runtime_error("snapshot file truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_snapshot_file(const std::string& path, const Eigen::MatrixXd& data, std::uint32_t component) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  os.write(kMagic, sizeof kMagic);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(data.rows()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(data.cols()));
  put<std::uint32_t>(os, component);
  put<std::uint32_t>(os, 0);
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    for (Eigen::Index i = 0; i < data.rows(); ++i) put<double>(os, data(i, j));
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

Eigen::MatrixXd read_snapshot_file(const std::string& path, std::uint32_t* component) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a snapshot file: " + path);
  }
  const auto rows = get<std::uint64_t>(is);
  const auto cols = get<std::uint64_t>(is);
  const auto tag = get<std::uint32_t>(is);
  get<std::uint32_t>(is);
  if (component) *component = tag;
  Eigen::MatrixXd data(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    for (Eigen::Index i = 0; i < data.rows(); ++i) data(i, j) = get<double>(is);
  }
  return data;
}

}  // namespace skewrd

namespace skewrd {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <class Fn>
double seconds(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

RomReportRow rom_compare(const DgSpace& space, const Model& model, const TimeGrid& grid, const InitialCondition& ic,
                         const RomCompareOptions& opts) {
  if (opts.repeats == 0) throw std::invalid_argument("rom_compare: repeats must be positive");
  const ReactionSystem sys = reaction_system(model);
  const SystemOperators ops = assemble_operators(space, sys);
  const DgAssembler assembler(space);
  const State initial = make_initial_state(space, sys.size(), ic);

  // Offline: one recorded run.
  std::vector<State> full;
  SnapshotRecorder recorder(assembler, sys, opts.stride);
  {
    AvfStepper stepper(ops, sys, assembler, opts.newton);
    const Observer obs[] = {recorder.observer(),
                            {opts.stride, [&full](std::size_t, const State& s, const StepStats&) { full.push_back(s); }}};
    run_simulation(stepper, initial, grid, obs);
  }
  const SnapshotSet snaps = recorder.snapshots();
  const BlockDiagonal mb = mass_blocks(space);
  std::vector<Eigen::MatrixXd> psi;
  for (const auto& s : snaps.states) psi.push_back(compute_pod_basis(s, mb, opts.k).psi);
  const Eigen::MatrixXd W = compute_pod_basis(snaps.nonlinear, identity_blocks(space.size()), opts.m).psi;
  const ReducedSystem rs = build_reduced_system(space, ops, sys, psi, &W);

  RomReportRow row;
  row.elements = space.num_elements();
  row.dofs = space.size();

  std::vector<double> times;
  for (std::size_t r = 0; r < opts.repeats; ++r) {
    AvfStepper stepper(ops, sys, assembler, opts.newton);
    times.push_back(seconds([&] { run_simulation(stepper, initial, grid); }));
  }
  row.t_full = median(times);

  for (RomKind kind : {RomKind::kPod, RomKind::kPodDeim}) {
    ReducedStepper stepper(rs, space, kind, opts.newton);
    const Eigen::VectorXd a0 = stepper.project(initial, ops.mass);
    std::vector<Eigen::VectorXd> coeffs;
    times.clear();
    for (std::size_t r = 0; r < opts.repeats; ++r) {
      coeffs.assign(1, a0);
      coeffs.reserve(grid.steps / opts.stride + 1);
      times.push_back(seconds([&] {
        Eigen::VectorXd a = a0;
        for (std::size_t j = 1; j <= grid.steps; ++j) {
          try {
            a = stepper.step(a, grid.dt);
          } catch (const NewtonFailure& e) {
            throw StepFailure(std::string("reduced model: ") + e.what(), j, e.residual());
          }
          if (j % opts.stride == 0) coeffs.push_back(a);
        }
      }));
    }
    std::vector<State> rom;
    for (std::size_t j = 0; j < coeffs.size(); ++j) rom.push_back(stepper.lift(coeffs[j], full[j].t));
    const std::vector<double> err = mean_relative_errors(full, rom, ops.mass);
    if (kind == RomKind::kPod) {
      row.t_pod = median(times);
      row.err_pod = err;
    } else {
      row.t_deim = median(times);
      row.err_deim = err;
    }
  }
  row.s_pod = row.t_full / row.t_pod;
  row.s_deim = row.t_full / row.t_deim;
  return row;
}

}  // namespace skewrd
