#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "skewrd/diagnostics.hpp"
#include "skewrd/errors.hpp"
#include "skewrd/rom.hpp"

using namespace skewrd;
using Catch::Approx;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) a(i, j) = g(rng);
  return a;
}

BlockDiagonal random_spd_blocks(int block, std::size_t count, std::mt19937_64& rng) {
  BlockDiagonal m;
  m.block = block;
  m.blocks.resize(block, block * static_cast<Eigen::Index>(count));
  for (std::size_t e = 0; e < count; ++e) {
    const Eigen::MatrixXd a = gaussian(block, block, rng);
    m[e] = a * a.transpose() + Eigen::MatrixXd::Identity(block, block);
  }
  return m;
}

Eigen::MatrixXd dense(const BlockDiagonal& m) { return Eigen::MatrixXd(m.to_sparse()); }

std::shared_ptr<const Mesh> square(int n) {
  return std::make_shared<const Mesh>(build_triangular_mesh({-1, 1}, {-1, 1}, n));
}

}  // namespace

TEST_CASE("POD with identity mass is the plain SVD", "[rom]") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd u = gaussian(30, 12, rng);
  const PodBasis pod = compute_pod_basis(u, identity_blocks(30), 4);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(u, Eigen::ComputeThinU);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double dot = pod.psi.col(i).dot(svd.matrixU().col(i));
    CHECK(std::abs(dot) == Approx(1.0).epsilon(1e-12));
  }
  REQUIRE(pod.singular_values.size() == 12);
  for (Eigen::Index i = 0; i < 12; ++i) CHECK(pod.singular_values(i) == Approx(svd.singularValues()(i)).epsilon(1e-12));
}

TEST_CASE("POD of repeated columns", "[rom]") {
  std::mt19937_64 rng(3);
  const BlockDiagonal m = random_spd_blocks(3, 5, rng);
  const Eigen::VectorXd w = gaussian(15, 1, rng);
  const int j = 7;
  const Eigen::MatrixXd u = w.replicate(1, j);
  const PodBasis pod = compute_pod_basis(u, m, 1);
  const double wm = std::sqrt(w.dot(m.apply(w)));
  const Eigen::VectorXd expect = w / wm;
  const double sgn = pod.psi.col(0).dot(expect) > 0 ? 1.0 : -1.0;
  CHECK((sgn * pod.psi.col(0) - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(pod.singular_values(0) == Approx(std::sqrt(double(j)) * wm).epsilon(1e-12));
  CHECK_THROWS_AS(compute_pod_basis(u, m, 2), RankDeficiencyError);
}

TEST_CASE("POD bases are mass-orthonormal", "[rom]") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const BlockDiagonal m = random_spd_blocks(6, 10, rng);
    const Eigen::MatrixXd u = gaussian(60, 25, rng);
    const PodBasis pod = compute_pod_basis(u, m, 8);
    const Eigen::MatrixXd g = pod.psi.transpose() * dense(m) * pod.psi;
    CHECK((g - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
    for (Eigen::Index i = 1; i < pod.singular_values.size(); ++i) {
      CHECK(pod.singular_values(i) <= pod.singular_values(i - 1));
    }
  }
  const Eigen::MatrixXd u = gaussian(10, 4, rng);
  CHECK_THROWS(compute_pod_basis(u, identity_blocks(10), 5));
  CHECK_THROWS(compute_pod_basis(u, identity_blocks(12), 2));
}

TEST_CASE("POD subspace is optimal", "[rom]") {
  std::mt19937_64 rng(5);
  const int n = 16, j = 9, k = 3;
  const BlockDiagonal m = random_spd_blocks(4, 4, rng);
  const Eigen::MatrixXd md = dense(m);
  const Eigen::MatrixXd u = gaussian(n, j, rng);
  const Eigen::MatrixXd lt = md.llt().matrixU();  // M = L L^T, lt = L^T
  auto error = [&](const Eigen::MatrixXd& psi) {
    return (lt * (u - psi * (psi.transpose() * md * u))).squaredNorm();
  };
  const PodBasis pod = compute_pod_basis(u, m, k);
  const double best = error(pod.psi);
  CHECK(best == Approx(pod.singular_values.tail(j - k).squaredNorm()).epsilon(1e-10));
  double min_random = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 2000; ++t) {
    // random M-orthonormal basis: psi = L^-T q with q orthonormal
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(n, k, rng));
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
    const Eigen::MatrixXd psi = lt.triangularView<Eigen::Upper>().solve(q);
    min_random = std::min(min_random, error(psi));
  }
  CHECK(best <= min_random + 1e-9);
}

TEST_CASE("rank selection by energy", "[rom]") {
  Eigen::VectorXd s(4);
  s << 10, 1, 0.1, 0.01;
  CHECK(rank_for_energy(s, 0.5) == 1);
  CHECK(rank_for_energy(s, 1e-3) == 2);
  CHECK(rank_for_energy(s, 1e-12) == 4);
}

TEST_CASE("DEIM selection", "[rom]") {
  Eigen::MatrixXd w(3, 1);
  w << 0.1, -0.9, 0.3;
  CHECK(deim_select(w) == std::vector<Eigen::Index>{1});  // 0-based row 2

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(10, 4);
  CHECK(deim_select(id) == std::vector<Eigen::Index>{0, 1, 2, 3});

  Eigen::MatrixXd tie(3, 1);
  tie << 0.5, -0.5, 0.2;
  CHECK(deim_select(tie).front() == 0);

  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(50, 8, rng));
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(50, 8);
    const auto idx = deim_select(q);
    CHECK(idx == deim_select_reference(q));
    CHECK(idx == deim_select(q));
    const std::set<Eigen::Index> distinct(idx.begin(), idx.end());
    CHECK(distinct.size() == 8);
    CHECK(*distinct.rbegin() < 50);
    CHECK(*distinct.begin() >= 0);
  }

  Eigen::MatrixXd dep(6, 3);
  dep.col(0) = gaussian(6, 1, rng);
  dep.col(1) = gaussian(6, 1, rng);
  dep.col(2) = dep.col(0) - 2.0 * dep.col(1);
  CHECK_THROWS_AS(deim_select(dep), SelectionError);
}

TEST_CASE("DEIM interpolation", "[rom]") {
  std::mt19937_64 rng(8);
  const int n = 40, m = 6, k = 4;
  const Eigen::MatrixXd w = gaussian(n, m, rng);
  const Eigen::MatrixXd psi = gaussian(n, k, rng);
  const DeimData d = build_deim(w, psi);
  auto sample = [&](const Eigen::VectorXd& f) {
    Eigen::VectorXd s(m);
    for (int i = 0; i < m; ++i) s(i) = f(d.indices[static_cast<std::size_t>(i)]);
    return s;
  };
  SECTION("exact on span(W)") {
    const Eigen::VectorXd f = w * gaussian(m, 1, rng);
    CHECK((d.apply(sample(f)) - psi.transpose() * f).cwiseAbs().maxCoeff() < 1e-10);
  }
  SECTION("interpolates at the selected rows") {
    const Eigen::VectorXd f = gaussian(n, 1, rng);
    const Eigen::VectorXd rec = d.reconstruct(sample(f));
    for (auto i : d.indices) CHECK(std::abs(rec(i) - f(i)) < 1e-11);
  }
  SECTION("full interpolation") {
    const Eigen::MatrixXd wf = gaussian(12, 12, rng);
    const Eigen::MatrixXd pf = gaussian(12, 3, rng);
    const DeimData full = build_deim(wf, pf);
    const Eigen::VectorXd f = gaussian(12, 1, rng);
    Eigen::VectorXd s(12);
    for (int i = 0; i < 12; ++i) s(i) = f(full.indices[static_cast<std::size_t>(i)]);
    CHECK((full.apply(s) - pf.transpose() * f).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("DEIM sampler matches full assembly", "[rom]") {
  const DgSpace space(square(4), 2);
  std::mt19937_64 rng(9);
  const auto n = static_cast<Eigen::Index>(space.size());
  const Eigen::MatrixXd psi = gaussian(n, 5, rng) * 0.2;
  const std::vector<Eigen::Index> idx{3, 17, 40, 41, 95, n - 1};
  const DeimSampler sampler(space, idx, psi);
  CHECK(sampler.element_count() <= idx.size());
  const Cubic p{0.0, 1.0, 0.3, -1.0};
  const Eigen::VectorXd a = gaussian(5, 1, rng);
  const Eigen::VectorXd y = psi * a;
  const Eigen::VectorXd full = assemble_reaction_vector(space, y, [&](double x) { return p(x); });
  const Eigen::MatrixXd jac =
      Eigen::MatrixXd(assemble_reaction_jacobian(space, y, [&](double x) { return p.derivative(x); })) * psi;
  const Eigen::VectorXd s = sampler.sample(a, p);
  const Eigen::MatrixXd sj = sampler.sample_jacobian(a, p);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    CHECK(s(static_cast<Eigen::Index>(i)) == Approx(full(idx[i])).margin(1e-13));
    CHECK((sj.row(static_cast<Eigen::Index>(i)) - jac.row(idx[i])).cwiseAbs().maxCoeff() < 1e-13);
  }
}

namespace {

struct Setup {
  DgSpace space;
  Model model;
  ReactionSystem sys;
  SystemOperators ops;
  Setup(int n, int degree, Model m)
      : space(square(n), degree), model(m), sys(reaction_system(m)), ops(assemble_operators(space, sys)) {}
};

}  // namespace

TEST_CASE("reduced system with the identity basis is the full system", "[rom]") {
  Setup s(3, 1, TwoComponentModel::turing(0.0, 0.00028, 0.005));
  const auto n = static_cast<Eigen::Index>(s.space.size());
  const std::vector<Eigen::MatrixXd> psi(2, Eigen::MatrixXd::Identity(n, n));
  const ReducedSystem rs = build_reduced_system(s.space, s.ops, s.sys, psi);
  CHECK(rs.size() == static_cast<std::size_t>(2 * n));
  CHECK((rs.stiffness[1] - Eigen::MatrixXd(s.ops.stiffness[1])).cwiseAbs().maxCoeff() < 1e-14);
  ReducedStepper rstep(rs, s.space, RomKind::kPod);
  const DgAssembler as(s.space);
  AvfStepper fstep(s.ops, s.sys, as);
  InitialCondition ic;
  ic.seed = 1;
  State full = make_initial_state(s.space, 2, ic);
  Eigen::VectorXd a = rstep.project(full, s.ops.mass);
  CHECK((a - full.stacked()).cwiseAbs().maxCoeff() < 1e-12);
  for (int j = 0; j < 5; ++j) {
    full = fstep.step(full, 0.1);
    a = rstep.step(a, 0.1);
  }
  CHECK((rstep.lift(a, 0.5).stacked() - full.stacked()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("constant mode has zero reduced stiffness", "[rom]") {
  Setup s(4, 2, TwoComponentModel::turing(0.0, 0.3, 2.0));
  const State c = constant_state(s.space, std::vector<double>{1.0, 1.0});
  const std::vector<Eigen::MatrixXd> psi{c.fields[0], c.fields[1]};
  const ReducedSystem rs = build_reduced_system(s.space, s.ops, s.sys, psi);
  CHECK(std::abs(rs.stiffness[0](0, 0)) < 1e-12);
  CHECK(std::abs(rs.stiffness[1](0, 0)) < 1e-12);
  CHECK(rs.mass[0](0, 0) == Approx(4.0).epsilon(1e-12));
}

TEST_CASE("reduced residual is the projected full residual", "[rom]") {
  Setup s(4, 1, TwoComponentModel::turing(-0.05, 0.00028, 0.005));
  std::mt19937_64 rng(10);
  const auto n = static_cast<Eigen::Index>(s.space.size());
  const std::vector<Eigen::MatrixXd> psi{gaussian(n, 5, rng), gaussian(n, 5, rng)};
  const ReducedSystem rs = build_reduced_system(s.space, s.ops, s.sys, psi);
  NewtonConfig cfg;
  cfg.abs_tol = 1e-12;
  ReducedStepper rstep(rs, s.space, RomKind::kPod, cfg);
  const DgAssembler as(s.space);
  AvfStepper fstep(s.ops, s.sys, as);
  Eigen::VectorXd a = 0.1 * gaussian(10, 1, rng);
  for (int j = 0; j < 10; ++j) {
    const Eigen::VectorXd next = rstep.step(a, 0.1);
    const Eigen::VectorXd r = rstep.residual(a, next, 0.1);
    CHECK(r.norm() < 1e-8);
    const Eigen::VectorXd rf = fstep.residual(rstep.lift(a, 0), rstep.lift(next, 0), 0.1);
    Eigen::VectorXd projected(10);
    projected << psi[0].transpose() * rf.head(n), psi[1].transpose() * rf.tail(n);
    CHECK((projected - r).cwiseAbs().maxCoeff() < 1e-10);
    a = next;
  }
}

TEST_CASE("snapshots, POD and POD-DEIM on a short labyrinth run", "[rom]") {
  Setup s(4, 1, TwoComponentModel::turing(0.0, 0.00028, 0.005));
  const DgAssembler as(s.space);
  SnapshotRecorder rec(as, s.sys, 1);
  InitialCondition ic;
  ic.seed = 1;
  std::vector<State> full;
  const Observer keep[] = {rec.observer(), {1, [&](std::size_t, const State& st, const StepStats&) { full.push_back(st); }}};
  run_simulation(s.space, s.model, TimeGrid{0.0, 0.1, 20}, ic, keep);
  const SnapshotSet snaps = rec.snapshots();
  REQUIRE(snaps.count() == 21);
  REQUIRE_NOTHROW(snaps.validate());
  // nonlinear columns are the assembled cubic without its constant term
  const Cubic p0 = without_constant(s.sys.components[0].self);
  CHECK(p0.c0 == 0.0);
  for (Eigen::Index j : {Eigen::Index{0}, Eigen::Index{7}, Eigen::Index{20}}) {
    CHECK((snaps.nonlinear.col(j) - as.reaction(snaps.states[0].col(j), p0)).cwiseAbs().maxCoeff() < 1e-14);
  }

  const BlockDiagonal mb = mass_blocks(s.space);
  std::vector<Eigen::MatrixXd> psi;
  for (const auto& u : snaps.states) psi.push_back(compute_pod_basis(u, mb, 6).psi);
  const Eigen::MatrixXd w = compute_pod_basis(snaps.nonlinear, identity_blocks(s.space.size()), 12).psi;
  const ReducedSystem rs = build_reduced_system(s.space, s.ops, s.sys, psi, &w);
  CHECK((rs.mass[0] - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
  for (RomKind kind : {RomKind::kPod, RomKind::kPodDeim}) {
    ReducedStepper rstep(rs, s.space, kind);
    Eigen::VectorXd a = rstep.project(full.front(), s.ops.mass);
    std::vector<State> rom{rstep.lift(a, 0.0)};
    for (std::size_t j = 1; j < full.size(); ++j) {
      a = rstep.step(a, 0.1);
      rom.push_back(rstep.lift(a, full[j].t));
    }
    const auto err = mean_relative_errors(full, rom, s.ops.mass);
    INFO("kind " << static_cast<int>(kind) << " errors " << err[0] << ' ' << err[1]);
    CHECK(err[0] < 0.1);
    CHECK(err[1] < 0.1);
  }
  const auto zero = mean_relative_errors(full, full, s.ops.mass);
  CHECK(zero[0] == 0.0);
  CHECK(zero[1] == 0.0);
  CHECK_THROWS(mean_relative_errors(full, {}, s.ops.mass));
  ReducedSystem no_deim = build_reduced_system(s.space, s.ops, s.sys, psi);
  CHECK_THROWS_AS(ReducedStepper(no_deim, s.space, RomKind::kPodDeim), std::invalid_argument);
}

TEST_CASE("rom_compare report", "[rom]") {
  const DgSpace space(square(4), 1);
  InitialCondition ic;
  ic.seed = 1;
  RomCompareOptions opts;
  opts.k = 4;
  opts.m = 8;
  opts.repeats = 1;
  const RomReportRow row = rom_compare(space, TwoComponentModel::turing(0.0, 0.00028, 0.005), TimeGrid{0.0, 0.1, 10}, ic, opts);
  CHECK(row.elements == 32);
  CHECK(row.dofs == 96);
  CHECK(row.t_full > 0.0);
  CHECK(row.s_pod == Approx(row.t_full / row.t_pod));
  CHECK(row.err_pod.size() == 2);
  std::ostringstream os;
  write_rom_report_csv(os, {row});
  CHECK(os.str().find("32") != std::string::npos);
}

TEST_CASE("snapshot file round trip", "[rom]") {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd a = gaussian(17, 5, rng);
  const auto path = (std::filesystem::temp_directory_path() / "skewrd_snap_test.bin").string();
  write_snapshot_file(path, a, 3);
  std::uint32_t tag = 0;
  const Eigen::MatrixXd b = read_snapshot_file(path, &tag);
  CHECK(tag == 3);
  CHECK(a == b);
  {
    std::ofstream bad(path, std::ios::binary);
    bad << "NOTASNAP";
  }
  CHECK_THROWS(read_snapshot_file(path));
  std::filesystem::remove(path);
}
