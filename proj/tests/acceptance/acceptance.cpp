// Acceptance checks. `acceptance N` runs criterion N, no argument runs all.
// Prints one "PASS criterion N: ..." or "FAIL criterion N: ..." line each.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "skewrd/diagnostics.hpp"
#include "skewrd/experiment.hpp"
#include "skewrd/rom.hpp"

using namespace skewrd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

TwoComponentModel& two(ExperimentConfig& c) { return std::get<TwoComponentModel>(c.model); }

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) a(i, j) = g(rng);
  return a;
}

Eigen::MatrixXd random_orthonormal(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(n, k, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
}

// Energies (and optional per-step hook) along a preset run.
struct Trajectory {
  std::vector<double> energy;
  std::vector<StepStats> stats;
};

Trajectory simulate(const ExperimentConfig& cfg,
                    const std::function<void(std::size_t, const State&)>& hook = {}) {
  const DgSpace space(std::make_shared<const Mesh>(cfg.mesh.build()), cfg.degree, BasisKind::kOrthonormal, cfg.sigma);
  Trajectory t;
  const Observer obs[] = {{1, [&](std::size_t j, const State& s, const StepStats&) {
                             t.energy.push_back(discrete_energy(s, space, cfg.model));
                             if (hook) hook(j, s);
                           }}};
  t.stats = run_simulation(space, cfg.model, cfg.grid(), cfg.initial_condition(), obs, cfg.newton).stats;
  return t;
}

// Leftmost sign change of u in a 1D state, linearly interpolated.
std::optional<double> interface_position(const DgSpace& space, const State& s) {
  for (std::size_t e = 0; e < space.num_elements(); ++e) {
    const Point a = space.to_physical(e, {0.0, 0}), b = space.to_physical(e, {1.0, 0});
    const double ua = space.evaluate(s.fields[0], e, a), ub = space.evaluate(s.fields[0], e, b);
    if ((ua < 0) != (ub < 0)) return a[0] + (b[0] - a[0]) * ua / (ua - ub);
    if (e + 1 < space.num_elements()) {
      const double un = space.evaluate(s.fields[0], e + 1, b);
      if ((ub < 0) != (un < 0)) return b[0];
    }
  }
  return std::nullopt;
}

Outcome criterion1() {
  auto model = [](double g) { return TwoComponentModel::bistable(2.0 / 25.0, g, 7.0 / 10.0); };
  double lo = 1.0, hi = 10.0;
  if (classify_stability(model(lo)) != Stability::kMonostable || classify_stability(model(hi)) != Stability::kBistable) {
    return {false, "bracket [1, 10] does not contain a flip"};
  }
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (classify_stability(model(mid)) == Stability::kBistable ? hi : lo) = mid;
  }
  const double target = 7500.0 / 2316.0;
  const double flip = 0.5 * (lo + hi);
  return {std::abs(flip - target) < 1e-6, fmt("flip at gamma = %.9f, expected %.9f", flip, target)};
}

Outcome criterion2() {
  const TwoComponentModel m = TwoComponentModel::turing(-0.05, 0.00028, 0.005);
  const SteadyState st = find_steady_states(m).front();
  const TuringReport rep = check_turing(m, st);
  const TuringThresholds th = turing_threshold(m, st);
  const bool c3 = std::abs(th.condition3 - 0.000472) < 1e-6;
  const bool c4 = std::abs(th.condition4 - 0.002242) < 1e-6;
  const bool fu = std::abs(rep.fu - 0.592838) < 1e-6;
  return {c3 && c4 && fu, fmt("f_u = %.7f (%s), threshold 3 = %.7f (%s), threshold 4 = %.7f vs 0.002242 (%s)", rep.fu,
                              fu ? "ok" : "off", th.condition3, c3 ? "ok" : "off", th.condition4, c4 ? "ok" : "off")};
}

Outcome criterion3() {
  const TwoComponentModel m = TwoComponentModel::turing(-0.05, 0.00028, 0.005);
  const auto states = find_steady_states(m);
  if (states.size() != 1) return {false, fmt("%zu steady states", states.size())};
  const double u = states[0].values[0], v = states[0].values[1];
  const bool ok = std::abs(u + 0.368403) < 1e-5 && std::abs(v + 0.368403) < 1e-5 && std::abs(u * u * u + 0.05) < 1e-12;
  return {ok, fmt("(u, v) = (%.7f, %.7f), u^3 - kappa = %.2e", u, v, u * u * u + 0.05)};
}

Outcome criterion4() {
  const std::map<int, std::pair<std::size_t, std::size_t>> expected{{8, {384, 768}}, {16, {1536, 3072}}, {32, {6144, 12288}}};
  bool ok = true;
  std::ostringstream os;
  for (const auto& [n, dofs] : expected) {
    auto mesh = std::make_shared<const Mesh>(build_triangular_mesh({-1, 1}, {-1, 1}, n));
    const std::size_t a = DgSpace(mesh, 1).size(), b = DgSpace(mesh, 2).size();
    ok = ok && a == dofs.first && b == dofs.second;
    os << mesh->num_elements() << " triangles: " << a << '/' << b << "; ";
  }
  return {ok, os.str()};
}

Outcome criterion5() {
  // u' = u - u^3, u(0) = 0.5, integrated to T = 1 against the closed form
  SystemOperators ops;
  ops.mass = Eigen::MatrixXd::Identity(1, 1).sparseView();
  ops.stiffness = {SparseOperator(1, 1)};
  ReactionSystem sys;
  sys.components = {{1.0, 0.0, Cubic{0.0, 1.0, 0.0, -1.0}}};
  sys.coupling = Eigen::MatrixXd::Zero(1, 1);
  const PointwiseAssembler as(1);
  NewtonConfig cfg;
  cfg.abs_tol = 1e-15;
  const double u0 = 0.5, T = 1.0;
  const double exact = 1.0 / std::sqrt(1.0 + (1.0 / (u0 * u0) - 1.0) * std::exp(-2.0 * T));
  std::vector<double> err;
  for (double dt : {0.1, 0.05, 0.025}) {
    AvfStepper st(ops, sys, as, cfg);
    State s;
    s.fields = {Eigen::VectorXd::Constant(1, u0)};
    for (long j = 0; j < std::lround(T / dt); ++j) s = st.step(s, dt);
    err.push_back(std::abs(s.fields[0](0) - exact));
  }
  const double p1 = std::log2(err[0] / err[1]), p2 = std::log2(err[1] / err[2]);
  const bool order_ok = p1 >= 1.9 && p1 <= 2.1 && p2 >= 1.9 && p2 <= 2.1;

  // linear two-component system: AVF against a dense midpoint solve
  const DgSpace space(std::make_shared<const Mesh>(build_interval_mesh(0, 3, 0.25)), 2);
  ReactionSystem lin;
  lin.components = {{1.5, 0.4, Cubic{0.2, -0.7, 0, 0}}, {3.0, 1.1, Cubic{-0.1, -1.3, 0, 0}}};
  lin.coupling = Eigen::MatrixXd::Zero(2, 2);
  lin.coupling(0, 1) = -1.0;
  lin.coupling(1, 0) = 0.8;
  const SystemOperators lops = assemble_operators(space, lin);
  const DgAssembler das(space);
  std::mt19937_64 rng(6);
  const auto n = static_cast<Eigen::Index>(space.size());
  State y;
  y.fields = {gaussian(n, 1, rng), gaussian(n, 1, rng)};
  const double dt = 0.3;
  const State next = avf_step(y, dt, lops, lin, das);
  const Eigen::MatrixXd m = Eigen::MatrixXd(lops.mass);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2 * n, 2 * n), K = B;
  Eigen::VectorXd b(2 * n);
  for (Eigen::Index c = 0; c < 2; ++c) {
    const auto& k = lin.components[static_cast<std::size_t>(c)];
    B.block(c * n, c * n, n, n) = k.tau * m;
    K.block(c * n, c * n, n, n) = -Eigen::MatrixXd(lops.stiffness[static_cast<std::size_t>(c)]) + k.self.c1 * m;
    K.block(c * n, (1 - c) * n, n, n) = lin.coupling(c, 1 - c) * m;
    b.segment(c * n, n) = k.self.c0 * space.constant_load();
  }
  const Eigen::VectorXd mid = (B - 0.5 * dt * K).lu().solve((B + 0.5 * dt * K) * y.stacked() + dt * b);
  const double diff = (next.stacked() - mid).cwiseAbs().maxCoeff();
  return {order_ok && diff < 1e-12, fmt("orders %.3f, %.3f; |AVF - midpoint| = %.2e", p1, p2, diff)};
}

Outcome criterion6() {
  // u-only flow on 100 elements, v frozen at 0: tau1 u' = d1 u_xx + f1(u) + kappa
  const TwoComponentModel m = TwoComponentModel::bistable(1.0 / 3.0, 8.0, 0.7);
  const DgSpace space(std::make_shared<const Mesh>(build_interval_mesh(0, 10, 0.1)), 1);
  ReactionSystem sys;
  sys.components = {reaction_system(m).components[0]};
  sys.coupling = Eigen::MatrixXd::Zero(1, 1);
  const SystemOperators ops = assemble_operators(space, sys);
  const DgAssembler as(space);
  AvfStepper stepper(ops, sys, as);
  InitialCondition ic;
  ic.seed = 3;
  State full = make_initial_state(space, 2, ic);
  full.fields[1].setZero();
  double e = discrete_energy(full, space, m);
  const double e0 = e;
  std::size_t violations = 0;
  for (int j = 0; j < 200; ++j) {
    State u;
    u.fields = {full.fields[0]};
    full.fields[0] = stepper.step(u, 0.5).fields[0];
    const double next = discrete_energy(full, space, m);
    // only round-off may push the energy up
    if (next - e > 1e-13 * std::max(1.0, std::abs(e))) ++violations;
    e = next;
  }
  return {violations == 0, fmt("E: %.6f -> %.6f over 200 steps, %zu increases", e0, e, violations)};
}

Outcome criterion7() {
  const ExperimentConfig cfg = make_preset("front");
  const DgSpace space(std::make_shared<const Mesh>(cfg.mesh.build()), cfg.degree);
  std::vector<double> pos;
  std::size_t last_seen = 0;
  const Trajectory t = simulate(cfg, [&](std::size_t j, const State& s) {
    if (auto x = interface_position(space, s)) {
      pos.push_back(*x);
      last_seen = j;
    }
  });
  bool up = true, down = true;
  for (std::size_t i = 1; i < pos.size(); ++i) {
    up = up && pos[i] >= pos[i - 1];
    down = down && pos[i] <= pos[i - 1];
  }
  const std::size_t n = t.energy.size() - 1;
  const double drift = std::abs(t.energy[n] - t.energy[n / 2]) / std::abs(t.energy[n]);
  std::string where = pos.empty() ? "no interface" :
      fmt("interface %.3f -> %.3f, present through step %zu of %zu", pos.front(), pos.back(), last_seen, n);
  return {!pos.empty() && (up || down) && drift < 0.01,
          fmt("%s, %s; last-100-step drift %.3e of |E| = %.6f", where.c_str(), up || down ? "monotone" : "not monotone",
              drift, std::abs(t.energy[n]))};
}

Outcome criterion8() {
  const ExperimentConfig cfg = make_preset("pulse");
  const Trajectory t = simulate(cfg);
  const std::size_t n = t.energy.size() - 1;
  const double eT = t.energy[n];
  double worst = 0.0;
  for (std::size_t j = n / 4; j <= n; ++j) worst = std::max(worst, std::abs(t.energy[j] - eT));
  return {worst < 0.02 * std::abs(eT), fmt("max |E - E(T)| after 25%% = %.3e, |E(T)| = %.6f (ratio %.3e)", worst,
                                           std::abs(eT), worst / std::abs(eT))};
}

Outcome criterion9() {
  std::mt19937_64 rng(9);
  double worst = 0.0;
  std::size_t bases = 0;
  auto check = [&](const Eigen::MatrixXd& psi, const Eigen::MatrixXd& m) {
    worst = std::max(worst, (psi.transpose() * m * psi - Eigen::MatrixXd::Identity(psi.cols(), psi.cols())).cwiseAbs().maxCoeff());
    ++bases;
  };
  // snapshots of a short labyrinth run on 128 triangles
  const DgSpace space(std::make_shared<const Mesh>(build_triangular_mesh({-1, 1}, {-1, 1}, 8)), 1);
  const Model model = TwoComponentModel::turing(0.0, 0.00028, 0.005);
  const ReactionSystem sys = reaction_system(model);
  const DgAssembler as(space);
  SnapshotRecorder rec(as, sys);
  InitialCondition ic;
  ic.seed = 1;
  const Observer obs[] = {rec.observer()};
  run_simulation(space, model, TimeGrid{0.0, 0.1, 100}, ic, obs);
  const SnapshotSet snaps = rec.snapshots();
  const BlockDiagonal mb = mass_blocks(space);
  const Eigen::MatrixXd md = Eigen::MatrixXd(assemble_mass(space));
  for (const auto& u : snaps.states) check(compute_pod_basis(u, mb, 10).psi, md);
  check(compute_pod_basis(snaps.nonlinear, identity_blocks(space.size()), 50).psi,
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(space.size()), static_cast<Eigen::Index>(space.size())));
  // random snapshots, random block SPD masses
  for (int t = 0; t < 20; ++t) {
    BlockDiagonal m;
    m.block = 3;
    m.blocks.resize(3, 3 * 20);
    for (std::size_t e = 0; e < 20; ++e) {
      const Eigen::MatrixXd a = gaussian(3, 3, rng);
      m[e] = a * a.transpose() + Eigen::MatrixXd::Identity(3, 3);
    }
    check(compute_pod_basis(gaussian(60, 15, rng), m, 6).psi, Eigen::MatrixXd(m.to_sparse()));
  }
  // optimality, N = 16, J = 9, k = 3
  BlockDiagonal m;
  m.block = 4;
  m.blocks.resize(4, 16);
  for (std::size_t e = 0; e < 4; ++e) {
    const Eigen::MatrixXd a = gaussian(4, 4, rng);
    m[e] = a * a.transpose() + Eigen::MatrixXd::Identity(4, 4);
  }
  const Eigen::MatrixXd mm = Eigen::MatrixXd(m.to_sparse());
  const Eigen::MatrixXd lt = mm.llt().matrixU();
  const Eigen::MatrixXd u = gaussian(16, 9, rng);
  auto error = [&](const Eigen::MatrixXd& psi) { return (lt * (u - psi * (psi.transpose() * mm * u))).squaredNorm(); };
  const double pod = error(compute_pod_basis(u, m, 3).psi);
  double best_random = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 2000; ++t) {
    best_random = std::min(best_random, error(lt.triangularView<Eigen::Upper>().solve(random_orthonormal(16, 3, rng))));
  }
  const bool ok = worst < 1e-10 && pod <= best_random + 1e-9;
  return {ok, fmt("max |Psi^T M Psi - I| = %.2e over %zu bases; POD error %.6f vs best random %.6f", worst, bases, pod,
                  best_random)};
}

Outcome criterion10() {
  std::mt19937_64 rng(10);
  std::size_t agree = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::MatrixXd w = random_orthonormal(50, 8, rng);
    const auto idx = deim_select(w);
    if (idx == deim_select_reference(w) && std::set<Eigen::Index>(idx.begin(), idx.end()).size() == 8) ++agree;
    const DeimData d = build_deim(w, random_orthonormal(50, 4, rng));
    const Eigen::VectorXd f = gaussian(50, 1, rng);
    Eigen::VectorXd s(8);
    for (int i = 0; i < 8; ++i) s(i) = f(d.indices[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd rec = d.reconstruct(s);
    for (auto i : d.indices) worst = std::max(worst, std::abs(rec(i) - f(i)));
  }
  return {agree == 100 && worst < 1e-11, fmt("%zu/100 match the reference greedy; interpolation error %.2e", agree, worst)};
}

ExperimentConfig rom_config() {
  ExperimentConfig c = make_preset("rom-compare");
  return c;
}

Outcome criterion11() {
  const ExperimentConfig c = rom_config();
  const DgSpace space(std::make_shared<const Mesh>(build_triangular_mesh(c.mesh.x, c.mesh.y, 8)), 1);
  RomCompareOptions o;
  o.k = 10;
  o.m = 50;
  o.repeats = 1;
  o.newton = c.newton;
  const RomReportRow r = rom_compare(space, c.model, c.grid(), c.initial_condition(), o);
  const bool ok = r.elements == 128 && std::max({r.err_pod[0], r.err_pod[1], r.err_deim[0], r.err_deim[1]}) <= 0.1;
  return {ok, fmt("T = %.0f, 128 triangles: POD errors (%.2e, %.2e), POD-DEIM errors (%.2e, %.2e)", c.t_end, r.err_pod[0],
                  r.err_pod[1], r.err_deim[0], r.err_deim[1])};
}

Outcome criterion12() {
  const ExperimentConfig c = rom_config();
  std::vector<RomReportRow> rows;
  RomCompareOptions o;
  o.k = c.rom.k;
  o.m = c.rom.m;
  o.repeats = 3;
  o.newton = c.newton;
  for (int n : {8, 16, 32}) {
    const DgSpace space(std::make_shared<const Mesh>(build_triangular_mesh(c.mesh.x, c.mesh.y, n)), 1);
    rows.push_back(rom_compare(space, c.model, c.grid(), c.initial_condition(), o));
  }
  bool ok = true;
  std::ostringstream os;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ok = ok && rows[i].s_pod >= 1.0 && rows[i].s_deim >= 1.0;
    if (i > 0) ok = ok && rows[i].s_pod >= rows[i - 1].s_pod && rows[i].s_deim >= rows[i - 1].s_deim;
    os << rows[i].elements << ": S_POD " << fmt("%.2f", rows[i].s_pod) << " S_DEIM " << fmt("%.2f", rows[i].s_deim) << "; ";
  }
  ok = ok && rows.back().s_deim >= rows.back().s_pod;
  return {ok, os.str()};
}

Outcome criterion13() {
  std::vector<double> worst;
  std::ostringstream os;
  for (double dt : {0.5, 0.25, 0.125}) {
    ExperimentConfig c = make_preset("front");
    c.dt = dt;
    const DgSpace space(std::make_shared<const Mesh>(c.mesh.build()), c.degree);
    std::optional<State> prev;
    double w = 0.0;
    const Observer obs[] = {{1, [&](std::size_t, const State& s, const StepStats&) {
                               if (prev) w = std::max(w, energy_increment_residual(*prev, s, dt, space, c.model).residual);
                               prev = s;
                             }}};
    run_simulation(space, c.model, c.grid(), c.initial_condition(), obs, c.newton);
    worst.push_back(w);
    os << "dt " << dt << ": " << fmt("%.3e", w) << "; ";
  }
  const bool ok = worst[1] < worst[0] && worst[2] < worst[1];
  return {ok, os.str() + (ok ? "" : "AVF satisfies the relation exactly, residuals are Newton-tolerance noise")};
}

Outcome criterion14() {
  const ExperimentConfig c = make_preset("labyrinth");
  const DgSpace space(std::make_shared<const Mesh>(c.mesh.build()), c.degree);
  const SimulationResult r = run_simulation(space, c.model, c.grid(), c.initial_condition(), {}, c.newton);
  std::size_t cheap = 0;
  std::map<int, std::size_t> hist;
  for (const auto& s : r.stats) {
    cheap += s.newton_iterations <= 2;
    ++hist[s.newton_iterations];
  }
  const double frac = static_cast<double>(cheap) / static_cast<double>(r.stats.size());
  std::ostringstream os;
  os << fmt("%zu triangles, %zu steps, %.1f%% in <= 2 iterations (", space.num_elements(), r.stats.size(), 100 * frac);
  for (const auto& [k, v] : hist) os << k << ":" << v << ' ';
  os << ')';
  return {frac >= 0.95, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Outcome (*)()> criteria{criterion1,  criterion2,  criterion3,  criterion4,  criterion5,
                                            criterion6,  criterion7,  criterion8,  criterion9,  criterion10,
                                            criterion11, criterion12, criterion13, criterion14};
  std::vector<int> which;
  if (argc > 1) {
    for (int i = 1; i < argc; ++i) {
      const int k = std::atoi(argv[i]);
      if (k < 1 || k > static_cast<int>(criteria.size())) {
        std::cerr << "usage: acceptance [1-" << criteria.size() << "]...\n";
        return 2;
      }
      which.push_back(k);
    }
  } else {
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) which.push_back(k);
  }
  int failed = 0;
  for (int k : which) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[static_cast<std::size_t>(k - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k << ": " << o.detail << fmt(" [%.1f s]", secs)
              << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
