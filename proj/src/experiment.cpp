#include "skewrd/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "skewrd/diagnostics.hpp"
#include "skewrd/errors.hpp"

namespace skewrd {

using nlohmann::json;

int MeshSpec::cells_per_side() const {
  return static_cast<int>(std::lround((x[1] - x[0]) / dx));
}

Mesh MeshSpec::build() const {
  if (dim == 1) return build_interval_mesh(x[0], x[1], dx);
  return build_triangular_mesh(x, y, cells_per_side());
}

InitialCondition ExperimentConfig::initial_condition() const {
  InitialCondition ic;
  const std::size_t nc = component_count(model);
  switch (initial.kind) {
    case InitialKind::kRandom:
      ic.seed = seed;
      break;
    case InitialKind::kTanh: {
      const InitialSpec s = initial;
      ic.fields.push_back([](const Point& p) { return std::tanh(p[0]); });
      ic.fields.push_back([s](const Point& p) { return s.v_offset + s.v_slope * std::tanh(p[0]); });
      for (std::size_t c = 2; c < nc; ++c) ic.fields.push_back([s](const Point&) { return s.rest; });
      break;
    }
    case InitialKind::kPlateau: {
      const InitialSpec s = initial;
      ic.fields.push_back([s](const Point& p) {
        for (const auto& iv : s.intervals) {
          if (p[0] >= iv[0] && p[0] <= iv[1]) return s.inside;
        }
        return s.outside;
      });
      for (std::size_t c = 1; c < nc; ++c) ic.fields.push_back([s](const Point&) { return s.rest; });
      break;
    }
  }
  return ic;
}

void ExperimentConfig::validate() const {
  if (mesh.dim != 1 && mesh.dim != 2) throw ConfigError("mesh.dim must be 1 or 2");
  if (!(mesh.dx > 0.0) || !(mesh.x[1] > mesh.x[0])) throw ConfigError("mesh: need dx > 0 and x0 < x1");
  if (mesh.dim == 2) {
    if (!(mesh.y[1] > mesh.y[0])) throw ConfigError("mesh: need y0 < y1");
    if (mesh.cells_per_side() < 1) throw ConfigError("mesh: dx larger than the domain");
  }
  if (degree < 1 || degree > 4) throw ConfigError("degree must be in 1..4");
  if (sigma && !(*sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(dt > 0.0) || !(t_end > 0.0)) throw ConfigError("time: dt and t_end must be positive");
  try {
    std::visit([](const auto& m) { m.validate(); }, model);
    (void)grid();
    newton.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (initial.kind == InitialKind::kTanh && mesh.dim != 1) throw ConfigError("tanh initial data is 1D only");
  if (initial.kind == InitialKind::kPlateau && mesh.dim != 1) throw ConfigError("plateau initial data is 1D only");
  if (initial.kind == InitialKind::kTanh && component_count(model) != 2) {
    throw ConfigError("tanh initial data needs a two-component model");
  }
  if (rom.k == 0 || rom.m == 0 || rom.stride == 0 || rom.repeats == 0) {
    throw ConfigError("rom: k, m, stride and repeats must be positive");
  }
  for (int n : rom.meshes) {
    if (n < 1) throw ConfigError("rom.meshes: entries must be positive");
  }
}

// ---------------------------------------------------------------------------
// presets

namespace {

ExperimentConfig bistable_1d(double gamma, double dt) {
  ExperimentConfig c;
  c.mesh = {1, {-60.0, 60.0}, {0.0, 1.0}, 0.1};
  auto m = TwoComponentModel::bistable(1.0 / 3.0, gamma, 0.7);
  m.d1 = 1.0;
  m.d2 = 1.25;
  m.tau1 = 1.0;
  m.tau2 = 12.5;
  c.model = m;
  c.dt = dt;
  c.t_end = 100.0;
  c.snapshot_every = static_cast<std::size_t>(std::lround(10.0 / dt));
  return c;
}

ExperimentConfig three_1d(double alpha, double beta, double tau, double theta, double t_end) {
  ExperimentConfig c;
  c.mesh = {1, {-1000.0, 1000.0}, {0.0, 1.0}, 0.5};
  ThreeComponentModel m;
  m.eps = 0.01;
  m.alpha = alpha;
  m.beta = beta;
  m.gamma = -0.25;
  m.d = 5.0;
  m.tau = tau;
  m.theta = theta;
  c.model = m;
  c.dt = 0.5;
  c.t_end = t_end;
  c.initial.kind = InitialKind::kPlateau;
  c.initial.rest = 0.0;
  c.snapshot_every = 50;
  return c;
}

ExperimentConfig turing_2d(double kappa) {
  ExperimentConfig c;
  c.mesh = {2, {-1.0, 1.0}, {-1.0, 1.0}, 1.0 / 16.0};
  c.model = TwoComponentModel::turing(kappa, 0.00028, 0.005);
  c.dt = 0.1;
  c.t_end = 200.0;
  c.initial.kind = InitialKind::kRandom;
  c.seed = 1;
  c.snapshot_every = 200;
  return c;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"front", "pulse",  "one-pulse", "two-pulse",
                                                 "multi-pulse", "spots", "labyrinth", "rom-compare"};
  return names;
}

ExperimentConfig make_preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "front") {
    c = bistable_1d(8.0, 0.5);
    c.initial = {InitialKind::kTanh, 1.0, -1.0, {}, 1.0, -1.0, 0.0};
  } else if (name == "pulse") {
    c = bistable_1d(0.8, 0.1);
    c.initial = {InitialKind::kTanh, -0.6, 0.0, {}, 1.0, -1.0, 0.0};
  } else if (name == "one-pulse") {
    c = three_1d(3.0, 1.0, 100.0 / 3.0, 100.0, 200.0);
    c.initial.intervals = {{-50.0, 50.0}};
  } else if (name == "two-pulse") {
    c = three_1d(3.0, 1.0, 100.0 / 3.0, 100.0, 100.0);
    c.initial.intervals = {{-350.0, -150.0}, {150.0, 350.0}};
  } else if (name == "multi-pulse") {
    // u = 0 on [-50, 50]
    c = three_1d(100.0, 100.0, 1.0, 1.0, 200.0);
    c.initial.intervals = {{-50.0, 50.0}};
    c.initial.inside = 0.0;
  } else if (name == "spots") {
    c = turing_2d(-0.05);
  } else if (name == "labyrinth") {
    c = turing_2d(0.0);
  } else if (name == "rom-compare") {
    c = turing_2d(0.0);
    c.mesh.dx = 0.25;
    c.t_end = 50.0;
    c.snapshot_every = 0;
    c.rom.meshes = {8, 16, 32};
    c.newton.linear_solver = LinearSolverKind::kBiCgStab;
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
  }
  c.preset = name;
  c.out_dir = std::filesystem::path("out") / name;
  return c;
}

// ---------------------------------------------------------------------------
// json

namespace {

const char* to_string(InitialKind k) {
  switch (k) {
    case InitialKind::kTanh: return "tanh";
    case InitialKind::kPlateau: return "plateau";
    case InitialKind::kRandom: return "random";
  }
  return "?";
}

InitialKind initial_kind(const std::string& s) {
  if (s == "tanh") return InitialKind::kTanh;
  if (s == "plateau") return InitialKind::kPlateau;
  if (s == "random") return InitialKind::kRandom;
  throw ConfigError("initial.kind must be tanh, plateau or random");
}

const char* to_string(LinearSolverKind k) {
  switch (k) {
    case LinearSolverKind::kAuto: return "auto";
    case LinearSolverKind::kSparseLU: return "sparse-lu";
    case LinearSolverKind::kBiCgStab: return "bicgstab";
  }
  return "?";
}

LinearSolverKind solver_kind(const std::string& s) {
  if (s == "auto") return LinearSolverKind::kAuto;
  if (s == "sparse-lu") return LinearSolverKind::kSparseLU;
  if (s == "bicgstab") return LinearSolverKind::kBiCgStab;
  throw ConfigError("newton.linear_solver must be auto, sparse-lu or bicgstab");
}

json model_json(const Model& model) {
  if (const auto* m = std::get_if<TwoComponentModel>(&model)) {
    return {{"type", "two-component"},
            {"variant", m->variant == TwoComponentVariant::kBistable ? "bistable" : "turing"},
            {"tau1", m->tau1}, {"tau2", m->tau2}, {"d1", m->d1}, {"d2", m->d2},
            {"beta", m->beta}, {"gamma", m->gamma}, {"epsilon", m->epsilon}, {"kappa", m->kappa}};
  }
  const auto& m = std::get<ThreeComponentModel>(model);
  return {{"type", "three-component"}, {"eps", m.eps}, {"alpha", m.alpha}, {"beta", m.beta},
          {"gamma", m.gamma}, {"d", m.d}, {"tau", m.tau}, {"theta", m.theta}};
}

template <class T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

Model model_from_json(const json& j, const Model& base) {
  std::string type = std::holds_alternative<TwoComponentModel>(base) ? "two-component" : "three-component";
  get_if(j, "type", type);
  if (type == "two-component") {
    TwoComponentModel m = std::holds_alternative<TwoComponentModel>(base) ? std::get<TwoComponentModel>(base)
                                                                           : TwoComponentModel{};
    std::string variant = m.variant == TwoComponentVariant::kBistable ? "bistable" : "turing";
    get_if(j, "variant", variant);
    if (variant == "bistable") {
      m.variant = TwoComponentVariant::kBistable;
    } else if (variant == "turing") {
      m.variant = TwoComponentVariant::kTuring;
    } else {
      throw ConfigError("model.variant must be bistable or turing");
    }
    get_if(j, "tau1", m.tau1);
    get_if(j, "tau2", m.tau2);
    get_if(j, "d1", m.d1);
    get_if(j, "d2", m.d2);
    get_if(j, "beta", m.beta);
    get_if(j, "gamma", m.gamma);
    get_if(j, "epsilon", m.epsilon);
    get_if(j, "kappa", m.kappa);
    return m;
  }
  if (type != "three-component") throw ConfigError("model.type must be two-component or three-component");
  ThreeComponentModel m = std::holds_alternative<ThreeComponentModel>(base) ? std::get<ThreeComponentModel>(base)
                                                                             : ThreeComponentModel{};
  get_if(j, "eps", m.eps);
  get_if(j, "alpha", m.alpha);
  get_if(j, "beta", m.beta);
  get_if(j, "gamma", m.gamma);
  get_if(j, "d", m.d);
  get_if(j, "tau", m.tau);
  get_if(j, "theta", m.theta);
  return m;
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["mesh"] = {{"dim", c.mesh.dim}, {"x", c.mesh.x}, {"dx", c.mesh.dx}};
  if (c.mesh.dim == 2) j["mesh"]["y"] = c.mesh.y;
  j["degree"] = c.degree;
  j["sigma"] = c.sigma ? json(*c.sigma) : json(nullptr);
  j["model"] = model_json(c.model);
  j["time"] = {{"dt", c.dt}, {"t_end", c.t_end}};
  json ic = {{"kind", to_string(c.initial.kind)}};
  if (c.initial.kind == InitialKind::kTanh) {
    ic["v_offset"] = c.initial.v_offset;
    ic["v_slope"] = c.initial.v_slope;
  } else if (c.initial.kind == InitialKind::kPlateau) {
    ic["intervals"] = c.initial.intervals;
    ic["inside"] = c.initial.inside;
    ic["outside"] = c.initial.outside;
    ic["rest"] = c.initial.rest;
  }
  j["initial"] = ic;
  j["seed"] = c.seed;
  j["output"] = {{"dir", c.out_dir.string()}, {"snapshot_every", c.snapshot_every}};
  j["rom"] = {{"k", c.rom.k}, {"m", c.rom.m}, {"stride", c.rom.stride}, {"repeats", c.rom.repeats},
              {"meshes", c.rom.meshes}};
  j["newton"] = {{"abs_tol", c.newton.abs_tol},
                 {"rel_tol", c.newton.rel_tol},
                 {"step_tol", c.newton.step_tol},
                 {"max_iterations", c.newton.max_iterations},
                 {"linear_tol", c.newton.linear_tol},
                 {"linear_solver", to_string(c.newton.linear_solver)},
                 {"direct_limit", c.newton.direct_limit}};
  return j;
}

ExperimentConfig config_from_json(const json& j, const ExperimentConfig& base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    ExperimentConfig c = j.contains("preset") ? make_preset(j.at("preset").get<std::string>()) : base;
    if (j.contains("mesh")) {
      const json& m = j.at("mesh");
      get_if(m, "dim", c.mesh.dim);
      get_if(m, "x", c.mesh.x);
      get_if(m, "y", c.mesh.y);
      get_if(m, "dx", c.mesh.dx);
    }
    get_if(j, "degree", c.degree);
    if (j.contains("sigma")) {
      c.sigma = j.at("sigma").is_null() ? std::nullopt : std::optional<double>(j.at("sigma").get<double>());
    }
    if (j.contains("model")) c.model = model_from_json(j.at("model"), c.model);
    if (j.contains("time")) {
      get_if(j.at("time"), "dt", c.dt);
      get_if(j.at("time"), "t_end", c.t_end);
    }
    if (j.contains("initial")) {
      const json& ic = j.at("initial");
      if (ic.contains("kind")) c.initial.kind = initial_kind(ic.at("kind").get<std::string>());
      get_if(ic, "v_offset", c.initial.v_offset);
      get_if(ic, "v_slope", c.initial.v_slope);
      get_if(ic, "intervals", c.initial.intervals);
      get_if(ic, "inside", c.initial.inside);
      get_if(ic, "outside", c.initial.outside);
      get_if(ic, "rest", c.initial.rest);
    }
    get_if(j, "seed", c.seed);
    if (j.contains("output")) {
      std::string dir = c.out_dir.string();
      get_if(j.at("output"), "dir", dir);
      c.out_dir = dir;
      get_if(j.at("output"), "snapshot_every", c.snapshot_every);
    }
    if (j.contains("rom")) {
      const json& r = j.at("rom");
      get_if(r, "k", c.rom.k);
      get_if(r, "m", c.rom.m);
      get_if(r, "stride", c.rom.stride);
      get_if(r, "repeats", c.rom.repeats);
      get_if(r, "meshes", c.rom.meshes);
    }
    if (j.contains("newton")) {
      const json& n = j.at("newton");
      get_if(n, "abs_tol", c.newton.abs_tol);
      get_if(n, "rel_tol", c.newton.rel_tol);
      get_if(n, "step_tol", c.newton.step_tol);
      get_if(n, "max_iterations", c.newton.max_iterations);
      get_if(n, "linear_tol", c.newton.linear_tol);
      get_if(n, "direct_limit", c.newton.direct_limit);
      if (n.contains("linear_solver")) c.newton.linear_solver = solver_kind(n.at("linear_solver").get<std::string>());
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// analysis

namespace {

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

std::string tuple(const std::vector<double>& xs) {
  std::string s = "(";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + num(xs[i]);
  return s + ")";
}

void steady_rows(AnalysisReport& out, const std::vector<SteadyState>& states) {
  out.emplace_back("steady states", std::to_string(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i) {
    const std::string key = "steady state " + std::to_string(i + 1);
    out.emplace_back(key, tuple(states[i].values));
    out.emplace_back(key + " stability", to_string(states[i].stability));
  }
}

}  // namespace

AnalysisReport analyze_model(const Model& model) {
  AnalysisReport out;
  if (const auto* three = std::get_if<ThreeComponentModel>(&model)) {
    const SkewGradientCheck skew = check_skew_gradient(*three);
    out.emplace_back("model", "three-component");
    out.emplace_back("skew-gradient", skew.holds ? "satisfied" : "violated");
    out.emplace_back("skew-gradient residual", num(skew.residual));
    if (!skew.holds) out.emplace_back("energy warning", "energy is recorded without a skew-gradient potential");
    steady_rows(out, find_steady_states(*three));
    return out;
  }
  const auto& m = std::get<TwoComponentModel>(model);
  const SkewGradientCheck skew = check_skew_gradient(m);
  out.emplace_back("model", m.variant == TwoComponentVariant::kBistable ? "two-component bistable"
                                                                        : "two-component turing");
  out.emplace_back("skew-gradient", skew.holds ? "satisfied" : "violated");
  out.emplace_back("skew-gradient residual", num(skew.residual));
  if (m.variant == TwoComponentVariant::kBistable) {
    out.emplace_back("fold discriminant", num(fold_discriminant(m)));
    out.emplace_back("stability", to_string(classify_stability(m)));
    out.emplace_back("stability (root count)", to_string(classify_stability(m, StabilityCriterion::kRootCount)));
  }
  const std::vector<SteadyState> states = find_steady_states(m);
  steady_rows(out, states);
  if (m.variant == TwoComponentVariant::kTuring) {
    for (std::size_t i = 0; i < states.size(); ++i) {
      const std::string key = "turing " + std::to_string(i + 1);
      const TuringReport r = check_turing(m, states[i]);
      out.emplace_back(key + " f_u", num(r.fu));
      for (std::size_t c = 0; c < 4; ++c) {
        out.emplace_back(key + " condition " + std::to_string(c + 1),
                         std::string(r.holds[c] ? "holds" : "fails") + " (" + num(r.value[c]) + ")");
      }
      out.emplace_back(key + " unstable", r.unstable ? "yes" : "no");
      if (r.holds[0] && r.holds[1]) {
        const TuringThresholds t = turing_threshold(m, states[i]);
        out.emplace_back(key + " d2 threshold condition 3", num(t.condition3));
        out.emplace_back(key + " d2 threshold condition 4", num(t.condition4));
      }
    }
  }
  return out;
}

void write_analysis_csv(std::ostream& os, const AnalysisReport& report) {
  auto field = [](const std::string& s) {
    return s.find_first_of(",\"") == std::string::npos ? s : '"' + s + '"';
  };
  os << "check,value\n";
  for (const auto& [k, v] : report) os << field(k) << ',' << field(v) << '\n';
}

// ---------------------------------------------------------------------------
// output

void write_profile_csv(std::ostream& os, const DgSpace& space, const State& state) {
  if (space.dim() != 1) throw std::invalid_argument("write_profile_csv: 1D spaces only");
  static const char* names[] = {"u", "v", "s"};
  const auto old = os.precision(17);
  os << 'x';
  for (std::size_t c = 0; c < state.components(); ++c) os << ',' << (c < 3 ? names[c] : "y" + std::to_string(c));
  os << '\n';
  const int npts = std::max(space.degree(), 1) + 1;
  for (std::size_t e = 0; e < space.num_elements(); ++e) {
    for (int i = 0; i < npts; ++i) {
      const Point p = space.to_physical(e, {static_cast<double>(i) / (npts - 1), 0.0});
      os << p[0];
      for (const auto& f : state.fields) os << ',' << space.evaluate(f, e, p);
      os << '\n';
    }
  }
  os.precision(old);
}

void write_vtk(std::ostream& os, const DgSpace& space, const State& state, const std::string& title) {
  if (space.dim() != 2) throw std::invalid_argument("write_vtk: 2D spaces only");
  static const char* names[] = {"u", "v", "s"};
  const Mesh& mesh = space.mesh();
  const std::size_t ne = mesh.num_elements();
  const auto old = os.precision(17);
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << 3 * ne << " double\n";
  for (std::size_t e = 0; e < ne; ++e) {
    for (int k = 0; k < 3; ++k) {
      const Point p = mesh.vertex(e, k);
      os << p[0] << ' ' << p[1] << " 0\n";
    }
  }
  os << "CELLS " << ne << ' ' << 4 * ne << '\n';
  for (std::size_t e = 0; e < ne; ++e) os << "3 " << 3 * e << ' ' << 3 * e + 1 << ' ' << 3 * e + 2 << '\n';
  os << "CELL_TYPES " << ne << '\n';
  for (std::size_t e = 0; e < ne; ++e) os << "5\n";
  os << "POINT_DATA " << 3 * ne << '\n';
  for (std::size_t c = 0; c < state.components(); ++c) {
    os << "SCALARS " << (c < 3 ? names[c] : "y" + std::to_string(c)) << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t e = 0; e < ne; ++e) {
      for (int k = 0; k < 3; ++k) os << space.evaluate(state.fields[c], e, mesh.vertex(e, k)) << '\n';
    }
  }
  os.precision(old);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_json(const std::filesystem::path& path, const json& j) { open_out(path) << j.dump(2) << '\n'; }

std::string snapshot_name(std::size_t step, int dim) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%06zu.%s", step, dim == 1 ? "csv" : "vtk");
  return buf;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  write_json(cfg.out_dir / "config.json", to_json(cfg));

  const auto t0 = std::chrono::steady_clock::now();
  const auto mesh = std::make_shared<const Mesh>(cfg.mesh.build());
  const DgSpace space(mesh, cfg.degree, BasisKind::kOrthonormal, cfg.sigma);
  const ReactionSystem sys = reaction_system(cfg.model);
  const SystemOperators ops = assemble_operators(space, sys);
  const DgAssembler assembler(space);
  AvfStepper stepper(ops, sys, assembler, cfg.newton);
  const State initial = make_initial_state(space, sys.size(), cfg.initial_condition());
  const TimeGrid grid = cfg.grid();

  RunSummary summary;
  summary.steps = grid.steps;
  summary.energy_well_defined = energy_well_defined(cfg.model);
  summary.seconds_setup = since(t0);

  EnergyTrace trace;
  auto snapshot = [&](std::size_t step, const State& s) {
    auto out = open_out(cfg.out_dir / snapshot_name(step, space.dim()));
    if (space.dim() == 1) {
      write_profile_csv(out, space, s);
    } else {
      write_vtk(out, space, s, cfg.preset + " t=" + std::to_string(s.t));
    }
  };
  std::vector<Observer> observers;
  observers.push_back({1, [&](std::size_t step, const State& s, const StepStats& st) {
                         trace.record(s.t, discrete_energy(s, space, cfg.model));
                         if (step == 0) return;
                         const auto it = static_cast<std::size_t>(st.newton_iterations);
                         if (summary.newton_histogram.size() <= it) summary.newton_histogram.resize(it + 1, 0);
                         ++summary.newton_histogram[it];
                       }});
  if (cfg.snapshot_every > 0) {
    observers.push_back({cfg.snapshot_every, [&](std::size_t step, const State& s, const StepStats&) {
                           snapshot(step, s);
                         }});
  }

  const auto t1 = std::chrono::steady_clock::now();
  std::optional<SimulationResult> result;
  try {
    result = run_simulation(stepper, initial, grid, observers);
  } catch (const NumericalError&) {
    auto out = open_out(cfg.out_dir / "energy.csv");
    trace.write_csv(out);
    throw;
  }
  summary.seconds_stepping = since(t1);
  if (cfg.snapshot_every == 0) snapshot(0, initial);
  if (cfg.snapshot_every == 0 || grid.steps % cfg.snapshot_every != 0) snapshot(grid.steps, result->final_state);
  summary.final_energy = trace.energies().back();

  {
    auto out = open_out(cfg.out_dir / "energy.csv");
    trace.write_csv(out);
  }
  json meta;
  meta["preset"] = cfg.preset;
  meta["seed"] = cfg.seed;
  meta["parameters"] = to_json(cfg);
  meta["elements"] = space.num_elements();
  meta["dofs_per_component"] = space.size();
  meta["sigma"] = space.sigma();
  meta["steps"] = grid.steps;
  meta["final_energy"] = summary.final_energy;
  meta["energy_well_defined"] = summary.energy_well_defined;
  if (!summary.energy_well_defined) {
    meta["warning"] = "skew-gradient condition violated: energy recorded without a potential";
  }
  meta["newton_iteration_histogram"] = summary.newton_histogram;
  meta["timings"] = {{"setup_s", summary.seconds_setup}, {"stepping_s", summary.seconds_stepping}};
  write_json(cfg.out_dir / "metadata.json", meta);
  return summary;
}

std::vector<RomReportRow> run_rom_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.mesh.dim != 2) throw ConfigError("rom-compare needs a 2D mesh");
  if (cfg.initial.kind != InitialKind::kRandom) throw ConfigError("rom-compare needs random initial data");
  std::filesystem::create_directories(cfg.out_dir);
  write_json(cfg.out_dir / "config.json", to_json(cfg));

  std::vector<int> meshes = cfg.rom.meshes;
  if (meshes.empty()) meshes.push_back(cfg.mesh.cells_per_side());
  RomCompareOptions opts;
  opts.k = cfg.rom.k;
  opts.m = cfg.rom.m;
  opts.repeats = cfg.rom.repeats;
  opts.stride = cfg.rom.stride;
  opts.newton = cfg.newton;

  std::vector<RomReportRow> rows;
  json per_mesh = json::array();
  for (int n : meshes) {
    const auto mesh = std::make_shared<const Mesh>(build_triangular_mesh(cfg.mesh.x, cfg.mesh.y, n));
    const DgSpace space(mesh, cfg.degree, BasisKind::kOrthonormal, cfg.sigma);
    rows.push_back(rom_compare(space, cfg.model, cfg.grid(), cfg.initial_condition(), opts));
    const RomReportRow& r = rows.back();
    per_mesh.push_back({{"squares_per_side", n}, {"elements", r.elements}, {"dofs", r.dofs},
                        {"t_full_s", r.t_full}, {"t_pod_s", r.t_pod}, {"t_deim_s", r.t_deim}});
  }
  {
    auto out = open_out(cfg.out_dir / "rom_report.csv");
    write_rom_report_csv(out, rows);
  }
  json meta;
  meta["preset"] = cfg.preset;
  meta["seed"] = cfg.seed;
  meta["parameters"] = to_json(cfg);
  meta["timings"] = per_mesh;
  write_json(cfg.out_dir / "metadata.json", meta);
  return rows;
}

}  // namespace skewrd
