#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "skewrd/diagnostics.hpp"
#include "skewrd/errors.hpp"
#include "skewrd/experiment.hpp"
#include "skewrd/rom.hpp"

namespace py = pybind11;
using namespace skewrd;

namespace {

ExperimentConfig config_from(const std::string& preset, const std::string& overrides) {
  ExperimentConfig base = make_preset(preset);
  if (overrides.empty()) return base;
  return config_from_json(nlohmann::json::parse(overrides), base);
}

py::dict summary_dict(const RunSummary& s) {
  py::dict d;
  d["steps"] = s.steps;
  d["final_energy"] = s.final_energy;
  d["energy_well_defined"] = s.energy_well_defined;
  d["newton_histogram"] = s.newton_histogram;
  d["seconds_setup"] = s.seconds_setup;
  d["seconds_stepping"] = s.seconds_stepping;
  return d;
}

}  // namespace

PYBIND11_MODULE(_skewrd, m) {
  m.doc() = "DG reaction-diffusion solver with AVF time stepping and POD/DEIM reduction";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Mesh, std::shared_ptr<Mesh>>(m, "Mesh")
      .def_property_readonly("dim", &Mesh::dim)
      .def_property_readonly("num_elements", &Mesh::num_elements)
      .def_property_readonly("num_vertices", &Mesh::num_vertices)
      .def_property_readonly("num_interior_faces", [](const Mesh& x) { return x.interior_faces().size(); })
      .def_property_readonly("total_measure", &Mesh::total_measure);
  m.def("interval_mesh", [](double a, double b, double dx) { return std::make_shared<Mesh>(build_interval_mesh(a, b, dx)); },
        py::arg("a"), py::arg("b"), py::arg("dx"));
  m.def("triangular_mesh",
        [](std::array<double, 2> x, std::array<double, 2> y, int n) {
          return std::make_shared<Mesh>(build_triangular_mesh(x, y, n));
        },
        py::arg("x"), py::arg("y"), py::arg("n"));

  py::class_<DgSpace>(m, "DgSpace")
      .def(py::init([](std::shared_ptr<Mesh> mesh, int degree, std::optional<double> sigma) {
             return std::make_unique<DgSpace>(mesh, degree, BasisKind::kOrthonormal, sigma);
           }),
           py::arg("mesh"), py::arg("degree") = 1, py::arg("sigma") = std::nullopt)
      .def_property_readonly("size", &DgSpace::size)
      .def_property_readonly("degree", &DgSpace::degree)
      .def_property_readonly("sigma", &DgSpace::sigma)
      .def_property_readonly("local_size", &DgSpace::local_size)
      .def("mass", [](const DgSpace& s) { return assemble_mass(s); })
      .def("stiffness", [](const DgSpace& s, double d) { return assemble_stiffness(s, d); }, py::arg("d"))
      .def("project", [](const DgSpace& s, const std::function<double(double, double)>& f) {
        return s.project([&](const Point& p) { return f(p[0], p[1]); });
      });

  py::enum_<Stability>(m, "Stability").value("MONOSTABLE", Stability::kMonostable).value("BISTABLE", Stability::kBistable);

  py::class_<TwoComponentModel>(m, "TwoComponentModel")
      .def_static("bistable", &TwoComponentModel::bistable, py::arg("beta"), py::arg("gamma"), py::arg("epsilon"),
                  py::arg("kappa") = 0.0)
      .def_static("turing", &TwoComponentModel::turing, py::arg("kappa"), py::arg("d1"), py::arg("d2"))
      .def_readwrite("tau1", &TwoComponentModel::tau1)
      .def_readwrite("tau2", &TwoComponentModel::tau2)
      .def_readwrite("d1", &TwoComponentModel::d1)
      .def_readwrite("d2", &TwoComponentModel::d2)
      .def_readwrite("beta", &TwoComponentModel::beta)
      .def_readwrite("gamma", &TwoComponentModel::gamma)
      .def_readwrite("epsilon", &TwoComponentModel::epsilon)
      .def_readwrite("kappa", &TwoComponentModel::kappa)
      .def("potential", [](const TwoComponentModel& x, double u, double v) { return eval_potential(x, u, v); });

  m.def("classify_stability", [](const TwoComponentModel& x, bool root_count) {
    return classify_stability(x, root_count ? StabilityCriterion::kRootCount : StabilityCriterion::kNullclineFolds);
  }, py::arg("model"), py::arg("root_count") = false);
  m.def("steady_states", [](const TwoComponentModel& x) {
    std::vector<std::vector<double>> out;
    for (const auto& s : find_steady_states(x)) out.push_back(s.values);
    return out;
  });
  m.def("turing_thresholds", [](const TwoComponentModel& x) {
    const auto st = find_steady_states(x);
    if (st.empty()) throw DomainError("no steady state");
    const TuringThresholds t = turing_threshold(x, st.front());
    return std::make_pair(t.condition3, t.condition4);
  });

  m.def("pod_basis", [](const Eigen::MatrixXd& u, std::size_t k) {
    const PodBasis b = compute_pod_basis(u, identity_blocks(static_cast<std::size_t>(u.rows())), k);
    return std::make_pair(b.psi, b.singular_values);
  }, py::arg("snapshots"), py::arg("k"), "POD basis with identity mass: (psi, singular values)");
  m.def("deim_select", &deim_select, py::arg("W"), "Greedy DEIM row indices (0-based)");

  m.def("preset_names", &preset_names);
  m.def("preset_config", [](const std::string& name, const std::string& overrides) {
    return to_json(config_from(name, overrides)).dump();
  }, py::arg("name"), py::arg("overrides") = "", "Resolved configuration as a JSON string");
  m.def("analyze", [](const std::string& name) { return analyze_model(make_preset(name).model); }, py::arg("preset"));
  m.def("run", [](const std::string& name, const std::string& overrides, const std::string& out) {
    ExperimentConfig c = config_from(name, overrides);
    if (!out.empty()) c.out_dir = out;
    c.validate();
    RunSummary s;
    {
      py::gil_scoped_release release;
      s = run_experiment(c);
    }
    return summary_dict(s);
  }, py::arg("preset"), py::arg("overrides") = "", py::arg("out") = "",
        "Runs a preset (JSON overrides merged on top) and writes its artifacts");
  m.def("simulate", [](const std::string& name, const std::string& overrides) {
    const ExperimentConfig c = config_from(name, overrides);
    c.validate();
    const DgSpace space(std::make_shared<const Mesh>(c.mesh.build()), c.degree, BasisKind::kOrthonormal, c.sigma);
    std::vector<double> energy;
    const Observer obs[] = {{1, [&](std::size_t, const State& s, const StepStats&) {
                               energy.push_back(discrete_energy(s, space, c.model));
                             }}};
    SimulationResult r;
    {
      py::gil_scoped_release release;
      r = run_simulation(space, c.model, c.grid(), c.initial_condition(), obs, c.newton);
    }
    return std::make_pair(r.final_state.fields, energy);
  }, py::arg("preset"), py::arg("overrides") = "", "Final state coefficients per component and the energy per step");
}
