#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "skewrd/integrator.hpp"
#include "skewrd/kinetics.hpp"
#include "skewrd/mesh.hpp"
#include "skewrd/rom.hpp"

namespace skewrd {

/// Invalid preset name or configuration value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MeshSpec {
  int dim = 1;
  std::array<double, 2> x{0.0, 1.0};
  std::array<double, 2> y{0.0, 1.0};  // 2D only
  double dx = 0.1;                    // 2D: n = round((x1 - x0) / dx) squares per side

  int cells_per_side() const;
  Mesh build() const;
};

enum class InitialKind {
  kTanh,     // u = tanh(x), v = v_offset + v_slope tanh(x)
  kPlateau,  // u = inside on the intervals, outside elsewhere; other components = rest
  kRandom,   // seeded elementwise means, uniform on [-1, 1]
};

struct InitialSpec {
  InitialKind kind = InitialKind::kTanh;
  double v_offset = 0.0, v_slope = 0.0;
  std::vector<std::array<double, 2>> intervals;
  double inside = 1.0, outside = -1.0, rest = 0.0;
};

struct RomSettings {
  std::size_t k = 10;
  std::size_t m = 50;
  std::size_t stride = 1;
  std::size_t repeats = 3;
  std::vector<int> meshes;  // squares per side for rom-compare
};

struct ExperimentConfig {
  std::string preset = "custom";
  MeshSpec mesh;
  int degree = 1;
  std::optional<double> sigma;
  Model model;
  double dt = 0.1;
  double t_end = 1.0;
  InitialSpec initial;
  std::uint64_t seed = 0;
  std::size_t snapshot_every = 0;  // 0: initial and final state only
  RomSettings rom;
  NewtonConfig newton;
  std::filesystem::path out_dir = "out";

  TimeGrid grid() const { return TimeGrid::over(0.0, t_end, dt); }
  InitialCondition initial_condition() const;
  /// Throws ConfigError.
  void validate() const;
};

const std::vector<std::string>& preset_names();
/// Throws ConfigError for unknown names.
ExperimentConfig make_preset(const std::string& name);

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep the values of `base`; "preset" (if present) replaces the base first.
ExperimentConfig config_from_json(const nlohmann::json& j, const ExperimentConfig& base = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunSummary {
  std::size_t steps = 0;
  double final_energy = 0.0;
  bool energy_well_defined = true;
  std::vector<std::size_t> newton_histogram;  // steps per iteration count
  double seconds_setup = 0.0, seconds_stepping = 0.0;
};

/// Runs the configured simulation and writes config.json, energy.csv,
/// snapshot files and metadata.json into cfg.out_dir.
/// Throws StepFailure (or another NumericalError) on numerical failure.
RunSummary run_experiment(const ExperimentConfig& cfg);

/// rom_compare on every mesh of cfg.rom.meshes; writes config.json,
/// rom_report.csv and metadata.json.
std::vector<RomReportRow> run_rom_compare(const ExperimentConfig& cfg);

/// Ordered (check, value) pairs from the kinetics analyses: skew-gradient
/// check, stability class, homogeneous steady states, Turing report and thresholds.
using AnalysisReport = std::vector<std::pair<std::string, std::string>>;
AnalysisReport analyze_model(const Model& model);
/// Header `check,value`; values containing commas are quoted.
void write_analysis_csv(std::ostream& os, const AnalysisReport& report);

/// Nodal samples: 1D, degree + 1 equispaced points per element.
void write_profile_csv(std::ostream& os, const DgSpace& space, const State& state);
/// Legacy ASCII VTK unstructured grid; every triangle keeps its own three
/// points so the DG field stays discontinuous.
void write_vtk(std::ostream& os, const DgSpace& space, const State& state, const std::string& title);

}  // namespace skewrd
