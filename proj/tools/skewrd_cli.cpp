#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "skewrd/errors.hpp"
#include "skewrd/experiment.hpp"

namespace {

constexpr int kUsage = 2;
constexpr int kNumerical = 3;

struct Flags {
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> degree;
  std::optional<double> sigma, dt, dx;
  std::optional<std::size_t> pod_k, deim_m;
};

void add_flags(CLI::App* app, Flags& f) {
  app->add_option("--preset", f.preset, "Named experiment")
      ->check(CLI::IsMember(skewrd::preset_names()));
  app->add_option("--config", f.config, "JSON config file (flags override it)")->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "Seed for random initial data");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--degree", f.degree, "Polynomial degree");
  app->add_option("--sigma", f.sigma, "Interior penalty parameter");
  app->add_option("--dt", f.dt, "Time step");
  app->add_option("--dx", f.dx, "Mesh size");
  app->add_option("--pod-k", f.pod_k, "POD modes per component");
  app->add_option("--deim-m", f.deim_m, "DEIM points");
}

skewrd::ExperimentConfig resolve(const Flags& f, const std::string& fallback) {
  skewrd::ExperimentConfig cfg;
  const std::string preset = f.preset.empty() ? fallback : f.preset;
  if (!preset.empty()) cfg = skewrd::make_preset(preset);
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw skewrd::ConfigError(f.config + ": " + e.what());
    }
    if (!f.preset.empty() && j.is_object()) j.erase("preset");
    cfg = skewrd::config_from_json(j, cfg);
  } else if (preset.empty()) {
    throw skewrd::ConfigError("need --preset or --config");
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.out_dir = *f.out;
  if (f.degree) cfg.degree = *f.degree;
  if (f.sigma) cfg.sigma = *f.sigma;
  if (f.dt) cfg.dt = *f.dt;
  if (f.dx) cfg.mesh.dx = *f.dx;
  if (f.pod_k) cfg.rom.k = *f.pod_k;
  if (f.deim_m) cfg.rom.m = *f.deim_m;
  cfg.validate();
  return cfg;
}

void print_rom(const std::vector<skewrd::RomReportRow>& rows) {
  std::printf("%10s %8s %10s %10s %10s %7s %7s\n", "elements", "dofs", "t_full", "t_pod", "t_deim", "S_POD",
              "S_DEIM");
  for (const auto& r : rows) {
    std::printf("%10zu %8zu %10.4f %10.4f %10.4f %7.2f %7.2f\n", r.elements, r.dofs, r.t_full, r.t_pod, r.t_deim,
                r.s_pod, r.s_deim);
  }
  for (const auto& r : rows) {
    std::printf("errors (%zu elements):", r.elements);
    for (std::size_t c = 0; c < r.err_pod.size(); ++c) {
      std::printf("  c%zu POD %.3e DEIM %.3e", c, r.err_pod[c], r.err_deim[c]);
    }
    std::printf("\n");
  }
}

int run(const skewrd::ExperimentConfig& cfg) {
  if (!cfg.rom.meshes.empty()) {
    const auto rows = skewrd::run_rom_compare(cfg);
    print_rom(rows);
    std::printf("report: %s\n", (cfg.out_dir / "rom_report.csv").c_str());
    return 0;
  }
  const skewrd::RunSummary s = skewrd::run_experiment(cfg);
  std::printf("%s: %zu steps, final energy %.10g, stepping %.2f s\n", cfg.preset.c_str(), s.steps, s.final_energy,
              s.seconds_stepping);
  if (!s.energy_well_defined) std::printf("warning: skew-gradient condition violated, energy is not a Lyapunov function\n");
  std::printf("output: %s\n", cfg.out_dir.c_str());
  return 0;
}

int analyze(const skewrd::ExperimentConfig& cfg) {
  const skewrd::AnalysisReport report = skewrd::analyze_model(cfg.model);
  std::size_t width = 0;
  for (const auto& [k, v] : report) width = std::max(width, k.size());
  for (const auto& [k, v] : report) std::printf("%-*s  %s\n", static_cast<int>(width), k.c_str(), v.c_str());
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream out(cfg.out_dir / "analysis.csv");
  skewrd::write_analysis_csv(out, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skew-gradient reaction-diffusion simulations"};
  app.require_subcommand(1);
  Flags run_flags, analyze_flags, rom_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "Run a simulation");
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "Kinetics report for a model");
  CLI::App* rom_cmd = app.add_subcommand("rom-compare", "Full, POD and POD-DEIM runs on a mesh sequence");
  add_flags(run_cmd, run_flags);
  add_flags(analyze_cmd, analyze_flags);
  add_flags(rom_cmd, rom_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (run_cmd->parsed()) return run(resolve(run_flags, ""));
    if (analyze_cmd->parsed()) return analyze(resolve(analyze_flags, ""));
    skewrd::ExperimentConfig cfg = resolve(rom_flags, "rom-compare");
    if (cfg.rom.meshes.empty()) cfg.rom.meshes = {cfg.mesh.cells_per_side()};
    return run(cfg);
  } catch (const skewrd::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const skewrd::StepFailure& e) {
    std::cerr << "numerical failure at step " << e.step() << ": " << e.what() << '\n';
    return kNumerical;
  } catch (const skewrd::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const skewrd::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}
