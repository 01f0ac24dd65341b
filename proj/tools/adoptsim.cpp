// Command-line front end: configuration validation, network export, the
// simulation scenarios, the component-curve sweep, and post-hoc analysis.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "adoptsim/config.hpp"
#include "adoptsim/experiment.hpp"
#include "adoptsim/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Overrides {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> n_runs;
  std::optional<unsigned> jobs;
};

adoptsim::ExperimentConfig load(const std::string& config_path, const Overrides& ov) {
  auto cfg = adoptsim::parse_config(config_path);

  // Default output dir can come from the environment, but an explicit config
  // value wins, and a flag wins over both.
  if (!cfg.output_dir_provided) {
    if (const char* env = std::getenv("ADOPTSIM_OUTPUT_DIR"); env != nullptr && *env != '\0')
      cfg.output_dir = env;
  }
  if (ov.output_dir) {
    cfg.output_dir = *ov.output_dir;
    cfg.output_dir_provided = true;
  }
  if (ov.seed) {
    cfg.root_seed = *ov.seed;
    cfg.netgen.rng_seed = *ov.seed;
  }
  if (ov.n_runs) cfg.n_runs = *ov.n_runs;
  if (ov.jobs) cfg.jobs = *ov.jobs;
  return cfg;
}

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--output-dir", ov.output_dir, "Override the output directory");
  cmd->add_option("--seed", ov.seed, "Override the root seed");
  cmd->add_option("--n-runs", ov.n_runs, "Override the replication count");
  cmd->add_option("--jobs", ov.jobs, "Worker threads (default: all processors)");
}

int report(const adoptsim::ExperimentResult& result) {
  std::cout << "wrote " << result.files_written.size() << " files to "
            << result.output_dir.string() << " (" << result.n_runs << " runs, "
            << result.failure_count << " failed)\n";
  return result.failure_count == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adoptsim: geography- and media-aware adoption contagion simulator"};
  app.set_version_flag("--version", adoptsim::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;

  auto* validate = app.add_subcommand("validate-config", "Parse a config and echo it resolved");
  validate->add_option("config", config_path, "Config file (INI)")->required();

  auto* simulate = app.add_subcommand("simulate", "Run a simulation scenario");
  simulate->add_option("config", config_path, "Config file (INI)")->required();
  add_override_flags(simulate, ov);

  auto* curve = app.add_subcommand("component-curve", "Run the homophily/giant-component sweep");
  curve->add_option("config", config_path, "Config file (INI)")->required();
  add_override_flags(curve, ov);

  auto* gen = app.add_subcommand("generate-network", "Build one network and export its edge list");
  gen->add_option("config", config_path, "Config file (INI)")->required();
  add_override_flags(gen, ov);

  std::string analyze_dir;
  auto* analyze = app.add_subcommand("analyze", "Recompute reports from a finished run directory");
  analyze->add_option("--dir", analyze_dir, "Output directory of a previous simulate run")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      const auto cfg = load(config_path, ov);
      std::cout << adoptsim::emit_config(cfg);
      return kExitOk;
    }
    if (simulate->parsed()) {
      const auto cfg = load(config_path, ov);
      if (cfg.scenario == adoptsim::Scenario::ComponentCurve)
        throw adoptsim::ValidationError(
            "simulate: scenario component_curve belongs to the component-curve subcommand");
      return report(adoptsim::run_experiment(cfg, config_path));
    }
    if (curve->parsed()) {
      const auto cfg = load(config_path, ov);
      if (cfg.scenario != adoptsim::Scenario::ComponentCurve)
        throw adoptsim::ValidationError("component-curve: config scenario must be component_curve");
      return report(adoptsim::run_experiment(cfg, config_path));
    }
    if (gen->parsed()) {
      const auto cfg = load(config_path, ov);
      const auto cities = cfg.cities.realize();
      const auto pop = adoptsim::place_agents(cities, cfg.root_seed);
      const auto net = adoptsim::build_network(pop, cities, cfg.netgen);
      adoptsim::export_network(net, cfg.output_dir);
      std::cout << "wrote edges.csv and network_meta.json to " << cfg.output_dir << " ("
                << net.node_count() << " nodes, " << net.edge_count() << " edges)\n";
      return kExitOk;
    }
    if (analyze->parsed()) {
      adoptsim::analyze_directory(analyze_dir);
      std::cout << "wrote bands.csv and city_report.csv to " << analyze_dir << "\n";
      return kExitOk;
    }
  } catch (const adoptsim::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
