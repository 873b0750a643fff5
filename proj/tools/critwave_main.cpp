// critwave: scenario runner for radial energy-critical wave systems.
//
// Subcommands: run, sweep, atlas, channels, analyze, validate.
// Exit codes: 0 completed, 2 blow-up detected, 1 error.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "critwave/errors.hpp"
#include "critwave/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"critwave - radial energy-critical wave system laboratory"};
  app.require_subcommand(1);

  std::string config, out_override, run_dir;
  int jobs = 1;
  unsigned long long seed_override = 0;
  bool seed_set = false;

  auto* run = app.add_subcommand("run", "execute one scenario");
  run->add_option("--config", config, "scenario config (JSON)")->required();
  run->add_option("--out", out_override, "override the output directory");
  run->add_option("--seed", seed_override, "override the scenario seed")
      ->each([&](const std::string&) { seed_set = true; });

  auto* sweep = app.add_subcommand("sweep", "execute a list of scenarios");
  sweep->add_option("--config", config, "sweep config (JSON)")->required();
  sweep->add_option("--jobs", jobs, "worker threads");

  auto* atlas = app.add_subcommand("atlas", "theta-sweep of stationary solutions");
  atlas->add_option("--config", config, "atlas config (JSON)")->required();

  auto* channels = app.add_subcommand("channels", "exterior-energy channel identity sweep");
  channels->add_option("--config", config, "channels config (JSON)")->required();

  auto* analyze = app.add_subcommand("analyze", "post-hoc diagnostics on a run directory");
  analyze->add_option("--run", run_dir, "run directory with manifest.json")->required();

  auto* validate = app.add_subcommand("validate", "validate a scenario config");
  validate->add_option("--config", config, "scenario config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      critwave::Scenario sc = critwave::load_scenario(config);
      if (!out_override.empty()) sc.output = out_override;
      if (seed_set) sc.seed = seed_override;
      return critwave::run_scenario(sc);
    }
    if (sweep->parsed()) return critwave::run_sweep(config, jobs);
    if (atlas->parsed()) return critwave::run_atlas(config);
    if (channels->parsed()) return critwave::run_channels(config);
    if (analyze->parsed()) return critwave::run_analyze(run_dir);
    if (validate->parsed()) return critwave::run_validate(config);
  } catch (const critwave::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
