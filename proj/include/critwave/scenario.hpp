#pragma once

#include <string>
#include <vector>

#include "critwave/evolution.hpp"
#include "critwave/nonlinearity.hpp"

namespace critwave {

/// One piece of initial data.
struct InitialItem {
  std::string type;  // "bubble", "bump", "file"
  // bubble
  double lambda = 1.0;
  double sign = 1.0;
  bool knormalized = false;
  std::vector<double> omega;  // empty = ground direction
  // bump
  double center = 0, width = 1, amplitude = 0;
  int component = 0;
  std::string field = "u";  // "u" or "ut"
  // file
  std::string path;
};

struct AnalysisPlan {
  std::vector<double> exterior_radii;
  bool virial = false;
  bool resolution = false;
  bool three_e = true;
  int sphere_samples = 360;
  double radiation_window = 10.0;  // eta half-width for radiation extraction
};

struct Scenario {
  std::string name;
  std::string nl_name;                       // registry name or "linear[-m]"
  VectorNonlinearity nl;                     // resolved
  int nr = 1024;
  double r_max = 32.0;
  EvolveConfig evolve;
  std::vector<InitialItem> initial;
  AnalysisPlan analysis;
  std::string output = "run";
  unsigned long long seed = 0;
  std::string raw_json;  // canonical serialized form, for the manifest
};

/// Parses and validates a scenario config (strict: unknown keys are
/// rejected with their field path).  Accepts either a bare scenario object or
/// a previously written manifest carrying the scenario under "config".
Scenario load_scenario(const std::string& path);
Scenario parse_scenario_json(const std::string& text);

/// Resolves a nonlinearity reference string (registry names plus
/// "linear"/"linear-<m>").
VectorNonlinearity resolve_nonlinearity(const std::string& name);

/// Builds the initial WaveState of a scenario.
WaveState build_initial_state(const Scenario& sc);

/// Executes a scenario: evolve + configured diagnostics, everything written
/// under sc.output.  Returns the process exit code (0 Completed,
/// 2 BlowupDetected).
int run_scenario(const Scenario& sc);

/// Runs every scenario of a sweep config (key "scenarios": array) across
/// `jobs` worker threads.  Returns the max exit code over the runs.
int run_sweep(const std::string& config_path, int jobs);

/// theta-sweep atlas: classifies Z_theta for every theta in the configured
/// sphere x radius grid, writes a CSV plus an assumption-check summary.
int run_atlas(const std::string& config_path);

/// Channel-identity sweep over (R, T) pairs for configured linear data.
int run_channels(const std::string& config_path);

/// Post-hoc diagnostics on a stored run directory.
int run_analyze(const std::string& run_dir);

/// Config validation only; prints the problem or OK.
int run_validate(const std::string& config_path);

}  // namespace critwave
