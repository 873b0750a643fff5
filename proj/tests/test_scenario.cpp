#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "critwave/errors.hpp"
#include "critwave/scenario.hpp"

using namespace critwave;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kBasicScenario = R"({
  "name": "w-static",
  "nonlinearity": "scalar-focusing",
  "grid": {"nr": 1024, "r_max": 40.0},
  "evolve": {"T": 2.0, "snapshot_every": 32},
  "initial": [ {"type": "bubble", "lambda": 1.0} ],
  "analysis": {"exterior_radii": [1.0, 3.0]},
  "output": "/tmp/critwave_run_a",
  "seed": 7
})";

}  // namespace

TEST_CASE("scenario parsing accepts the reference config") {
  Scenario sc = parse_scenario_json(kBasicScenario);
  CHECK(sc.name == "w-static");
  CHECK(sc.nl.m == 1);
  CHECK(sc.nr == 1024);
  CHECK(sc.evolve.T == 2.0);
  CHECK(sc.initial.size() == 1);
}

TEST_CASE("unknown keys are rejected with their path") {
  std::string bad = kBasicScenario;
  bad.replace(bad.find("\"seed\": 7"), 9, "\"sede\": 7");
  try {
    parse_scenario_json(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sede") != std::string::npos);
  }
}

TEST_CASE("a missing nonlinearity names the field") {
  const char* cfg = R"({
    "name": "x", "grid": {"nr": 128, "r_max": 10.0},
    "evolve": {"T": 1.0}, "initial": []
  })";
  try {
    parse_scenario_json(cfg);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field == "nonlinearity");
  }
}

TEST_CASE("an unknown nonlinearity name names the field") {
  std::string bad = kBasicScenario;
  bad.replace(bad.find("scalar-focusing"), 15, "scalar-focusen!");
  try {
    parse_scenario_json(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field == "nonlinearity");
  }
}

TEST_CASE("the CFL contract is validated at the config layer") {
  std::string bad = kBasicScenario;
  bad.replace(bad.find("\"T\": 2.0"), 8, "\"T\": 2.0, \"dt\": 9.9");
  CHECK_THROWS_AS(parse_scenario_json(bad), ConfigError);
}

TEST_CASE("custom polynomial nonlinearity in config") {
  const char* cfg = R"({
    "name": "custom",
    "nonlinearity": {"m": 1, "terms": [{"powers": [5], "coeff": [1.0]}],
                     "potential_terms": [{"powers": [6], "coeff": 0.16666666666666666}]},
    "grid": {"nr": 128, "r_max": 10.0},
    "evolve": {"T": 1.0},
    "initial": [ {"type": "bump", "center": 3.0, "width": 1.0, "amplitude": 0.1} ]
  })";
  Scenario sc = parse_scenario_json(cfg);
  CHECK(sc.nl.has_potential());
  WaveState st = build_initial_state(sc);
  CHECK(sup_norm(st) > 0.05);
}

TEST_CASE("run produces a completed, deterministic run directory") {
  fs::remove_all("/tmp/critwave_run_a");
  fs::remove_all("/tmp/critwave_run_b");
  Scenario sc = parse_scenario_json(kBasicScenario);
  CHECK(run_scenario(sc) == 0);

  Scenario sc2 = parse_scenario_json(kBasicScenario);
  sc2.output = "/tmp/critwave_run_b";
  CHECK(run_scenario(sc2) == 0);

  REQUIRE(fs::exists("/tmp/critwave_run_a/timeseries.csv"));
  REQUIRE(fs::exists("/tmp/critwave_run_a/manifest.json"));
  REQUIRE(fs::exists("/tmp/critwave_run_a/snapshots/snap_000000.cwws"));
  // bit-identical series across reruns
  CHECK(slurp("/tmp/critwave_run_a/timeseries.csv") == slurp("/tmp/critwave_run_b/timeseries.csv"));

  // the energy column of the static-bubble run is nearly constant
  std::ifstream ts("/tmp/critwave_run_a/timeseries.csv");
  std::string line;
  std::getline(ts, line);  // header
  double e0 = 0;
  bool first = true;
  while (std::getline(ts, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    std::getline(ss, cell, ',');
    const double e = std::stod(cell);
    if (first) {
      e0 = e;
      first = false;
    }
    CHECK(e == doctest::Approx(e0).epsilon(1e-2));
  }
}

TEST_CASE("a manifest re-parses to the same scenario") {
  Scenario sc = parse_scenario_json(kBasicScenario);
  fs::remove_all("/tmp/critwave_run_a");
  run_scenario(sc);
  Scenario again = load_scenario("/tmp/critwave_run_a/manifest.json");
  CHECK(again.name == sc.name);
  CHECK(again.nr == sc.nr);
  CHECK(again.raw_json == sc.raw_json);
}

TEST_CASE("negative-energy scenario exits 2 with a virial series") {
  const char* cfg = R"({
    "name": "levine-blowup",
    "nonlinearity": "scalar-focusing",
    "grid": {"nr": 2048, "r_max": 32.0},
    "evolve": {"T": 20.0, "snapshot_every": 1, "blowup_threshold": 1e6},
    "initial": [ {"type": "bump", "center": 3.0, "width": 2.0, "amplitude": 4.0} ],
    "analysis": {"virial": true},
    "output": "/tmp/critwave_run_blowup"
  })";
  fs::remove_all("/tmp/critwave_run_blowup");
  Scenario sc = parse_scenario_json(cfg);
  CHECK(run_scenario(sc) == 2);
  CHECK(fs::exists("/tmp/critwave_run_blowup/virial.csv"));
}

TEST_CASE("validate entry point") {
  {
    std::ofstream out("/tmp/critwave_ok.json");
    out << kBasicScenario;
  }
  CHECK(run_validate("/tmp/critwave_ok.json") == 0);
  {
    std::ofstream out("/tmp/critwave_bad.json");
    out << R"({"name": "x", "nonlinearity": "nope",
               "grid": {"nr": 128, "r_max": 10.0}, "evolve": {"T": 1.0}, "initial": []})";
  }
  CHECK(run_validate("/tmp/critwave_bad.json") == 1);
}

TEST_CASE("channels sweep writes the (R, T, lhs, rhs) table") {
  {
    std::ofstream out("/tmp/critwave_channels.json");
    out << R"({
      "grid": {"nr": 4096, "r_max": 80.0},
      "data": [ {"center": 4.0, "width": 2.0, "amplitude": 0.4} ],
      "R_list": [0.0, 1.0],
      "T_list": [12.0, 30.0, 60.0],
      "out": "/tmp/critwave_channels.csv"
    })";
  }
  CHECK(run_channels("/tmp/critwave_channels.json") == 0);
  std::ifstream in("/tmp/critwave_channels.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "R,T,lhs,rhs");
  int rows = 0;
  double prev_err = 1e300;
  while (std::getline(in, line)) {
    ++rows;
    std::stringstream ss(line);
    std::string cR, cT, cl, cr;
    std::getline(ss, cR, ',');
    std::getline(ss, cT, ',');
    std::getline(ss, cl, ',');
    std::getline(ss, cr, ',');
    const double lhs = std::stod(cl), rhs = std::stod(cr);
    if (cR == "0" || cR == "0.0") {
      // |lhs - rhs| non-increasing in T within each R block
      const double err = std::abs(lhs - rhs);
      CHECK(err <= prev_err * 1.05);
      prev_err = err;
    }
  }
  CHECK(rows == 6);
}

TEST_CASE("atlas on scalar-defocusing finds no case-C rows") {
  {
    std::ofstream out("/tmp/critwave_atlas.json");
    out << R"({
      "nonlinearity": "scalar-defocusing",
      "theta": {"radii": [0.5, 1.0], "directions": 2},
      "R": 40.0, "tol": 1e-12,
      "out": "/tmp/critwave_atlas.csv"
    })";
  }
  CHECK(run_atlas("/tmp/critwave_atlas.json") == 0);
  std::ifstream in("/tmp/critwave_atlas.csv");
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.find(",C,") == std::string::npos);
  }
  CHECK(rows == 4);
}

TEST_CASE("sweep fans out scenarios") {
  {
    std::ofstream out("/tmp/critwave_sweep.json");
    out << R"({"scenarios": [)" << kBasicScenario << "," << kBasicScenario << R"(]})";
  }
  // both write to their own dir? they share "output" - give them distinct ones
  std::string text = slurp("/tmp/critwave_sweep.json");
  text.replace(text.find("/tmp/critwave_run_a"), 19, "/tmp/critwave_sw_1a");
  text.replace(text.find("/tmp/critwave_run_a"), 19, "/tmp/critwave_sw_2a");
  {
    std::ofstream out("/tmp/critwave_sweep.json");
    out << text;
  }
  fs::remove_all("/tmp/critwave_sw_1a");
  fs::remove_all("/tmp/critwave_sw_2a");
  CHECK(run_sweep("/tmp/critwave_sweep.json", 2) == 0);
  CHECK(fs::exists("/tmp/critwave_sw_1a/manifest.json"));
  CHECK(fs::exists("/tmp/critwave_sw_2a/manifest.json"));
}

TEST_CASE("analyze reruns diagnostics on a stored run") {
  const char* cfg = R"({
    "name": "analyze-me",
    "nonlinearity": "scalar-focusing",
    "grid": {"nr": 1024, "r_max": 40.0},
    "evolve": {"T": 2.0, "snapshot_every": 16},
    "initial": [ {"type": "bubble", "lambda": 1.0} ],
    "output": "/tmp/critwave_run_an"
  })";
  fs::remove_all("/tmp/critwave_run_an");
  Scenario sc = parse_scenario_json(cfg);
  REQUIRE(run_scenario(sc) == 0);
  CHECK(run_analyze("/tmp/critwave_run_an") == 0);
  CHECK(fs::exists("/tmp/critwave_run_an/analysis.json"));
}
