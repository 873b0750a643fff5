#include "critwave/scenario.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "critwave/errors.hpp"
#include "critwave/radiation.hpp"
#include "critwave/resolution.hpp"
#include "critwave/stationary.hpp"

namespace critwave {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(path + "." + it.key(), "unknown key");
  }
}

double get_num(const json& j, const std::string& path, const char* key, double dflt,
               bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ConfigError(path + "." + key, "missing");
    return dflt;
  }
  if (!j[key].is_number()) throw ConfigError(path + "." + key, "expected a number");
  return j[key].get<double>();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

VectorNonlinearity parse_nl_object(const json& j, const std::string& path) {
  check_keys(j, path, {"m", "terms", "potential_terms", "name"});
  if (!j.contains("m") || !j["m"].is_number_integer())
    throw ConfigError(path + ".m", "missing or not an integer");
  const int m = j["m"].get<int>();
  if (m < 1 || m > 64) throw ConfigError(path + ".m", "m out of range");
  if (!j.contains("terms") || !j["terms"].is_array())
    throw ConfigError(path + ".terms", "missing or not an array");
  std::vector<PolynomialTerm> terms;
  for (std::size_t i = 0; i < j["terms"].size(); ++i) {
    const json& t = j["terms"][i];
    const std::string tp = path + ".terms[" + std::to_string(i) + "]";
    check_keys(t, tp, {"powers", "coeff"});
    PolynomialTerm term;
    if (!t.contains("powers") || !t["powers"].is_array())
      throw ConfigError(tp + ".powers", "missing");
    for (const auto& v : t["powers"]) term.powers.push_back(v.get<int>());
    if (!t.contains("coeff") || !t["coeff"].is_array()) throw ConfigError(tp + ".coeff", "missing");
    for (const auto& v : t["coeff"]) term.coeff.push_back(v.get<double>());
    terms.push_back(std::move(term));
  }
  std::vector<std::pair<std::vector<int>, double>> pterms;
  if (j.contains("potential_terms")) {
    for (std::size_t i = 0; i < j["potential_terms"].size(); ++i) {
      const json& t = j["potential_terms"][i];
      const std::string tp = path + ".potential_terms[" + std::to_string(i) + "]";
      check_keys(t, tp, {"powers", "coeff"});
      std::vector<int> pw;
      for (const auto& v : t["powers"]) pw.push_back(v.get<int>());
      pterms.emplace_back(std::move(pw), t["coeff"].get<double>());
    }
  }
  const std::string name = j.value("name", std::string("custom"));
  return polynomial_nonlinearity(m, terms, pterms, name);
}

}  // namespace

VectorNonlinearity resolve_nonlinearity(const std::string& name) {
  if (name == "linear") return zero_nonlinearity(1);
  if (name.rfind("linear-", 0) == 0) {
    const int m = std::atoi(name.c_str() + 7);
    if (m >= 1 && m <= 64) return zero_nonlinearity(m);
  }
  return builtin(name);  // throws UnknownName
}

Scenario parse_scenario_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError("(root)", std::string("JSON parse error: ") + e.what());
  }
  if (j.is_object() && j.contains("config")) j = j["config"];  // manifest wrapper

  check_keys(j, "(root)",
             {"name", "nonlinearity", "grid", "evolve", "initial", "analysis", "output", "seed"});

  Scenario sc;
  sc.name = j.value("name", std::string("unnamed"));

  if (!j.contains("nonlinearity")) throw ConfigError("nonlinearity", "missing");
  if (j["nonlinearity"].is_string()) {
    sc.nl_name = j["nonlinearity"].get<std::string>();
    try {
      sc.nl = resolve_nonlinearity(sc.nl_name);
    } catch (const UnknownName& e) {
      throw ConfigError("nonlinearity", e.what());
    }
  } else {
    sc.nl = parse_nl_object(j["nonlinearity"], "nonlinearity");
    sc.nl_name = sc.nl.name;
  }

  if (!j.contains("grid")) throw ConfigError("grid", "missing");
  check_keys(j["grid"], "grid", {"nr", "r_max"});
  sc.nr = static_cast<int>(get_num(j["grid"], "grid", "nr", 0, true));
  sc.r_max = get_num(j["grid"], "grid", "r_max", 0, true);
  if (sc.nr < 3) throw ConfigError("grid.nr", "nr must be >= 3");
  if (!(sc.r_max > 0)) throw ConfigError("grid.r_max", "r_max must be positive");

  if (!j.contains("evolve")) throw ConfigError("evolve", "missing");
  check_keys(j["evolve"], "evolve", {"T", "dt", "cfl", "snapshot_every", "blowup_threshold"});
  sc.evolve.T = get_num(j["evolve"], "evolve", "T", 0, true);
  sc.evolve.dt = get_num(j["evolve"], "evolve", "dt", 0);
  sc.evolve.cfl = get_num(j["evolve"], "evolve", "cfl", 0.9);
  sc.evolve.snapshot_every = static_cast<int>(get_num(j["evolve"], "evolve", "snapshot_every", 16));
  sc.evolve.blowup_threshold = get_num(j["evolve"], "evolve", "blowup_threshold", 1e6);
  if (!(sc.evolve.T > 0)) throw ConfigError("evolve.T", "T must be positive");
  if (!(sc.evolve.cfl > 0 && sc.evolve.cfl <= 1))
    throw ConfigError("evolve.cfl", "cfl must be in (0,1]");
  if (sc.evolve.dt > 0 && sc.evolve.dt > sc.evolve.cfl * sc.r_max / (sc.nr - 1) * (1 + 1e-12))
    throw ConfigError("evolve.dt", "dt violates the CFL bound cfl*dr");
  if (sc.evolve.snapshot_every < 1)
    throw ConfigError("evolve.snapshot_every", "must be a positive step count");

  if (!j.contains("initial") || !j["initial"].is_array())
    throw ConfigError("initial", "missing or not an array");
  for (std::size_t i = 0; i < j["initial"].size(); ++i) {
    const json& it = j["initial"][i];
    const std::string p = "initial[" + std::to_string(i) + "]";
    if (!it.contains("type")) throw ConfigError(p + ".type", "missing");
    InitialItem item;
    item.type = it["type"].get<std::string>();
    if (item.type == "bubble") {
      check_keys(it, p, {"type", "lambda", "sign", "omega", "knormalized"});
      item.lambda = get_num(it, p, "lambda", 1.0);
      item.sign = get_num(it, p, "sign", 1.0);
      item.knormalized = it.value("knormalized", false);
      if (it.contains("omega"))
        for (const auto& v : it["omega"]) item.omega.push_back(v.get<double>());
      if (!(item.lambda > 0)) throw ConfigError(p + ".lambda", "must be positive");
    } else if (item.type == "bump") {
      check_keys(it, p, {"type", "center", "width", "amplitude", "component", "field"});
      item.center = get_num(it, p, "center", 0, true);
      item.width = get_num(it, p, "width", 1.0);
      item.amplitude = get_num(it, p, "amplitude", 0, true);
      item.component = static_cast<int>(get_num(it, p, "component", 0));
      item.field = it.value("field", std::string("u"));
      if (!(item.width > 0)) throw ConfigError(p + ".width", "must be positive");
      if (item.field != "u" && item.field != "ut")
        throw ConfigError(p + ".field", "must be 'u' or 'ut'");
      if (item.component < 0 || item.component >= sc.nl.m)
        throw ConfigError(p + ".component", "out of range for m");
    } else if (item.type == "file") {
      check_keys(it, p, {"type", "path"});
      if (!it.contains("path")) throw ConfigError(p + ".path", "missing");
      item.path = it["path"].get<std::string>();
    } else {
      throw ConfigError(p + ".type", "unknown initial data type '" + item.type + "'");
    }
    sc.initial.push_back(std::move(item));
  }

  if (j.contains("analysis")) {
    const json& a = j["analysis"];
    check_keys(a, "analysis",
               {"exterior_radii", "virial", "resolution", "three_e", "sphere_samples",
                "radiation_window"});
    if (a.contains("exterior_radii"))
      for (const auto& v : a["exterior_radii"]) sc.analysis.exterior_radii.push_back(v.get<double>());
    sc.analysis.virial = a.value("virial", false);
    sc.analysis.resolution = a.value("resolution", false);
    sc.analysis.three_e = a.value("three_e", true);
    sc.analysis.sphere_samples = static_cast<int>(get_num(a, "analysis", "sphere_samples", 360));
    sc.analysis.radiation_window = get_num(a, "analysis", "radiation_window", 10.0);
  }

  sc.output = j.value("output", std::string("run-") + sc.name);
  sc.seed = j.value("seed", 0ull);

  json canon = j;
  sc.raw_json = canon.dump(2);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("(file)", "cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_scenario_json(text);
}

namespace {

double bump_shape(double x) {
  // smooth compact bump: exp(1 - 1/(1-x^2)) on |x|<1
  if (std::abs(x) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

}  // namespace

WaveState build_initial_state(const Scenario& sc) {
  const double dr = sc.r_max / (sc.nr - 1);
  WaveState st = make_state(sc.nr, dr, sc.nl.m);
  bool need_ground = false;
  for (const auto& item : sc.initial)
    if (item.type == "bubble") need_ground = true;

  GroundState gs;
  double lam_k = 1.0;
  if (need_ground) {
    try {
      gs = ground_state(sc.nl);
    } catch (const MissingPotential&) {
      throw ConfigError("initial", "bubble data requires a potential-type nonlinearity");
    } catch (const EmptyZ&) {
      throw ConfigError("initial", "bubble data requires a nonempty stationary set");
    }
    RadialProfile w = explicit_w(1.0, bubble_grid(1e-4, 1e6, 32));
    lam_k = k_normalize(w).second;
  }

  for (const auto& item : sc.initial) {
    if (item.type == "bubble") {
      std::vector<double> omega = item.omega.empty() ? gs.omega : item.omega;
      if (static_cast<int>(omega.size()) != sc.nl.m)
        throw ConfigError("initial.omega", "size must equal m");
      const double lam = item.knormalized ? item.lambda * lam_k : item.lambda;
      for (int i = 0; i < st.nr; ++i) {
        const double wv = w_value(i * dr, lam);
        for (int c = 0; c < st.m; ++c)
          st.at(i, c) += item.sign * gs.mu * omega[c] * wv;
      }
    } else if (item.type == "bump") {
      for (int i = 0; i < st.nr; ++i) {
        const double v = item.amplitude * bump_shape((i * dr - item.center) / item.width);
        if (item.field == "u")
          st.at(i, item.component) += v;
        else
          st.at_t(i, item.component) += v;
      }
    } else if (item.type == "file") {
      WaveState loaded = load_state_binary(item.path);
      if (loaded.nr != st.nr || loaded.m != st.m ||
          std::abs(loaded.dr - st.dr) > 1e-12 * st.dr)
        throw ConfigError("initial.file", "grid of " + item.path + " does not match the scenario");
      for (std::size_t k = 0; k < st.u.size(); ++k) {
        st.u[k] += loaded.u[k];
        st.ut[k] += loaded.ut[k];
      }
    }
  }
  return st;
}

namespace {

void write_timeseries(const Scenario& sc, const std::vector<WaveState>& snaps,
                      const std::string& path) {
  std::ofstream out(path);
  out << "t,E,norm_HH";
  for (double R : sc.analysis.exterior_radii) out << ",ext_" << R;
  out << ",sup_u\n";
  for (const auto& s : snaps) {
    out << fmt17(s.t);
    out << ',' << (sc.nl.has_potential() ? fmt17(energy(sc.nl, s)) : std::string("nan"));
    out << ',' << fmt17(norm_hh(s));
    for (double R : sc.analysis.exterior_radii) out << ',' << fmt17(exterior_energy(s, R));
    out << ',' << fmt17(sup_norm(s)) << "\n";
  }
}

// Reconstructs the outgoing linear field at time t from the radiation g and
// subtracts it: diff = u(t) - v_L(t).
WaveState subtract_radiation(const WaveState& s, const RadiationField& f) {
  WaveState diff = s;
  if (f.eta.size() < 2) return diff;
  const double de = f.eta[1] - f.eta[0];
  const int ne = static_cast<int>(f.eta.size());
  // cumulative X(eta) = int_{eta_min}^{eta} g
  std::vector<double> X(static_cast<std::size_t>(ne) * f.m, 0.0);
  for (int c = 0; c < f.m; ++c)
    for (int jj = 0; jj + 1 < ne; ++jj)
      X[static_cast<std::size_t>(jj + 1) * f.m + c] =
          X[static_cast<std::size_t>(jj) * f.m + c] +
          0.5 * (f.g[static_cast<std::size_t>(jj) * f.m + c] +
                 f.g[static_cast<std::size_t>(jj + 1) * f.m + c]) *
              de;
  auto sample = [&](const std::vector<double>& arr, double eta, int c) {
    if (eta <= f.eta.front()) return 0.0;
    if (eta >= f.eta.back()) return arr[static_cast<std::size_t>(ne - 1) * f.m + c];
    const double x = (eta - f.eta.front()) / de;
    const int i = std::min(static_cast<int>(x), ne - 2);
    const double a = x - i;
    return (1 - a) * arr[static_cast<std::size_t>(i) * f.m + c] +
           a * arr[static_cast<std::size_t>(i + 1) * f.m + c];
  };
  auto sample_g = [&](double eta, int c) {
    if (eta <= f.eta.front() || eta >= f.eta.back()) return 0.0;
    const double x = (eta - f.eta.front()) / de;
    const int i = std::min(static_cast<int>(x), ne - 2);
    const double a = x - i;
    return (1 - a) * f.g[static_cast<std::size_t>(i) * f.m + c] +
           a * f.g[static_cast<std::size_t>(i + 1) * f.m + c];
  };
  for (int i = 1; i < s.nr; ++i) {
    const double r = i * s.dr;
    for (int c = 0; c < f.m; ++c) {
      const double u_v = (sample(X, s.t - r, c) - sample(X, s.t + r, c)) / r;
      const double ut_v = (sample_g(s.t - r, c) - sample_g(s.t + r, c)) / r;
      diff.at(i, c) -= u_v;
      diff.at_t(i, c) -= ut_v;
    }
  }
  for (int c = 0; c < f.m; ++c) {
    diff.at(0, c) -= -2.0 * sample_g(s.t, c);
    // dt v_L at the origin vanishes for g supported away from eta = t
  }
  return diff;
}

void resolution_analysis(const Scenario& sc, const std::vector<WaveState>& snaps,
                         const fs::path& dir, json& summary) {
  if (snaps.size() < 2) return;
  std::vector<WaveState> late(snaps.end() - std::min<std::size_t>(3, snaps.size()), snaps.end());
  const double wnd = sc.analysis.radiation_window;
  RadiationField rad = extract_radiation(late, -wnd, wnd);
  save_radiation_csv(rad, (dir / "radiation.csv").string());

  WaveState diff = subtract_radiation(snaps.back(), rad);

  ResolutionReport rep;
  rep.t = diff.t;
  rep.radiation_mass = rad.l2_mass;
  try {
    CandidateLibrary lib = candidate_library(sc.nl, sc.analysis.sphere_samples);
    std::vector<double> levels = {lib.items.empty() ? 0.0 : lib.items.front().energy};
    for (const auto& it : lib.items) levels[0] = std::min(levels[0], it.energy);
    const double budget = norm_hh(diff) / 3.0;
    auto seq = infer_energy_sequence(budget, levels, 0.5 * levels[0]);
    if (seq && !seq->empty()) {
      auto det = detect_scales(diff, *seq, 1e-6);
      rep = fit_profiles(diff, det.scales, lib, rad.l2_mass);
      summary["budget_exceeded"] = det.budget_exceeded;
    }
  } catch (const EmptyZ&) {
    summary["candidates"] = "empty stationary set";
  } catch (const MissingPotential&) {
    summary["candidates"] = "no potential";
  }
  if (sc.nl.has_potential()) energy_budget(rep, energy(sc.nl, snaps.front()));
  save_report_csv(rep, (dir / "resolution.csv").string());
  summary["J"] = rep.J;
  summary["radiation_mass"] = rep.radiation_mass;
  summary["residual_energy"] = rep.residual_energy;
  summary["budget_gap"] = rep.budget_gap;
}

int run_scenario_impl(const Scenario& sc) {
  fs::create_directories(sc.output);
  const fs::path dir(sc.output);

  WaveState init = build_initial_state(sc);
  EvolveResult res = evolve(sc.nl, sc.evolve, init);
  const std::vector<WaveState>& snaps = res.snapshots.empty()
                                            ? std::vector<WaveState>{init, res.final}
                                            : res.snapshots;

  write_timeseries(sc, snaps, (dir / "timeseries.csv").string());
  fs::create_directories(dir / "snapshots");
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    char name[40];
    std::snprintf(name, sizeof name, "snap_%06zu.cwws", k);
    save_state_binary(snaps[k], (dir / "snapshots" / name).string());
  }

  json summary;
  summary["outcome"] = res.outcome == Outcome::Completed ? "Completed" : "BlowupDetected";

  if (sc.analysis.three_e && sc.nl.has_potential() && res.outcome == Outcome::Completed) {
    try {
      ThreeEReport rep3 = check_3E_bound(snaps, sc.nl);
      summary["three_e_max_ratio"] = rep3.max_ratio;
      summary["three_e_tail_ratio"] = rep3.tail_max_ratio;
      // violations flag the run for blow-up-side analysis, they do not fail it
      summary["three_e_violation"] = rep3.tail_max_ratio > 1.01;
    } catch (const NonpositiveEnergy&) {
      summary["three_e_violation"] = "nonpositive energy";
    }
  }
  if (sc.analysis.virial && sc.nl.has_potential()) {
    try {
      VirialSeries vs = virial_series(snaps, sc.nl);
      save_virial_csv(vs, (dir / "virial.csv").string());
    } catch (const InsufficientSnapshots& e) {
      summary["virial"] = e.what();
    }
  }
  if (sc.analysis.resolution) resolution_analysis(sc, snaps, dir, summary);

  const int exit_code = res.outcome == Outcome::Completed ? 0 : 2;

  json manifest;
  manifest["config"] = json::parse(sc.raw_json);
  manifest["config_hash"] = fmt17(static_cast<double>(fnv1a(sc.raw_json)));
  manifest["config_hash_u64"] = fnv1a(sc.raw_json);
  manifest["version"] = "critwave 0.1.0";
  manifest["seed"] = sc.seed;
  manifest["exit_code"] = exit_code;
  manifest["summary"] = summary;
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";

  return exit_code;
}

}  // namespace

int run_scenario(const Scenario& sc) { return run_scenario_impl(sc); }

int run_sweep(const std::string& config_path, int jobs) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("(file)", "cannot open " + config_path);
  json j = json::parse(in);
  check_keys(j, "(root)", {"scenarios"});
  if (!j.contains("scenarios") || !j["scenarios"].is_array())
    throw ConfigError("scenarios", "missing or not an array");

  std::vector<Scenario> scenarios;
  for (std::size_t i = 0; i < j["scenarios"].size(); ++i)
    scenarios.push_back(parse_scenario_json(j["scenarios"][i].dump()));

  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= scenarios.size()) return;
      int code = 1;
      try {
        code = run_scenario(scenarios[k]);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "scenario '%s' failed: %s\n", scenarios[k].name.c_str(), e.what());
        code = 1;
      }
      int cur = worst.load();
      while (code > cur && !worst.compare_exchange_weak(cur, code)) {
      }
    }
  };
  jobs = std::max(1, jobs);
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return worst.load();
}

int run_atlas(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("(file)", "cannot open " + config_path);
  json j = json::parse(in);
  check_keys(j, "(root)", {"nonlinearity", "theta", "R", "tol", "out"});
  if (!j.contains("nonlinearity")) throw ConfigError("nonlinearity", "missing");
  VectorNonlinearity nl = j["nonlinearity"].is_string()
                              ? resolve_nonlinearity(j["nonlinearity"].get<std::string>())
                              : parse_nl_object(j["nonlinearity"], "nonlinearity");
  const double R = get_num(j, "(root)", "R", 50.0);
  const double tol = get_num(j, "(root)", "tol", 1e-12);
  const std::string outpath = j.value("out", std::string("atlas.csv"));

  std::vector<std::vector<double>> thetas;
  if (!j.contains("theta")) throw ConfigError("theta", "missing");
  const json& th = j["theta"];
  check_keys(th, "theta", {"radii", "directions", "list"});
  if (th.contains("list")) {
    for (const auto& row : th["list"]) {
      std::vector<double> t;
      for (const auto& v : row) t.push_back(v.get<double>());
      if (static_cast<int>(t.size()) != nl.m) throw ConfigError("theta.list", "size mismatch");
      thetas.push_back(std::move(t));
    }
  } else {
    std::vector<double> radii;
    for (const auto& v : th["radii"]) radii.push_back(v.get<double>());
    const int ndir = th.contains("directions") ? th["directions"].get<int>() : 8;
    std::vector<std::vector<double>> dirs;
    if (nl.m == 1) {
      dirs = {{1.0}, {-1.0}};
    } else if (nl.m == 2) {
      for (int k = 0; k < ndir; ++k) {
        const double phi = 2.0 * M_PI * k / ndir;
        dirs.push_back({std::cos(phi), std::sin(phi)});
      }
    } else {
      const double ga = M_PI * (3.0 - std::sqrt(5.0));
      for (int k = 0; k < ndir; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / ndir;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        std::vector<double> d = {rho * std::cos(ga * k), rho * std::sin(ga * k), z};
        d.resize(nl.m, 0.0);
        dirs.push_back(std::move(d));
      }
    }
    for (double rad : radii)
      for (const auto& d : dirs) {
        std::vector<double> t(d);
        for (auto& x : t) x *= rad;
        thetas.push_back(std::move(t));
      }
  }

  std::ofstream out(outpath);
  if (!out) throw ConfigError("out", "cannot open " + outpath);
  for (int c = 0; c < nl.m; ++c) out << (c ? "," : "") << "theta" << c + 1;
  out << ",case,R_theta,energy,fit_lambda,fit_residual,note\n";

  std::vector<double> caseC_energies;
  for (const auto& theta : thetas) {
    for (int c = 0; c < nl.m; ++c) out << (c ? "," : "") << fmt17(theta[c]);
    try {
      RadialProfile outer = solve_exterior_fixed_point(nl, theta, R, tol);
      ZThetaSolution sol = continue_inward(nl, outer);
      const char* label = sol.kind == StationaryCase::A_blowup  ? "A"
                          : sol.kind == StationaryCase::B_notL6 ? "B"
                                                                : "C";
      out << ',' << label << ',' << fmt17(sol.R_theta);
      if (sol.kind == StationaryCase::C_energy) {
        double tn2 = 0;
        for (double v : theta) tn2 += v * v;
        const double lam_fit = tn2 / 3.0;  // theta = sqrt(3 lambda) omega for omega W_lambda
        double resid = 0, scale = 0;
        const double tn = std::sqrt(tn2);
        for (double rr = 0.0; rr <= 10.0 * std::sqrt(lam_fit); rr += 0.25 * std::sqrt(lam_fit)) {
          const double r_eval = std::max(rr, sol.profile.r_front());
          auto val = sol.profile.eval(r_eval);
          const double wv = w_value(r_eval, lam_fit);
          double e2 = 0, s2 = 0;
          for (int c = 0; c < nl.m; ++c) {
            const double model = (theta[c] / tn) * wv;
            e2 += (val[c] - model) * (val[c] - model);
            s2 += model * model;
          }
          resid = std::max(resid, std::sqrt(e2));
          scale = std::max(scale, std::sqrt(s2));
        }
        out << ',' << (sol.has_energy ? fmt17(sol.energy) : "nan");
        out << ',' << fmt17(lam_fit) << ',' << fmt17(scale > 0 ? resid / scale : resid) << ",";
        if (sol.has_energy) caseC_energies.push_back(sol.energy);
      } else {
        out << ",nan,nan,nan,";
      }
      out << "\n";
    } catch (const std::exception& e) {
      out << ",error,nan,nan,nan,nan," << e.what() << "\n";
    }
  }

  json summary;
  summary["case_C_count"] = caseC_energies.size();
  if (!caseC_energies.empty()) {
    EnergyAssumptionReport rep = check_energy_assumptions(caseC_energies);
    summary["levels"] = rep.levels;
    summary["A2_finite"] = true;
    summary["A3_holds"] = rep.a3_holds;
    if (!rep.a3_holds) summary["A3_violation"] = rep.violation;
  }
  std::ofstream(outpath + ".summary.json") << summary.dump(2) << "\n";
  return 0;
}

int run_channels(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("(file)", "cannot open " + config_path);
  json j = json::parse(in);
  check_keys(j, "(root)", {"m", "grid", "data", "R_list", "T_list", "out"});
  const int m = j.contains("m") ? j["m"].get<int>() : 1;
  if (!j.contains("grid")) throw ConfigError("grid", "missing");
  check_keys(j["grid"], "grid", {"nr", "r_max"});
  const int nr = static_cast<int>(get_num(j["grid"], "grid", "nr", 0, true));
  const double rmax = get_num(j["grid"], "grid", "r_max", 0, true);

  WaveState data = make_state(nr, rmax / (nr - 1), m);
  if (!j.contains("data") || !j["data"].is_array()) throw ConfigError("data", "missing");
  for (std::size_t i = 0; i < j["data"].size(); ++i) {
    const json& it = j["data"][i];
    const std::string p = "data[" + std::to_string(i) + "]";
    check_keys(it, p, {"center", "width", "amplitude", "component", "field"});
    const double c0 = get_num(it, p, "center", 0, true);
    const double w = get_num(it, p, "width", 1.0);
    const double a = get_num(it, p, "amplitude", 0, true);
    const int comp = static_cast<int>(get_num(it, p, "component", 0));
    const std::string field = it.value("field", std::string("u"));
    for (int i2 = 0; i2 < data.nr; ++i2) {
      const double v = a * bump_shape((i2 * data.dr - c0) / w);
      if (field == "u")
        data.at(i2, comp) += v;
      else
        data.at_t(i2, comp) += v;
    }
  }

  std::vector<double> Rs, Ts;
  for (const auto& v : j["R_list"]) Rs.push_back(v.get<double>());
  for (const auto& v : j["T_list"]) Ts.push_back(v.get<double>());

  const std::string outpath = j.value("out", std::string("channels.csv"));
  std::ofstream out(outpath);
  out << "R,T,lhs,rhs\n";
  for (double R : Rs)
    for (double T : Ts) {
      ChannelCheck ch = channel_identity_check(data, R, T);
      out << fmt17(R) << ',' << fmt17(T) << ',' << fmt17(ch.lhs) << ',' << fmt17(ch.rhs) << "\n";
    }
  return 0;
}

int run_analyze(const std::string& run_dir) {
  const fs::path dir(run_dir);
  Scenario sc = load_scenario((dir / "manifest.json").string());
  std::vector<WaveState> snaps;
  for (int k = 0;; ++k) {
    char name[40];
    std::snprintf(name, sizeof name, "snap_%06d.cwws", k);
    const fs::path p = dir / "snapshots" / name;
    if (!fs::exists(p)) break;
    snaps.push_back(load_state_binary(p.string()));
  }
  if (snaps.empty()) throw ConfigError("(run)", "no snapshots under " + run_dir);

  json summary;
  if (sc.nl.has_potential()) {
    try {
      ThreeEReport rep3 = check_3E_bound(snaps, sc.nl);
      summary["three_e_max_ratio"] = rep3.max_ratio;
      summary["three_e_tail_ratio"] = rep3.tail_max_ratio;
    } catch (const NonpositiveEnergy&) {
      summary["three_e"] = "nonpositive energy";
    }
    try {
      VirialSeries vs = virial_series(snaps, sc.nl);
      save_virial_csv(vs, (dir / "virial.csv").string());
    } catch (const InsufficientSnapshots& e) {
      summary["virial"] = e.what();
    }
  }
  resolution_analysis(sc, snaps, dir, summary);
  std::ofstream(dir / "analysis.json") << summary.dump(2) << "\n";
  return 0;
}

int run_validate(const std::string& config_path) {
  try {
    Scenario sc = load_scenario(config_path);
    build_initial_state(sc);  // resolves bubbles etc.
    std::printf("OK: scenario '%s' validates\n", sc.name.c_str());
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "invalid config: %s\n", e.what());
    return 1;
  }
}

}  // namespace critwave
