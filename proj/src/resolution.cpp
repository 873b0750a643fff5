#include "critwave/resolution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

#include "critwave/errors.hpp"
#include "critwave/stationary.hpp"

namespace critwave {

namespace {

double reg_term(double lambda, double t) {
  // exp(-|t|) * int_0^lambda exp(-r) r^2 dr
  return std::exp(-std::abs(t)) * (2.0 - std::exp(-lambda) * (lambda * lambda + 2 * lambda + 2));
}

// cumulative trapezoid of |grad u|^2 r^2 at the grid nodes
std::vector<double> cumulative_gradient(const WaveState& s) {
  const auto du = radial_derivative(s);
  std::vector<double> cum(s.nr, 0.0);
  auto dens = [&](int i) {
    double g = 0;
    for (int c = 0; c < s.m; ++c) {
      const double d = du[static_cast<std::size_t>(i) * s.m + c];
      g += d * d;
    }
    const double r = i * s.dr;
    return g * r * r;
  };
  for (int i = 0; i + 1 < s.nr; ++i) cum[i + 1] = cum[i] + 0.5 * (dens(i) + dens(i + 1)) * s.dr;
  return cum;
}

double lookup_cum(const std::vector<double>& cum, double dr, double r) {
  if (r <= 0) return 0;
  const double x = r / dr;
  const int i = std::min(static_cast<int>(x), static_cast<int>(cum.size()) - 2);
  const double a = x - i;
  return cum[i] + a * (cum[i + 1] - cum[i]);
}

}  // namespace

ScaleDetection detect_scales(const WaveState& diff, const std::vector<double>& energies,
                             double eps) {
  if (!(eps > 0)) throw std::invalid_argument("detect_scales: eps must be positive");
  for (std::size_t j = 0; j < energies.size(); ++j) {
    if (!(energies[j] > 0)) throw std::invalid_argument("detect_scales: energies must be positive");
    if (j > 0 && energies[j] < energies[j - 1])
      throw std::invalid_argument("detect_scales: energies must be sorted");
  }
  const auto cum = cumulative_gradient(diff);
  const double rmax = diff.r_max();
  auto G = [&](double lam) { return lookup_cum(cum, diff.dr, lam) + reg_term(lam, diff.t); };

  ScaleDetection out;
  double prefix = 0;
  for (std::size_t j = 0; j < energies.size(); ++j) {
    const double target = 3.0 * prefix + 1.5 * energies[j];
    if (G(rmax) < target) {
      out.budget_exceeded = true;
      return out;
    }
    double lo = 0, hi = rmax;
    while (hi - lo > eps * std::max(hi, 1e-300)) {
      const double mid = 0.5 * (lo + hi);
      if (G(mid) < target)
        lo = mid;
      else
        hi = mid;
    }
    out.scales.push_back(0.5 * (lo + hi));
    prefix += energies[j];
  }
  return out;
}

CandidateLibrary candidate_library(const VectorNonlinearity& nl, int sphere_samples) {
  GroundState gs = ground_state(nl);  // throws EmptyZ when Z is empty
  const int m = nl.m;

  CandidateLibrary lib;
  lib.m = m;

  // K-normalize the scalar W shape once; every candidate is built from it.
  RadialProfile w = explicit_w(1.0, bubble_grid(1e-4, 1e6, 32));
  auto [wk, lam_k] = k_normalize(w);
  lib.base = wk;

  // rotation invariance test: F constant on the sphere
  bool invariant = m >= 2;
  if (invariant) {
    auto pts = sample_ball(m, 64, 1.0, 99);
    for (auto& p : pts) {
      double n = 0;
      for (double x : p) n += x * x;
      n = std::sqrt(n);
      for (auto& x : p) x /= n;
      if (std::abs(nl.potential_fn(p.data()) - gs.Fmax) > 1e-9 * (1 + std::abs(gs.Fmax))) {
        invariant = false;
        break;
      }
    }
  }

  const double gw = gradient_energy(wk) + gradient_energy_tail(wk);
  const double item_energy = gs.mu * gs.mu * gw / 3.0;  // E(mu omega W) = mu^2 E(W)... via G/3
  lib.item_energy = item_energy;
  lib.base_mu = gs.mu;

  auto make_item = [&](const std::vector<double>& omega, const std::string& id) {
    const std::size_t n = wk.size();
    std::vector<double> vals(n * m), ders(n * m);
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < m; ++c) {
        vals[i * m + c] = gs.mu * omega[c] * wk.value(i, 0);
        ders[i * m + c] = gs.mu * omega[c] * wk.deriv(i, 0);
      }
    Candidate cand;
    cand.id = id;
    cand.profile = RadialProfile(wk.grid(), std::move(vals), std::move(ders), m, true);
    cand.energy = item_energy;
    cand.omega = omega;
    return cand;
  };

  if (invariant) {
    lib.directional = true;
    if (m == 2) {
      for (int k = 0; k < sphere_samples; ++k) {
        const double phi = 2.0 * M_PI * k / sphere_samples;
        char id[48];
        std::snprintf(id, sizeof id, "omega@%.6f", phi);
        lib.items.push_back(make_item({std::cos(phi), std::sin(phi)}, id));
      }
    } else {
      const double ga = M_PI * (3.0 - std::sqrt(5.0));
      for (int k = 0; k < sphere_samples; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / sphere_samples;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        std::vector<double> w3 = {rho * std::cos(ga * k), rho * std::sin(ga * k), z};
        w3.resize(m, 0.0);
        lib.items.push_back(make_item(w3, "omega#" + std::to_string(k)));
      }
    }
  } else {
    lib.items.push_back(make_item(gs.omega, "+ground"));
    // include the sign flip when f is odd
    std::vector<double> wneg(m), f1(m), f2(m);
    for (int c = 0; c < m; ++c) wneg[c] = -gs.omega[c];
    nl.f(gs.omega.data(), f1.data());
    nl.f(wneg.data(), f2.data());
    double odd = 0;
    for (int c = 0; c < m; ++c) odd += std::abs(f1[c] + f2[c]);
    if (odd < 1e-12) lib.items.push_back(make_item(wneg, "-ground"));
  }
  return lib;
}

void add_candidate(CandidateLibrary& lib, const std::string& id, const RadialProfile& p,
                   const VectorNonlinearity& nl) {
  auto [pk, lam] = k_normalize(p);
  Candidate cand;
  cand.id = id;
  cand.energy = (gradient_energy(pk) + gradient_energy_tail(pk)) / 3.0;
  cand.profile = std::move(pk);
  lib.items.push_back(std::move(cand));
  lib.directional = false;
  (void)nl;
  (void)lam;
}

namespace {

// Samples a rescaled candidate profile on the state grid (theta/r tail
// beyond the candidate grid) and returns values for nodes [0, n).
void sample_rescaled(const RadialProfile& p, double lambda, int nr, double dr,
                     std::vector<double>& out) {
  const int m = p.components();
  out.assign(static_cast<std::size_t>(nr) * m, 0.0);
  const double amp = 1.0 / std::sqrt(lambda);
  const auto th = p.theta_estimate();
  for (int i = 0; i < nr; ++i) {
    const double s = i * dr / lambda;
    if (s <= p.r_back()) {
      p.eval(std::max(s, p.r_front()), &out[static_cast<std::size_t>(i) * m]);
      for (int c = 0; c < m; ++c) out[static_cast<std::size_t>(i) * m + c] *= amp;
    } else {
      for (int c = 0; c < m; ++c)
        out[static_cast<std::size_t>(i) * m + c] = amp * th[c] / s;
    }
  }
}

struct FitGrid {
  int nr;
  double dr;
  int m;
};

// central-difference gradient of a raw value array
std::vector<double> cd_gradient(const std::vector<double>& u, const FitGrid& g) {
  std::vector<double> du(u.size(), 0.0);
  for (int c = 0; c < g.m; ++c) {
    for (int i = 1; i + 1 < g.nr; ++i)
      du[static_cast<std::size_t>(i) * g.m + c] =
          (u[static_cast<std::size_t>(i + 1) * g.m + c] -
           u[static_cast<std::size_t>(i - 1) * g.m + c]) /
          (2 * g.dr);
    du[static_cast<std::size_t>(g.nr - 1) * g.m + c] =
        (u[static_cast<std::size_t>(g.nr - 1) * g.m + c] -
         u[static_cast<std::size_t>(g.nr - 2) * g.m + c]) /
        g.dr;
  }
  return du;
}

}  // namespace

ResolutionReport fit_profiles(const WaveState& diff, const std::vector<double>& scales,
                              const CandidateLibrary& lib, double radiation_mass) {
  ResolutionReport rep;
  rep.t = diff.t;
  rep.J = static_cast<int>(scales.size());
  rep.scales = scales;
  rep.radiation_mass = radiation_mass;

  const FitGrid g{diff.nr, diff.dr, diff.m};
  std::vector<double> work = diff.u;
  std::vector<double> dwork = cd_gradient(work, g);
  const double rmax = diff.r_max();

  auto annulus = [&](std::size_t j) {
    const double lo = (j == 0) ? 0.0 : std::sqrt(scales[j - 1] * scales[j]);
    const double hi = (j + 1 == scales.size()) ? rmax : std::sqrt(scales[j] * scales[j + 1]);
    return std::pair<double, double>(lo, hi);
  };

  // gradient residual of (dwork - dcand) over [lo, hi], trapezoid with r^2
  auto residual_on = [&](const std::vector<double>& dcand, double lo, double hi) {
    const int i0 = std::max(1, static_cast<int>(std::ceil(lo / g.dr)));
    const int i1 = std::min(g.nr - 1, static_cast<int>(std::floor(hi / g.dr)));
    double acc = 0;
    for (int i = i0; i <= i1; ++i) {
      const double r = i * g.dr;
      double e2 = 0;
      for (int c = 0; c < g.m; ++c) {
        const double d = dwork[static_cast<std::size_t>(i) * g.m + c] -
                         dcand[static_cast<std::size_t>(i) * g.m + c];
        e2 += d * d;
      }
      const double wgt = (i == i0 || i == i1) ? 0.5 : 1.0;
      acc += wgt * e2 * r * r * g.dr;
    }
    return acc;
  };

  std::vector<double> cand_vals, cand_grad;

  for (std::size_t j = 0; j < scales.size(); ++j) {
    auto [lo, hi] = annulus(j);
    double best_res = 1e300, best_lambda = scales[j];
    std::size_t best_item = 0;

    auto eval_item = [&](std::size_t item, double lam) {
      sample_rescaled(lib.items[item].profile, lam, g.nr, g.dr, cand_vals);
      cand_grad = cd_gradient(cand_vals, g);
      return residual_on(cand_grad, lo, hi);
    };

    auto scan = [&](double lam) {
      if (lib.directional) {
        // shared radial shape: the optimal direction is analytic, then the
        // nearest library items realize the argmin over the discrete set
        sample_rescaled(lib.base, lam, g.nr, g.dr, cand_vals);
        for (auto& v : cand_vals) v *= lib.base_mu;
        std::vector<double> dshape = cd_gradient(cand_vals, FitGrid{g.nr, g.dr, 1});
        const int i0 = std::max(1, static_cast<int>(std::ceil(lo / g.dr)));
        const int i1 = std::min(g.nr - 1, static_cast<int>(std::floor(hi / g.dr)));
        std::vector<double> v(g.m, 0.0);
        for (int i = i0; i <= i1; ++i) {
          const double r = i * g.dr;
          const double wgt = ((i == i0 || i == i1) ? 0.5 : 1.0) * r * r * g.dr;
          for (int c = 0; c < g.m; ++c)
            v[c] += wgt * dwork[static_cast<std::size_t>(i) * g.m + c] * dshape[i];
        }
        // the residual is quadratic in omega, so the best library direction
        // is the one maximizing omega . v
        double best_dot = -1e300;
        std::size_t best = 0;
        for (std::size_t it = 0; it < lib.items.size(); ++it) {
          double d = 0;
          for (int c = 0; c < g.m; ++c) d += lib.items[it].omega[c] * v[c];
          if (d > best_dot) {
            best_dot = d;
            best = it;
          }
        }
        const double res = eval_item(best, lam);
        if (res < best_res) {
          best_res = res;
          best_lambda = lam;
          best_item = best;
        }
      } else {
        for (std::size_t it = 0; it < lib.items.size(); ++it) {
          const double res = eval_item(it, lam);
          if (res < best_res) {
            best_res = res;
            best_lambda = lam;
            best_item = it;
          }
        }
      }
    };

    // coarse log scan over [scale/4, 4 scale], then two zooms around the best
    double llo = std::log(scales[j] / 4.0), lhi = std::log(scales[j] * 4.0);
    const int npts = 49;
    for (int round = 0; round < 3; ++round) {
      const double step = (lhi - llo) / (npts - 1);
      for (int k = 0; k < npts; ++k) scan(std::exp(llo + k * step));
      const double lb = std::log(best_lambda);
      llo = lb - step;
      lhi = lb + step;
    }

    // subtract the fitted component everywhere
    sample_rescaled(lib.items[best_item].profile, best_lambda, g.nr, g.dr, cand_vals);
    cand_grad = cd_gradient(cand_vals, g);
    for (std::size_t k = 0; k < work.size(); ++k) {
      work[k] -= cand_vals[k];
      dwork[k] -= cand_grad[k];
    }

    ScaleMatch match;
    match.candidate_id = lib.items[best_item].id;
    match.lambda = best_lambda;
    match.residual = best_res;
    match.energy = lib.items[best_item].energy;
    rep.matches.push_back(std::move(match));
  }

  // residual H x L2 mass of what remains
  double res = 0;
  for (int i = 0; i + 1 < g.nr; ++i) {
    const double r0 = i * g.dr, r1 = (i + 1) * g.dr;
    double a = 0, b = 0;
    for (int c = 0; c < g.m; ++c) {
      const double d0 = dwork[static_cast<std::size_t>(i) * g.m + c];
      const double d1 = dwork[static_cast<std::size_t>(i + 1) * g.m + c];
      const double v0 = diff.at_t(i, c);
      const double v1 = diff.at_t(i + 1, c);
      a += d0 * d0 + v0 * v0;
      b += d1 * d1 + v1 * v1;
    }
    res += 0.5 * (a * r0 * r0 + b * r1 * r1) * g.dr;
  }
  rep.residual_energy = res;
  return rep;
}

double energy_budget(ResolutionReport& report, double E_total) {
  double sum = report.radiation_mass;
  for (const auto& mch : report.matches) sum += mch.energy;
  report.budget_gap = std::abs(sum - E_total);
  return report.budget_gap;
}

namespace {

double cutoff_phi(double s) {
  // 1 on [0,2], 0 on [3,inf), quintic bridge between
  if (s <= 2.0) return 1.0;
  if (s >= 3.0) return 0.0;
  const double x = s - 2.0;
  return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

}  // namespace

VirialSeries virial_series(const std::vector<WaveState>& snapshots,
                           const VectorNonlinearity& nl) {
  if (!nl.has_potential()) throw MissingPotential("virial_series: potential required");
  std::vector<const WaveState*> snaps;
  for (const auto& s : snapshots)
    if (s.t > 0) snaps.push_back(&s);
  if (snaps.size() < 3) throw InsufficientSnapshots("virial_series: need >= 3 snapshots with t>0");

  VirialSeries vs;
  const double nan = std::nan("");
  for (const WaveState* sp : snaps) {
    const WaveState& s = *sp;
    double y = 0;
    for (int i = 0; i + 1 < s.nr; ++i) {
      const double r0 = i * s.dr, r1 = (i + 1) * s.dr;
      double a = 0, b = 0;
      for (int c = 0; c < s.m; ++c) {
        a += s.at(i, c) * s.at(i, c);
        b += s.at(i + 1, c) * s.at(i + 1, c);
      }
      y += 0.5 * (cutoff_phi(r0 / s.t) * a * r0 * r0 + cutoff_phi(r1 / s.t) * b * r1 * r1) * s.dr;
    }
    const auto du = radial_derivative(s);
    double kin = 0, grad = 0;
    for (int i = 0; i + 1 < s.nr; ++i) {
      const double r0 = i * s.dr, r1 = (i + 1) * s.dr;
      double k0 = 0, k1 = 0, g0 = 0, g1 = 0;
      for (int c = 0; c < s.m; ++c) {
        k0 += s.at_t(i, c) * s.at_t(i, c);
        k1 += s.at_t(i + 1, c) * s.at_t(i + 1, c);
        const double d0 = du[static_cast<std::size_t>(i) * s.m + c];
        const double d1 = du[static_cast<std::size_t>(i + 1) * s.m + c];
        g0 += d0 * d0;
        g1 += d1 * d1;
      }
      kin += 0.5 * (k0 * r0 * r0 + k1 * r1 * r1) * s.dr;
      grad += 0.5 * (g0 * r0 * r0 + g1 * r1 * r1) * s.dr;
    }
    const double E = energy(nl, s);
    vs.times.push_back(s.t);
    vs.y.push_back(y);
    vs.ypp_predicted.push_back(8.0 * kin + 4.0 * grad - 12.0 * E);
    vs.ypp_measured.push_back(nan);  // filled below for interior points
  }
  // second differences; the general 3-point formula also covers an
  // off-cadence final snapshot
  for (std::size_t k = 1; k + 1 < vs.y.size(); ++k) {
    const double h1 = vs.times[k] - vs.times[k - 1];
    const double h2 = vs.times[k + 1] - vs.times[k];
    vs.ypp_measured[k] = 2.0 * (vs.y[k - 1] / (h1 * (h1 + h2)) - vs.y[k] / (h1 * h2) +
                                vs.y[k + 1] / (h2 * (h1 + h2)));
  }
  return vs;
}

ThreeEReport check_3E_bound(const std::vector<WaveState>& snapshots,
                            const VectorNonlinearity& nl) {
  if (snapshots.empty()) throw InsufficientSnapshots("check_3E_bound: no snapshots");
  const double E = energy(nl, snapshots.front());
  if (!(E > 0)) throw NonpositiveEnergy("check_3E_bound: E <= 0");
  ThreeEReport rep;
  const std::size_t half = snapshots.size() / 2;
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    const double ratio = norm_hh(snapshots[k]) / (3.0 * E);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (k >= half) rep.tail_max_ratio = std::max(rep.tail_max_ratio, ratio);
  }
  return rep;
}

std::vector<double> localized_energies(const WaveState& diff, const std::vector<double>& scales,
                                       const std::vector<double>& energies, double Cbar) {
  const auto cum = cumulative_gradient(diff);
  std::vector<double> out;
  double prefix = 0;
  for (std::size_t j = 0; j < scales.size(); ++j) {
    out.push_back(lookup_cum(cum, diff.dr, Cbar * scales[j]) - 3.0 * prefix);
    if (j < energies.size()) prefix += energies[j];
  }
  return out;
}

namespace {

bool decompose(double total, const std::vector<double>& levels, double tol, std::size_t from,
               std::vector<double>& acc) {
  if (std::abs(total) <= tol) return true;
  if (total < -tol) return false;
  for (std::size_t k = from; k < levels.size(); ++k) {
    if (levels[k] > total + tol) break;
    acc.push_back(levels[k]);
    if (decompose(total - levels[k], levels, tol, k, acc)) return true;
    acc.pop_back();
  }
  return false;
}

}  // namespace

std::optional<std::vector<double>> infer_energy_sequence(double total,
                                                         const std::vector<double>& levels,
                                                         double tol) {
  std::vector<double> sorted = levels;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> acc;
  if (!decompose(total, sorted, tol, 0, acc)) return std::nullopt;
  std::sort(acc.begin(), acc.end());
  return acc;
}

EnergyAssumptionReport check_energy_assumptions(const std::vector<double>& energies,
                                                double rel_tol) {
  EnergyAssumptionReport rep;
  std::vector<double> sorted = energies;
  std::sort(sorted.begin(), sorted.end());
  for (double e : sorted) {
    if (rep.levels.empty() || e > rep.levels.back() * (1 + rel_tol)) rep.levels.push_back(e);
  }
  // A3: E_j = sum alpha_k E_k forces alpha = unit_j
  const std::size_t p = rep.levels.size();
  std::vector<int> alpha(p, 0);
  std::function<bool(std::size_t, double, std::size_t)> search =
      [&](std::size_t k, double remain, std::size_t j) -> bool {
    if (k == p) {
      if (std::abs(remain) > rel_tol * rep.levels[j]) return false;
      // nontrivial iff alpha != unit vector at j
      for (std::size_t i = 0; i < p; ++i) {
        const int want = (i == j) ? 1 : 0;
        if (alpha[i] != want) return true;
      }
      return false;
    }
    const int maxc = static_cast<int>(remain / rep.levels[k] + 1 + rel_tol);
    for (int c = 0; c <= maxc; ++c) {
      alpha[k] = c;
      const double r2 = remain - c * rep.levels[k];
      if (r2 < -rel_tol * rep.levels[j]) break;
      if (search(k + 1, r2, j)) return true;
    }
    alpha[k] = 0;
    return false;
  };
  for (std::size_t j = 0; j < p; ++j) {
    std::fill(alpha.begin(), alpha.end(), 0);
    if (search(0, rep.levels[j], j)) {
      rep.a3_holds = false;
      char buf[128];
      std::snprintf(buf, sizeof buf, "level %zu (%.12g) admits a nontrivial decomposition", j,
                    rep.levels[j]);
      rep.violation = buf;
      break;
    }
  }
  return rep;
}

void save_report_csv(const ResolutionReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("save_report_csv: cannot open " + path);
  out << "j,scale,candidate,lambda,residual,energy\n";
  char buf[64];
  for (std::size_t j = 0; j < rep.matches.size(); ++j) {
    out << j + 1;
    std::snprintf(buf, sizeof buf, "%.17g", rep.scales[j]);
    out << ',' << buf << ',' << rep.matches[j].candidate_id;
    std::snprintf(buf, sizeof buf, "%.17g", rep.matches[j].lambda);
    out << ',' << buf;
    std::snprintf(buf, sizeof buf, "%.17g", rep.matches[j].residual);
    out << ',' << buf;
    std::snprintf(buf, sizeof buf, "%.17g", rep.matches[j].energy);
    out << ',' << buf << "\n";
  }
}

void save_virial_csv(const VirialSeries& vs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("save_virial_csv: cannot open " + path);
  out << "t,y,ypp_measured,ypp_predicted\n";
  char buf[64];
  for (std::size_t k = 0; k < vs.times.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", vs.times[k]);
    out << buf;
    std::snprintf(buf, sizeof buf, "%.17g", vs.y[k]);
    out << ',' << buf;
    std::snprintf(buf, sizeof buf, "%.17g", vs.ypp_measured[k]);
    out << ',' << buf;
    std::snprintf(buf, sizeof buf, "%.17g", vs.ypp_predicted[k]);
    out << ',' << buf << "\n";
  }
}

}  // namespace critwave
