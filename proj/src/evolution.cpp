#include "critwave/evolution.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "critwave/errors.hpp"

namespace critwave {

WaveState make_state(int nr, double dr, int m) {
  if (nr < 3 || !(dr > 0) || m < 1) throw DomainError("make_state: bad dimensions");
  WaveState s;
  s.nr = nr;
  s.dr = dr;
  s.m = m;
  s.u.assign(static_cast<std::size_t>(nr) * m, 0.0);
  s.ut.assign(static_cast<std::size_t>(nr) * m, 0.0);
  return s;
}

double support_radius(const WaveState& s) {
  for (int i = s.nr - 1; i >= 0; --i)
    for (int c = 0; c < s.m; ++c)
      if (s.at(i, c) != 0.0 || s.at_t(i, c) != 0.0) return i * s.dr;
  return 0.0;
}

double sup_norm(const WaveState& s) {
  double sup = 0;
  for (int i = 0; i < s.nr; ++i) {
    double a2 = 0;
    for (int c = 0; c < s.m; ++c) a2 += s.at(i, c) * s.at(i, c);
    sup = std::max(sup, a2);
  }
  return std::sqrt(sup);
}

namespace {

// u(0) and ut(0) from the w-field by the one-sided O(dr^2) derivative,
// using w(0) = 0.
inline double origin_from_w(const double* w1, const double* w2, int c, double dr) {
  return (4.0 * w1[c] - w2[c]) / (2.0 * dr);
}

WaveState state_from_w(const std::vector<double>& wm1, const std::vector<double>& w,
                       const std::vector<double>& wp1, double t, double dr, int nr, int m,
                       double dt) {
  WaveState s = make_state(nr, dr, m);
  s.t = t;
  for (int i = 1; i < nr; ++i) {
    const double r = i * dr;
    for (int c = 0; c < m; ++c) {
      s.at(i, c) = w[static_cast<std::size_t>(i) * m + c] / r;
      s.at_t(i, c) = (wp1[static_cast<std::size_t>(i) * m + c] -
                      wm1[static_cast<std::size_t>(i) * m + c]) /
                     (2.0 * dt) / r;
    }
  }
  // central time-derivative field of w, then the same one-sided limit in r
  for (int c = 0; c < m; ++c) {
    s.at(0, c) = origin_from_w(&w[m], &w[2 * m], c, dr);
    const double wt1 = (wp1[m + c] - wm1[m + c]) / (2.0 * dt);
    const double wt2 = (wp1[2 * m + c] - wm1[2 * m + c]) / (2.0 * dt);
    const double pair1[1] = {wt1}, pair2[1] = {wt2};
    s.at_t(0, c) = origin_from_w(pair1, pair2, 0, dr);
  }
  return s;
}

}  // namespace

EvolveResult evolve(const VectorNonlinearity& nl, const EvolveConfig& cfg,
                    const WaveState& initial) {
  const int nr = initial.nr, m = initial.m;
  const double dr = initial.dr;
  if (nl.m != m) throw std::invalid_argument("evolve: component mismatch");
  if (!(cfg.T > 0)) throw std::invalid_argument("evolve: T must be positive");
  if (!(cfg.cfl > 0 && cfg.cfl <= 1)) throw std::invalid_argument("evolve: cfl must be in (0,1]");

  for (double v : initial.u)
    if (!std::isfinite(v)) throw NonFiniteState("evolve: non-finite initial data");
  for (double v : initial.ut)
    if (!std::isfinite(v)) throw NonFiniteState("evolve: non-finite initial data");

  // Finite-speed domain precondition, enforced for data compactly supported
  // inside the grid.
  const double rho = support_radius(initial);
  const double rmax = initial.r_max();
  if (rho < rmax - 1.5 * dr && rho + cfg.T + 1.0 > rmax)
    throw DomainTooSmall("evolve: r_max must be >= support + T + 1 for compactly supported data");

  // The CFL contract dt <= cfl*dr is validated at the configuration layer;
  // the stepper itself runs whatever it is given (an out-of-band dt is the
  // documented instability demonstration).
  double dt = cfg.dt > 0 ? cfg.dt : cfg.cfl * dr;
  int steps = static_cast<int>(std::ceil(cfg.T / dt - 1e-12));
  steps = std::max(steps, 1);
  dt = cfg.T / steps;

  const std::size_t nn = static_cast<std::size_t>(nr) * m;
  std::vector<double> wprev(nn), wcur(nn), wnext(nn);
  std::vector<double> ubuf(m), fbuf(m), acc(m);
  for (int i = 0; i < nr; ++i) {
    const double r = i * dr;
    for (int c = 0; c < m; ++c) wprev[static_cast<std::size_t>(i) * m + c] = r * initial.at(i, c);
  }
  for (int c = 0; c < m; ++c) wprev[c] = 0.0;

  const std::vector<double> frozen(wprev.end() - m, wprev.end());

  auto rhs_at = [&](const std::vector<double>& w, int i, double* out_acc) {
    // w_rr + r f(w/r); the origin contributes 0 since r f(w/r) ~ r there
    const double r = i * dr;
    const std::size_t k = static_cast<std::size_t>(i) * m;
    for (int c = 0; c < m; ++c) ubuf[c] = w[k + c] / r;
    nl.f(ubuf.data(), fbuf.data());
    for (int c = 0; c < m; ++c)
      out_acc[c] = (w[k + m + c] - 2.0 * w[k + c] + w[k - m + c]) / (dr * dr) + r * fbuf[c];
  };

  // First step by Taylor expansion: w1 = w0 + dt wt0 + dt^2/2 (w_rr + r f).
  for (int i = 1; i < nr - 1; ++i) {
    rhs_at(wprev, i, acc.data());
    const std::size_t k = static_cast<std::size_t>(i) * m;
    const double r = i * dr;
    for (int c = 0; c < m; ++c)
      wcur[k + c] = wprev[k + c] + dt * r * initial.at_t(i, c) + 0.5 * dt * dt * acc[c];
  }
  for (int c = 0; c < m; ++c) {
    wcur[c] = 0.0;
    wcur[nn - m + c] = frozen[c];
  }

  EvolveResult out;
  if (cfg.snapshot_every > 0) out.snapshots.push_back(initial);

  auto crossed_threshold = [&](const std::vector<double>& w) -> bool {
    double sup2 = 0;
    for (int i = 1; i < nr; ++i) {
      const double r = i * dr;
      const std::size_t k = static_cast<std::size_t>(i) * m;
      double a2 = 0;
      for (int c = 0; c < m; ++c) {
        const double ui = w[k + c] / r;
        if (!std::isfinite(ui)) throw NonFiniteState("evolve: non-finite state");
        a2 += ui * ui;
      }
      sup2 = std::max(sup2, a2);
    }
    return std::sqrt(sup2) > cfg.blowup_threshold;
  };

  // Invariant at the top of iteration n: wprev = w_{n-1}, wcur = w_n.
  for (int n = 1; n <= steps; ++n) {
    for (int i = 1; i < nr - 1; ++i) {
      rhs_at(wcur, i, acc.data());
      const std::size_t k = static_cast<std::size_t>(i) * m;
      for (int c = 0; c < m; ++c)
        wnext[k + c] = 2.0 * wcur[k + c] - wprev[k + c] + dt * dt * acc[c];
    }
    for (int c = 0; c < m; ++c) {
      wnext[c] = 0.0;
      wnext[nn - m + c] = frozen[c];
    }

    const double t = initial.t + n * dt;  // runs may start at any time gauge
    const bool blew = crossed_threshold(wcur);
    const bool want_snapshot = cfg.snapshot_every > 0 && (n % cfg.snapshot_every == 0);
    if (blew || want_snapshot || n == steps) {
      if (blew) {
        // wnext may already be contaminated; use the backward difference
        WaveState st = state_from_w(wprev, wcur, wcur, t, dr, nr, m, 0.5 * dt);
        out.outcome = Outcome::BlowupDetected;
        if (cfg.snapshot_every > 0) out.snapshots.push_back(st);
        out.final = std::move(st);
        return out;
      }
      WaveState st = state_from_w(wprev, wcur, wnext, t, dr, nr, m, dt);
      if (n == steps) {
        if (cfg.snapshot_every > 0) out.snapshots.push_back(st);
        out.final = std::move(st);
      } else if (want_snapshot) {
        out.snapshots.push_back(std::move(st));
      }
    }

    std::swap(wprev, wcur);
    std::swap(wcur, wnext);
  }
  out.outcome = Outcome::Completed;
  return out;
}

std::vector<double> radial_derivative(const WaveState& s) {
  const int nr = s.nr, m = s.m;
  std::vector<double> du(static_cast<std::size_t>(nr) * m, 0.0);
  for (int c = 0; c < m; ++c) {
    du[c] = 0.0;  // regular radial data has vanishing derivative at the origin
    for (int i = 1; i < nr - 1; ++i)
      du[static_cast<std::size_t>(i) * m + c] = (s.at(i + 1, c) - s.at(i - 1, c)) / (2.0 * s.dr);
    du[static_cast<std::size_t>(nr - 1) * m + c] = (s.at(nr - 1, c) - s.at(nr - 2, c)) / s.dr;
  }
  return du;
}

namespace {

double trapezoid_r2(const WaveState& s, const std::vector<double>& density) {
  double acc = 0;
  for (int i = 0; i + 1 < s.nr; ++i) {
    const double r0 = i * s.dr, r1 = (i + 1) * s.dr;
    acc += 0.5 * (density[i] * r0 * r0 + density[i + 1] * r1 * r1) * s.dr;
  }
  return acc;
}

}  // namespace

double energy(const VectorNonlinearity& nl, const WaveState& s) {
  if (!nl.has_potential()) throw MissingPotential("energy: potential required");
  const auto du = radial_derivative(s);
  std::vector<double> density(s.nr);
  std::vector<double> ubuf(s.m);
  for (int i = 0; i < s.nr; ++i) {
    double g = 0;
    for (int c = 0; c < s.m; ++c) {
      const double d = du[static_cast<std::size_t>(i) * s.m + c];
      const double v = s.at_t(i, c);
      g += 0.5 * (d * d + v * v);
      ubuf[c] = s.at(i, c);
    }
    density[i] = g - nl.potential_fn(ubuf.data());
  }
  return trapezoid_r2(s, density);
}

double norm_hh(const WaveState& s) {
  const auto du = radial_derivative(s);
  std::vector<double> density(s.nr);
  for (int i = 0; i < s.nr; ++i) {
    double g = 0;
    for (int c = 0; c < s.m; ++c) {
      const double d = du[static_cast<std::size_t>(i) * s.m + c];
      const double v = s.at_t(i, c);
      g += d * d + v * v;
    }
    density[i] = g;
  }
  return trapezoid_r2(s, density);
}

double exterior_energy(const WaveState& s, double R) {
  if (!(R >= 0)) throw std::invalid_argument("exterior_energy: R must be >= 0");
  if (R >= s.r_max()) return 0.0;
  const auto du = radial_derivative(s);
  auto density = [&](int i) {
    double g = 0;
    for (int c = 0; c < s.m; ++c) {
      const double d = du[static_cast<std::size_t>(i) * s.m + c];
      const double v = s.at_t(i, c);
      g += d * d + v * v;
    }
    return g;
  };
  const int i0 = static_cast<int>(std::ceil(R / s.dr - 1e-12));
  double acc = 0;
  for (int i = std::max(i0, 0); i + 1 < s.nr; ++i) {
    const double r0 = i * s.dr, r1 = (i + 1) * s.dr;
    acc += 0.5 * (density(i) * r0 * r0 + density(i + 1) * r1 * r1) * s.dr;
  }
  // partial cell between R and the first grid node
  if (i0 >= 1 && i0 * s.dr > R) {
    const double r0 = (i0 - 1) * s.dr, r1 = i0 * s.dr;
    const double f0 = density(i0 - 1) * r0 * r0, f1 = density(i0) * r1 * r1;
    const double t = (R - r0) / s.dr;
    const double fR = f0 + t * (f1 - f0);
    acc += 0.5 * (fR + f1) * (r1 - R);
  }
  return acc;
}

namespace {
constexpr char kStateMagic[4] = {'C', 'W', 'W', 'S'};
constexpr std::uint32_t kStateVersion = 1;
}  // namespace

void save_state_binary(const WaveState& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("save_state_binary: cannot open " + path);
  out.write(kStateMagic, 4);
  const std::uint32_t ver = kStateVersion, m = static_cast<std::uint32_t>(s.m);
  const std::uint64_t nr = static_cast<std::uint64_t>(s.nr);
  out.write(reinterpret_cast<const char*>(&ver), 4);
  out.write(reinterpret_cast<const char*>(&m), 4);
  out.write(reinterpret_cast<const char*>(&nr), 8);
  out.write(reinterpret_cast<const char*>(&s.dr), 8);
  out.write(reinterpret_cast<const char*>(&s.t), 8);
  out.write(reinterpret_cast<const char*>(s.u.data()), 8 * s.u.size());
  out.write(reinterpret_cast<const char*>(s.ut.data()), 8 * s.ut.size());
}

WaveState load_state_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("load_state_binary: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kStateMagic, 4) != 0)
    throw DomainError("load_state_binary: bad magic");
  std::uint32_t ver = 0, m = 0;
  std::uint64_t nr = 0;
  double dr = 0, t = 0;
  in.read(reinterpret_cast<char*>(&ver), 4);
  in.read(reinterpret_cast<char*>(&m), 4);
  in.read(reinterpret_cast<char*>(&nr), 8);
  in.read(reinterpret_cast<char*>(&dr), 8);
  in.read(reinterpret_cast<char*>(&t), 8);
  if (!in || ver != kStateVersion || m == 0 || nr < 3)
    throw DomainError("load_state_binary: bad header");
  WaveState s = make_state(static_cast<int>(nr), dr, static_cast<int>(m));
  s.t = t;
  in.read(reinterpret_cast<char*>(s.u.data()), 8 * s.u.size());
  in.read(reinterpret_cast<char*>(s.ut.data()), 8 * s.ut.size());
  if (!in) throw DomainError("load_state_binary: truncated file");
  return s;
}

}  // namespace critwave
