#include "critwave/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "critwave/errors.hpp"

namespace critwave {

namespace {

double vnorm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

constexpr double kGx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                           0.8611363115940526};
constexpr double kGw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                           0.3478548451374538};

}  // namespace

double w_value(double r, double lambda) {
  return 1.0 / std::sqrt(lambda) / std::sqrt(1.0 + r * r / (3.0 * lambda * lambda));
}

double w_deriv(double r, double lambda) {
  const double q = 1.0 + r * r / (3.0 * lambda * lambda);
  return -(r / (3.0 * lambda * lambda)) / std::sqrt(lambda) / (q * std::sqrt(q));
}

RadialProfile explicit_w(double lambda, const std::vector<double>& grid) {
  if (!(lambda > 0)) throw DomainError("explicit_w: lambda must be positive");
  const std::size_t n = grid.size();
  std::vector<double> vals(n), ders(n);
  for (std::size_t i = 0; i < n; ++i) {
    vals[i] = w_value(grid[i], lambda);
    ders[i] = w_deriv(grid[i], lambda);
  }
  const bool regular = !grid.empty() && grid.front() == 0.0;
  return RadialProfile(grid, std::move(vals), std::move(ders), 1, regular);
}

RadialProfile solve_exterior_fixed_point(const VectorNonlinearity& nl,
                                         const std::vector<double>& theta, double R, double tol,
                                         const ExteriorOptions& opt) {
  const int m = nl.m;
  if (static_cast<int>(theta.size()) != m)
    throw std::invalid_argument("solve_exterior_fixed_point: theta size mismatch");
  if (!(R > 0 && tol > 0)) throw std::invalid_argument("solve_exterior_fixed_point: bad R or tol");

  const std::vector<double> grid = geometric_grid(R, opt.rcut_factor * R, opt.per_decade);
  const std::size_t n = grid.size();
  const double tn = vnorm(theta);

  if (tn == 0.0) {
    std::vector<double> z(n * m, 0.0);
    return RadialProfile(grid, z, z, m, false);
  }

  // Contraction precondition: the Lipschitz constant of f on the ball
  // ||u||_R <= 2|theta| gives the factor 16 C |theta|^4 / (3 R^2).
  const double cl = lipschitz_bound_fit(nl, 4096, 2024);
  const double q = 16.0 * cl * tn * tn * tn * tn / (3.0 * R * R);
  if (!(q < 0.5))
    throw ContractionFailure("solve_exterior_fixed_point: contraction factor " + std::to_string(q) +
                             " >= 1/2; increase R");

  std::vector<double> ftheta(m);
  nl.f(theta.data(), ftheta.data());

  // seed u = theta/r, u' = -theta/r^2
  std::vector<double> u(n * m), du(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < m; ++c) {
      u[i * m + c] = theta[c] / grid[i];
      du[i * m + c] = -theta[c] / (grid[i] * grid[i]);
    }

  std::vector<double> inner(n * m);    // I(r) = int_r^inf rho^2 f(u) drho
  std::vector<double> innerd(n * m);   // I'(r) = -r^2 f(u(r))
  std::vector<double> unew(n * m), buf(m), fb(m);

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    RadialProfile cur(grid, u, du, m, false);

    // tail of the inner integral: int_{rcut}^inf rho^2 f(theta/rho) = f(theta)/(2 rcut^2)
    const double rc = grid.back();
    for (int c = 0; c < m; ++c) inner[(n - 1) * m + c] = ftheta[c] / (2.0 * rc * rc);
    for (std::size_t i = 0; i < n; ++i) {
      cur.eval(grid[i], buf.data());
      nl.f(buf.data(), fb.data());
      for (int c = 0; c < m; ++c) innerd[i * m + c] = -grid[i] * grid[i] * fb[c];
    }
    for (std::size_t i = n - 1; i-- > 0;) {
      const double a = grid[i], b = grid[i + 1];
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      std::vector<double> seg(m, 0.0);
      for (int g = 0; g < 4; ++g) {
        const double rho = mid + half * kGx[g];
        cur.eval(rho, buf.data());
        nl.f(buf.data(), fb.data());
        for (int c = 0; c < m; ++c) seg[c] += kGw[g] * rho * rho * fb[c];
      }
      for (int c = 0; c < m; ++c) inner[i * m + c] = inner[(i + 1) * m + c] + half * seg[c];
    }

    // outer integral J(r) = int_r^inf s^-2 I(s) ds, with the same analytic tail
    RadialProfile iprof(grid, inner, innerd, m, false);
    std::vector<double> outer(n * m);
    for (int c = 0; c < m; ++c) outer[(n - 1) * m + c] = ftheta[c] / (6.0 * rc * rc * rc);
    for (std::size_t i = n - 1; i-- > 0;) {
      const double a = grid[i], b = grid[i + 1];
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      std::vector<double> seg(m, 0.0);
      for (int g = 0; g < 4; ++g) {
        const double s = mid + half * kGx[g];
        iprof.eval(s, buf.data());
        for (int c = 0; c < m; ++c) seg[c] += kGw[g] * buf[c] / (s * s);
      }
      for (int c = 0; c < m; ++c) outer[i * m + c] = outer[(i + 1) * m + c] + half * seg[c];
    }

    double err = 0, ball = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0, b2 = 0;
      for (int c = 0; c < m; ++c) {
        const double v = theta[c] / grid[i] - outer[i * m + c];
        unew[i * m + c] = v;
        const double dv = v - u[i * m + c];
        d2 += dv * dv;
        b2 += v * v;
      }
      err = std::max(err, grid[i] * std::sqrt(d2));
      ball = std::max(ball, grid[i] * std::sqrt(b2));
    }
    if (ball > 2.0 * tn * (1.0 + 1e-9))
      throw ContractionFailure("solve_exterior_fixed_point: iterate left the ball ||u||_R <= 2|theta|");
    if (opt.iterate_errors) opt.iterate_errors->push_back(err);

    u.swap(unew);
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < m; ++c)
        du[i * m + c] = -theta[c] / (grid[i] * grid[i]) + inner[i * m + c] / (grid[i] * grid[i]);

    if (err < tol) return RadialProfile(grid, u, du, m, false);
  }
  throw ContractionFailure("solve_exterior_fixed_point: no convergence within iteration budget");
}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
constexpr double E1 = 35.0 / 384 - 5179.0 / 57600, E3 = 500.0 / 1113 - 7571.0 / 16695,
                 E4 = 125.0 / 192 - 393.0 / 640, E5 = -2187.0 / 6784 + 92097.0 / 339200,
                 E6 = 11.0 / 84 - 187.0 / 2100, E7 = -1.0 / 40;
constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;

struct InwardNode {
  double r;
  std::vector<double> u, v;
};

}  // namespace

ZThetaSolution continue_inward(const VectorNonlinearity& nl, const RadialProfile& outer,
                               double r_stop) {
  const int m = outer.components();
  if (nl.m != m) throw std::invalid_argument("continue_inward: component mismatch");
  if (!(r_stop >= 0)) throw std::invalid_argument("continue_inward: r_stop must be >= 0");
  r_stop = std::max(r_stop, 1e-12);

  const int dim = 2 * m;
  auto rhs = [&](double r, const std::vector<double>& y, std::vector<double>& dy) {
    // y = (u, u'); u'' = -(2/r) u' - f(u)
    nl.f(y.data(), dy.data() + m);
    for (int c = 0; c < m; ++c) {
      const double fprev = dy[m + c];
      dy[c] = y[m + c];
      dy[m + c] = -(2.0 / r) * y[m + c] - fprev;
    }
  };

  const double r0 = outer.r_front();
  std::vector<double> y(dim);
  for (int c = 0; c < m; ++c) {
    y[c] = outer.value(0, c);
    y[m + c] = outer.deriv(0, c);
  }

  std::vector<InwardNode> nodes;
  nodes.push_back({r0, std::vector<double>(y.begin(), y.begin() + m),
                   std::vector<double>(y.begin() + m, y.end())});

  const double rtol = 1e-10, atol = 1e-14;
  double r = r0;
  double h = -std::min(1e-3 * r0, 0.1);  // integrating inward

  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), yt(dim),
      ynew(dim);
  rhs(r, y, k1);

  bool blowup = false;
  double r_blow = 0;

  auto amp = [&](const std::vector<double>& yy) {
    double s = 0;
    for (int c = 0; c < m; ++c) s += yy[c] * yy[c];
    return std::sqrt(s);
  };

  // Blow-up envelope: bounded branches obey r|u| = O(|theta|) down to the
  // origin, so r|u| far above |theta| together with collapsing steps is a
  // genuine pole.  The plain amplitude thresholds alone are not reachable in
  // double precision for O(1) pole coefficients.
  double theta_mag = 0;
  {
    const auto th = outer.theta_estimate();
    for (double v : th) theta_mag += v * v;
    theta_mag = std::sqrt(theta_mag);
  }
  const double envelope = 1e4 * (theta_mag + 1.0);

  const int max_steps = 4000000;
  int steps = 0;
  while (r > r_stop) {
    if (++steps > max_steps) throw StiffnessFailure("continue_inward: step budget exhausted");
    // keep nodes log-dense and never step past r_stop
    double hmax = 0.25 * r;
    if (std::abs(h) > hmax) h = -hmax;
    if (r + h < r_stop) h = r_stop - r;

    auto stage = [&](std::vector<double>& out, std::initializer_list<std::pair<double, const std::vector<double>*>> terms) {
      for (int i = 0; i < dim; ++i) {
        double acc = y[i];
        for (const auto& t : terms) acc += h * t.first * (*t.second)[i];
        out[i] = acc;
      }
    };

    stage(yt, {{A21, &k1}});
    rhs(r + C2 * h, yt, k2);
    stage(yt, {{A31, &k1}, {A32, &k2}});
    rhs(r + C3 * h, yt, k3);
    stage(yt, {{A41, &k1}, {A42, &k2}, {A43, &k3}});
    rhs(r + C4 * h, yt, k4);
    stage(yt, {{A51, &k1}, {A52, &k2}, {A53, &k3}, {A54, &k4}});
    rhs(r + C5 * h, yt, k5);
    stage(yt, {{A61, &k1}, {A62, &k2}, {A63, &k3}, {A64, &k4}, {A65, &k5}});
    rhs(r + h, yt, k6);
    stage(ynew, {{B1, &k1}, {B3, &k3}, {B4, &k4}, {B5, &k5}, {B6, &k6}});
    rhs(r + h, ynew, k7);

    double errn = 0;
    bool finite = true;
    for (int i = 0; i < dim; ++i) {
      const double e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] +
                            E7 * k7[i]);
      const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      errn += (e / sc) * (e / sc);
      if (!std::isfinite(ynew[i])) finite = false;
    }
    errn = std::sqrt(errn / dim);

    const double a_cur = amp(y);
    if (!finite || a_cur > 1e12 || (a_cur > 1e8 && std::abs(h) < 1e-12 * r) ||
        (r * a_cur > envelope && std::abs(h) < 1e-6 * r)) {
      blowup = true;
      r_blow = r;
      break;
    }

    if (errn <= 1.0) {
      r += h;
      y = ynew;
      k1 = k7;  // FSAL
      nodes.push_back({r, std::vector<double>(y.begin(), y.begin() + m),
                       std::vector<double>(y.begin() + m, y.end())});
    }
    double fac = 0.9 * std::pow(std::max(errn, 1e-12), -0.2);
    fac = std::clamp(fac, 0.2, 5.0);
    h *= fac;
    if (std::abs(h) < 1e-15 * std::max(r, 1e-30)) {
      if (r * a_cur > envelope || a_cur > 1e8) {
        blowup = true;
        r_blow = r;
        break;
      }
      throw StiffnessFailure("continue_inward: step size underflow at r=" + std::to_string(r));
    }
  }

  ZThetaSolution sol;
  sol.theta = outer.theta_estimate();

  auto assemble = [&](bool drop_inner_until, double rmin, bool regular,
                      const std::vector<double>& origin_value) {
    std::vector<double> g, v, d;
    if (regular) {
      g.push_back(0.0);
      for (int c = 0; c < m; ++c) {
        v.push_back(origin_value[c]);
        d.push_back(0.0);
      }
    }
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
      if (drop_inner_until && it->r < rmin) continue;
      if (!g.empty() && it->r <= g.back()) continue;
      g.push_back(it->r);
      for (int c = 0; c < m; ++c) v.push_back(it->u[c]);
      for (int c = 0; c < m; ++c) d.push_back(it->v[c]);
    }
    for (std::size_t i = 1; i < outer.size(); ++i) {
      if (outer.grid()[i] <= g.back()) continue;
      g.push_back(outer.grid()[i]);
      for (int c = 0; c < m; ++c) v.push_back(outer.value(i, c));
      for (int c = 0; c < m; ++c) d.push_back(outer.deriv(i, c));
    }
    return RadialProfile(std::move(g), std::move(v), std::move(d), m, regular);
  };

  if (blowup) {
    sol.kind = StationaryCase::A_blowup;
    sol.R_theta = r_blow;
    sol.profile = assemble(false, 0, false, {});
    return sol;
  }

  // Classify from the window [r_stop, 100 r_stop]: least-squares fit r*u = c + a*r.
  const double w_lo = r_stop, w_hi = 100.0 * r_stop;
  double s1 = 0, sr = 0, srr = 0;
  std::vector<double> sy(m, 0.0), sry(m, 0.0);
  int count = 0;
  for (const auto& nd : nodes) {
    if (nd.r < w_lo || nd.r > w_hi) continue;
    ++count;
    s1 += 1;
    sr += nd.r;
    srr += nd.r * nd.r;
    for (int c = 0; c < m; ++c) {
      const double ru = nd.r * nd.u[c];
      sy[c] += ru;
      sry[c] += nd.r * ru;
    }
  }
  if (count < 4) throw StiffnessFailure("continue_inward: too few nodes in classification window");
  std::vector<double> cfit(m), afit(m);
  const double det = s1 * srr - sr * sr;
  for (int c = 0; c < m; ++c) {
    cfit[c] = (sy[c] * srr - sry[c] * sr) / det;
    afit[c] = (s1 * sry[c] - sr * sy[c]) / det;
  }
  const double cmag = vnorm(cfit);
  const double tmag = std::max(vnorm(sol.theta), 1e-300);

  if (cmag > 1e-4 * tmag) {
    sol.kind = StationaryCase::B_notL6;
    sol.R_theta = 0;
    sol.profile = assemble(false, 0, false, {});
    return sol;
  }

  // Case C: remove the fitted singular c/r component (numerical noise of the
  // inward shot) and extend regularly to the origin.
  for (auto& nd : nodes) {
    for (int c = 0; c < m; ++c) {
      nd.u[c] -= cfit[c] / nd.r;
      nd.v[c] += cfit[c] / (nd.r * nd.r);
    }
  }
  sol.kind = StationaryCase::C_energy;
  sol.R_theta = 0;
  sol.profile = assemble(false, 0, true, afit);
  if (nl.has_potential()) {
    const double g = gradient_energy(sol.profile) + gradient_energy_tail(sol.profile);
    const double pint = potential_integral(sol.profile, nl) + potential_integral_tail(sol.profile, nl);
    sol.energy = 0.5 * g - pint;
    sol.has_energy = true;
  }
  return sol;
}

RadialProfile kelvin_transform(const RadialProfile& p) {
  if (!(p.r_front() > 0)) throw DomainError("kelvin_transform: grid must not reach r=0");
  const int m = p.components();
  const std::size_t n = p.size();
  std::vector<double> g(n), v(n * m), d(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = n - 1 - i;  // reverse so the new grid increases
    const double r = p.grid()[j];
    g[i] = 1.0 / r;
    for (int c = 0; c < m; ++c) {
      v[i * m + c] = r * p.value(j, c);
      d[i * m + c] = -r * r * p.value(j, c) - r * r * r * p.deriv(j, c);
    }
  }
  return RadialProfile(std::move(g), std::move(v), std::move(d), m, false);
}

namespace {

// Projected gradient ascent of F on the unit sphere from a start direction.
std::vector<double> ascend_on_sphere(const VectorNonlinearity& nl, std::vector<double> w,
                                     int max_iter = 200) {
  const int m = nl.m;
  const double h = 1e-6;
  std::vector<double> grad(m), wp(m), wm(m);
  for (int it = 0; it < max_iter; ++it) {
    for (int i = 0; i < m; ++i) {
      wp = w;
      wm = w;
      wp[i] += h;
      wm[i] -= h;
      grad[i] = (nl.potential_fn(wp.data()) - nl.potential_fn(wm.data())) / (2 * h);
    }
    double gw = 0;
    for (int i = 0; i < m; ++i) gw += grad[i] * w[i];
    double tn = 0;
    for (int i = 0; i < m; ++i) {
      grad[i] -= gw * w[i];
      tn += grad[i] * grad[i];
    }
    tn = std::sqrt(tn);
    if (tn < 1e-12) break;
    double step = 0.5;
    const double f0 = nl.potential_fn(w.data());
    std::vector<double> cand(m);
    for (int bt = 0; bt < 40; ++bt) {
      double nn = 0;
      for (int i = 0; i < m; ++i) {
        cand[i] = w[i] + step * grad[i];
        nn += cand[i] * cand[i];
      }
      nn = std::sqrt(nn);
      for (int i = 0; i < m; ++i) cand[i] /= nn;
      if (nl.potential_fn(cand.data()) > f0) break;
      step *= 0.5;
    }
    if (nl.potential_fn(cand.data()) <= f0) break;
    w = cand;
  }
  return w;
}

}  // namespace

GroundState ground_state(const VectorNonlinearity& nl, double sphere_tol, int multistarts) {
  if (!nl.has_potential()) throw MissingPotential("ground_state: potential required");
  const int m = nl.m;
  std::vector<std::vector<double>> winners;

  if (m == 1) {
    winners.push_back({1.0});
    winners.push_back({-1.0});
  } else if (m == 2) {
    // dense angle sweep, then 1-D Newton refinement of the best starts
    const int N = 20000;
    auto h = [&](double phi) {
      const double w[2] = {std::cos(phi), std::sin(phi)};
      return nl.potential_fn(w);
    };
    std::vector<std::pair<double, double>> best;  // (F, phi)
    for (int k = 0; k < N; ++k) {
      const double phi = 2.0 * M_PI * k / N;
      best.emplace_back(h(phi), phi);
    }
    std::sort(best.begin(), best.end(), [](auto& a, auto& b) { return a.first > b.first; });
    best.resize(24);
    const double dh = 1e-6;
    for (auto& [fv, phi] : best) {
      double x = phi;
      for (int it = 0; it < 60; ++it) {
        const double f1 = (h(x + dh) - h(x - dh)) / (2 * dh);
        const double f2 = (h(x + dh) - 2 * h(x) + h(x - dh)) / (dh * dh);
        if (f2 >= 0 || !std::isfinite(f2)) break;
        const double step = f1 / f2;
        x -= step;
        if (std::abs(step) < 1e-14) break;
      }
      winners.push_back({std::cos(x), std::sin(x)});
    }
  } else {
    std::vector<std::vector<double>> starts;
    if (m == 3) {
      const int N = 10000;  // Fibonacci sphere
      const double ga = M_PI * (3.0 - std::sqrt(5.0));
      std::vector<std::pair<double, std::vector<double>>> scored;
      for (int k = 0; k < N; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / N;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = ga * k;
        std::vector<double> w = {rho * std::cos(phi), rho * std::sin(phi), z};
        scored.emplace_back(nl.potential_fn(w.data()), w);
      }
      std::sort(scored.begin(), scored.end(), [](auto& a, auto& b) { return a.first > b.first; });
      for (int k = 0; k < 10; ++k) starts.push_back(scored[k].second);
    } else {
      auto pts = sample_ball(m, multistarts, 1.0, 424242);
      for (auto& w : pts) {
        double nn = 0;
        for (double x : w) nn += x * x;
        nn = std::sqrt(nn);
        for (auto& x : w) x /= nn;
        starts.push_back(w);
      }
    }
    for (auto& s : starts) winners.push_back(ascend_on_sphere(nl, s));
  }

  double fbest = -1e300;
  for (auto& w : winners) fbest = std::max(fbest, nl.potential_fn(w.data()));
  if (!(fbest > 0)) throw EmptyZ("ground_state: max F on the sphere is <= 0, Z is empty");

  std::vector<double> omega;
  const double tie = std::max(sphere_tol, 1e-12) * (1.0 + std::abs(fbest));
  for (auto& w : winners) {
    if (nl.potential_fn(w.data()) < fbest - tie) continue;
    if (omega.empty() || std::lexicographical_compare(omega.begin(), omega.end(), w.begin(), w.end()))
      omega = w;
  }

  GroundState gs;
  gs.omega = omega;
  gs.Fmax = nl.potential_fn(omega.data());
  gs.mu = std::pow(6.0 * gs.Fmax, -0.25);

  const std::vector<double> grid = bubble_grid(1e-4, 1e6, 32);
  const std::size_t n = grid.size();
  std::vector<double> vals(n * m), ders(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const double wv = w_value(grid[i]), wd = w_deriv(grid[i]);
    for (int c = 0; c < m; ++c) {
      vals[i * m + c] = gs.mu * omega[c] * wv;
      ders[i * m + c] = gs.mu * omega[c] * wd;
    }
  }
  gs.profile = RadialProfile(grid, std::move(vals), std::move(ders), m, true);
  return gs;
}

double pohozaev_residual(const VectorNonlinearity& nl, const RadialProfile& p) {
  const double g = gradient_energy(p) + gradient_energy_tail(p);
  const double f = potential_integral(p, nl) + potential_integral_tail(p, nl);
  return g - 6.0 * f;
}

double stationarity_residual(const VectorNonlinearity& nl, const RadialProfile& p) {
  const int m = p.components();
  const std::size_t n = p.size();
  if (n < 3) throw DomainError("stationarity_residual: need at least 3 nodes");
  std::vector<double> upp(m), fu(m), u(m);
  double acc = 0;
  const std::size_t start = p.regular_origin() ? 1 : 0;  // 2u'/r is singular at r=0
  for (std::size_t i = std::max<std::size_t>(start, 1); i + 1 < n; ++i) {
    const double r = p.grid()[i];
    p.node_second_deriv(i, upp.data());
    for (int c = 0; c < m; ++c) u[c] = p.value(i, c);
    nl.f(u.data(), fu.data());
    double res2 = 0;
    for (int c = 0; c < m; ++c) {
      const double res = upp[c] + (2.0 / r) * p.deriv(i, c) + fu[c];
      res2 += res * res;
    }
    const double cell = 0.5 * (p.grid()[i + 1] - p.grid()[i - 1]);
    acc += res2 * r * r * cell;
  }
  return std::sqrt(acc);
}

std::pair<RadialProfile, double> k_normalize(const RadialProfile& p) {
  const double g_grid = gradient_energy(p);
  const double total = g_grid + gradient_energy_tail(p);
  if (!(total > 1e-28)) throw DegenerateProfile("k_normalize: profile has no gradient energy");
  const double target = 0.5 * total;
  if (g_grid < target)
    throw DomainError("k_normalize: grid too short to localize half the energy");
  double lo = p.r_front(), hi = p.r_back();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (gradient_energy_within(p, mid) < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-14 * hi) break;
  }
  const double xstar = 0.5 * (lo + hi);
  const double lambda = 1.0 / xstar;
  return {rescale_profile(p, lambda), lambda};
}

double radius_capturing_energy(const RadialProfile& p, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("radius_capturing_energy: eps must be positive");
  const double total = gradient_energy(p) + gradient_energy_tail(p);
  const double target = total - eps;
  if (target <= 0) return p.r_front();
  if (gradient_energy(p) < target)
    throw DomainError("radius_capturing_energy: grid tail exceeds requested eps");
  double cum = 0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    cum = gradient_energy_within(p, p.grid()[i + 1]);
    if (cum >= target) return p.grid()[i + 1];
  }
  return p.r_back();
}

}  // namespace critwave
