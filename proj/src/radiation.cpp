#include "critwave/radiation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "critwave/errors.hpp"

namespace critwave {

namespace {

// Natural cubic spline on a uniform grid x_i = i*h.  Natural ends are exact
// for the w = r*u data class: w'' = 2u' -> 0 at the origin, and compactly
// supported data vanishes identically near the outer end.
class NaturalSpline {
 public:
  NaturalSpline() = default;
  NaturalSpline(double h, std::vector<double> y) : h_(h), y_(std::move(y)) {
    const std::size_t n = y_.size();
    mom_.assign(n, 0.0);
    if (n < 3) return;
    // Thomas solve of the tridiagonal system (h/6, 2h/3, h/6) for the
    // interior moments mom_[1..n-2]
    const std::size_t k = n - 2;  // number of unknowns
    std::vector<double> rhs(k), c(k), d(k);
    for (std::size_t i = 1; i + 1 < n; ++i)
      rhs[i - 1] = (y_[i + 1] - 2.0 * y_[i] + y_[i - 1]) / h_;
    double beta = 2.0 * h_ / 3.0;
    c[0] = (h_ / 6.0) / beta;
    d[0] = rhs[0] / beta;
    for (std::size_t j = 1; j < k; ++j) {
      beta = 2.0 * h_ / 3.0 - (h_ / 6.0) * c[j - 1];
      c[j] = (h_ / 6.0) / beta;
      d[j] = (rhs[j] - (h_ / 6.0) * d[j - 1]) / beta;
    }
    mom_[k] = d[k - 1];
    for (std::size_t j = k - 1; j >= 1; --j) {
      mom_[j] = d[j - 1] - c[j - 1] * mom_[j + 1];
      if (j == 1) break;
    }
    build_cumulative();
  }

  double x_max() const { return h_ * (y_.size() - 1); }

  // value; 0 beyond the grid (compact-support convention)
  double eval(double x) const {
    if (x <= 0) return y_.empty() ? 0.0 : (x == 0 ? y_[0] : 0.0);
    if (x >= x_max()) return 0.0;
    const std::size_t i = cell(x);
    const double a = i * h_, b = a + h_;
    const double u = b - x, v = x - a;
    return mom_[i] * u * u * u / (6 * h_) + mom_[i + 1] * v * v * v / (6 * h_) +
           (y_[i] / h_ - mom_[i] * h_ / 6) * u + (y_[i + 1] / h_ - mom_[i + 1] * h_ / 6) * v;
  }

  double deriv(double x) const {
    if (x < 0 || x >= x_max()) return 0.0;
    const std::size_t i = cell(x);
    const double a = i * h_, b = a + h_;
    const double u = b - x, v = x - a;
    return -mom_[i] * u * u / (2 * h_) + mom_[i + 1] * v * v / (2 * h_) -
           (y_[i] / h_ - mom_[i] * h_ / 6) + (y_[i + 1] / h_ - mom_[i + 1] * h_ / 6);
  }

  double deriv2(double x) const {
    if (x < 0 || x >= x_max()) return 0.0;
    const std::size_t i = cell(x);
    const double a = i * h_, b = a + h_;
    return mom_[i] * (b - x) / h_ + mom_[i + 1] * (x - a) / h_;
  }

  // int_0^x of the spline; clamps beyond the grid
  double integral(double x) const {
    if (x <= 0) return 0.0;
    if (x >= x_max()) return cum_.back();
    const std::size_t i = cell(x);
    return cum_[i] + piece_integral(i, x);
  }

 private:
  double h_ = 1;
  std::vector<double> y_, mom_, cum_;

  std::size_t cell(double x) const {
    std::size_t i = static_cast<std::size_t>(x / h_);
    if (i + 2 > y_.size()) i = y_.size() - 2;
    return i;
  }

  double piece_integral(std::size_t i, double x) const {
    const double a = i * h_, b = a + h_;
    const double u = b - x, v = x - a;
    auto prim = [&](double uu, double vv) {
      return -mom_[i] * uu * uu * uu * uu / (24 * h_) + mom_[i + 1] * vv * vv * vv * vv / (24 * h_) -
             (y_[i] / h_ - mom_[i] * h_ / 6) * uu * uu / 2 +
             (y_[i + 1] / h_ - mom_[i + 1] * h_ / 6) * vv * vv / 2;
    };
    return prim(u, v) - prim(h_, 0.0);
  }

  void build_cumulative() {
    const std::size_t n = y_.size();
    cum_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i)
      cum_[i + 1] = cum_[i] + piece_integral(i, (i + 1) * h_);
  }
};

}  // namespace

WaveState dalembert_exact(const WaveState& data, double t) {
  const double rho = support_radius(data);
  if (rho > data.r_max() - std::abs(t) + 1e-12)
    throw DomainTooSmall("dalembert_exact: data support exceeds r_max - |t|");

  const int m = data.m, nr = data.nr;
  const double dr = data.dr;

  std::vector<NaturalSpline> s0(m), s1(m);
  for (int c = 0; c < m; ++c) {
    std::vector<double> w0(nr), w1(nr);
    for (int i = 0; i < nr; ++i) {
      w0[i] = i * dr * data.at(i, c);
      w1[i] = i * dr * data.at_t(i, c);
    }
    s0[c] = NaturalSpline(dr, std::move(w0));
    s1[c] = NaturalSpline(dr, std::move(w1));
  }

  // odd/even extensions of the splines
  auto w0e = [&](int c, double x) { return x >= 0 ? s0[c].eval(x) : -s0[c].eval(-x); };
  auto w0e_d = [&](int c, double x) { return s0[c].deriv(std::abs(x)); };
  auto w0e_dd = [&](int c, double x) {
    return x >= 0 ? s0[c].deriv2(x) : -s0[c].deriv2(-x);
  };
  auto w1e = [&](int c, double x) { return x >= 0 ? s1[c].eval(x) : -s1[c].eval(-x); };
  auto w1e_d = [&](int c, double x) { return s1[c].deriv(std::abs(x)); };
  auto vint = [&](int c, double x) { return s1[c].integral(std::abs(x)); };

  WaveState out = make_state(nr, dr, m);
  out.t = data.t + t;
  for (int i = 1; i < nr; ++i) {
    const double r = i * dr;
    for (int c = 0; c < m; ++c) {
      const double w = 0.5 * (w0e(c, r + t) + w0e(c, r - t)) + 0.5 * (vint(c, r + t) - vint(c, r - t));
      const double wt = 0.5 * (w0e_d(c, r + t) - w0e_d(c, r - t)) + 0.5 * (w1e(c, r + t) + w1e(c, r - t));
      out.at(i, c) = w / r;
      out.at_t(i, c) = wt / r;
    }
  }
  for (int c = 0; c < m; ++c) {
    out.at(0, c) = w0e_d(c, t) + w1e(c, t);
    out.at_t(0, c) = w0e_dd(c, t) + w1e_d(c, t);
  }
  return out;
}

RadiationField extract_radiation(const std::vector<WaveState>& states, double eta_min,
                                 double eta_max) {
  if (states.size() < 2) throw InsufficientWindow("extract_radiation: need at least 2 states");
  if (!(eta_max > eta_min)) throw std::invalid_argument("extract_radiation: empty window");

  const WaveState* latest = &states[0];
  for (const auto& s : states)
    if (s.t > latest->t) latest = &s;
  const int m = latest->m;
  const double dr = latest->dr;

  RadiationField f;
  f.m = m;
  const int neta = static_cast<int>(std::floor((eta_max - eta_min) / dr)) + 1;
  f.eta.resize(neta);
  f.g.assign(static_cast<std::size_t>(neta) * m, 0.0);
  std::vector<int> counts(neta, 0);
  for (int j = 0; j < neta; ++j) f.eta[j] = eta_min + j * dr;

  for (const auto& s : states) {
    for (int j = 0; j < neta; ++j) {
      const double r = s.t - f.eta[j];
      if (r <= s.dr || r >= s.r_max()) continue;
      const int i = static_cast<int>(r / s.dr);
      const double a = (r - i * s.dr) / s.dr;
      for (int c = 0; c < m; ++c) {
        const double ut = (1 - a) * s.at_t(i, c) + a * s.at_t(i + 1, c);
        f.g[static_cast<std::size_t>(j) * m + c] += r * ut;
      }
      counts[j] += 1;
    }
  }
  for (int j = 0; j < neta; ++j) {
    if (counts[j] == 0) continue;
    for (int c = 0; c < m; ++c) f.g[static_cast<std::size_t>(j) * m + c] /= counts[j];
  }

  double mass = 0;
  for (int j = 0; j + 1 < neta; ++j) {
    double a = 0, b = 0;
    for (int c = 0; c < m; ++c) {
      a += f.g[static_cast<std::size_t>(j) * m + c] * f.g[static_cast<std::size_t>(j) * m + c];
      b += f.g[static_cast<std::size_t>(j + 1) * m + c] * f.g[static_cast<std::size_t>(j + 1) * m + c];
    }
    mass += 0.5 * (a + b) * dr;
  }
  f.l2_mass = mass;

  // second defining limit: dr(u) + g(t-r)/r -> 0; report the 1/t-weighted
  // residual energy over the mapped window
  double res_acc = 0, wsum = 0;
  for (const auto& s : states) {
    const auto du = radial_derivative(s);
    double res = 0;
    const double rlo = std::max(s.t - eta_max, 2 * s.dr);
    const double rhi = std::min(s.t - eta_min, s.r_max() - s.dr);
    if (rhi <= rlo) continue;
    const int ilo = static_cast<int>(std::ceil(rlo / s.dr));
    const int ihi = static_cast<int>(std::floor(rhi / s.dr));
    for (int i = ilo; i <= ihi; ++i) {
      const double r = i * s.dr;
      const double etav = s.t - r;
      const double jf = (etav - eta_min) / dr;
      const int j = std::clamp(static_cast<int>(jf), 0, neta - 2);
      const double a = jf - j;
      double e2 = 0;
      for (int c = 0; c < m; ++c) {
        const double gv = (1 - a) * f.g[static_cast<std::size_t>(j) * m + c] +
                          a * f.g[static_cast<std::size_t>(j + 1) * m + c];
        const double d = du[static_cast<std::size_t>(i) * m + c] + gv / r;
        e2 += d * d;
      }
      res += e2 * r * r * s.dr;
    }
    const double w = 1.0 / std::max(s.t, 1e-12);
    res_acc += w * res;
    wsum += w;
  }
  f.second_limit_residual = wsum > 0 ? res_acc / wsum : 0.0;
  return f;
}

ChannelCheck channel_identity_check(const WaveState& data, double R, double T_eval) {
  if (!(R >= 0)) throw std::invalid_argument("channel_identity_check: R must be >= 0");
  ChannelCheck out;

  // rhs = int_R^inf (dr(r u0))^2 + r^2 u1^2 dr on the spline representation
  {
    const int m = data.m, nr = data.nr;
    const double dr = data.dr;
    std::vector<NaturalSpline> s0(m), s1(m);
    for (int c = 0; c < m; ++c) {
      std::vector<double> w0(nr), w1(nr);
      for (int i = 0; i < nr; ++i) {
        w0[i] = i * dr * data.at(i, c);
        w1[i] = i * dr * data.at_t(i, c);
      }
      s0[c] = NaturalSpline(dr, std::move(w0));
      s1[c] = NaturalSpline(dr, std::move(w1));
    }
    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                 0.3478548451374538};
    double rhs = 0;
    for (int i = 0; i + 1 < nr; ++i) {
      const double a = std::max(R, i * dr), b = (i + 1) * dr;
      if (b <= a) continue;
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      double seg = 0;
      for (int q = 0; q < 4; ++q) {
        const double r = mid + half * gx[q];
        double val = 0;
        for (int c = 0; c < m; ++c) {
          const double dp = s0[c].deriv(r);
          const double w1v = s1[c].eval(r);
          val += dp * dp + w1v * w1v;
        }
        seg += gw[q] * val;
      }
      rhs += half * seg;
    }
    out.rhs = rhs;
  }

  for (double sgn : {1.0, -1.0}) {
    const WaveState st = dalembert_exact(data, sgn * T_eval);
    out.lhs += exterior_energy(st, R + T_eval);
  }
  return out;
}

void save_radiation_csv(const RadiationField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("save_radiation_csv: cannot open " + path);
  out << "eta";
  for (int c = 0; c < f.m; ++c) out << ",g" << c + 1;
  out << "\n";
  char buf[32];
  for (std::size_t j = 0; j < f.eta.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", f.eta[j]);
    out << buf;
    for (int c = 0; c < f.m; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", f.g[j * f.m + c]);
      out << ',' << buf;
    }
    out << "\n";
  }
}

}  // namespace critwave
