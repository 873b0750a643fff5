#include "critwave/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "critwave/errors.hpp"

namespace critwave {

namespace {

// 4-point Gauss-Legendre on [-1,1]; exact through degree 7, which covers the
// degree-6 integrand |p'|^2 r^2 of a cubic segment.
constexpr double kGx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                           0.8611363115940526};
constexpr double kGw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                           0.3478548451374538};

}  // namespace

RadialProfile::RadialProfile(std::vector<double> grid, std::vector<double> values,
                             std::vector<double> derivs, int m, bool regular_origin)
    : grid_(std::move(grid)), values_(std::move(values)), derivs_(std::move(derivs)), m_(m),
      regular_origin_(regular_origin) {
  if (grid_.size() < 2) throw DomainError("RadialProfile: need at least 2 nodes");
  if (values_.size() != grid_.size() * m_ || derivs_.size() != grid_.size() * m_)
    throw DomainError("RadialProfile: data size mismatch");
  for (std::size_t i = 0; i + 1 < grid_.size(); ++i)
    if (!(grid_[i] < grid_[i + 1])) throw DomainError("RadialProfile: grid not increasing");
  if (regular_origin_) {
    if (grid_.front() != 0.0) throw DomainError("RadialProfile: regular-origin grid must start at 0");
    for (int c = 0; c < m_; ++c)
      if (derivs_[c] != 0.0) throw DomainError("RadialProfile: derivative at r=0 must vanish");
  } else if (!(grid_.front() > 0.0)) {
    throw DomainError("RadialProfile: radii must be positive");
  }
}

std::size_t RadialProfile::locate(double r) const {
  if (r < grid_.front() || r > grid_.back())
    throw DomainError("RadialProfile: evaluation outside grid");
  auto it = std::upper_bound(grid_.begin(), grid_.end(), r);
  std::size_t i = (it == grid_.begin()) ? 0 : static_cast<std::size_t>(it - grid_.begin()) - 1;
  if (i + 1 >= grid_.size()) i = grid_.size() - 2;
  return i;
}

void RadialProfile::eval(double r, double* out) const {
  const std::size_t i = locate(r);
  const double h = grid_[i + 1] - grid_[i];
  const double t = (r - grid_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  for (int c = 0; c < m_; ++c)
    out[c] = h00 * values_[i * m_ + c] + h10 * h * derivs_[i * m_ + c] +
             h01 * values_[(i + 1) * m_ + c] + h11 * h * derivs_[(i + 1) * m_ + c];
}

void RadialProfile::eval_deriv(double r, double* out) const {
  const std::size_t i = locate(r);
  const double h = grid_[i + 1] - grid_[i];
  const double t = (r - grid_[i]) / h;
  const double t2 = t * t;
  const double d00 = (6 * t2 - 6 * t) / h, d10 = 3 * t2 - 4 * t + 1;
  const double d01 = (-6 * t2 + 6 * t) / h, d11 = 3 * t2 - 2 * t;
  for (int c = 0; c < m_; ++c)
    out[c] = d00 * values_[i * m_ + c] + d10 * derivs_[i * m_ + c] +
             d01 * values_[(i + 1) * m_ + c] + d11 * derivs_[(i + 1) * m_ + c];
}

std::vector<double> RadialProfile::eval(double r) const {
  std::vector<double> out(m_);
  eval(r, out.data());
  return out;
}

std::vector<double> RadialProfile::eval_deriv(double r) const {
  std::vector<double> out(m_);
  eval_deriv(r, out.data());
  return out;
}

void RadialProfile::node_second_deriv(std::size_t i, double* out) const {
  if (i == 0 || i + 1 >= grid_.size())
    throw DomainError("node_second_deriv: interior nodes only");
  // Hermite divided differences on nodes (r0,r0,r1,r1,r2,r2); the Newton form
  // is then differentiated twice at r1 by propagating (p, p', p'') through the
  // nested product.
  const double x[6] = {grid_[i - 1], grid_[i - 1], grid_[i], grid_[i], grid_[i + 1], grid_[i + 1]};
  for (int c = 0; c < m_; ++c) {
    double f[6][6];
    const double v[3] = {values_[(i - 1) * m_ + c], values_[i * m_ + c], values_[(i + 1) * m_ + c]};
    const double d[3] = {derivs_[(i - 1) * m_ + c], derivs_[i * m_ + c], derivs_[(i + 1) * m_ + c]};
    for (int k = 0; k < 6; ++k) f[k][0] = v[k / 2];
    for (int j = 1; j < 6; ++j) {
      for (int k = 0; k + j < 6; ++k) {
        if (x[k + j] == x[k]) {
          f[k][j] = d[k / 2];  // only happens for j == 1 on doubled nodes
        } else {
          f[k][j] = (f[k + 1][j - 1] - f[k][j - 1]) / (x[k + j] - x[k]);
        }
      }
    }
    // Evaluate p, p', p'' of the Newton polynomial at r1 = grid_[i].
    const double r = grid_[i];
    double p = f[0][5], dp = 0, ddp = 0;
    for (int k = 4; k >= 0; --k) {
      const double w = r - x[k];
      ddp = ddp * w + 2 * dp;
      dp = dp * w + p;
      p = p * w + f[0][k];
    }
    out[c] = ddp;
  }
}

std::vector<double> RadialProfile::theta_estimate() const {
  std::vector<double> th(m_);
  const std::size_t n = grid_.size();
  for (int c = 0; c < m_; ++c) th[c] = grid_[n - 1] * values_[(n - 1) * m_ + c];
  return th;
}

RadialProfile rescale_profile(const RadialProfile& p, double lambda) {
  if (!(lambda > 0)) throw DomainError("rescale_profile: lambda must be positive");
  const double a = 1.0 / std::sqrt(lambda);
  std::vector<double> grid = p.grid(), vals = p.values(), ders = p.derivs();
  for (auto& r : grid) r *= lambda;
  for (auto& v : vals) v *= a;
  for (auto& d : ders) d *= a / lambda;
  return RadialProfile(std::move(grid), std::move(vals), std::move(ders), p.components(),
                       p.regular_origin());
}

namespace {

// |p'|^2 r^2 on one Hermite segment, integrated exactly with Gauss-4.
double segment_gradient_sq(const RadialProfile& p, std::size_t i) {
  const double a = p.grid()[i], b = p.grid()[i + 1];
  const double h = b - a, mid = 0.5 * (a + b), half = 0.5 * h;
  const int m = p.components();
  std::vector<double> du(m);
  double s = 0;
  for (int q = 0; q < 4; ++q) {
    const double r = mid + half * kGx[q];
    p.eval_deriv(r, du.data());
    double g = 0;
    for (int c = 0; c < m; ++c) g += du[c] * du[c];
    s += kGw[q] * g * r * r;
  }
  return s * half;
}

double segment_gradient_sq_partial(const RadialProfile& p, std::size_t i, double rhi) {
  const double a = p.grid()[i];
  const double h = rhi - a;
  if (h <= 0) return 0;
  const double mid = 0.5 * (a + rhi), half = 0.5 * h;
  const int m = p.components();
  std::vector<double> du(m);
  double s = 0;
  for (int q = 0; q < 4; ++q) {
    const double r = mid + half * kGx[q];
    p.eval_deriv(r, du.data());
    double g = 0;
    for (int c = 0; c < m; ++c) g += du[c] * du[c];
    s += kGw[q] * g * r * r;
  }
  return s * half;
}

// Adaptive Simpson for the potential density F(p(r)) r^2 on [a,b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15 * tol)
    return left + right + (left + right - whole) / 15;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double adaptive_integral(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 24);
}

}  // namespace

double gradient_energy(const RadialProfile& p) {
  double s = 0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) s += segment_gradient_sq(p, i);
  return s;
}

double gradient_energy_within(const RadialProfile& p, double rc) {
  if (rc <= p.r_front()) return 0;
  if (rc >= p.r_back()) return gradient_energy(p);
  double s = 0;
  const auto& g = p.grid();
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    if (g[i + 1] <= rc) {
      s += segment_gradient_sq(p, i);
    } else {
      s += segment_gradient_sq_partial(p, i, rc);
      break;
    }
  }
  return s;
}

double gradient_energy_tail(const RadialProfile& p) {
  const auto th = p.theta_estimate();
  double t2 = 0;
  for (double v : th) t2 += v * v;
  return t2 / p.r_back();
}

double potential_integral(const RadialProfile& p, const VectorNonlinearity& nl) {
  if (!nl.has_potential()) throw MissingPotential("potential_integral: no potential");
  const int m = p.components();
  std::vector<double> buf(m);
  auto density = [&](double r) {
    p.eval(r, buf.data());
    return nl.potential_fn(buf.data()) * r * r;
  };
  double s = 0;
  const auto& g = p.grid();
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const double seg = adaptive_integral(density, g[i], g[i + 1], 1e-14 * (1.0 + std::abs(s)));
    s += seg;
  }
  return s;
}

double potential_integral_tail(const RadialProfile& p, const VectorNonlinearity& nl) {
  if (!nl.has_potential()) throw MissingPotential("potential_integral_tail: no potential");
  const auto th = p.theta_estimate();
  const double r = p.r_back();
  // F(theta/r) = F(theta)/r^6, so int_r^inf F r^2 = F(theta)/(3 r^3).
  return nl.potential_fn(th.data()) / (3.0 * r * r * r);
}

void save_profile_csv(const RadialProfile& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("save_profile_csv: cannot open " + path);
  const int m = p.components();
  out << "r";
  for (int c = 0; c < m; ++c) out << ",u" << c + 1;
  for (int c = 0; c < m; ++c) out << ",du" << c + 1;
  out << "\n";
  char buf[32];
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", p.grid()[i]);
    out << buf;
    for (int c = 0; c < m; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", p.value(i, c));
      out << ',' << buf;
    }
    for (int c = 0; c < m; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", p.deriv(i, c));
      out << ',' << buf;
    }
    out << "\n";
  }
}

RadialProfile load_profile_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("load_profile_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DomainError("load_profile_csv: empty file");
  int cols = 1;
  for (char ch : line)
    if (ch == ',') ++cols;
  const int m = (cols - 1) / 2;
  if (m < 1 || cols != 1 + 2 * m) throw DomainError("load_profile_csv: malformed header");
  std::vector<double> grid, vals, ders;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != cols) throw DomainError("load_profile_csv: bad row");
    grid.push_back(row[0]);
    for (int c = 0; c < m; ++c) vals.push_back(row[1 + c]);
    for (int c = 0; c < m; ++c) ders.push_back(row[1 + m + c]);
  }
  const bool regular = !grid.empty() && grid.front() == 0.0;
  return RadialProfile(std::move(grid), std::move(vals), std::move(ders), m, regular);
}

namespace {
constexpr char kProfileMagic[4] = {'C', 'W', 'R', 'P'};
constexpr std::uint32_t kProfileVersion = 1;
}  // namespace

void save_profile_binary(const RadialProfile& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("save_profile_binary: cannot open " + path);
  out.write(kProfileMagic, 4);
  const std::uint32_t ver = kProfileVersion, m = static_cast<std::uint32_t>(p.components());
  const std::uint64_t n = p.size();
  out.write(reinterpret_cast<const char*>(&ver), 4);
  out.write(reinterpret_cast<const char*>(&m), 4);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(p.grid().data()), 8 * n);
  out.write(reinterpret_cast<const char*>(p.values().data()), 8 * n * m);
  out.write(reinterpret_cast<const char*>(p.derivs().data()), 8 * n * m);
}

RadialProfile load_profile_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("load_profile_binary: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kProfileMagic, 4) != 0)
    throw DomainError("load_profile_binary: bad magic");
  std::uint32_t ver = 0, m = 0;
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&ver), 4);
  in.read(reinterpret_cast<char*>(&m), 4);
  in.read(reinterpret_cast<char*>(&n), 8);
  if (!in || ver != kProfileVersion || m == 0 || n < 2)
    throw DomainError("load_profile_binary: bad header");
  std::vector<double> grid(n), vals(n * m), ders(n * m);
  in.read(reinterpret_cast<char*>(grid.data()), 8 * n);
  in.read(reinterpret_cast<char*>(vals.data()), 8 * n * m);
  in.read(reinterpret_cast<char*>(ders.data()), 8 * n * m);
  if (!in) throw DomainError("load_profile_binary: truncated file");
  const bool regular = grid.front() == 0.0;
  return RadialProfile(std::move(grid), std::move(vals), std::move(ders), static_cast<int>(m),
                       regular);
}

std::vector<double> geometric_grid(double a, double b, int per_decade) {
  if (!(a > 0 && b > a && per_decade >= 2))
    throw DomainError("geometric_grid: need 0 < a < b, per_decade >= 2");
  const double decades = std::log10(b / a);
  const int n = static_cast<int>(std::ceil(decades * per_decade));
  std::vector<double> g(n + 1);
  for (int k = 0; k <= n; ++k) g[k] = a * std::pow(10.0, decades * k / n);
  g.back() = b;
  return g;
}

std::vector<double> bubble_grid(double r0, double r1, int per_decade) {
  std::vector<double> g = geometric_grid(r0, r1, per_decade);
  g.insert(g.begin(), 0.0);
  return g;
}

}  // namespace critwave
