#include "critwave/nonlinearity.hpp"

#include <cmath>
#include <cstdlib>
#include <random>

#include "critwave/errors.hpp"

namespace critwave {

double VectorNonlinearity::F(const std::vector<double>& u) const { return F(u.data()); }

double VectorNonlinearity::F(const double* u) const {
  if (!potential_fn) throw MissingPotential("nonlinearity '" + name + "' has no potential");
  return potential_fn(u);
}

namespace {

double norm2(const double* u, int m) {
  double s = 0;
  for (int i = 0; i < m; ++i) s += u[i] * u[i];
  return std::sqrt(s);
}

double dot(const double* a, const double* b, int m) {
  double s = 0;
  for (int i = 0; i < m; ++i) s += a[i] * b[i];
  return s;
}

int parse_m_suffix(const std::string& name, const std::string& prefix) {
  if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return -1;
  const std::string tail = name.substr(prefix.size());
  char* end = nullptr;
  long v = std::strtol(tail.c_str(), &end, 10);
  if (end == nullptr || *end != '\0' || v < 1 || v > 64) return -1;
  return static_cast<int>(v);
}

}  // namespace

std::vector<std::vector<double>> sample_ball(int m, int count, double radius,
                                             unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    std::vector<double> u(m);
    double n = 0;
    do {
      for (int i = 0; i < m; ++i) u[i] = gauss(rng);
      n = norm2(u.data(), m);
    } while (n == 0);
    const double r = radius * std::pow(unif(rng), 1.0 / m);
    for (int i = 0; i < m; ++i) u[i] *= r / n;
    out.push_back(std::move(u));
  }
  return out;
}

double check_homogeneity(const VectorNonlinearity& nl, int samples, unsigned long long seed) {
  const int m = nl.m;
  auto points = sample_ball(m, samples, 10.0, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> lam(0.0, 10.0);
  std::vector<double> fu(m), flu(m), lu(m);
  double worst = 0;
  for (auto& u : points) {
    const double l = lam(rng);
    nl.f(u.data(), fu.data());
    for (int i = 0; i < m; ++i) lu[i] = l * u[i];
    nl.f(lu.data(), flu.data());
    const double l5 = l * l * l * l * l;
    double num = 0;
    for (int i = 0; i < m; ++i) {
      const double d = flu[i] - l5 * fu[i];
      num += d * d;
    }
    const double err = std::sqrt(num) / (1.0 + l5 * norm2(fu.data(), m));
    worst = std::max(worst, err);
  }
  return worst;
}

double check_potential_gradient(const VectorNonlinearity& nl, double h, int samples,
                                unsigned long long seed) {
  if (!nl.has_potential()) throw MissingPotential("check_potential_gradient: no potential");
  if (!(h > 0 && h < 1e-2)) throw std::invalid_argument("check_potential_gradient: need 0<h<1e-2");
  const int m = nl.m;
  auto points = sample_ball(m, samples, 10.0, seed);
  std::vector<double> fu(m), up(m), um(m);
  double worst = 0;
  for (auto& u : points) {
    nl.f(u.data(), fu.data());
    const double fmag = norm2(fu.data(), m);
    for (int i = 0; i < m; ++i) {
      up = u;
      um = u;
      up[i] += h;
      um[i] -= h;
      const double g = (nl.potential_fn(up.data()) - nl.potential_fn(um.data())) / (2 * h);
      worst = std::max(worst, std::abs(g - fu[i]) / (1.0 + fmag));
    }
    // Euler identity for degree-6 homogeneous F.
    const double euler = dot(u.data(), fu.data(), m) - 6.0 * nl.potential_fn(u.data());
    worst = std::max(worst, std::abs(euler) / (1.0 + fmag * norm2(u.data(), m)));
  }
  return worst;
}

double lipschitz_bound_fit(const VectorNonlinearity& nl, int samples, unsigned long long seed) {
  const int m = nl.m;
  auto us = sample_ball(m, samples, 10.0, seed);
  auto vs = sample_ball(m, samples, 10.0, seed ^ 0xdeadbeefcafef00dull);
  std::vector<double> fu(m), fv(m);
  double c = 0;
  for (int k = 0; k < samples; ++k) {
    const auto& u = us[k];
    const auto& v = vs[k];
    double du = 0;
    for (int i = 0; i < m; ++i) du += (u[i] - v[i]) * (u[i] - v[i]);
    du = std::sqrt(du);
    if (du == 0) continue;  // ratio defined as 0
    nl.f(u.data(), fu.data());
    nl.f(v.data(), fv.data());
    double dfn = 0;
    for (int i = 0; i < m; ++i) dfn += (fu[i] - fv[i]) * (fu[i] - fv[i]);
    const double nu = norm2(u.data(), m), nv = norm2(v.data(), m);
    const double denom = (nu * nu * nu * nu + nv * nv * nv * nv) * du;
    if (denom > 0) c = std::max(c, std::sqrt(dfn) / denom);
  }
  return c;
}

DefocusingReport test_defocusing_direction(const VectorNonlinearity& nl,
                                           const std::vector<double>& omega, int sphere_samples) {
  const int m = nl.m;
  if (static_cast<int>(omega.size()) != m)
    throw std::invalid_argument("test_defocusing_direction: omega size mismatch");
  if (std::abs(norm2(omega.data(), m) - 1.0) > 1e-12)
    throw std::invalid_argument("test_defocusing_direction: omega not unit");
  DefocusingReport rep;
  rep.omega = omega;
  std::vector<double> fu(m);
  if (m == 1) {
    // the sphere is {+1,-1}
    for (double s : {1.0, -1.0}) {
      nl.f(&s, fu.data());
      rep.max_violation = std::max(rep.max_violation, (fu[0] * omega[0]) * (s * omega[0]));
    }
  } else {
    auto pts = sample_ball(m, sphere_samples, 1.0, 0x5ca1ab1eull);
    for (auto& u : pts) {
      const double n = norm2(u.data(), m);
      if (n == 0) continue;
      for (int i = 0; i < m; ++i) u[i] /= n;
      nl.f(u.data(), fu.data());
      const double val = dot(fu.data(), omega.data(), m) * dot(u.data(), omega.data(), m);
      rep.max_violation = std::max(rep.max_violation, val);
    }
  }
  rep.verdict = rep.max_violation <= 0;
  return rep;
}

VectorNonlinearity zero_nonlinearity(int m) {
  VectorNonlinearity nl;
  nl.m = m;
  nl.name = "linear-" + std::to_string(m);
  nl.eval_fn = [m](const double*, double* out) {
    for (int i = 0; i < m; ++i) out[i] = 0;
  };
  nl.potential_fn = [](const double*) { return 0.0; };
  return nl;
}

VectorNonlinearity builtin(const std::string& name) {
  VectorNonlinearity nl;
  nl.name = name;
  if (name == "scalar-focusing") {
    nl.m = 1;
    nl.eval_fn = [](const double* u, double* out) {
      const double x = u[0];
      out[0] = x * x * x * x * x;
    };
    nl.potential_fn = [](const double* u) {
      const double x2 = u[0] * u[0];
      return x2 * x2 * x2 / 6.0;
    };
    return nl;
  }
  if (name == "scalar-defocusing") {
    nl.m = 1;
    nl.eval_fn = [](const double* u, double* out) {
      const double x = u[0];
      out[0] = -x * x * x * x * x;
    };
    nl.potential_fn = [](const double* u) {
      const double x2 = u[0] * u[0];
      return -x2 * x2 * x2 / 6.0;
    };
    return nl;
  }
  if (int m = parse_m_suffix(name, "euclidean-"); m > 0) {
    nl.m = m;
    nl.eval_fn = [m](const double* u, double* out) {
      double n2 = 0;
      for (int i = 0; i < m; ++i) n2 += u[i] * u[i];
      const double n4 = n2 * n2;
      for (int i = 0; i < m; ++i) out[i] = n4 * u[i];
    };
    nl.potential_fn = [m](const double* u) {
      double n2 = 0;
      for (int i = 0; i < m; ++i) n2 += u[i] * u[i];
      return n2 * n2 * n2 / 6.0;
    };
    return nl;
  }
  if (int m = parse_m_suffix(name, "decoupled-"); m > 0) {
    nl.m = m;
    nl.eval_fn = [m](const double* u, double* out) {
      for (int i = 0; i < m; ++i) {
        const double x = u[i];
        out[i] = x * x * x * x * x;
      }
    };
    nl.potential_fn = [m](const double* u) {
      double s = 0;
      for (int i = 0; i < m; ++i) {
        const double x2 = u[i] * u[i];
        s += x2 * x2 * x2;
      }
      return s / 6.0;
    };
    return nl;
  }
  if (name == "mixed-cubic") {
    nl.m = 2;
    nl.eval_fn = [](const double* u, double* out) {
      out[0] = u[0] * u[0] * u[1] * u[1] * u[1];
      out[1] = u[1] * u[1] * u[0] * u[0] * u[0];
    };
    nl.potential_fn = [](const double* u) {
      return u[0] * u[0] * u[0] * u[1] * u[1] * u[1] / 3.0;
    };
    return nl;
  }
  if (name == "nonpotential-triangular") {
    nl.m = 2;
    nl.eval_fn = [](const double* u, double* out) {
      const double x4 = u[0] * u[0] * u[0] * u[0];
      out[0] = x4 * u[0];
      out[1] = 5.0 * x4 * u[1];
    };
    // no potential: d(f1)/du2 = 0 != d(f2)/du1
    return nl;
  }
  if (name == "f-u5u1") {
    nl.m = 2;
    nl.eval_fn = [](const double* u, double* out) {
      const double n2 = u[0] * u[0] + u[1] * u[1];
      const double n = std::sqrt(n2);
      const double n3 = n * n2;
      const double n5 = n3 * n2;
      out[0] = n5 / 6.0 + (5.0 / 6.0) * n3 * u[0] * u[0];
      out[1] = (5.0 / 6.0) * n3 * u[0] * u[1];
    };
    nl.potential_fn = [](const double* u) {
      const double n2 = u[0] * u[0] + u[1] * u[1];
      const double n = std::sqrt(n2);
      return n * n2 * n2 * u[0] / 6.0;
    };
    return nl;
  }
  throw UnknownName("builtin nonlinearity '" + name + "' not in registry");
}

VectorNonlinearity polynomial_nonlinearity(
    int m, const std::vector<PolynomialTerm>& terms,
    const std::vector<std::pair<std::vector<int>, double>>& potential_terms,
    const std::string& name) {
  for (const auto& t : terms) {
    if (static_cast<int>(t.powers.size()) != m || static_cast<int>(t.coeff.size()) != m)
      throw ConfigError("nonlinearity.terms", "powers/coeff size must equal m");
    int deg = 0;
    for (int p : t.powers) {
      if (p < 0) throw ConfigError("nonlinearity.terms", "negative exponent");
      deg += p;
    }
    if (deg != 5) throw ConfigError("nonlinearity.terms", "monomial degree must be 5");
  }
  for (const auto& t : potential_terms) {
    if (static_cast<int>(t.first.size()) != m)
      throw ConfigError("nonlinearity.potential_terms", "powers size must equal m");
    int deg = 0;
    for (int p : t.first) deg += p;
    if (deg != 6) throw ConfigError("nonlinearity.potential_terms", "monomial degree must be 6");
  }

  VectorNonlinearity nl;
  nl.m = m;
  nl.name = name;
  auto tcopy = terms;
  nl.eval_fn = [m, tcopy](const double* u, double* out) {
    for (int i = 0; i < m; ++i) out[i] = 0;
    for (const auto& t : tcopy) {
      double mono = 1;
      for (int j = 0; j < m; ++j)
        for (int p = 0; p < t.powers[j]; ++p) mono *= u[j];
      for (int i = 0; i < m; ++i) out[i] += t.coeff[i] * mono;
    }
  };
  if (!potential_terms.empty()) {
    auto pcopy = potential_terms;
    nl.potential_fn = [m, pcopy](const double* u) {
      double s = 0;
      for (const auto& t : pcopy) {
        double mono = 1;
        for (int j = 0; j < m; ++j)
          for (int p = 0; p < t.first[j]; ++p) mono *= u[j];
        s += t.second * mono;
      }
      return s;
    };
    // reject potentials whose gradient disagrees with f
    if (check_potential_gradient(nl, 1e-5, 64, 7) > 1e-5)
      throw ConfigError("nonlinearity.potential_terms", "grad F does not match f");
  }
  return nl;
}

}  // namespace critwave
