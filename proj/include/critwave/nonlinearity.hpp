#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace critwave {

/// A vector nonlinearity f: R^m -> R^m, homogeneous of degree 5, optionally
/// carrying its degree-6 potential F with f = grad F.  Instances are immutable
/// values; evaluation is pure and thread-safe.
struct VectorNonlinearity {
  int m = 1;
  std::string name;
  std::function<void(const double* u, double* out)> eval_fn;
  std::function<double(const double* u)> potential_fn;  // empty if no potential

  bool has_potential() const { return static_cast<bool>(potential_fn); }

  std::vector<double> f(const std::vector<double>& u) const {
    std::vector<double> out(m);
    eval_fn(u.data(), out.data());
    return out;
  }
  void f(const double* u, double* out) const { eval_fn(u, out); }

  double F(const std::vector<double>& u) const;
  double F(const double* u) const;
};

struct DefocusingReport {
  std::vector<double> omega;  // unit direction tested
  double max_violation = 0;   // largest sampled (f(u).omega)(u.omega)
  bool verdict = false;       // true iff max_violation <= 0
};

/// Max over sampled (lambda, u) of |f(lambda u) - lambda^5 f(u)| / (1 + lambda^5 |f(u)|).
/// Deterministic given seed; samples drawn uniformly from the ball of radius 10.
double check_homogeneity(const VectorNonlinearity& nl, int samples, unsigned long long seed);

/// Compares f(u) against central differences of F at sampled points and checks
/// the Euler identity u.f(u) = 6 F(u).  Returns the max relative error seen.
/// Throws MissingPotential when nl has no potential; requires 0 < h < 1e-2.
double check_potential_gradient(const VectorNonlinearity& nl, double h, int samples,
                                unsigned long long seed);

/// Smallest sampled constant C with |f(u)-f(v)| <= C (|u|^4 + |v|^4) |u-v|.
double lipschitz_bound_fit(const VectorNonlinearity& nl, int samples, unsigned long long seed);

/// Samples u on a sphere grid (radius irrelevant by homogeneity) and reports
/// whether (f(u).omega)(u.omega) <= 0 on every sample.
DefocusingReport test_defocusing_direction(const VectorNonlinearity& nl,
                                           const std::vector<double>& omega,
                                           int sphere_samples);

/// Registry of named nonlinearities:
///   scalar-focusing, scalar-defocusing, euclidean-<m>, decoupled-<m>,
///   mixed-cubic, nonpotential-triangular, f-u5u1.
/// Throws UnknownName otherwise.
VectorNonlinearity builtin(const std::string& name);

/// f identically zero with F identically zero, for free-wave runs.
VectorNonlinearity zero_nonlinearity(int m);

/// One monomial term of a custom polynomial nonlinearity: the multi-index
/// `powers` (size m, entries summing to 5) and the coefficient vector `coeff`
/// (size m, the contribution of u^powers to each component of f).
struct PolynomialTerm {
  std::vector<int> powers;
  std::vector<double> coeff;
};

/// Builds a custom degree-5 polynomial nonlinearity; validates homogeneity of
/// every term.  `potential_terms` (powers summing to 6, scalar coefficient)
/// are optional; when given, grad F == f is verified by sampling and a
/// mismatch is rejected.
VectorNonlinearity polynomial_nonlinearity(int m, const std::vector<PolynomialTerm>& terms,
                                           const std::vector<std::pair<std::vector<int>, double>>&
                                               potential_terms = {},
                                           const std::string& name = "custom");

/// Seeded uniform samples from the ball of radius `radius` in R^m.
std::vector<std::vector<double>> sample_ball(int m, int count, double radius,
                                             unsigned long long seed);

}  // namespace critwave
