#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "critwave/nonlinearity.hpp"

namespace critwave {

/// A radial R^m-valued function sampled on a strictly increasing grid, with
/// derivative data at every node.  Evaluation between nodes is cubic Hermite;
/// evaluating outside [r_front, r_back] throws DomainError.
///
/// Unless flagged regular-at-origin, every radius must be positive.  When
/// regular-at-origin, the first node may sit at r = 0 and must carry zero
/// derivative.
class RadialProfile {
 public:
  RadialProfile() = default;
  RadialProfile(std::vector<double> grid, std::vector<double> values, std::vector<double> derivs,
                int m, bool regular_origin = false);

  int components() const { return m_; }
  std::size_t size() const { return grid_.size(); }
  bool regular_origin() const { return regular_origin_; }
  double r_front() const { return grid_.front(); }
  double r_back() const { return grid_.back(); }

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& derivs() const { return derivs_; }

  double value(std::size_t i, int c) const { return values_[i * m_ + c]; }
  double deriv(std::size_t i, int c) const { return derivs_[i * m_ + c]; }

  void eval(double r, double* out) const;
  void eval_deriv(double r, double* out) const;
  std::vector<double> eval(double r) const;
  std::vector<double> eval_deriv(double r) const;

  /// Second derivative at an interior node from the quintic Hermite fit
  /// through the node and its two neighbours (values and slopes at all
  /// three).  The accuracy O(h^4) is what makes stationarity residuals of
  /// analytic profiles meaningful.
  void node_second_deriv(std::size_t i, double* out) const;

  /// theta estimate r*u(r) at the outermost node, used to close integral
  /// tails analytically for 1/r-asymptotic profiles.
  std::vector<double> theta_estimate() const;

 private:
  std::vector<double> grid_, values_, derivs_;
  int m_ = 1;
  bool regular_origin_ = false;
  std::size_t locate(double r) const;
};

/// lambda^{-1/2} p(./lambda): grid, values and derivatives rescale exactly.
RadialProfile rescale_profile(const RadialProfile& p, double lambda);

// --- quadrature over profiles (all radial integrals omit the common 4*pi) ---

/// int |p'|^2 r^2 dr over the grid; exact for the Hermite interpolant.
double gradient_energy(const RadialProfile& p);

/// int_{r <= rc} |p'|^2 r^2 dr (rc clamped to the grid).
double gradient_energy_within(const RadialProfile& p, double rc);

/// |theta|^2 / r_back, the tail of the gradient integral for p ~ theta/r.
double gradient_energy_tail(const RadialProfile& p);

/// int F(p) r^2 dr over the grid by adaptive per-segment quadrature.
double potential_integral(const RadialProfile& p, const VectorNonlinearity& nl);

/// F(theta)/(3 r_back^3), the tail of int F(p) r^2 dr for p ~ theta/r.
double potential_integral_tail(const RadialProfile& p, const VectorNonlinearity& nl);

// --- persistence ---

void save_profile_csv(const RadialProfile& p, const std::string& path);
RadialProfile load_profile_csv(const std::string& path);
void save_profile_binary(const RadialProfile& p, const std::string& path);  // magic "CWRP"
RadialProfile load_profile_binary(const std::string& path);

// --- grid builders ---

/// Geometric grid from a to b with `per_decade` points per decade (endpoints
/// included).
std::vector<double> geometric_grid(double a, double b, int per_decade);

/// Grid suited to bubble profiles: r = 0, then geometric from r0 to r1.
std::vector<double> bubble_grid(double r0, double r1, int per_decade);

}  // namespace critwave
