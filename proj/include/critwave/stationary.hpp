#pragma once

#include <utility>
#include <vector>

#include "critwave/nonlinearity.hpp"
#include "critwave/profile.hpp"

namespace critwave {

enum class StationaryCase {
  A_blowup,   // solution blows up at a positive radius R_theta
  B_notL6,    // defined down to 0 but behaves like c/r there (not L^6)
  C_energy,   // extends to a finite-energy solution on all of R^3
};

/// Result of classifying the stationary solution asymptotic to theta/r.
struct ZThetaSolution {
  std::vector<double> theta;
  double R_theta = 0;  // blow-up radius for case A, otherwise 0
  StationaryCase kind = StationaryCase::C_energy;
  RadialProfile profile;
  double energy = 0;  // defined for case C with a potential-type nonlinearity
  bool has_energy = false;
};

struct GroundState {
  std::vector<double> omega;  // maximizer of F on the unit sphere
  double Fmax = 0;
  double mu = 0;  // (6 Fmax)^{-1/4}
  RadialProfile profile;  // mu * omega * W on a default bubble grid
};

/// The explicit scalar bubble W_lambda(r) = lambda^{-1/2} (1 + r^2/(3 lambda^2))^{-1/2}
/// with exact analytic derivatives, sampled on `grid`.
RadialProfile explicit_w(double lambda, const std::vector<double>& grid);

double w_value(double r, double lambda = 1.0);
double w_deriv(double r, double lambda = 1.0);

struct ExteriorOptions {
  double rcut_factor = 1e6;  // outer truncation R_cut = rcut_factor * R
  int per_decade = 32;
  int max_iterations = 64;
  std::vector<double>* iterate_errors = nullptr;  // optional trace of sup r|du|
};

/// Solves u = Phi_theta(u), Phi_theta(u)(r) = theta/r - int_r^inf s^-2 int_s^inf rho^2 f(u) drho ds,
/// on a truncated geometric grid [R, R_cut], closing both integral tails
/// analytically from the theta/r leading order.  Iteration stops once
/// sup_r r |du| < tol.  Throws ContractionFailure when R is too small for the
/// contraction (estimated via lipschitz_bound_fit) or when iterates leave the
/// ball ||u||_R <= 2|theta|.
RadialProfile solve_exterior_fixed_point(const VectorNonlinearity& nl,
                                         const std::vector<double>& theta, double R, double tol,
                                         const ExteriorOptions& opt = {});

/// Integrates u'' + (2/r) u' + f(u) = 0 inward from the inner edge of `outer`
/// with an adaptive embedded Runge-Kutta 5(4) pair (relative tolerance 1e-10),
/// classifies the trichotomy from the window [r_stop, 100 r_stop], and for
/// case C returns a regular-at-origin profile.  Throws StiffnessFailure when
/// the step size underflows without triggering the blow-up classifier.
ZThetaSolution continue_inward(const VectorNonlinearity& nl, const RadialProfile& outer,
                               double r_stop = 1e-6);

/// v(r) = (1/r) p(1/r) on [1/r_back, 1/r_front]; throws DomainError when the
/// input grid reaches r = 0.
RadialProfile kelvin_transform(const RadialProfile& p);

/// Maximizes F over the unit sphere (dense sweep for m <= 3 refined by ascent,
/// random multistarts above) and returns the ground state mu*omega*W.  Ties
/// are broken toward the lexicographically largest omega.  Throws EmptyZ when
/// max F <= 0.
GroundState ground_state(const VectorNonlinearity& nl, double sphere_tol = 1e-12,
                         int multistarts = 64);

/// int |grad p|^2 - 6 int F(p), both with analytic theta/r tails; near zero
/// exactly when p is a stationary solution.
double pohozaev_residual(const VectorNonlinearity& nl, const RadialProfile& p);

/// Discrete L^2(r^2 dr) norm of u'' + (2/r) u' + f(u) over the grid interior.
double stationarity_residual(const VectorNonlinearity& nl, const RadialProfile& p);

/// Rescales p so that half of its gradient energy sits inside the unit ball;
/// returns the rescaled profile and the scale lambda applied.  Throws
/// DegenerateProfile for profiles with no gradient energy.
std::pair<RadialProfile, double> k_normalize(const RadialProfile& p);

/// Smallest grid radius C with int_{r<=C} |grad p|^2 >= total - eps, the
/// localized-energy capture radius.  Throws DomainError when the grid cannot
/// capture that much energy (eps smaller than the off-grid tail).
double radius_capturing_energy(const RadialProfile& p, double eps);

}  // namespace critwave
