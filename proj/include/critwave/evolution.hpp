#pragma once

#include <string>
#include <vector>

#include "critwave/nonlinearity.hpp"

namespace critwave {

/// (u, du/dt) at one time on a uniform radial grid r_i = i*dr covering
/// [0, (nr-1)*dr].  Data is row-major: component c of node i sits at i*m + c.
struct WaveState {
  double t = 0;
  double dr = 0;
  int nr = 0;
  int m = 1;
  std::vector<double> u, ut;

  double r_max() const { return (nr - 1) * dr; }
  double& at(int i, int c) { return u[static_cast<std::size_t>(i) * m + c]; }
  double at(int i, int c) const { return u[static_cast<std::size_t>(i) * m + c]; }
  double& at_t(int i, int c) { return ut[static_cast<std::size_t>(i) * m + c]; }
  double at_t(int i, int c) const { return ut[static_cast<std::size_t>(i) * m + c]; }
};

WaveState make_state(int nr, double dr, int m);

/// Largest radius carrying nonzero data (0 when the state is identically 0).
double support_radius(const WaveState& s);

struct EvolveConfig {
  double T = 1.0;
  double dt = 0;  // 0 selects cfl * dr
  double cfl = 0.9;
  int snapshot_every = 0;  // in steps; 0 disables intermediate snapshots
  double blowup_threshold = 1e6;
};

enum class Outcome { Completed, BlowupDetected };

struct EvolveResult {
  WaveState final;
  std::vector<WaveState> snapshots;
  Outcome outcome = Outcome::Completed;
};

/// Leapfrog evolution of u_tt - Laplace u = f(u) in the substitution
/// w = r u, where the radial operator becomes the plain 1-D d'Alembertian:
/// w_tt = w_rr + r f(w/r).  The origin is the exact Dirichlet point w=0; the
/// outer boundary value is frozen at its initial value (causally unreachable
/// for data respecting the domain precondition).
///
/// For data compactly supported inside the grid, the precondition
/// r_max >= support + T + 1 is enforced (DomainTooSmall).  Data reaching the
/// outer boundary (truncated whole-space tails such as W) evolves with the
/// frozen boundary standing in for the exterior; observables are then only
/// meaningful on {r < r_max - T} by finite speed of propagation.
EvolveResult evolve(const VectorNonlinearity& nl, const EvolveConfig& cfg,
                    const WaveState& initial);

/// E = 1/2 int |du/dr|^2 r^2 dr + 1/2 int |du/dt|^2 r^2 dr - int F(u) r^2 dr
/// by trapezoidal quadrature (the common 4*pi is dropped everywhere).
double energy(const VectorNonlinearity& nl, const WaveState& s);

/// Squared energy norm int (|du/dr|^2 + |du/dt|^2) r^2 dr.
double norm_hh(const WaveState& s);

/// Same integrand restricted to r > R.
double exterior_energy(const WaveState& s, double R);

double sup_norm(const WaveState& s);

/// Central-difference radial derivative of u (same layout as s.u).
std::vector<double> radial_derivative(const WaveState& s);

void save_state_binary(const WaveState& s, const std::string& path);  // magic "CWWS"
WaveState load_state_binary(const std::string& path);

}  // namespace critwave
