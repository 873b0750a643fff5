#pragma once

#include <string>
#include <vector>

#include "critwave/evolution.hpp"

namespace critwave {

/// Sampled radiation field g(eta) with g such that dt(v_L) ~ g(t-r)/r for an
/// outgoing linear wave.  l2_mass is int |g|^2 d(eta) (trapezoidal).  With the
/// 4*pi-free radial norms used throughout, 2*l2_mass converges to
/// ||(u0,u1)||^2_{H x L2}.
struct RadiationField {
  std::vector<double> eta;
  std::vector<double> g;  // row-major, size eta.size()*m
  int m = 1;
  double l2_mass = 0;
  /// 1/t-weighted residual of the second defining limit |dr(u) + g/r|.
  double second_limit_residual = 0;
};

/// Exact free evolution S_L(t)(u0,u1) in w = r u variables: odd extension and
/// the 1-D d'Alembert formula on natural cubic splines of the data.  The
/// nonlinearity of `data` plays no role.  Requires the data support to fit in
/// [0, r_max - |t|] (DomainTooSmall otherwise).
WaveState dalembert_exact(const WaveState& data, double t);

/// Estimates g(eta) = r dt(u)(t, t-eta) averaged over the supplied late-time
/// states, on the eta window [eta_min, eta_max] sampled at the spatial grid
/// resolution of the latest state.  Throws InsufficientWindow for fewer than
/// two states.
RadiationField extract_radiation(const std::vector<WaveState>& states, double eta_min,
                                 double eta_max);

struct ChannelCheck {
  double lhs = 0;  // sum over t = +-T of the exterior energy beyond R + |t|
  double rhs = 0;  // int_R^inf (dr(r u0))^2 + r^2 u1^2 dr
};

/// Exterior-energy channel identity: lhs(T) -> rhs as T -> infinity.  Both
/// sides are evaluated with the exact linear oracle, never the grid solver.
ChannelCheck channel_identity_check(const WaveState& data, double R, double T_eval);

void save_radiation_csv(const RadiationField& f, const std::string& path);

}  // namespace critwave
