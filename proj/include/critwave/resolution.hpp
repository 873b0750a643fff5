#pragma once

#include <optional>
#include <string>
#include <vector>

#include "critwave/evolution.hpp"
#include "critwave/profile.hpp"

namespace critwave {

struct ScaleDetection {
  std::vector<double> scales;   // strictly increasing
  bool budget_exceeded = false; // true when the energy ran out before some j
};

/// Detected concentration scales: for each j the unique lambda with
///   int_{r<=lambda} |grad diff|^2 r^2 dr + exp(-|t|) * int_0^lambda exp(-r) r^2 dr
///     = 3 sum_{k<j} E_k + (3/2) E_j
/// (the exponential regularizer keeps the left side strictly increasing).
/// `energies` must be positive and sorted; eps is the relative bisection
/// tolerance on lambda.  When the available energy is exhausted at some j the
/// scales found so far are returned with budget_exceeded set.
ScaleDetection detect_scales(const WaveState& diff, const std::vector<double>& energies,
                             double eps);

struct Candidate {
  std::string id;
  RadialProfile profile;      // K-normalized
  double energy = 0;
  std::vector<double> omega;  // direction, for directional families
};

struct CandidateLibrary {
  std::vector<Candidate> items;
  bool directional = false;   // all items share one radial shape times omega
  RadialProfile base;         // the shared scalar shape when directional
  double base_mu = 1;         // amplitude multiplier for directional items
  double item_energy = 0;     // common energy when directional
  int m = 1;
};

/// K-normalized ground state of nl plus sign/angular variants: a sphere grid
/// when F is constant on the sphere (rotation-invariant family), otherwise
/// the ground direction and its sign flip when f is odd.
CandidateLibrary candidate_library(const VectorNonlinearity& nl, int sphere_samples = 360);

/// Registers a custom stationary profile (it is K-normalized on insertion).
void add_candidate(CandidateLibrary& lib, const std::string& id, const RadialProfile& p,
                   const VectorNonlinearity& nl);

struct ScaleMatch {
  std::string candidate_id;
  double lambda = 0;
  double residual = 0;  // annulus gradient residual of the fit
  double energy = 0;    // energy of the matched stationary solution
};

struct ResolutionReport {
  double t = 0;
  int J = 0;
  std::vector<double> scales;
  std::vector<ScaleMatch> matches;
  double radiation_mass = 0;   // estimated (1/2)||(v0,v1)||^2
  double residual_energy = 0;  // H x L2 mass of diff minus the fitted sum
  double budget_gap = 0;
};

/// Greedy small-to-large least-squares fit of rescaled candidates against
/// diff: scale j is fitted on the annulus [sqrt(l_j l_{j-1}), sqrt(l_j l_{j+1})]
/// by minimizing the gradient-norm residual over (candidate, lambda in
/// [scale/4, 4 scale]), then subtracted everywhere before the next scale.
ResolutionReport fit_profiles(const WaveState& diff, const std::vector<double>& scales,
                              const CandidateLibrary& lib, double radiation_mass = 0);

/// budget_gap = |sum E(Q_j) + radiation_mass - E_total|; stored in the report
/// and returned.
double energy_budget(ResolutionReport& report, double E_total);

struct VirialSeries {
  std::vector<double> times, y, ypp_measured, ypp_predicted;
};

/// y(t) = int phi(r/t) |u|^2 r^2 dr with the fixed smooth cutoff (1 on
/// r<=2t, 0 on r>=3t, quintic bridge); measured y'' by central second
/// differences, predicted y'' = 8||ut||^2 + 4||grad u||^2 - 12E.
/// Requires >= 3 snapshots at uniform cadence with t > 0.
VirialSeries virial_series(const std::vector<WaveState>& snapshots,
                           const VectorNonlinearity& nl);

struct ThreeEReport {
  double max_ratio = 0;       // max over snapshots of norm_hh / (3E)
  double tail_max_ratio = 0;  // same over the last half of the run
};

/// Prop-bounded diagnostic; throws NonpositiveEnergy when E <= 0.
ThreeEReport check_3E_bound(const std::vector<WaveState>& snapshots,
                            const VectorNonlinearity& nl);

/// Localized-energy tracker: Etilde_j = int_{r <= Cbar*scale_j} |grad diff|^2
/// r^2 dr - 3 sum_{k<j} E_k.
std::vector<double> localized_energies(const WaveState& diff, const std::vector<double>& scales,
                                       const std::vector<double>& energies, double Cbar);

/// Decomposes `total` as a sum of entries of `levels` (with multiplicity)
/// within tol, smallest multiset first; empty optional when impossible.
std::optional<std::vector<double>> infer_energy_sequence(double total,
                                                         const std::vector<double>& levels,
                                                         double tol);

struct EnergyAssumptionReport {
  std::vector<double> levels;  // distinct energies, ascending
  bool a3_holds = true;
  std::string violation;
};

/// Clusters a list of stationary energies into distinct levels and checks the
/// independence assumption: no level is a nontrivial natural-number
/// combination of levels.
EnergyAssumptionReport check_energy_assumptions(const std::vector<double>& energies,
                                                double rel_tol = 1e-6);

void save_report_csv(const ResolutionReport& rep, const std::string& path);
void save_virial_csv(const VirialSeries& vs, const std::string& path);

}  // namespace critwave
