#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "critwave/errors.hpp"
#include "critwave/profile.hpp"
#include "critwave/stationary.hpp"

using namespace critwave;

// closed-form values for the explicit bubble W(r) = (1+r^2/3)^{-1/2}
static constexpr double kGradW = 1.0202621423817475;   // int |W'|^2 r^2 dr = 3 sqrt(3) pi / 16
static constexpr double kEW = 0.3400873807939158;      // E(W) = kGradW / 3

TEST_CASE("cubic Hermite interpolation reproduces cubics exactly") {
  auto p = [](double r) { return r * r * r - 2.0 * r + 1.0; };
  auto dp = [](double r) { return 3.0 * r * r - 2.0; };
  std::vector<double> grid, vals, ders;
  for (double r = 0.5; r <= 4.0; r += 0.5) {
    grid.push_back(r);
    vals.push_back(p(r));
    ders.push_back(dp(r));
  }
  RadialProfile prof(grid, vals, ders, 1);
  for (double r = 0.5; r <= 4.0; r += 0.07) {
    CHECK(prof.eval(r)[0] == doctest::Approx(p(r)).epsilon(1e-13));
    CHECK(prof.eval_deriv(r)[0] == doctest::Approx(dp(r)).epsilon(1e-12));
  }
}

TEST_CASE("evaluation outside the grid is an error") {
  RadialProfile prof({1.0, 2.0}, {1.0, 2.0}, {1.0, 1.0}, 1);
  CHECK_THROWS_AS(prof.eval(0.5), DomainError);
  CHECK_THROWS_AS(prof.eval(2.5), DomainError);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(RadialProfile({2.0, 1.0}, {0, 0}, {0, 0}, 1), DomainError);
  CHECK_THROWS_AS(RadialProfile({0.0, 1.0}, {0, 0}, {0, 0}, 1), DomainError);   // r=0 needs the flag
  CHECK_THROWS_AS(RadialProfile({0.0, 1.0}, {1, 1}, {1, 0}, 1, true), DomainError);  // u'(0) != 0
  CHECK_NOTHROW(RadialProfile({0.0, 1.0}, {1, 1}, {0, 0}, 1, true));
}

TEST_CASE("gradient energy of W matches the closed form with the analytic tail") {
  RadialProfile w = explicit_w(1.0, bubble_grid(1e-4, 1e6, 48));
  const double g = gradient_energy(w) + gradient_energy_tail(w);
  CHECK(g == doctest::Approx(kGradW).epsilon(1e-7));

  VectorNonlinearity nl = builtin("scalar-focusing");
  const double f = potential_integral(w, nl) + potential_integral_tail(w, nl);
  CHECK(f == doctest::Approx(kGradW / 6.0).epsilon(1e-7));  // int F(W) = G/6 by Pohozaev
  CHECK(0.5 * g - f == doctest::Approx(kEW).epsilon(1e-7));
}

TEST_CASE("critical rescaling leaves the gradient energy invariant") {
  for (double lam : {0.25, 1.0, 4.0}) {
    RadialProfile w = explicit_w(lam, bubble_grid(1e-4 * lam, 1e6 * lam, 48));
    const double g = gradient_energy(w) + gradient_energy_tail(w);
    CHECK(g == doctest::Approx(kGradW).epsilon(1e-8));
  }
}

TEST_CASE("rescale_profile is the critical rescaling") {
  RadialProfile w = explicit_w(1.0, bubble_grid(1e-3, 1e3, 32));
  RadialProfile w2 = rescale_profile(w, 2.0);
  for (std::size_t i = 0; i < w2.size(); i += 37) {
    const double r = w2.grid()[i];
    CHECK(w2.value(i, 0) == doctest::Approx(w_value(r, 2.0)).epsilon(1e-13));
    CHECK(w2.deriv(i, 0) == doctest::Approx(w_deriv(r, 2.0)).epsilon(1e-12));
  }
}

TEST_CASE("quintic node second derivative is accurate for W") {
  std::vector<double> grid;
  for (double r = 0.01; r <= 20.0; r += 0.01) grid.push_back(r);
  RadialProfile w = explicit_w(1.0, grid);
  auto wpp = [](double r) {
    const double q = 1.0 + r * r / 3.0;
    return -(1.0 / 3.0) * std::pow(q, -1.5) + (r * r / 3.0) * std::pow(q, -2.5);
  };
  double worst = 0;
  for (std::size_t i = 1; i + 1 < w.size(); i += 53) {
    double out;
    w.node_second_deriv(i, &out);
    worst = std::max(worst, std::abs(out - wpp(w.grid()[i])));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("profile IO round-trips") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> grid, vals, ders;
  double r = 0.1;
  for (int i = 0; i < 57; ++i) {
    grid.push_back(r);
    r *= 1.17;
    for (int c = 0; c < 2; ++c) {
      vals.push_back(unif(rng));
      ders.push_back(unif(rng));
    }
  }
  RadialProfile p(grid, vals, ders, 2);

  save_profile_binary(p, "/tmp/critwave_prof.bin");
  RadialProfile q = load_profile_binary("/tmp/critwave_prof.bin");
  CHECK(q.components() == 2);
  CHECK(q.grid() == p.grid());
  CHECK(q.values() == p.values());
  CHECK(q.derivs() == p.derivs());

  save_profile_csv(p, "/tmp/critwave_prof.csv");
  RadialProfile c = load_profile_csv("/tmp/critwave_prof.csv");
  CHECK(c.grid() == p.grid());  // 17 significant digits round-trip doubles exactly
  CHECK(c.values() == p.values());
  CHECK(c.derivs() == p.derivs());

  std::remove("/tmp/critwave_prof.bin");
  std::remove("/tmp/critwave_prof.csv");
}

TEST_CASE("cumulative gradient energy is monotone and consistent") {
  RadialProfile w = explicit_w(1.0, bubble_grid(1e-3, 1e4, 32));
  double prev = 0;
  for (double rc : {0.5, 1.0, 2.0, 5.0, 20.0, 100.0}) {
    const double g = gradient_energy_within(w, rc);
    CHECK(g >= prev);
    prev = g;
  }
  CHECK(gradient_energy_within(w, 1e4) == doctest::Approx(gradient_energy(w)).epsilon(1e-12));
}
