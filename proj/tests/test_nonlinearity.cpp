#include <doctest.h>

#include <cmath>
#include <vector>

#include "critwave/errors.hpp"
#include "critwave/nonlinearity.hpp"

using namespace critwave;

namespace {

const char* kBuiltins[] = {"scalar-focusing", "scalar-defocusing", "euclidean-2", "euclidean-3",
                           "decoupled-2",     "mixed-cubic",       "nonpotential-triangular",
                           "f-u5u1"};

// dense 1-D oracle for the sharpest constant in |u^5 - v^5| <= C(u^4+v^4)|u-v|
double scalar_lipschitz_oracle(int n) {
  double sup = 0;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j < i; ++j) {
      const double u = -10.0 + 20.0 * i / n;
      const double v = -10.0 + 20.0 * j / n;
      const double num = std::abs(std::pow(u, 5) - std::pow(v, 5));
      const double den = (std::pow(u, 4) + std::pow(v, 4)) * std::abs(u - v);
      if (den > 0) sup = std::max(sup, num / den);
    }
  }
  return sup;
}

}  // namespace

TEST_CASE("degree-5 homogeneity holds exactly for every builtin") {
  for (const char* name : kBuiltins) {
    VectorNonlinearity nl = builtin(name);
    CHECK_MESSAGE(check_homogeneity(nl, 500, 7) < 1e-12, name);
  }
}

TEST_CASE("homogeneity basics: monomials, scaling, origin") {
  VectorNonlinearity nl = builtin("scalar-focusing");
  CHECK(check_homogeneity(nl, 64, 1) <= 1e-15);  // exact up to rounding

  VectorNonlinearity eu = builtin("euclidean-2");
  std::vector<double> u = {1.0, 0.0};
  auto f1 = eu.f(u);
  std::vector<double> u2 = {2.0, 0.0};
  auto f2 = eu.f(u2);
  CHECK(f2[0] == doctest::Approx(32.0 * f1[0]).epsilon(1e-15));
  CHECK(f2[1] == 0.0);

  std::vector<double> zero = {0.0, 0.0};
  auto f0 = eu.f(zero);
  CHECK(f0[0] == 0.0);
  CHECK(f0[1] == 0.0);
}

TEST_CASE("potential gradient matches f for every builtin carrying F") {
  for (const char* name : kBuiltins) {
    VectorNonlinearity nl = builtin(name);
    if (!nl.has_potential()) continue;
    CHECK_MESSAGE(check_potential_gradient(nl, 1e-5, 1000, 11) < 1e-6, name);
  }
}

TEST_CASE("Euler identity for the mixed-cubic example at (1,1)") {
  VectorNonlinearity nl = builtin("mixed-cubic");
  std::vector<double> u = {1.0, 1.0};
  auto fu = nl.f(u);
  const double udotf = u[0] * fu[0] + u[1] * fu[1];
  CHECK(udotf == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(6.0 * nl.F(u) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("missing potential raises") {
  VectorNonlinearity nl = builtin("nonpotential-triangular");
  CHECK(!nl.has_potential());
  CHECK_THROWS_AS(check_potential_gradient(nl, 1e-5, 10, 3), MissingPotential);
}

TEST_CASE("scalar F(u)=u^6/6 basics") {
  VectorNonlinearity nl = builtin("scalar-focusing");
  std::vector<double> one = {1.0};
  CHECK(nl.f(one)[0] == doctest::Approx(1.0));
  CHECK(nl.F(one) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("Lipschitz fit agrees with the dense 1-D oracle and the mean-value bound") {
  const double oracle = scalar_lipschitz_oracle(500);  // -> 5/2 as the grid refines
  CHECK(oracle <= 2.5 + 1e-12);
  CHECK(oracle > 2.45);

  VectorNonlinearity nl = builtin("scalar-focusing");
  const double c = lipschitz_bound_fit(nl, 20000, 5);
  CHECK(c <= 5.0);            // mean-value bound
  CHECK(c <= 2.5 + 1e-12);    // sampled sup cannot exceed the true sup
  CHECK(c > 2.0);

  // restriction-to-line oracle: |u|^4 u on collinear pairs reduces to the
  // scalar formula, hence the same constant
  VectorNonlinearity eu = builtin("euclidean-2");
  double sup = 0;
  for (int i = 0; i <= 400; ++i)
    for (int j = 0; j < i; ++j) {
      const double a = -10.0 + 20.0 * i / 400, b = -10.0 + 20.0 * j / 400;
      std::vector<double> u = {a * 0.6, a * 0.8}, v = {b * 0.6, b * 0.8};
      auto fu = eu.f(u), fv = eu.f(v);
      const double num = std::hypot(fu[0] - fv[0], fu[1] - fv[1]);
      const double den =
          (std::pow(std::abs(a), 4) + std::pow(std::abs(b), 4)) * std::abs(a - b);
      if (den > 0) sup = std::max(sup, num / den);
    }
  CHECK(sup == doctest::Approx(scalar_lipschitz_oracle(400)).epsilon(1e-9));
}

TEST_CASE("defocusing directions") {
  SUBCASE("mixed-cubic has the (1,-1) defocusing direction") {
    VectorNonlinearity nl = builtin("mixed-cubic");
    const double s = 1.0 / std::sqrt(2.0);
    DefocusingReport rep = test_defocusing_direction(nl, {s, -s}, 4000);
    CHECK(rep.verdict);
    CHECK(rep.max_violation <= 0.0);
  }
  SUBCASE("scalar focusing has none") {
    VectorNonlinearity nl = builtin("scalar-focusing");
    DefocusingReport rep = test_defocusing_direction(nl, {1.0}, 10);
    CHECK(!rep.verdict);
    CHECK(rep.max_violation > 0.0);
  }
  SUBCASE("scalar defocusing direction is defocusing") {
    VectorNonlinearity nl = builtin("scalar-defocusing");
    DefocusingReport rep = test_defocusing_direction(nl, {1.0}, 10);
    CHECK(rep.verdict);
  }
  SUBCASE("omega must be unit") {
    VectorNonlinearity nl = builtin("mixed-cubic");
    CHECK_THROWS(test_defocusing_direction(nl, {1.0, 1.0}, 10));
  }
}

TEST_CASE("euclidean family fixes the whole sphere") {
  VectorNonlinearity nl = builtin("euclidean-3");
  auto pts = sample_ball(3, 64, 1.0, 17);
  for (auto& u : pts) {
    double n = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
    for (auto& x : u) x /= n;
    auto fu = nl.f(u);
    for (int c = 0; c < 3; ++c) CHECK(fu[c] == doctest::Approx(u[c]).epsilon(1e-12));
  }
}

TEST_CASE("registry rejects unknown names") {
  CHECK_THROWS_AS(builtin("no-such-nonlinearity"), UnknownName);
  CHECK_THROWS_AS(builtin("euclidean-x"), UnknownName);
}

TEST_CASE("registry names agree with the worked examples") {
  VectorNonlinearity eu = builtin("euclidean-2");
  CHECK(eu.m == 2);
  std::vector<double> u = {0.3, -0.4};
  const double n2 = 0.25;
  auto fu = eu.f(u);
  CHECK(fu[0] == doctest::Approx(n2 * n2 * u[0]).epsilon(1e-15));
  CHECK(eu.F(u) == doctest::Approx(n2 * n2 * n2 / 6.0).epsilon(1e-15));

  VectorNonlinearity mx = builtin("mixed-cubic");
  CHECK(mx.F({1.0, 1.0}) == doctest::Approx(1.0 / 3.0));

  VectorNonlinearity np = builtin("nonpotential-triangular");
  auto fnp = np.f({1.0, 2.0});
  CHECK(fnp[0] == doctest::Approx(1.0));
  CHECK(fnp[1] == doctest::Approx(10.0));
}

TEST_CASE("custom polynomial nonlinearities validate at load") {
  // scalar focusing written as a table
  VectorNonlinearity nl =
      polynomial_nonlinearity(1, {{{5}, {1.0}}}, {{{6}, 1.0 / 6.0}}, "table-focusing");
  CHECK(check_homogeneity(nl, 200, 3) < 1e-12);
  CHECK(check_potential_gradient(nl, 1e-5, 200, 3) < 1e-6);

  // wrong degree is rejected with the field named
  CHECK_THROWS_AS(polynomial_nonlinearity(1, {{{4}, {1.0}}}), ConfigError);
  // a potential whose gradient is not f is rejected
  CHECK_THROWS_AS(polynomial_nonlinearity(1, {{{5}, {1.0}}}, {{{6}, 5.0}}), ConfigError);
}

TEST_CASE("mixed-cubic defocusing inequality holds on every sample") {
  VectorNonlinearity nl = builtin("mixed-cubic");
  const double s = 1.0 / std::sqrt(2.0);
  auto pts = sample_ball(2, 2000, 10.0, 23);
  for (auto& u : pts) {
    auto fu = nl.f(u);
    const double fo = (fu[0] - fu[1]) * s;
    const double uo = (u[0] - u[1]) * s;
    CHECK(fo * uo <= 1e-18);
  }
}
