#include "doctest.h"

#include <cmath>

#include "bhtlab/multiplier.hpp"
#include "bhtlab/signal.hpp"

using namespace bhtlab;

TEST_CASE("critical points of monomials") {
  const auto sq = builtin_curve("poly: t^2");
  const auto cube = builtin_curve("poly: t^3");
  CHECK(critical_point(sq, {2.0, 1.0, 0}) == doctest::Approx(1.0));
  CHECK(critical_point(sq, {4.0, 2.0, 1}) == doctest::Approx(2.0));
  CHECK(critical_point(cube, {3.0, 1.0, 0}) == doctest::Approx(1.0));
  CHECK(critical_point(sq, {-2.0, 1.0, 0}) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(critical_point(cube, {-3.0, 1.0, 0}), NoCriticalPoint);
  CHECK_THROWS_AS(critical_point(sq, {1e6, 1.0, 0}), NoCriticalPoint);
}

TEST_CASE("phase at the critical point") {
  CHECK(phase_at_critical(builtin_curve("poly: t^2"), {2.0, 1.0, 0}) == doctest::Approx(1.0));
  CHECK(phase_at_critical(builtin_curve("poly: t^3"), {3.0, 1.0, 0}) == doctest::Approx(2.0));
  const auto c = builtin_curve("poly: t^2 + t^3");
  const double base = phase_at_critical(c, {1.3, 0.7, 2});
  CHECK(phase_at_critical(c, {2.6, 1.4, 2}) == doctest::Approx(2.0 * base));
}

TEST_CASE("envelope theorem and uniqueness on random queries") {
  Rng rng(11);
  for (const char* d : {"poly: t^2", "poly: t^3", "poly: t^2 + t^3"}) {
    const auto c = builtin_curve(d);
    const int k = c.k_gamma();
    for (int n = 0; n < 100; ++n) {
      const int j = static_cast<int>(rng.uniform(0.0, 12.0));
      const double t = std::ldexp(1.0, -k + 1) * std::pow(4.0, (k - 1) * rng.uniform());
      const double eta = rng.uniform(0.5, 4.0);
      const double xi = eta * c.deriv(t * std::ldexp(1.0, -j));
      const CriticalPointQuery q{xi, eta, j};
      const double tc = critical_point(c, q);
      CHECK(std::abs(phase_derivative(c, q, tc)) < 1e-10);
      CHECK(count_sign_changes(c, q, 400) == 1);
      const double h = 1e-6 * std::abs(xi);
      const double dpsi = (phase_at_critical(c, {xi + h, eta, j}) - phase_at_critical(c, {xi - h, eta, j})) / (2 * h);
      CHECK(std::abs(dpsi - tc * std::ldexp(1.0, -j)) < 1e-6);
    }
  }
}

TEST_CASE("R and theta closed forms") {
  const auto sq = builtin_curve("poly: t^2");
  CHECK(R_eval(sq, 3.0) == doctest::Approx(4.0));
  CHECK(R_eval(sq, 1.0) == 0.0);
  CHECK(R_eval(builtin_curve("poly: t^2 + t^3"), 1.0) == doctest::Approx(0.0));
  CHECK(theta_eval(sq, 4.0, 1.0) == doctest::Approx(2.0));
  const PhaseProfile p(builtin_curve("poly: t^3"));
  CHECK(p.theta(3.0, 2.0) == doctest::Approx(3.0 * p.theta(1.0, 2.0)));
  for (double s : {0.3, 1.7, 3.9}) CHECK(p.R(s) == doctest::Approx(p.R_quadrature(s)).epsilon(1e-9));
  CHECK_THROWS_AS(p.R(-1.0), std::domain_error);
  const PhaseProfile q(sq);
  for (double s : {-2.5, -0.3, 0.7}) CHECK(q.R(s) == doctest::Approx(q.R_quadrature(s)).epsilon(1e-9));
  for (double y : {0.4, 1.3}) CHECK(q.theta(2.0, y) == doctest::Approx(q.theta_quadrature(2.0, y)).epsilon(1e-9));
}

TEST_CASE("tabulated R for a mixed curve matches quadrature") {
  const PhaseProfile p(builtin_curve("poly: t^2 + t^3"));
  CHECK_FALSE(p.closed_form());
  for (double s : {-7.0, -0.2, 0.05, 0.9, 2.2, 9.5}) CHECK(std::abs(p.R(s) - p.R_quadrature(s)) < 1e-9);
}

TEST_CASE("theta derivative is p0 r^{-1}") {
  for (const char* d : {"poly: t^2", "poly: t^4", "poly: t^2 + t^3"}) {
    const PhaseProfile p(builtin_curve(d));
    for (double y : {0.5, 1.5, 2.5}) {
      const double h = 1e-4;
      const double fd = (p.theta(3.0, y + h) - p.theta(3.0, y - h)) / (2 * h);
      CHECK(std::abs(fd - 3.0 * p.r_inverse(y)) < 1e-6);
    }
  }
}

TEST_CASE("scaling identity") {
  for (const char* d : {"poly: t^2", "poly: t^3"}) {
    const PhaseProfile p(builtin_curve(d));
    for (int j = 0; j <= 20; j += 4) {
      const auto res = scaling_identity_residual(p, 1.7, 0.9, j);
      CHECK(res.corrected < 1e-8);
      CHECK(res.raw > 0.1);
    }
  }
  const PhaseProfile mixed(builtin_curve("poly: t^2 + t^3"));
  double prev = 1e9;
  for (int j = 2; j <= 20; ++j) {
    const double r = scaling_identity_residual(mixed, 1.7, 0.9, j).corrected;
    CHECK(r < prev);
    prev = r;
  }
  CHECK(prev < 1e-4);
}
