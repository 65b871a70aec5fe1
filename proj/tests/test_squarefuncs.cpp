#include "doctest.h"

#include <cmath>

#include "bhtlab/numerics.hpp"
#include "bhtlab/squarefuncs.hpp"

using namespace bhtlab;

namespace {

SampledFunction indicator(const Grid& g, double a, double b, double height = 1.0) {
  return SampledFunction::from(g, [=](double x) { return cplx(x >= a && x < b ? height : 0.0); });
}

double max_abs_diff(const SampledFunction& a, const SampledFunction& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

SampledFunction gaussian_atoms(const Grid& g, std::uint64_t seed, double omega_hi) {
  EnsembleShape shape;
  shape.half_width = 0.5 * g.length();
  shape.omega_hi = omega_hi;
  return make_ensemble(seed, 1, shape).front().sample(g);
}

}  // namespace

TEST_CASE("maximal function of an indicator") {
  const Grid g{-4.0, 1.0 / 64.0, 512};
  const auto M = hardy_littlewood_max(indicator(g, 0.0, 1.0));
  CHECK(M[(2.0 - g.x0) / g.dx].real() == doctest::Approx(0.5).epsilon(1e-14));
  // M chi_[0,1](x) = 1/x for x > 1 and 1/(1 - x) for x < 0.
  for (std::size_t i = 0; i < g.n; ++i) {
    const double x = g.x(i);
    if (x > 1.0) CHECK(M[i].real() == doctest::Approx(1.0 / x).epsilon(1e-12));
    if (x < 0.0) CHECK(M[i].real() == doctest::Approx(1.0 / (1.0 - x)).epsilon(1e-12));
    if (x >= 0.0 && x < 1.0) CHECK(M[i].real() == doctest::Approx(1.0));
  }
}

TEST_CASE("maximal function dominates and fixes constants") {
  const Grid g{-2.0, 1.0 / 32.0, 128};
  const auto f = random_dyadic_step(g, 9);
  const auto M = hardy_littlewood_max(f);
  for (std::size_t i = 0; i < g.n; ++i) CHECK(M[i].real() >= std::abs(f[i]) - 1e-12);
  const auto Mc = hardy_littlewood_max(SampledFunction::from(g, [](double) { return cplx(-2.5); }));
  for (std::size_t i = 0; i < g.n; ++i) CHECK(Mc[i].real() == doctest::Approx(2.5).epsilon(1e-14));
  const auto Md = dyadic_max(f);
  for (std::size_t i = 0; i < g.n; ++i) CHECK(Md[i].real() <= M[i].real() + 1e-12);
}

TEST_CASE("fast maximal function agrees with brute force") {
  const Grid g{-8.0, 1.0 / 64.0, 1024};
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto f = seed % 2 ? random_dyadic_step(g, seed) : gaussian_atoms(g, seed, 20.0);
    const auto fast = hardy_littlewood_max(f);
    const auto slow = hardy_littlewood_max_bruteforce(f);
    CHECK(max_abs_diff(fast, slow) <= 1e-12 * std::max(1.0, lp_norm(slow, kInfExponent)));
  }
}

TEST_CASE("CZ decomposition of a two-level step") {
  const Grid g{0.0, 1.0 / 64.0, 64};
  const auto f = SampledFunction::from(g, [](double x) { return cplx(x < 1.0 / 16 ? 6.0 : x < 1.0 / 8 ? 2.0 : 0.0); });
  const auto cz = cz_decompose(f, 3.0);
  REQUIRE(cz.intervals.size() == 1);
  CHECK(cz.intervals[0].lo == 0.0);
  CHECK(cz.intervals[0].hi == doctest::Approx(0.125));
  CHECK(cz.intervals[0].mean.real() == doctest::Approx(4.0));
  const auto b = cz.bad_part(0);
  for (std::size_t i = 0; i < g.n; ++i) {
    const double x = g.x(i);
    const double expect = x < 1.0 / 16 ? 2.0 : x < 1.0 / 8 ? -2.0 : 0.0;
    CHECK(b[i].real() == doctest::Approx(expect));
  }
  CHECK(check_cz_invariants(f, cz).pass);
}

TEST_CASE("CZ level above the dyadic maximal function selects nothing") {
  const Grid g{0.0, 1.0 / 64.0, 128};
  const auto f = indicator(g, 0.0, 1.0);
  const auto cz = cz_decompose(f, 2.0);
  CHECK(cz.intervals.empty());
  CHECK(max_abs_diff(cz.good, f) == 0.0);
  CHECK_THROWS_AS(cz_decompose(f, 0.25), std::invalid_argument);
  CHECK_THROWS_AS(cz_decompose(f, -1.0), std::invalid_argument);
}

TEST_CASE("CZ invariants on random dyadic steps") {
  const Grid g{-4.0, 1.0 / 128.0, 1024};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = random_dyadic_step(g, seed);
    const double mean = lp_norm(f, 1.0) / g.length();
    for (double factor : {1.01, 2.0, 5.0, 20.0, 80.0}) {
      const auto cz = cz_decompose(f, factor * mean);
      const auto inv = check_cz_invariants(f, cz);
      CHECK(inv.pass);
      CHECK(inv.measure <= inv.measure_bound);
    }
  }
}

TEST_CASE("shifted square function is an L2 isometry in the shift") {
  const Grid g = Grid::symmetric(32.0, 1u << 13);
  const auto f = gaussian_atoms(g, 4, 40.0);
  const auto S0 = shifted_square_function(f, 0, 0, 6);
  const double n0 = lp_norm(S0.Sl, 2.0);
  for (long l : {1L, 3L, 100L, 1024L, -7L}) {
    const auto S = shifted_square_function(f, l, 0, 6);
    CHECK(std::abs(lp_norm(S.Sl, 2.0) - n0) <= 1e-10 * n0);
    for (std::size_t i = 0; i < g.n; ++i) CHECK(S.Sl[i].real() >= 0.0);
  }
  // l = 0 is the classical square function.
  const FilterEngine fe(f);
  for (std::size_t i = 0; i < g.n; i += 97) {
    double s = 0.0;
    for (int j = 0; j <= 6; ++j) s += std::norm(fe.apply([&](double xi) { return cplx(bump_phi(std::ldexp(xi, -j))); })[i]);
    CHECK(S0.Sl[i].real() == doctest::Approx(std::sqrt(s)).epsilon(1e-12));
  }
}

TEST_CASE("single band square function is a translate") {
  const Grid g = Grid::symmetric(32.0, 1u << 12);
  const int j0 = 3;
  // Spectrum inside the plateau 2^j0 [1/5, 5] of phi_j0.
  const Atom atom{1.0, 0.5, 1.0, 12.0};
  const FunctionModel model({atom});
  const auto f = model.sample(g);
  for (long l : {0L, 5L, -16L}) {
    const auto S = shifted_square_function(f, l, j0, j0);
    const auto expect = model.translated(std::ldexp(static_cast<double>(l), -j0)).sample(g);
    for (std::size_t i = 0; i < g.n; ++i) CHECK(std::abs(S.Sl[i].real() - std::abs(expect[i])) < 1e-9);
  }
}

TEST_CASE("randomized operator") {
  const Grid g = Grid::symmetric(32.0, 1u << 12);
  const auto f = gaussian_atoms(g, 21, 30.0);
  const auto all_plus = randomized_operator(f, 0, std::vector<int>(5, 1), 0);
  const auto direct = multiply_spectrum(f, [](double xi) {
    double s = 0.0;
    for (int j = 0; j <= 4; ++j) s += bump_phi(std::ldexp(xi, -j));
    return cplx(s);
  });
  CHECK(max_abs_diff(all_plus, direct) < 1e-10 * lp_norm(direct, kInfExponent));

  // With seven scales 64 draws enumerate every pattern; with eleven they sample.
  const auto exact = randomized_fourth_moment(f, 16, 0, 6, 64, 1);
  CHECK(exact.relative_mc_error < 1e-12);
  for (long l : {0L, 16L, 256L}) {
    const auto rep = randomized_fourth_moment(f, l, 0, 10, 64, 1234 + l);
    CHECK(rep.relative_mc_error < 0.25);
    CHECK(rep.khintchine_ratio >= 1.0 - 1e-12);
    CHECK(rep.khintchine_ratio <= 3.0 + 1e-12);
  }
}

TEST_CASE("norm growth in the shift") {
  const Grid g = Grid::symmetric(64.0, 1u << 13);
  EnsembleShape shape;
  shape.omega_hi = 40.0;
  std::vector<SampledFunction> fs;
  for (const auto& m : make_ensemble(3, 4, shape)) fs.push_back(m.sample(g));
  const std::vector<long> ls{1, 4, 16, 64, 256, 1024};
  const auto flat = norm_growth_in_shift(fs, 2.0, ls, 0, 6);
  CHECK(std::abs(flat.exponent) < 1e-9);
  CHECK(flat.predicted == 0.0);
  const auto low = norm_growth_in_shift(fs, 4.0 / 3.0, ls, 0, 6);
  CHECK(low.predicted == doctest::Approx(0.5));
  CHECK(low.exponent <= low.predicted + 0.15);
  const auto high = norm_growth_in_shift(fs, 4.0, ls, 0, 6);
  CHECK(high.exponent <= high.predicted + 0.15);
}

TEST_CASE("interaction kernel symmetry and mass") {
  for (const char* d : {"pow: 2", "pow: 3"}) {
    const PhaseProfile pr(builtin_curve(d));
    const auto e00 = interaction_kernel(pr, 6, 80, 80);
    CHECK(e00.real() > 0.0);
    CHECK(std::abs(e00.imag()) < 1e-14);
    // Independent mass: int phi(80 r^{-1}(y)/64)^2 dy over y > 0 (mu is 1 there).
    const double mass = adaptive_simpson(
        [&](double y) { return std::pow(bump_phi(80.0 * pr.r_inverse(y) / 64.0), 2); }, pr.r(0.08), pr.r(8.0), 1e-12);
    CHECK(e00.real() == doctest::Approx(mass).epsilon(1e-8));
    for (int q0 : {70, 90, 120}) {
      const auto a = interaction_kernel(pr, 6, 80, q0), b = interaction_kernel(pr, 6, q0, 80);
      CHECK(std::abs(a - std::conj(b)) < 1e-12 * std::abs(e00));
      CHECK(std::abs(a) < std::abs(e00));
    }
  }
}

TEST_CASE("interaction kernel decay steepens at large separations") {
  const PhaseProfile pr(builtin_curve("pow: 2"));
  const int p0 = 1 << 12;
  const double a = std::abs(interaction_kernel(pr, 12, p0, p0 + 1024));
  const double b = std::abs(interaction_kernel(pr, 12, p0, p0 + 2048));
  CHECK(std::log(a / b) / std::log(2049.0 / 1025.0) > 2.0);
}

TEST_CASE("cancellation oracle") {
  const auto c = builtin_curve("pow: 2");
  const FilterBank bank(c, 4);
  const Grid g = bank.grid_for(0, 2048);
  const auto zero = cancellation_bound_check(bank, 0, SampledFunction::zeros(g));
  CHECK(zero.lhs_max == 0.0);
  CHECK(zero.rhs_max == 0.0);
  const auto f = band_ensemble(bank, 0, g, 5, 1).front().f.sample(g);
  const auto a = cancellation_bound_check(bank, 0, f);
  const auto b = cancellation_bound_check(bank, 0, f.scaled(cplx(0.0, 3.0)));
  CHECK(b.lhs_max == doctest::Approx(9.0 * a.lhs_max));
  CHECK(b.rhs_max == doctest::Approx(9.0 * a.rhs_max));
  CHECK(b.sup_ratio == doctest::Approx(a.sup_ratio));
}

TEST_CASE("cancellation and windowed energy ratios are stable in m") {
  const auto c = builtin_curve("pow: 2");
  double base_c = 0.0, base_w = 0.0;
  for (int m : {4, 6, 8}) {
    const FilterBank bank(c, m);
    const int j = 2;
    const Grid g = bank.grid_for(j, 4096);
    double rc = 0.0, rw = 0.0;
    for (const auto& t : band_ensemble(bank, j, g, 7, 2)) {
      const auto f = t.f.sample(g);
      rc = std::max(rc, cancellation_bound_check(bank, j, f).sup_ratio);
      rw = std::max(rw, windowed_energy_check(bank.profile(), f, m, j).sup_ratio);
    }
    if (m == 4) {
      base_c = rc;
      base_w = rw;
    }
    CHECK(rc > 0.0);
    CHECK(rc <= 2.0 * base_c);
    CHECK(rw <= 2.0 * base_w);
  }
}

TEST_CASE("windowed energy oracle") {
  const PhaseProfile pr(builtin_curve("pow: 2"));
  const Grid g = Grid::symmetric(64.0, 1u << 13);
  const auto zero = windowed_energy_check(pr, SampledFunction::zeros(g), 4, 1);
  CHECK(zero.lhs_max == 0.0);
  CHECK(zero.rhs_max == 0.0);
  // Translating u by whole cells translates both sides.
  const FunctionModel bump({Atom{1.0, 0.0, 0.3, 40.0}});
  const int shift = 64;
  const auto a = windowed_energy_check(pr, bump.sample(g), 4, 1);
  const auto b = windowed_energy_check(pr, bump.translated(shift * g.dx).sample(g), 4, 1);
  // Stay away from points whose shifted lookups wrap around the grid.
  const auto margin = static_cast<std::size_t>(std::ceil(c_window(pr) / g.dx)) + 2;
  double el = 0.0, er = 0.0;
  for (std::size_t i = 0; i + shift < g.n; ++i) {
    el = std::max(el, std::abs(a.lhs[i] - b.lhs[i + shift]));
    if (i >= margin && i + shift + margin < g.n) er = std::max(er, std::abs(a.rhs[i] - b.rhs[i + shift]));
  }
  CHECK(el < 1e-9 * a.lhs_max);
  CHECK(er < 1e-12 * a.rhs_max);
}

TEST_CASE("dual pointwise oracle") {
  const auto c = builtin_curve("pow: 2");
  const auto& k = kappa_constants();
  CHECK(k.C1 > 0.0);
  CHECK(k.C2 > 0.0);
  for (int m : {4, 6}) {
    const FilterBank bank(c, m);
    const int j = 1;
    const Grid g = bank.grid_for(j, 2048);
    for (const auto& t : band_ensemble(bank, j, g, 17, 3)) {
      const auto d = dual_pointwise_check(bank, j, t.g.sample(g), t.h.sample(g));
      CHECK(d.pass);
    }
    const auto one = SampledFunction::from(g, [](double) { return cplx(1.0); });
    const auto h = band_ensemble(bank, j, g, 3, 1).front().h.sample(g);
    const auto d1 = dual_pointwise_check(bank, j, one, h);
    CHECK(d1.l2_linf_ratio <= k.C1);
    const auto d0 = dual_pointwise_check(bank, j, one, SampledFunction::zeros(g));
    CHECK(d0.pointwise.lhs_max == 0.0);
    CHECK(d0.pointwise.rhs_max == 0.0);
  }
  CHECK_THROWS_AS(dual_pointwise_check(FilterBank(c, 3), 0, SampledFunction::zeros(Grid{}),
                                       SampledFunction::zeros(Grid{})),
                  std::invalid_argument);
}

TEST_CASE("weak type constant stays below twice its l = 1 value") {
  const Grid g = Grid::symmetric(64.0, 1u << 13);
  const auto f = indicator(g, -0.5, 0.5, 8.0);
  std::vector<double> lambdas;
  for (int i = 0; i <= 20; ++i) lambdas.push_back(0.05 * std::pow(10.0, i / 10.0));
  const double c1 = weak_type_constant(f, 1, 0, 6, lambdas);
  CHECK(c1 > 0.0);
  for (long l : {4L, 16L, 64L, 256L, 1024L}) CHECK(weak_type_constant(f, l, 0, 6, lambdas) <= 2.0 * c1);
}

TEST_CASE("Rubio de Francia ratio is stable in m") {
  const auto c = builtin_curve("pow: 2");
  double base = 0.0;
  for (int m : {4, 5, 6}) {
    const FilterBank bank(c, m);
    const Grid g = bank.grid_for(1, 2048);
    const auto h = band_ensemble(bank, 1, g, 8, 1).front().h.sample(g);
    const double r = rubio_de_francia_ratio(bank, h, 2.0, 2);
    if (m == 4) base = r;
    CHECK(r > 0.0);
    CHECK(r <= 2.0 * base);
  }
}
