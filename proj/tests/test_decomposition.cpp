#include "doctest.h"

#include <cmath>

#include "bhtlab/decomposition.hpp"

using namespace bhtlab;

namespace {

struct Sampled {
  SampledFunction f, g, h;
};

Sampled sample_triple(const TripleModels& t, const Grid& grid) {
  return {t.f.sample(grid), t.g.sample(grid), t.h.sample(grid)};
}

}  // namespace

TEST_CASE("Holder triples") {
  CHECK_NOTHROW((HolderTriple{2, 2, kInfExponent}).validate());
  CHECK_NOTHROW((HolderTriple{3, 3, 3}).validate());
  CHECK_THROWS_AS((HolderTriple{2, 2, 2}).validate(), std::invalid_argument);
}

TEST_CASE("support intervals contain the filter support") {
  const auto c = builtin_curve("poly: t^2");
  const FilterBank bank(c, 4);
  for (int j : {0, 3}) {
    const auto a = support_interval(c, j, 20);
    CHECK(a.lo1 < a.hi1);
    CHECK(a.hi1 < a.lo2);
    CHECK(a.lo2 < a.hi2);
    for (int i = 0; i <= 2000; ++i) {
      const double eta = (a.lo1 - 1.0 / bank.D(j)) + i * (a.hi2 - a.lo1 + 2.0 / bank.D(j)) / 2000.0;
      const bool inside = (eta >= a.lo1 && eta <= a.hi1) || (eta >= a.lo2 && eta <= a.hi2);
      if (bank.phi_jp0(j, 20, eta) != 0.0) CHECK(inside);
    }
  }
}

TEST_CASE("overlap sweep") {
  const auto c = builtin_curve("poly: t^2");
  const auto one = overlap_count(c, 0, 0);
  CHECK(one.count == 1);
  const auto rep = overlap_count(c, 8, 20);
  // Consecutive p0 intervals are 1/D apart and about 10/D long.
  CHECK(rep.per_scale >= 19);
  CHECK(rep.scale_multiplicity <= 2);
  CHECK(rep.count <= rep.scale_multiplicity * rep.per_scale);
}

TEST_CASE("psi is a unimodular chirp times the bump") {
  const FilterBank bank(builtin_curve("poly: t^2"), 4);
  for (double xi : {3.0, 17.0, -40.0, 150.0}) {
    CHECK(std::abs(bank.psi(1, 20, xi)) == doctest::Approx(0.25 * bump_phi(xi / 32.0)));
  }
}

TEST_CASE("spatial and spectral forms agree") {
  const auto c = builtin_curve("poly: t^2");
  for (int m : {4, 6}) {
    const FilterBank bank(c, m);
    for (int j : {0, 2}) {
      const Grid grid = bank.grid_for(j, 1 << 12);
      const auto triples = band_ensemble(bank, j, grid, 7 + j, 2);
      for (const auto& t : triples) {
        const auto s = sample_triple(t, grid);
        const cplx a = lambda_jm_spatial(bank, s.f, s.g, s.h, j);
        const cplx b = lambda_jm_spectral(bank, s.f, s.g, s.h, j);
        CHECK(std::abs(b) > 0.0);
        CHECK(std::abs(a - b) / std::abs(b) < 1e-6);
      }
    }
  }
}

TEST_CASE("conjugate symmetry for real inputs") {
  const FilterBank bank(builtin_curve("poly: t^2"), 4);
  const Grid grid = bank.grid_for(1, 1 << 12);
  const auto t = band_ensemble(bank, 1, grid, 3, 1, true).front();
  const auto s = sample_triple(t, grid);
  for (std::size_t i = 0; i < grid.n; i += 97) CHECK(std::abs(s.f[i].imag()) < 1e-12);
  const cplx a = lambda_jm_spatial(bank, s.f, s.g, s.h, 1);
  const cplx b = lambda_jm_spatial(bank.mirror(), s.f, s.g, s.h, 1);
  CHECK(std::abs(a - std::conj(b)) <= 1e-10 * std::abs(a));
}

TEST_CASE("trilinear forms vanish on trivial inputs and are linear") {
  const FilterBank bank(builtin_curve("poly: t^3"), 4);
  const Grid grid = bank.grid_for(0, 1 << 12);
  const auto s = sample_triple(band_ensemble(bank, 0, grid, 5, 1).front(), grid);
  const auto zero = SampledFunction::zeros(grid);
  CHECK(std::abs(lambda_jm_spatial(bank, s.f, s.g, zero, 0)) == 0.0);
  CHECK(std::abs(lambda_jm_spectral(bank, s.f, s.g, zero, 0)) == 0.0);
  const cplx base = lambda_jm_spectral(bank, s.f, s.g, s.h, 0);
  const cplx scaled = lambda_jm_spectral(bank, s.f, s.g.scaled(cplx(2.0, -1.0)), s.h, 0);
  CHECK(std::abs(scaled - cplx(2.0, -1.0) * base) < 1e-10 * std::abs(base));
  const auto lp = lambda_m_plus(bank, zero, zero, zero);
  CHECK(std::abs(lp.value) == 0.0);
}

TEST_CASE("apply_Tjm is linear and vanishes off the g bands") {
  const FilterBank bank(builtin_curve("poly: t^2"), 4);
  const Grid grid = bank.grid_for(1, 1 << 12);
  const auto t = band_ensemble(bank, 1, grid, 9, 2);
  const auto f1 = t[0].f.sample(grid), f2 = t[1].f.sample(grid), g = t[0].g.sample(grid);
  const auto sum = apply_Tjm(bank, f1 + f2, g, 1);
  const auto parts = apply_Tjm(bank, f1, g, 1) + apply_Tjm(bank, f2, g, 1);
  CHECK(lp_norm(sum - parts, 2.0) <= 1e-10 * lp_norm(sum, 2.0));
  // A g far below every A_{1,p0} gives nothing.
  const auto low = FunctionModel({Atom{1.0, 0.0, -grid.x0 / 8.0, 0.0}}).sample(grid);
  CHECK(lp_norm(apply_Tjm(bank, f1, low, 1), kInfExponent) < 1e-12);
}

TEST_CASE("single-scale inputs reduce Lambda_m^+ to one term") {
  const FilterBank bank(builtin_curve("poly: t^3"), 4, 10);
  const int j = 2;
  const Grid grid = bank.grid_for(j, 1 << 12);
  const auto s = sample_triple(band_ensemble(bank, j, grid, 13, 1).front(), grid);
  const auto sum = lambda_m_plus(bank, s.f, s.g, s.h);
  CHECK(sum.sum_abs >= std::abs(sum.value) - 1e-15);
  const cplx single = lambda_jm_spatial(bank, s.f, s.g, s.h, j);
  CHECK(std::find(sum.active_j.begin(), sum.active_j.end(), j) != sum.active_j.end());
  CHECK(std::abs(sum.value - single) < 0.05 * std::abs(single));
}

TEST_CASE("chirp kernel approaches its stationary-phase form") {
  const auto c = builtin_curve("poly: t^2");
  double prev = 1e9;
  for (int m : {4, 6, 8}) {
    const FilterBank bank(c, m);
    const auto cmp = chirp_kernel(bank, 1 << m, 0, 1 << 16);
    CHECK(cmp.relative_l2_deviation < prev);
    prev = cmp.relative_l2_deviation;
  }
  CHECK(prev < 0.1);
  const FilterBank b4(c, 4), b6(c, 6);
  const auto k4 = chirp_kernel(b4, 16, 0, 1 << 14);
  const auto k6 = chirp_kernel(b4.mirror(), 16, 0, 1 << 14);
  CHECK(lp_norm(k4.numeric, 1.0) == doctest::Approx(lp_norm(k6.numeric, 1.0)).epsilon(1e-9));
}
