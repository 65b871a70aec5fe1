#pragma once

#include <cstdint>
#include <vector>

#include "bhtlab/curve.hpp"
#include "bhtlab/decomposition.hpp"
#include "bhtlab/signal.hpp"

namespace bhtlab {

namespace detail {
inline SampledFunction placeholder() { return SampledFunction::zeros(Grid{0.0, 1.0, 16}); }
}  // namespace detail

// ---------------------------------------------------------------------------
// Maximal functions.  Samples are read as cell values on [x_n, x_n + dx).

/// Uncentered Hardy-Littlewood maximal function of |f| over unions of grid
/// cells, computed exactly from prefix sums with convex-hull tangent queries.
SampledFunction hardy_littlewood_max(const SampledFunction& f);
/// O(N^2) reference for the above.
SampledFunction hardy_littlewood_max_bruteforce(const SampledFunction& f);

/// Dyadic maximal function over blocks of 2^s cells aligned to the grid origin.
SampledFunction dyadic_max(const SampledFunction& f);

// ---------------------------------------------------------------------------
// Calderon-Zygmund decomposition.

struct DyadicInterval {
  std::size_t first = 0;  // first cell
  std::size_t cells = 0;  // a power of two
  double lo = 0.0, hi = 0.0;
  cplx mean;
};

struct CZDecomposition {
  double lambda = 0.0;
  SampledFunction good = detail::placeholder();
  std::vector<DyadicInterval> intervals;
  /// b_J restricted to its interval: bad_parts[i][k] is the value on cell intervals[i].first + k.
  std::vector<std::vector<cplx>> bad_parts;

  SampledFunction bad_part(std::size_t i) const;
  SampledFunction bad_total() const;
};

struct CZInvariants {
  double reconstruction_error = 0.0;  // max |f - good - sum b_J|
  double max_abs_mean = 0.0;          // max_J |int b_J|
  double good_sup = 0.0;              // |good|_inf
  double measure = 0.0;               // sum |J|
  double measure_bound = 0.0;         // |f|_1 / lambda
  bool pass = false;
};

/// Maximal dyadic intervals with |f| average above lambda, found top-down.
/// Throws std::invalid_argument when lambda <= 0 or lambda does not exceed
/// the average of |f| over the whole grid (there is no maximal interval then).
CZDecomposition cz_decompose(const SampledFunction& f, double lambda);
CZInvariants check_cz_invariants(const SampledFunction& f, const CZDecomposition& cz, double tol = 1e-12);

/// Random dyadic step function: constant on aligned blocks of random size.
SampledFunction random_dyadic_step(const Grid& grid, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Shifted square functions.

struct ShiftedSquareData {
  long l = 0;
  int j_lo = 0, j_hi = 0;
  std::vector<SampledFunction> per_j;  // (f * phi_j^vee)(x - l / 2^j)
  SampledFunction Sl = detail::placeholder();
};

/// S_l f = (sum_j |(f * phi_j^vee)(x - l/2^j)|^2)^{1/2}; the translation is the
/// exact multiplier e^{-i xi l / 2^j}.
ShiftedSquareData shifted_square_function(const SampledFunction& f, long l, int j_lo, int j_hi);

struct GrowthReport {
  double q = 2.0;
  std::vector<long> l_list;
  std::vector<double> sup_ratio;  // ensemble sup of |S_l f|_q / |f|_q
  double exponent = 0.0;          // slope against log log(|l| + 10)
  double residual = 0.0;
  double predicted = 0.0;         // 2 / q* - 1
};

GrowthReport norm_growth_in_shift(const std::vector<SampledFunction>& ensemble, double q,
                                  const std::vector<long>& l_list, int j_lo, int j_hi);

/// sum_j signs[j - j_lo] (f * phi_j^vee)(x - l/2^j)
SampledFunction randomized_operator(const SampledFunction& f, long l, const std::vector<int>& signs, int j_lo);

struct KhintchineReport {
  double monte_carlo = 0.0;   // mean of |Lambda_{l,omega} f|_4^4 over draws
  double expectation = 0.0;   // exact E |Lambda f|_4^4
  double square_norm = 0.0;   // |S_l f|_4^4
  double relative_mc_error = 0.0;
  double khintchine_ratio = 0.0;  // expectation / square_norm, lies in [1, 3]
};

KhintchineReport randomized_fourth_moment(const SampledFunction& f, long l, int j_lo, int j_hi, int draws,
                                          std::uint64_t seed);

// ---------------------------------------------------------------------------
// Oscillatory interaction.

/// C_gamma such that r([1/20, 10]) lies in [1/C, C].
double c_window(const PhaseProfile& profile);
/// mu: 1 on [1/C, C], 0 outside [1/(2C), 2C], zero for y <= 0.
double mu_cutoff(double y, double C);
/// nu: even, 1 on 1/C <= |y| <= C, 0 outside 1/(2C) < |y| < 2C.
double nu_cutoff(double y, double C);

/// E_{p0,q0} = int e^{i (p0 - q0) theta(y)} phi*(p0 r^{-1}(y)/2^m) phi*(q0 r^{-1}(y)/2^m) mu(y)^2 dy with phi* = phi.
cplx interaction_kernel(const PhaseProfile& profile, int m, int p0, int q0);

struct DecayFit {
  std::vector<int> separations;
  std::vector<double> magnitudes;
  double slope = 0.0;
  double residual = 0.0;
  int points_used = 0;
};

/// Fit of log|E_{p0, p0+d}| against log(1 + d), d log-spaced in [4, 2^{m-1}],
/// skipping values at the quadrature noise floor.
DecayFit interaction_decay_fit(const PhaseProfile& profile, int m);

// ---------------------------------------------------------------------------
// Pointwise inequality oracles.

struct PointwiseCheck {
  SampledFunction lhs = detail::placeholder();
  SampledFunction rhs = detail::placeholder();
  double sup_ratio = 0.0;  // max lhs/rhs where rhs is above 1e-12 of its max
  double lhs_max = 0.0;
  double rhs_max = 0.0;
};

/// Lhs: sum_p0 |f * phi_{m+j}^vee * psi_{m,p0,j}^vee|^2.
/// Rhs: int |(f * phi_{m+j}^vee)(y)|^2 2^j nu(2^j (x - y)) dy.
PointwiseCheck cancellation_bound_check(const FilterBank& bank, int j, const SampledFunction& f);

/// Lhs: int |(u * phi_{j+m}^vee)(y)|^2 2^j nu(2^j (x - y)) dy.
/// Rhs: 2^-m sum over integers l with l/2^m in supp nu of |M u (x - l/2^{m+j})|^2.
PointwiseCheck windowed_energy_check(const PhaseProfile& profile, const SampledFunction& u, int m, int j);

struct DualCheck {
  PointwiseCheck pointwise;  // sum_p0 |G H|^2 against C1 C2^2 |g|_inf^2 M(h_gamma)^2
  double l2_linf_ratio = 0.0;  // sup_x sum_p0 |G|^2 / |g|_inf^2, at most C1
  double C1 = 0.0;
  double C2 = 0.0;
  bool pass = false;
};

/// Needs m >= 4 so that phi_{gamma,m,j} equals 1 on every supp phi_{j,p0}.
DualCheck dual_pointwise_check(const FilterBank& bank, int j, const SampledFunction& g, const SampledFunction& h);

/// Explicit constants: C1 = 2 pi int_0^{2pi} (sum_k |kappa(y + 2 pi k)|)^2 dy and
/// C2 = int of the least decreasing radial majorant of |kappa|, kappa = phi^.
struct KappaConstants {
  double C1 = 0.0;
  double C2 = 0.0;
};
const KappaConstants& kappa_constants();

/// |(sum_j sum_p0 |h * phi_{j,p0}^vee|^2)^{1/2}|_{p'} / |h|_{p'} over j in [0, j_hi].
double rubio_de_francia_ratio(const FilterBank& bank, const SampledFunction& h, double p_prime, int j_hi);

/// |{S_l f > lambda}| lambda / (log(|l| + 10) |f|_1), maximized over the lambdas.
double weak_type_constant(const SampledFunction& f, long l, int j_lo, int j_hi, const std::vector<double>& lambdas);

}  // namespace bhtlab
