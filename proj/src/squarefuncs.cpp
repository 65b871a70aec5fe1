#include "bhtlab/squarefuncs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bhtlab/numerics.hpp"

namespace bhtlab {

// ---------------------------------------------------------------------------
// Maximal functions

namespace {

struct Pt {
  double x, y;
};

double cross(const Pt& o, const Pt& a, const Pt& b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }
double slope(const Pt& a, const Pt& b) { return (b.y - a.y) / (b.x - a.x); }

// Index of the maximum of a unimodal sequence value(0..n-1).
template <class F>
std::size_t unimodal_argmax(std::size_t n, F value) {
  std::size_t lo = 0, hi = n - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (value(mid) < value(mid + 1))
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo;
}

// Upper hull of a suffix of points, built right to left with an undo log so
// the suffixes can be visited left to right afterwards.
class RollbackUpperHull {
 public:
  void push(const Pt& p) {
    Entry e;
    e.old_size = size_;
    while (size_ >= 2 && cross(p, hull_[size_ - 1], hull_[size_ - 2]) >= 0.0) --size_;
    e.pos = size_;
    if (size_ < hull_.size()) {
      e.saved = hull_[size_];
      e.overwrote = true;
      hull_[size_] = p;
    } else {
      hull_.push_back(p);
    }
    ++size_;
    log_.push_back(e);
  }
  void undo() {
    const Entry e = log_.back();
    log_.pop_back();
    if (e.overwrote) hull_[e.pos] = e.saved;
    size_ = e.old_size;
  }
  // Hull vertex t in left-to-right order.
  const Pt& at(std::size_t t) const { return hull_[size_ - 1 - t]; }
  std::size_t size() const { return size_; }

 private:
  struct Entry {
    std::size_t old_size = 0, pos = 0;
    Pt saved{0.0, 0.0};
    bool overwrote = false;
  };
  std::vector<Pt> hull_;
  std::vector<Entry> log_;
  std::size_t size_ = 0;
};

std::vector<double> abs_prefix(const SampledFunction& f) {
  std::vector<double> S(f.size() + 1, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) S[i + 1] = S[i] + std::abs(f[i]);
  return S;
}

}  // namespace

// Cell n is covered by [x_a, x_b] for a <= n <= b, a < b; the average is the
// slope between prefix points P_a and P_b.  Splitting at s = n and s = n + 1
// reduces each cell to two bridge problems between {P_0..P_{s-1}} and
// {P_s..P_N}: the optimal pair is found by alternating tangent queries on the
// lower hull of the left set and the upper hull of the right set.  At a fixed
// point the line through the pair has every left point above it and every
// right point below it, which certifies the maximum.
SampledFunction hardy_littlewood_max(const SampledFunction& f) {
  const std::size_t N = f.size();
  const auto S = abs_prefix(f);
  auto P = [&](std::size_t i) { return Pt{static_cast<double>(i), S[i]}; };

  RollbackUpperHull right;
  for (std::size_t i = N + 1; i-- > 0;) right.push(P(i));

  std::vector<Pt> left;
  std::vector<double> bridge(N + 1, 0.0);  // bridge[s], s = 1..N
  for (std::size_t s = 1; s <= N; ++s) {
    const Pt p = P(s - 1);
    while (left.size() >= 2 && cross(left[left.size() - 2], left.back(), p) <= 0.0) left.pop_back();
    left.push_back(p);
    right.undo();  // drop P_{s-1}

    Pt a = left.back(), b = right.at(0);
    double best = slope(a, b);
    for (int iter = 0; iter < 200; ++iter) {
      a = left[unimodal_argmax(left.size(), [&](std::size_t i) { return slope(left[i], b); })];
      b = right.at(unimodal_argmax(right.size(), [&](std::size_t t) { return slope(a, right.at(t)); }));
      const double s_new = slope(a, b);
      if (!(s_new > best)) break;
      best = s_new;
    }
    bridge[s] = best;
  }

  std::vector<cplx> out(N);
  for (std::size_t n = 0; n < N; ++n) out[n] = n == 0 ? bridge[1] : std::max(bridge[n], bridge[n + 1]);
  return SampledFunction(f.grid(), std::move(out));
}

SampledFunction hardy_littlewood_max_bruteforce(const SampledFunction& f) {
  const std::size_t N = f.size();
  const auto S = abs_prefix(f);
  std::vector<double> M(N, 0.0), suffix(N + 1);
  for (std::size_t a = 0; a < N; ++a) {
    // suffix[t] = max_{b >= t} avg(a, b) for t > a
    double run = -std::numeric_limits<double>::infinity();
    for (std::size_t b = N; b > a; --b) {
      run = std::max(run, (S[b] - S[a]) / static_cast<double>(b - a));
      suffix[b] = run;
    }
    for (std::size_t n = a; n < N; ++n) M[n] = std::max(M[n], suffix[std::max(n, a + 1)]);
  }
  std::vector<cplx> out(M.begin(), M.end());
  return SampledFunction(f.grid(), std::move(out));
}

SampledFunction dyadic_max(const SampledFunction& f) {
  const std::size_t N = f.size();
  const auto S = abs_prefix(f);
  std::vector<double> M(N, 0.0);
  for (std::size_t len = 1; len <= N; len *= 2)
    for (std::size_t start = 0; start < N; start += len) {
      const double avg = (S[start + len] - S[start]) / static_cast<double>(len);
      for (std::size_t n = start; n < start + len; ++n) M[n] = std::max(M[n], avg);
    }
  std::vector<cplx> out(M.begin(), M.end());
  return SampledFunction(f.grid(), std::move(out));
}

// ---------------------------------------------------------------------------
// Calderon-Zygmund

SampledFunction CZDecomposition::bad_part(std::size_t i) const {
  std::vector<cplx> v(good.size());
  const auto& J = intervals.at(i);
  for (std::size_t k = 0; k < J.cells; ++k) v[J.first + k] = bad_parts[i][k];
  return SampledFunction(good.grid(), std::move(v));
}

SampledFunction CZDecomposition::bad_total() const {
  std::vector<cplx> v(good.size());
  for (std::size_t i = 0; i < intervals.size(); ++i)
    for (std::size_t k = 0; k < intervals[i].cells; ++k) v[intervals[i].first + k] += bad_parts[i][k];
  return SampledFunction(good.grid(), std::move(v));
}

CZDecomposition cz_decompose(const SampledFunction& f, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("cz_decompose: lambda must be positive");
  const Grid& grid = f.grid();
  const auto S = abs_prefix(f);
  const std::size_t N = f.size();
  if (S[N] / static_cast<double>(N) > lambda) {
    std::ostringstream msg;
    msg << "cz_decompose: lambda = " << lambda << " is below the grid average of |f| (" << S[N] / N
        << "); no maximal dyadic interval exists";
    throw std::invalid_argument(msg.str());
  }
  CZDecomposition cz;
  cz.lambda = lambda;
  std::vector<cplx> good = f.values();

  // Explicit stack keeps the left-to-right order of the selected intervals.
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, N}};
  while (!stack.empty()) {
    const auto [first, cells] = stack.back();
    stack.pop_back();
    const double avg = (S[first + cells] - S[first]) / static_cast<double>(cells);
    if (avg > lambda) {
      DyadicInterval J;
      J.first = first;
      J.cells = cells;
      J.lo = grid.x(first);
      J.hi = grid.x(first) + static_cast<double>(cells) * grid.dx;
      long double re = 0.0L, im = 0.0L;
      for (std::size_t k = 0; k < cells; ++k) {
        re += f[first + k].real();
        im += f[first + k].imag();
      }
      J.mean = cplx(static_cast<double>(re / cells), static_cast<double>(im / cells));
      std::vector<cplx> b(cells);
      for (std::size_t k = 0; k < cells; ++k) {
        b[k] = f[first + k] - J.mean;
        good[first + k] = J.mean;
      }
      cz.intervals.push_back(J);
      cz.bad_parts.push_back(std::move(b));
    } else if (cells > 1) {
      stack.push_back({first + cells / 2, cells / 2});
      stack.push_back({first, cells / 2});
    }
  }
  cz.good = SampledFunction(grid, std::move(good));
  return cz;
}

CZInvariants check_cz_invariants(const SampledFunction& f, const CZDecomposition& cz, double tol) {
  CZInvariants inv;
  const double dx = f.grid().dx;
  const auto bad = cz.bad_total();
  for (std::size_t i = 0; i < f.size(); ++i) {
    inv.reconstruction_error = std::max(inv.reconstruction_error, std::abs(f[i] - cz.good[i] - bad[i]));
    inv.good_sup = std::max(inv.good_sup, std::abs(cz.good[i]));
  }
  for (std::size_t i = 0; i < cz.intervals.size(); ++i) {
    long double re = 0.0L, im = 0.0L;
    for (const auto& v : cz.bad_parts[i]) {
      re += v.real();
      im += v.imag();
    }
    inv.max_abs_mean = std::max(inv.max_abs_mean, std::hypot(static_cast<double>(re), static_cast<double>(im)) * dx);
    inv.measure += static_cast<double>(cz.intervals[i].cells) * dx;
  }
  inv.measure_bound = lp_norm(f, 1.0) / cz.lambda;
  inv.pass = inv.reconstruction_error <= tol && inv.max_abs_mean <= tol && inv.good_sup <= 2.0 * cz.lambda &&
             inv.measure <= inv.measure_bound * (1.0 + 1e-12);
  return inv;
}

SampledFunction random_dyadic_step(const Grid& grid, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<cplx> v(grid.n);
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, grid.n}};
  while (!stack.empty()) {
    const auto [first, cells] = stack.back();
    stack.pop_back();
    const double split_prob = cells == grid.n ? 1.0 : 0.8;
    if (cells > 1 && rng.uniform() < split_prob) {
      stack.push_back({first, cells / 2});
      stack.push_back({first + cells / 2, cells / 2});
      continue;
    }
    // Mostly small values with occasional tall spikes so several levels bite.
    double value = rng.uniform() < 0.15 ? rng.uniform(10.0, 100.0) : rng.uniform(0.0, 2.0);
    if (rng.uniform() < 0.3) value = -value;
    for (std::size_t k = 0; k < cells; ++k) v[first + k] = value;
  }
  return SampledFunction(grid, std::move(v));
}

// ---------------------------------------------------------------------------
// Shifted square functions

namespace {

Multiplier shifted_band(int j, long l) {
  const double shift = std::ldexp(static_cast<double>(l), -j);
  return [j, shift](double xi) { return bump_phi(std::ldexp(xi, -j)) * std::polar(1.0, -xi * shift); };
}

SampledFunction root_sum_squares(const std::vector<SampledFunction>& parts, const Grid& grid) {
  std::vector<cplx> v(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    double s = 0.0;
    for (const auto& p : parts) s += std::norm(p[i]);
    v[i] = std::sqrt(s);
  }
  return SampledFunction(grid, std::move(v));
}

}  // namespace

ShiftedSquareData shifted_square_function(const SampledFunction& f, long l, int j_lo, int j_hi) {
  if (j_hi < j_lo) throw std::invalid_argument("shifted_square_function: empty j range");
  ShiftedSquareData out{l, j_lo, j_hi, {}, SampledFunction::zeros(f.grid())};
  const FilterEngine fe(f);
  for (int j = j_lo; j <= j_hi; ++j) out.per_j.push_back(fe.apply(shifted_band(j, l)));
  out.Sl = root_sum_squares(out.per_j, f.grid());
  return out;
}

GrowthReport norm_growth_in_shift(const std::vector<SampledFunction>& ensemble, double q,
                                  const std::vector<long>& l_list, int j_lo, int j_hi) {
  if (!(q > 1.0) || !std::isfinite(q)) throw std::invalid_argument("norm_growth_in_shift: q must lie in (1, inf)");
  if (ensemble.empty() || l_list.size() < 2) throw std::invalid_argument("norm_growth_in_shift: need data to fit");
  GrowthReport rep;
  rep.q = q;
  rep.l_list = l_list;
  const std::size_t nf = ensemble.size(), nl = l_list.size();
  std::vector<double> ratios(nf * nl);
  parallel_for(nf * nl, [&](std::size_t idx) {
    const auto& f = ensemble[idx / nl];
    const long l = l_list[idx % nl];
    const auto S = shifted_square_function(f, l, j_lo, j_hi);
    ratios[idx] = lp_norm(S.Sl, q) / lp_norm(f, q);
  });
  std::vector<double> x, y;
  for (std::size_t k = 0; k < nl; ++k) {
    double sup = 0.0;
    for (std::size_t i = 0; i < nf; ++i) sup = std::max(sup, ratios[i * nl + k]);
    rep.sup_ratio.push_back(sup);
    x.push_back(std::log(std::log(std::abs(static_cast<double>(l_list[k])) + 10.0)));
    y.push_back(std::log(sup));
  }
  const auto fit = fit_line(x, y);
  rep.exponent = fit.slope;
  rep.residual = fit.rms_residual;
  const double q_star = std::min(q, q / (q - 1.0));
  rep.predicted = 2.0 / q_star - 1.0;
  return rep;
}

SampledFunction randomized_operator(const SampledFunction& f, long l, const std::vector<int>& signs, int j_lo) {
  const FilterEngine fe(f);
  std::vector<cplx> acc(f.size());
  for (std::size_t k = 0; k < signs.size(); ++k) {
    const auto part = fe.apply(shifted_band(j_lo + static_cast<int>(k), l));
    const double w = signs[k] >= 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * part[i];
  }
  return SampledFunction(f.grid(), std::move(acc));
}

KhintchineReport randomized_fourth_moment(const SampledFunction& f, long l, int j_lo, int j_hi, int draws,
                                          std::uint64_t seed) {
  if (draws < 1) throw std::invalid_argument("randomized_fourth_moment: need at least one draw");
  const auto S = shifted_square_function(f, l, j_lo, j_hi);
  const std::size_t J = S.per_j.size(), N = f.size();
  const double dx = f.grid().dx;
  KhintchineReport rep;
  // E|sum w_j a_j|^4 = A^2 + 4 sum_{i<k} (Re a_i conj(a_k))^2 for Rademacher w.
  for (std::size_t x = 0; x < N; ++x) {
    double A = 0.0, cross_terms = 0.0;
    for (std::size_t i = 0; i < J; ++i) {
      A += std::norm(S.per_j[i][x]);
      for (std::size_t k = i + 1; k < J; ++k) {
        const double re = std::real(S.per_j[i][x] * std::conj(S.per_j[k][x]));
        cross_terms += re * re;
      }
    }
    rep.expectation += (A * A + 4.0 * cross_terms) * dx;
    rep.square_norm += A * A * dx;
  }
  // |Lambda|^4 is invariant under w -> -w, so the first sign is fixed and the
  // remaining patterns are drawn without replacement (exhaustive when the
  // budget covers all of them).
  Rng rng(seed);
  const std::size_t free_signs = J - 1;
  const bool enumerable = free_signs < 63 && (std::uint64_t{1} << free_signs) <= static_cast<std::uint64_t>(draws);
  std::vector<std::uint64_t> patterns;
  if (enumerable) {
    for (std::uint64_t p = 0; p < (std::uint64_t{1} << free_signs); ++p) patterns.push_back(p);
  } else {
    std::set<std::uint64_t> seen;
    const std::uint64_t mask = free_signs >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << free_signs) - 1;
    while (patterns.size() < static_cast<std::size_t>(draws)) {
      const std::uint64_t p = rng.bits() & mask;
      if (seen.insert(p).second) patterns.push_back(p);
    }
  }
  double total = 0.0;
  std::vector<cplx> acc(N);
  for (const std::uint64_t p : patterns) {
    std::fill(acc.begin(), acc.end(), cplx(0.0));
    for (std::size_t i = 0; i < J; ++i) {
      const double w = i == 0 || !((p >> (i - 1)) & 1u) ? 1.0 : -1.0;
      for (std::size_t x = 0; x < N; ++x) acc[x] += w * S.per_j[i][x];
    }
    double s = 0.0;
    for (const auto& v : acc) s += std::norm(v) * std::norm(v);
    total += s * dx;
  }
  rep.monte_carlo = total / static_cast<double>(patterns.size());
  rep.relative_mc_error = rep.expectation > 0.0 ? std::abs(rep.monte_carlo - rep.expectation) / rep.expectation : 0.0;
  rep.khintchine_ratio = rep.square_norm > 0.0 ? rep.expectation / rep.square_norm : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Oscillatory interaction

double c_window(const PhaseProfile& profile) {
  return std::max(std::abs(profile.r(10.0)), 1.0 / std::abs(profile.r(1.0 / 20.0)));
}

double mu_cutoff(double y, double C) { return y > 0.0 ? annular_bump(y, 0.5 / C, 1.0 / C, C, 2.0 * C) : 0.0; }

double nu_cutoff(double y, double C) { return annular_bump(y, 0.5 / C, 1.0 / C, C, 2.0 * C); }

cplx interaction_kernel(const PhaseProfile& profile, int m, int p0, int q0) {
  const double lo = std::ldexp(1.0, m - 10), hi = std::ldexp(1.0, m + 10);
  if (!(p0 > lo && p0 < hi && q0 > lo && q0 < hi))
    throw std::invalid_argument("interaction_kernel: p0 and q0 must lie in (2^{m-10}, 2^{m+10})");
  const double scale = std::ldexp(1.0, m);
  const double C = c_window(profile);
  const double u_lo = 0.1 * scale / std::min(p0, q0);
  const double u_hi = 10.0 * scale / std::max(p0, q0);
  if (!(u_lo < u_hi)) return 0.0;
  const double y_lo = std::max(profile.r(u_lo), 0.5 / C);
  const double y_hi = std::min(profile.r(u_hi), 2.0 * C);
  if (!(y_lo < y_hi)) return 0.0;
  const double dp = static_cast<double>(p0 - q0);
  const double span = std::abs(dp) * std::abs(profile.theta(1.0, y_hi) - profile.theta(1.0, y_lo));
  const int panels = 64 + static_cast<int>(std::ceil(2.0 * span / (2.0 * kPi)));
  const auto sum = gauss_panels_complex(
      [&](double y, double& re, double& im) {
        const double u = profile.r_inverse(y);
        const double mu = mu_cutoff(y, C);
        const double amp = bump_phi(p0 * u / scale) * bump_phi(q0 * u / scale) * mu * mu;
        if (amp == 0.0) {
          re = im = 0.0;
          return;
        }
        const double ph = dp * profile.theta(1.0, y);
        re = amp * std::cos(ph);
        im = amp * std::sin(ph);
      },
      y_lo, y_hi, panels);
  return {sum.re, sum.im};
}

DecayFit interaction_decay_fit(const PhaseProfile& profile, int m) {
  if (m < 4) throw std::invalid_argument("interaction_decay_fit: m must be at least 4");
  const int p0 = 1 << m;
  const double mass = std::abs(interaction_kernel(profile, m, p0, p0));
  DecayFit fit;
  for (int k = 0;; ++k) {
    const int d = static_cast<int>(std::lround(4.0 * std::pow(2.0, 0.5 * k)));
    if (d > (1 << (m - 1))) break;
    if (!fit.separations.empty() && fit.separations.back() == d) continue;
    fit.separations.push_back(d);
  }
  fit.magnitudes.resize(fit.separations.size());
  parallel_for(fit.separations.size(), [&](std::size_t i) {
    fit.magnitudes[i] = std::abs(interaction_kernel(profile, m, p0, p0 + fit.separations[i]));
  });
  // Values within a few thousand ulps of the mass are quadrature noise.
  const double floor = 1e-12 * mass;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < fit.separations.size(); ++i) {
    if (fit.magnitudes[i] <= floor) continue;
    x.push_back(std::log(1.0 + fit.separations[i]));
    y.push_back(std::log(fit.magnitudes[i]));
  }
  fit.points_used = static_cast<int>(x.size());
  if (fit.points_used >= 2) {
    const auto line = fit_line(x, y);
    fit.slope = line.slope;
    fit.residual = line.rms_residual;
  } else {
    fit.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Pointwise oracles

namespace {

PointwiseCheck finish_check(SampledFunction lhs, SampledFunction rhs) {
  PointwiseCheck out{std::move(lhs), std::move(rhs), 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < out.lhs.size(); ++i) {
    out.lhs_max = std::max(out.lhs_max, std::abs(out.lhs[i]));
    out.rhs_max = std::max(out.rhs_max, std::abs(out.rhs[i]));
  }
  const double floor = 1e-12 * out.rhs_max;
  for (std::size_t i = 0; i < out.lhs.size(); ++i) {
    const double r = std::abs(out.rhs[i]);
    if (r > floor && r > 0.0) out.sup_ratio = std::max(out.sup_ratio, std::abs(out.lhs[i]) / r);
  }
  return out;
}

SampledFunction modulus_squared(const SampledFunction& f) {
  std::vector<cplx> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::norm(f[i]);
  return SampledFunction(f.grid(), std::move(v));
}

// |u|^2 convolved with 2^j nu(2^j .)
SampledFunction nu_average(const SampledFunction& u, int j, double C) {
  const double s = std::ldexp(1.0, j);
  const double L = u.grid().length();
  const double reach = 2.0 * C / s;
  // Every filter here acts periodically, so the kernel is periodized as well.
  auto out = circular_convolve(modulus_squared(u), [&](double x) {
    double acc = 0.0;
    const long n_max = static_cast<long>(std::ceil(reach / L)) + 1;
    for (long n = -n_max; n <= n_max; ++n) acc += s * nu_cutoff(s * (x + n * L), C);
    return acc;
  });
  // Both factors are non-negative; clip the FFT round-off.
  std::vector<cplx> v(out.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(0.0, out[i].real());
  return SampledFunction(out.grid(), std::move(v));
}

}  // namespace

PointwiseCheck cancellation_bound_check(const FilterBank& bank, int j, const SampledFunction& f) {
  const Grid& grid = f.grid();
  const FilterEngine fe(f);
  std::vector<cplx> lhs(grid.n);
  for (int p0 = bank.p0_begin(); p0 < bank.p0_end(); ++p0) {
    const auto F = fe.apply(sample_multiplier(grid, [&](double xi) { return bank.f_symbol(j, p0, xi); }));
    for (std::size_t i = 0; i < grid.n; ++i) lhs[i] += std::norm(F[i]);
  }
  const auto u = fe.apply([&](double xi) { return cplx(bank.phi_k(bank.m() + j, xi)); });
  return finish_check(SampledFunction(grid, std::move(lhs)), nu_average(u, j, c_window(bank.profile())));
}

PointwiseCheck windowed_energy_check(const PhaseProfile& profile, const SampledFunction& u, int m, int j) {
  const Grid& grid = u.grid();
  const double C = c_window(profile);
  const auto w = FilterEngine(u).apply([&](double xi) { return cplx(bump_phi(std::ldexp(xi, -(j + m)))); });
  auto lhs = nu_average(w, j, C);

  const auto Mu = hardy_littlewood_max(u);
  std::vector<double> M2(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) M2[i] = std::norm(Mu[i]);
  const double two_m = std::ldexp(1.0, m);
  const long l_lo = static_cast<long>(std::floor(two_m / (2.0 * C))) + 1;
  const long l_hi = static_cast<long>(std::ceil(2.0 * C * two_m)) - 1;
  const long N = static_cast<long>(grid.n);
  std::vector<long> offsets;
  for (long l = l_lo; l <= l_hi; ++l) {
    const long cells = std::lround(std::ldexp(static_cast<double>(l), -(m + j)) / grid.dx);
    offsets.push_back(cells);
    offsets.push_back(-cells);
  }
  std::vector<cplx> rhs(grid.n);
  parallel_for(grid.n, [&](std::size_t i) {
    double s = 0.0;
    for (long off : offsets) {
      long k = (static_cast<long>(i) - off) % N;
      if (k < 0) k += N;
      s += M2[static_cast<std::size_t>(k)];
    }
    rhs[i] = s / two_m;
  });
  return finish_check(std::move(lhs), SampledFunction(grid, std::move(rhs)));
}

const KappaConstants& kappa_constants() {
  static const KappaConstants constants = [] {
    // kappa = phi^ sampled at y_k = k dy with dy = 2 pi / 256, so that the
    // residues mod 256 are exactly the translates y + 2 pi k.
    constexpr std::size_t period = 256;
    Grid g;
    g.n = std::size_t{1} << 18;
    g.dx = static_cast<double>(period) / static_cast<double>(g.n);
    g.x0 = -0.5 * static_cast<double>(period);
    const auto spectrum = forward_transform(SampledFunction::from(g, [](double u) { return cplx(bump_phi(u)); }));
    const double dy = spectrum.dxi;
    std::vector<double> periodized(period, 0.0);
    for (std::size_t k = 0; k < g.n; ++k) periodized[k % period] += std::abs(spectrum.coeffs[k]);
    KappaConstants c;
    for (double v : periodized) c.C1 += v * v * dy;
    c.C1 *= 2.0 * kPi;
    // Least decreasing radial majorant, integrated with an upper Riemann sum.
    const std::size_t half = g.n / 2;
    std::vector<double> mag(half);
    for (std::size_t k = 0; k < half; ++k)
      mag[k] = std::max(std::abs(spectrum.coeffs[k]), std::abs(spectrum.coeffs[k == 0 ? 0 : g.n - k]));
    double run = 0.0, integral = 0.0;
    for (std::size_t k = half; k-- > 0;) {
      run = std::max(run, mag[k]);
      integral += run * dy;
    }
    c.C2 = 2.0 * integral;
    return c;
  }();
  return constants;
}

DualCheck dual_pointwise_check(const FilterBank& bank, int j, const SampledFunction& g, const SampledFunction& h) {
  if (bank.m() < 4) throw std::invalid_argument("dual_pointwise_check: needs m >= 4");
  if (!(g.grid() == h.grid())) throw std::invalid_argument("dual_pointwise_check: g and h live on different grids");
  const Grid& grid = g.grid();
  const FilterEngine ge(g), he(h);
  const double D = bank.D(j);
  const double two_m = std::ldexp(1.0, bank.m());
  const bool mir = bank.mirrored();
  const auto u = he.apply([&](double eta) { return cplx(bump_phi(D * (mir ? -eta : eta) / two_m)); });

  std::vector<cplx> lhs(grid.n), energy(grid.n);
  for (int p0 = bank.p0_begin(); p0 < bank.p0_end(); ++p0) {
    const auto m = sample_multiplier(grid, [&](double eta) { return cplx(bank.phi_jp0(j, p0, eta)); });
    const auto G = ge.apply(m);
    const auto H = he.apply(m);
    for (std::size_t i = 0; i < grid.n; ++i) {
      lhs[i] += std::norm(G[i] * H[i]);
      energy[i] += std::norm(G[i]);
    }
  }
  const auto& k = kappa_constants();
  const double ginf = lp_norm(g, kInfExponent);
  const auto Mu = hardy_littlewood_max(u);
  std::vector<cplx> rhs(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) rhs[i] = k.C1 * k.C2 * k.C2 * ginf * ginf * std::norm(Mu[i]);

  DualCheck out;
  out.C1 = k.C1;
  out.C2 = k.C2;
  out.pointwise = finish_check(SampledFunction(grid, std::move(lhs)), SampledFunction(grid, std::move(rhs)));
  double emax = 0.0;
  for (const auto& e : energy) emax = std::max(emax, e.real());
  out.l2_linf_ratio = ginf > 0.0 ? emax / (ginf * ginf) : 0.0;
  out.pass = out.pointwise.sup_ratio <= 1.0 && out.l2_linf_ratio <= k.C1;
  return out;
}

double rubio_de_francia_ratio(const FilterBank& bank, const SampledFunction& h, double p_prime, int j_hi) {
  const Grid& grid = h.grid();
  const FilterEngine he(h);
  std::vector<double> acc(grid.n, 0.0);
  for (int j = 0; j <= j_hi; ++j)
    for (int p0 = bank.p0_begin(); p0 < bank.p0_end(); ++p0) {
      const auto H = he.apply([&](double eta) { return cplx(bank.phi_jp0(j, p0, eta)); });
      for (std::size_t i = 0; i < grid.n; ++i) acc[i] += std::norm(H[i]);
    }
  std::vector<cplx> v(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) v[i] = std::sqrt(acc[i]);
  const double denom = lp_norm(h, p_prime);
  return denom > 0.0 ? lp_norm(SampledFunction(grid, std::move(v)), p_prime) / denom : 0.0;
}

double weak_type_constant(const SampledFunction& f, long l, int j_lo, int j_hi, const std::vector<double>& lambdas) {
  const auto S = shifted_square_function(f, l, j_lo, j_hi);
  const double f1 = lp_norm(f, 1.0);
  if (!(f1 > 0.0)) return 0.0;
  const double lg = std::log(std::abs(static_cast<double>(l)) + 10.0);
  double worst = 0.0;
  for (double lambda : lambdas) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < S.Sl.size(); ++i)
      if (S.Sl[i].real() > lambda) ++count;
    const double measure = static_cast<double>(count) * f.grid().dx;
    worst = std::max(worst, measure * lambda / (lg * f1));
  }
  return worst;
}

}  // namespace bhtlab
