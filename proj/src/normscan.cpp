#include "bhtlab/normscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "bhtlab/numerics.hpp"

namespace bhtlab {

// ---------------------------------------------------------------------------
// Triangle

const char* to_string(TriangleRegion r) {
  switch (r) {
    case TriangleRegion::interior: return "interior";
    case TriangleRegion::open_AB: return "AB";
    case TriangleRegion::open_AC: return "AC";
    case TriangleRegion::open_BC: return "BC";
    case TriangleRegion::vertex_A: return "A";
    case TriangleRegion::vertex_B: return "B";
    case TriangleRegion::vertex_C: return "C";
  }
  return "?";
}

const char* to_string(Edge e) { return e == Edge::AC ? "AC" : "AB"; }

TriangleMembership triangle_membership(const HolderTriple& t) {
  t.validate();
  TriangleMembership out;
  out.a = 1.0 / t.p;
  out.b = 1.0 / t.q;
  out.c = 1.0 / t.r_prime;
  constexpr double eps = 1e-12;
  const bool za = out.a < eps, zb = out.b < eps, zc = out.c < eps;
  const int zeros = za + zb + zc;
  if (zeros == 0)
    out.region = TriangleRegion::interior;
  else if (zeros == 2)
    out.region = !za ? TriangleRegion::vertex_A : !zb ? TriangleRegion::vertex_B : TriangleRegion::vertex_C;
  else
    out.region = zc ? TriangleRegion::open_AB : zb ? TriangleRegion::open_AC : TriangleRegion::open_BC;
  out.inside_omega = out.region == TriangleRegion::interior || out.region == TriangleRegion::open_AB ||
                     out.region == TriangleRegion::open_AC;
  return out;
}

HolderTriple edge_triple(Edge e, double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("edge_triple: p must lie in (1, inf)");
  const double pp = p / (p - 1.0);
  return e == Edge::AC ? HolderTriple{p, kInfExponent, pp} : HolderTriple{p, pp, kInfExponent};
}

// ---------------------------------------------------------------------------
// Principal value

namespace {

using Rule = boost::math::quadrature::gauss<double, 20>;

template <class F>
cplx gauss20(const F& fn, double a, double b) {
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  cplx s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      s += w[i] * fn(mid);
    } else {
      s += w[i] * (fn(mid - half * x[i]) + fn(mid + half * x[i]));
    }
  }
  return s * half;
}

template <class F>
cplx adaptive_gauss(const F& fn, double a, double b, cplx whole, double tol, int depth) {
  const double mid = 0.5 * (a + b);
  const cplx left = gauss20(fn, a, mid), right = gauss20(fn, mid, b);
  if (depth <= 0 || std::abs(left + right - whole) <= tol) return left + right;
  return adaptive_gauss(fn, a, mid, left, 0.5 * tol, depth - 1) + adaptive_gauss(fn, mid, b, right, 0.5 * tol, depth - 1);
}

}  // namespace

BHTResult bht_direct(const Curve& c, const ComplexFn& f, const ComplexFn& g, const Grid& grid,
                     const PVParams& params) {
  grid.validate();
  const double T = params.t_max > 0.0 ? params.t_max : grid.length();
  if (!(params.eps0 > 0.0 && params.eps0 < T)) throw std::invalid_argument("bht_direct: need 0 < eps0 < t_max");
  const double panel = 0.25;
  const int panels = std::max(1, static_cast<int>(std::ceil((T - params.eps0) / panel)));
  const double tol_panel = 0.1 * params.tolerance / panels;

  std::vector<cplx> out(grid.n);
  std::vector<double> delta(grid.n, 0.0);
  std::vector<char> failed(grid.n, 0);
  parallel_for(grid.n, [&](std::size_t i) {
    const double x = grid.x(i);
    auto paired = [&](double t) {
      return (f(x - t) * g(x + c(t)) - f(x + t) * g(x + c(-t))) / t;
    };
    cplx value = 0.0;
    const double h = (T - params.eps0) / panels;
    for (int k = 0; k < panels; ++k) {
      const double a = params.eps0 + k * h, b = a + h;
      value += adaptive_gauss(paired, a, b, gauss20(paired, a, b), tol_panel, 30);
    }
    // Inner shells [eps/2, eps].  The paired integrand is bounded at 0, so
    // each shell is about half the previous one and the last shell is also
    // the size of the remaining tail.
    double eps = params.eps0;
    cplx estimate = value, last = 0.0;
    double step = std::numeric_limits<double>::infinity();
    for (int k = 0; k < params.max_halvings && !(step < params.tolerance); ++k) {
      const cplx shell = gauss20(paired, 0.5 * eps, eps);
      value += shell;
      eps *= 0.5;
      last = estimate;
      estimate = value + shell;  // Richardson: the tail below eps is about one more shell
      if (k > 0) step = std::abs(estimate - last);
    }
    out[i] = estimate;
    delta[i] = step;
    failed[i] = !(step < params.tolerance);
  });
  BHTResult res;
  res.value = SampledFunction(grid, std::move(out));
  for (std::size_t i = 0; i < grid.n; ++i) {
    if (failed[i]) res.flagged.push_back(i);
    res.worst_delta = std::max(res.worst_delta, delta[i]);
  }
  return res;
}

cplx trilinear_direct(const Curve& c, const ComplexFn& f, const ComplexFn& g, const ComplexFn& h, const Grid& grid,
                      const PVParams& params) {
  const auto H = bht_direct(c, f, g, grid, params).value;
  cplx s = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) s += H[i] * h(grid.x(i));
  return s * grid.dx;
}

SampledFunction hilbert_oracle(const ComplexFn& f, const Grid& grid, int pad, int refine) {
  auto pow2 = [](int v) { return v >= 1 && (v & (v - 1)) == 0; };
  if (!pow2(pad) || !pow2(refine)) throw std::invalid_argument("hilbert_oracle: pad and refine must be powers of two");
  Grid big = grid;
  big.dx = grid.dx / refine;
  big.n = grid.n * static_cast<std::size_t>(pad) * static_cast<std::size_t>(refine);
  const std::size_t offset = big.n / 2 - grid.n * static_cast<std::size_t>(refine) / 2;
  big.x0 = grid.x0 - static_cast<double>(offset) * big.dx;
  const auto Hf = multiply_spectrum(SampledFunction::from(big, f), [](double xi) {
    return xi == 0.0 ? cplx(0.0) : cplx(0.0, xi > 0.0 ? -kPi : kPi);
  });
  std::vector<cplx> v(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) v[i] = Hf[offset + i * static_cast<std::size_t>(refine)];
  return SampledFunction(grid, std::move(v));
}

// ---------------------------------------------------------------------------
// Scans

double lambda_sup_ratio(const Curve& c, int m, const HolderTriple& t, const ScanOptions& opts) {
  t.validate();
  if (opts.ensemble_size < 1 || opts.j_list.empty()) throw std::invalid_argument("lambda_sup_ratio: empty ensemble");
  const FilterBank bank(c, m);
  std::vector<double> ratios(static_cast<std::size_t>(opts.ensemble_size), 0.0);
  parallel_for(ratios.size(), [&](std::size_t k) {
    const int j = opts.j_list[k % opts.j_list.size()];
    const Grid grid = bank.grid_for(j, opts.n);
    const std::uint64_t member_seed = opts.seed * 1000003ULL + 7919ULL * k + static_cast<std::uint64_t>(m);
    const auto models = band_ensemble(bank, j, grid, member_seed, 1).front();
    const auto f = models.f.sample(grid), g = models.g.sample(grid);
    if (opts.dual_h) {
      const double denom = lp_norm(f, t.p) * lp_norm(g, t.q);
      if (!(denom > 0.0)) return;
      std::vector<cplx> acc(grid.n, 0.0);
      for (int jj : active_scales(bank, f, g)) {
        const auto T = apply_Tjm(bank, f, g, jj);
        for (std::size_t i = 0; i < grid.n; ++i) acc[i] += T[i];
      }
      // r is the exponent dual to r'
      const double r = std::isinf(t.r_prime) ? 1.0 : t.r_prime == 1.0 ? kInfExponent : t.r_prime / (t.r_prime - 1.0);
      ratios[k] = lp_norm(SampledFunction(grid, std::move(acc)), r) / denom;
      return;
    }
    const auto h = models.h.sample(grid);
    const double denom = lp_norm(f, t.p) * lp_norm(g, t.q) * lp_norm(h, t.r_prime);
    if (denom > 0.0) ratios[k] = std::abs(lambda_m_plus(bank, f, g, h).value) / denom;
  });
  return *std::max_element(ratios.begin(), ratios.end());
}

std::vector<ScanResult> scan_edge(const Curve& c, Edge edge, const std::vector<double>& p_list,
                                  const std::vector<int>& m_list, const ScanOptions& opts) {
  std::vector<ScanResult> out;
  for (double p : p_list) {
    const auto t = edge_triple(edge, p);
    for (int m : m_list) {
      ScanResult r;
      r.triple = t;
      r.m = m;
      r.sup_ratio = lambda_sup_ratio(c, m, t, opts);
      r.ensemble_size = opts.ensemble_size;
      r.seed = opts.seed;
      out.push_back(r);
    }
  }
  return out;
}

EnvelopeReport edge_envelope(const std::vector<ScanResult>& results, double p) {
  std::vector<ScanResult> rows;
  for (const auto& r : results)
    if (std::abs(r.triple.p - p) < 1e-12) rows.push_back(r);
  if (rows.size() < 2) throw std::invalid_argument("edge_envelope: need at least two m values");
  std::sort(rows.begin(), rows.end(), [](const ScanResult& a, const ScanResult& b) { return a.m < b.m; });
  EnvelopeReport rep;
  rep.p = p;
  const double pp = p / (p - 1.0);
  rep.exponent = 2.0 / pp - 1.0;
  auto w = [&](int m) { return 1.0 + std::pow(static_cast<double>(m), rep.exponent); };
  rep.C = std::max(rows[0].sup_ratio / w(rows[0].m), rows[1].sup_ratio / w(rows[1].m));
  double lo = rows[0].sup_ratio, hi = rows[0].sup_ratio;
  rep.within = true;
  for (const auto& r : rows) {
    lo = std::min(lo, r.sup_ratio);
    hi = std::max(hi, r.sup_ratio);
    rep.excess = std::max(rep.excess, r.sup_ratio / (rep.C * w(r.m)));
    if (r.sup_ratio > 2.0 * rep.C * w(r.m)) rep.within = false;
  }
  rep.spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  return rep;
}

DecayReport fit_decay_at_L2point(const Curve& c, const std::vector<int>& m_list, const ScanOptions& opts) {
  if (m_list.size() < 3) throw std::invalid_argument("fit_decay_at_L2point: need at least three m values");
  const HolderTriple t{2.0, 2.0, kInfExponent};
  DecayReport rep;
  std::vector<double> x, y;
  for (int m : m_list) {
    const double r = lambda_sup_ratio(c, m, t, opts);
    if (!(r > 0.0)) throw std::invalid_argument("fit_decay_at_L2point: degenerate ensemble (zero ratio)");
    rep.m.push_back(m);
    rep.sup_ratio.push_back(r);
    x.push_back(m);
    y.push_back(std::log2(r));
  }
  const auto fit = fit_line(x, y);
  rep.alpha = -fit.slope;
  rep.residual = fit.rms_residual;
  return rep;
}

}  // namespace bhtlab
