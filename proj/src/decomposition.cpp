#include "bhtlab/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bhtlab/numerics.hpp"

namespace bhtlab {

void HolderTriple::validate() const {
  for (double e : {p, q, r_prime})
    if (!(e >= 1.0)) throw std::invalid_argument("Holder exponents must lie in [1, inf]");
  const double s = 1.0 / p + 1.0 / q + 1.0 / r_prime;
  if (std::abs(s - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "1/p + 1/q + 1/r' = " << s << ", not 1";
    throw std::invalid_argument(msg.str());
  }
}

// ---------------------------------------------------------------------------
// Support intervals

SupportInterval support_interval(const Curve& c, int j, int p0) {
  const double s = std::ldexp(1.0, -j);
  const double D = s * c.deriv(s);
  SupportInterval out;
  out.j = j;
  out.p0 = p0;
  double a = (p0 - 10.0) / D, b = (p0 - 0.1) / D;
  double e = (p0 + 0.1) / D, f = (p0 + 10.0) / D;
  if (a > b) std::swap(a, b);
  if (e > f) std::swap(e, f);
  if (a > e) {
    std::swap(a, e);
    std::swap(b, f);
  }
  out.lo1 = a;
  out.hi1 = b;
  out.lo2 = e;
  out.hi2 = f;
  return out;
}

OverlapReport overlap_count(const Curve& c, int m, int j_max) {
  if (m < 0 || j_max < 0) throw std::invalid_argument("overlap_count: m and j_max must be >= 0");
  struct Event {
    double x;
    int delta;  // +1 opens, -1 closes; closed intervals open before they close at equal x
    int j;
  };
  std::vector<Event> events;
  for (int j = 0; j <= j_max; ++j)
    for (int p0 = 1 << m; p0 < (1 << (m + 1)); ++p0) {
      const auto a = support_interval(c, j, p0);
      events.push_back({a.lo1, +1, j});
      events.push_back({a.hi1, -1, j});
      events.push_back({a.lo2, +1, j});
      events.push_back({a.hi2, -1, j});
    }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.x != b.x) return a.x < b.x;
    return a.delta > b.delta;
  });
  OverlapReport rep;
  std::map<int, int> per_j;
  int current = 0;
  for (const auto& ev : events) {
    current += ev.delta;
    int& slot = per_j[ev.j];
    slot += ev.delta;
    if (slot == 0) per_j.erase(ev.j);
    if (ev.delta > 0) {
      if (current > rep.count) {
        rep.count = current;
        rep.where = ev.x;
      }
      rep.scale_multiplicity = std::max(rep.scale_multiplicity, static_cast<int>(per_j.size()));
      rep.per_scale = std::max(rep.per_scale, per_j.count(ev.j) ? per_j.at(ev.j) : 0);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// FilterBank

FilterBank::FilterBank(const Curve& c, int m, int j_max, bool mirrored)
    : FilterBank(std::make_shared<const PhaseProfile>(c), m, j_max, mirrored) {}

FilterBank::FilterBank(std::shared_ptr<const PhaseProfile> profile, int m, int j_max, bool mirrored)
    : profile_(std::move(profile)), m_(m), j_max_(j_max), mirrored_(mirrored) {
  if (m < 0 || m > 20) throw std::invalid_argument("FilterBank: m must lie in [0, 20]");
  if (j_max < 0) throw std::invalid_argument("FilterBank: j_max must be >= 0");
}

FilterBank FilterBank::mirror() const { return FilterBank(profile_, m_, j_max_, !mirrored_); }

double FilterBank::D(int j) const {
  const double s = std::ldexp(1.0, -j);
  return s * curve().deriv(s);
}

double FilterBank::phi_k(int k, double xi) const { return bump_phi(std::ldexp(mirrored_ ? -xi : xi, -k)); }

double FilterBank::phi_jp0(int j, int p0, double eta) const {
  if (mirrored_) eta = -eta;
  return bump_phi(D(j) * eta - p0);
}

cplx FilterBank::psi(int j, int p0, double xi) const {
  if (mirrored_) xi = -xi;
  const double amp = bump_phi(std::ldexp(xi, -(m_ + j)));
  if (amp == 0.0) return 0.0;
  const double s = xi / (std::ldexp(1.0, j) * p0);
  if (!profile_->R_defined(s)) return 0.0;
  const double phase = -p0 * profile_->R(s);
  const cplx value = std::pow(2.0, -0.5 * m_) * amp * std::polar(1.0, phase);
  return mirrored_ ? std::conj(value) : value;
}

double FilterBank::h_reach(int j) const { return 10.0 + 10.0 * std::abs(D(j)) * std::ldexp(1.0, m_ + j); }

double FilterBank::h_filter(int j, int p0, double zeta) const {
  if (mirrored_) zeta = -zeta;
  const double w = h_reach(j);
  return plateau_bump(D(j) * (-zeta) - p0, w, 2.0 * w);
}

cplx FilterBank::f_symbol(int j, int p0, double xi) const { return phi_k(m_ + j, xi) * psi(j, p0, xi); }

Grid FilterBank::grid_for(int j, std::size_t n) const {
  const double max_xi = 10.0 * std::ldexp(1.0, m_ + j);
  const double max_eta = (std::ldexp(1.0, m_ + 1) + 10.0) / std::abs(D(j));
  const double nyq = 1.25 * (max_xi + max_eta);
  Grid g;
  g.n = n;
  g.dx = kPi / nyq;
  g.x0 = -0.5 * static_cast<double>(n) * g.dx;
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// Forms

namespace {

std::vector<cplx> sample(const Grid& grid, const std::function<cplx(double)>& s) { return sample_multiplier(grid, s); }

}  // namespace

SampledFunction apply_Tjm(const FilterBank& bank, const SampledFunction& f, const SampledFunction& g, int j,
                          int p0_lo, int p0_hi) {
  if (!(f.grid() == g.grid())) throw std::invalid_argument("apply_Tjm: f and g live on different grids");
  const Grid& grid = f.grid();
  const FilterEngine fe(f), ge(g);
  std::vector<cplx> acc(grid.n);
  for (int p0 = p0_lo; p0 < p0_hi; ++p0) {
    const auto F = fe.apply(sample(grid, [&](double xi) { return bank.psi(j, p0, xi); }));
    const auto G = ge.apply(sample(grid, [&](double eta) { return cplx(bank.phi_jp0(j, p0, eta)); }));
    for (std::size_t i = 0; i < grid.n; ++i) acc[i] += F[i] * G[i];
  }
  return SampledFunction(grid, std::move(acc));
}

SampledFunction apply_Tjm(const FilterBank& bank, const SampledFunction& f, const SampledFunction& g, int j) {
  return apply_Tjm(bank, f, g, j, bank.p0_begin(), bank.p0_end());
}

cplx lambda_jm_spatial(const FilterBank& bank, const SampledFunction& f, const SampledFunction& g,
                       const SampledFunction& h, int j) {
  if (!(f.grid() == g.grid()) || !(f.grid() == h.grid()))
    throw std::invalid_argument("lambda_jm_spatial: inputs live on different grids");
  const Grid& grid = f.grid();
  const FilterEngine fe(f), ge(g), he(h);
  cplx total = 0.0;
  for (int p0 = bank.p0_begin(); p0 < bank.p0_end(); ++p0) {
    const auto F = fe.apply(sample(grid, [&](double xi) { return bank.f_symbol(j, p0, xi); }));
    const auto G = ge.apply(sample(grid, [&](double eta) { return cplx(bank.phi_jp0(j, p0, eta)); }));
    const auto H = he.apply(sample(grid, [&](double zeta) { return cplx(bank.h_filter(j, p0, zeta)); }));
    cplx acc = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i) acc += F[i] * G[i] * H[i];
    total += acc * grid.dx;
  }
  return total;
}

cplx lambda_jm_spectral(const FilterBank& bank, const SampledFunction& f, const SampledFunction& g,
                        const SampledFunction& h, int j) {
  if (!(f.grid() == g.grid()) || !(f.grid() == h.grid()))
    throw std::invalid_argument("lambda_jm_spectral: inputs live on different grids");
  const Grid& grid = f.grid();
  const auto fh = forward_transform(f);
  const auto gh = forward_transform(g);
  const auto hh = forward_transform(h);
  const std::size_t n = grid.n;
  const double dxi = grid.dxi();
  const double period = static_cast<double>(n) * dxi;
  // Frequencies that alias by a multiple s of N dxi pick up e^{i s N dxi x0}.
  const cplx alias_phase = std::polar(1.0, period * grid.x0);

  cplx total = 0.0;
  std::vector<std::pair<std::size_t, cplx>> a, b;
  for (int p0 = bank.p0_begin(); p0 < bank.p0_end(); ++p0) {
    a.clear();
    b.clear();
    for (std::size_t k = 0; k < n; ++k) {
      const cplx v = fh.coeffs[k] * bank.f_symbol(j, p0, grid.xi(k));
      if (v != 0.0) a.emplace_back(k, v);
      const cplx w = gh.coeffs[k] * bank.phi_jp0(j, p0, grid.xi(k));
      if (w != 0.0) b.emplace_back(k, w);
    }
    cplx acc = 0.0;
    for (const auto& [k, av] : a) {
      cplx row = 0.0;
      for (const auto& [l, bv] : b) {
        const std::size_t q = (2 * n - k - l) % n;
        const double zeta = grid.xi(q);
        cplx term = bv * hh.coeffs[q];
        const double wrap = (grid.xi(k) + grid.xi(l) + zeta) / period;
        const long s = std::lround(wrap);
        if (s == 1)
          term *= alias_phase;
        else if (s == -1)
          term *= std::conj(alias_phase);
        row += term;
      }
      acc += av * row;
    }
    total += acc;
  }
  return total * (2.0 * kPi * dxi * dxi);
}

TrilinearRecord make_record(int j, int m, cplx value, LambdaMethod method, const HolderTriple& triple,
                            const SampledFunction& f, const SampledFunction& g, const SampledFunction& h) {
  triple.validate();
  TrilinearRecord rec;
  rec.j = j;
  rec.m = m;
  rec.value = value;
  rec.method = method;
  rec.triple = triple;
  const double denom = lp_norm(f, triple.p) * lp_norm(g, triple.q) * lp_norm(h, triple.r_prime);
  rec.ratio = denom > 0.0 ? std::abs(value) / denom : 0.0;
  return rec;
}

std::vector<int> active_scales(const FilterBank& bank, const SampledFunction& f, const SampledFunction& g) {
  const Grid& grid = f.grid();
  const FilterEngine fe(f), ge(g);
  double f_total = 0.0, g_total = 0.0;
  std::vector<double> fe2(grid.n), ge2(grid.n);
  for (std::size_t k = 0; k < grid.n; ++k) {
    fe2[k] = std::norm(fe.coefficient(k));
    ge2[k] = std::norm(ge.coefficient(k));
    f_total += fe2[k];
    g_total += ge2[k];
  }
  std::vector<int> out;
  if (f_total == 0.0 || g_total == 0.0) return out;
  const double nyq = grid.nyquist();
  for (int j = 0; j <= bank.j_max(); ++j) {
    if (std::ldexp(1.0, bank.m() + j) / 10.0 >= nyq) break;
    const double g_low = (bank.p0_begin() - 10.0) / std::abs(bank.D(j));
    if (g_low >= nyq) break;
    double f_band = 0.0, g_band = 0.0;
    for (std::size_t k = 0; k < grid.n; ++k) {
      const double xi = grid.xi(k);
      if (bank.phi_k(bank.m() + j, xi) != 0.0) f_band += fe2[k];
      const double v = bank.D(j) * (bank.mirrored() ? -xi : xi);
      if (v > bank.p0_begin() - 10.0 && v < bank.p0_end() + 10.0) g_band += ge2[k];
    }
    if (f_band > 1e-28 * f_total && g_band > 1e-28 * g_total) out.push_back(j);
  }
  return out;
}

LambdaSum lambda_m_plus(const FilterBank& bank, const SampledFunction& f, const SampledFunction& g,
                        const SampledFunction& h) {
  LambdaSum out;
  out.active_j = active_scales(bank, f, g);
  out.per_j.resize(out.active_j.size());
  parallel_for(out.active_j.size(), [&](std::size_t i) { out.per_j[i] = lambda_jm_spatial(bank, f, g, h, out.active_j[i]); });
  for (const auto& v : out.per_j) {
    out.value += v;
    out.sum_abs += std::abs(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chirp kernel

ChirpComparison chirp_kernel(const FilterBank& bank, int p0, int j, std::size_t n) {
  const PhaseProfile& prof = bank.profile();
  const int m = bank.m();
  // Frequencies up to 10 2^{m+j}; the kernel lives where |r^{-1}(2^j x)| is
  // at most 10 2^m / p0.
  const double nyq = 1.25 * 10.0 * std::ldexp(1.0, m + j);
  const double u_max = 10.0 * std::ldexp(1.0, m) / p0;
  double y_max = std::max(std::abs(prof.r(u_max)), prof.R_defined(-u_max) ? std::abs(prof.r(-u_max)) : 0.0);
  Grid grid;
  grid.n = n;
  grid.dx = kPi / nyq;
  grid.x0 = -0.5 * static_cast<double>(n) * grid.dx;
  grid.validate();
  if (2.0 * y_max * std::ldexp(1.0, -j) > -grid.x0)
    throw std::invalid_argument("chirp_kernel: grid too small for the kernel support; increase n");

  Spectrum s;
  s.grid = grid;
  s.dxi = grid.dxi();
  s.coeffs.resize(n);
  for (std::size_t k = 0; k < n; ++k) s.coeffs[k] = bank.psi(j, p0, grid.xi(k));
  // psi is the Fourier transform of the kernel, so the kernel is its inverse transform.
  auto numeric = inverse_transform(s);

  const double R0 = prof.R_defined(0.0) ? prof.R(0.0) : 0.0;
  std::vector<cplx> closed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = std::ldexp(grid.x(i), j);
    const double u = prof.r_inverse(y);
    const double amp = bump_phi(p0 * u / std::ldexp(1.0, m));
    if (amp == 0.0 || !prof.R_defined(u)) continue;
    const double rp = r_profile_deriv(prof.curve(), kLimitScale, u);
    const double sgn = rp > 0.0 ? 1.0 : -1.0;
    double theta;
    try {
      theta = prof.theta(p0, y);
    } catch (const std::domain_error&) {
      continue;
    }
    const double phase = theta - p0 * R0 - 0.25 * kPi * sgn;
    closed[i] = std::pow(2.0, -0.5 * m) * std::ldexp(1.0, j) * std::sqrt(2.0 * kPi * p0 / std::abs(rp)) * amp *
                std::polar(1.0, phase);
  }
  ChirpComparison out{numeric, SampledFunction(grid, std::move(closed)), 0.0, 0.0};
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::abs(out.numeric[i] - out.closed_form[i]);
    out.max_deviation = std::max(out.max_deviation, d);
    num += d * d;
    den += std::norm(out.numeric[i]);
  }
  out.relative_l2_deviation = den > 0.0 ? std::sqrt(num / den) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Band-targeted triples

std::vector<TripleModels> band_ensemble(const FilterBank& bank, int j, const Grid& grid, std::uint64_t seed,
                                        int count, bool real_valued) {
  Rng rng(seed);
  const double L = -grid.x0;
  const double D = bank.D(j);
  const double sgn = bank.mirrored() ? -1.0 : 1.0;
  std::vector<TripleModels> out;
  for (int member = 0; member < count; ++member) {
    std::vector<Atom> fa, ga, ha;
    for (int i = 0; i < 3; ++i) {
      double wf = 0.0, wg = 0.0, centre = 0.0, shift = 0.0;
      // Redraw until the f atom, moved back by the chirp delay, still sits
      // well inside the grid; otherwise its samples vanish.
      for (int attempt = 0; attempt < 256; ++attempt) {
        wf = rng.sign() * rng.uniform(0.3, 6.0) * std::ldexp(1.0, bank.m() + j);
        wg = sgn * rng.uniform(bank.p0_begin(), bank.p0_end()) / D;
        // The three atoms of one group share a centre so their product is not
        // negligible; frequencies add up to zero so the pairing is resonant.
        centre = rng.uniform(-L / 3.0, L / 3.0);
        // The chirp moves the f piece by about 2^-j r(xi / (2^j p0)); start the
        // f atom that much earlier so the filtered piece lands on the others.
        shift = 0.0;
        const double s = sgn * wf / (std::ldexp(1.0, j) * std::abs(wg * D));
        if (bank.profile().R_defined(s)) shift = std::ldexp(bank.profile().r(s), -j) * sgn;
        if (std::abs(centre - shift) <= 0.6 * L) break;
      }
      const double wh = -(wf + wg);
      for (auto [list, w] : {std::pair{&fa, wf}, std::pair{&ga, wg}, std::pair{&ha, wh}}) {
        Atom a;
        a.amp = std::polar(rng.uniform(0.5, 1.5), rng.uniform(0.0, 2.0 * kPi));
        a.center = centre + rng.uniform(-L / 24.0, L / 24.0) - (list == &fa ? shift : 0.0);
        a.width = rng.uniform(L / 48.0, L / 12.0);
        a.omega = w;
        list->push_back(a);
        if (real_valued) {
          Atom b = a;
          b.amp = std::conj(a.amp);
          b.omega = -a.omega;
          list->push_back(b);
        }
      }
    }
    out.push_back({FunctionModel(fa), FunctionModel(ga), FunctionModel(ha)});
  }
  return out;
}

}  // namespace bhtlab
