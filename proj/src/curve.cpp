#include "bhtlab/curve.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <mutex>
#include <regex>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "bhtlab/numerics.hpp"

namespace bhtlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// d^k/dt^k of |t|^alpha |log|t||^beta at t > 0, k = 0, 1, 2.
double term_positive(const CurveTerm& term, double t, int order) {
  const double a = term.alpha;
  const double b = term.beta;
  if (b == 0.0) {
    switch (order) {
      case 0: return std::pow(t, a);
      case 1: return a * std::pow(t, a - 1.0);
      default: return a * (a - 1.0) * std::pow(t, a - 2.0);
    }
  }
  const double lg = std::log(t);
  const double L = std::abs(lg);
  const double s = lg >= 0.0 ? 1.0 : -1.0;
  switch (order) {
    case 0: return std::pow(t, a) * std::pow(L, b);
    case 1: return std::pow(t, a - 1.0) * (a * std::pow(L, b) + b * s * std::pow(L, b - 1.0));
    default: {
      const double first = a * std::pow(L, b) + b * s * std::pow(L, b - 1.0);
      const double dfirst = a * b * s * std::pow(L, b - 1.0) + b * (b - 1.0) * std::pow(L, b - 2.0);
      return std::pow(t, a - 2.0) * ((a - 1.0) * first + dfirst);
    }
  }
}

double term_value(const CurveTerm& term, double t, int order) {
  const double v = term_positive(term, std::abs(t), order);
  if (t > 0.0) return term.coeff * v;
  // Even terms: f(-t) = f(t); odd terms: f(-t) = -f(t).  Differentiating
  // flips the parity once per order.
  const bool odd_result = term.odd != (order % 2 == 1);
  return term.coeff * (odd_result ? -v : v);
}

double sum_terms(const std::vector<CurveTerm>& terms, double t, int order) {
  double acc = 0.0;
  for (const auto& term : terms) acc += term_value(term, t, order);
  return acc;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

Regime regime_of_terms(const std::vector<CurveTerm>& terms) {
  // The term with the smallest exponent dominates near the origin.
  const auto lowest = std::min_element(terms.begin(), terms.end(),
                                       [](const CurveTerm& a, const CurveTerm& b) { return a.alpha < b.alpha; });
  return lowest->alpha > 1.0 ? Regime::derivative_vanishes_at_zero : Regime::derivative_blows_up_at_zero;
}

Curve parse_poly(const std::string& body) {
  std::string s;
  for (char ch : body)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.empty()) throw CurveRejected("poly: empty polynomial");

  // Split into signed monomials.
  std::vector<std::string> pieces;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char ch = s[i];
    const bool exponent_sign = i > 0 && s[i - 1] == '^';
    const bool mantissa_sign = i > 0 && (s[i - 1] == 'e' || s[i - 1] == 'E');
    if ((ch == '+' || ch == '-') && !cur.empty() && !exponent_sign && !mantissa_sign) {
      pieces.push_back(cur);
      cur.clear();
    }
    cur += ch;
  }
  if (!cur.empty()) pieces.push_back(cur);

  static const std::regex mono(R"(^([+-]?)(?:((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\*?)?(t(?:\^(\d+))?)?$)");
  std::vector<double> coeffs;
  for (const auto& piece : pieces) {
    std::smatch m;
    if (!std::regex_match(piece, m, mono) || (!m[2].matched && !m[3].matched))
      throw CurveRejected("poly: cannot parse term '" + piece + "'");
    double c = m[2].matched ? std::stod(m[2].str()) : 1.0;
    if (m[1].str() == "-") c = -c;
    int d = 0;
    if (m[3].matched) d = m[4].matched ? std::stoi(m[4].str()) : 1;
    if (static_cast<int>(coeffs.size()) <= d) coeffs.resize(d + 1, 0.0);
    coeffs[d] += c;
  }
  if (coeffs.size() > 0 && coeffs[0] != 0.0) throw CurveRejected("poly: constant term is not allowed");
  if (coeffs.size() > 1 && coeffs[1] != 0.0) throw CurveRejected("poly: linear term makes the curve flat");
  std::vector<CurveTerm> terms;
  for (std::size_t d = 2; d < coeffs.size(); ++d)
    if (coeffs[d] != 0.0) terms.push_back({coeffs[d], static_cast<double>(d), 0.0, d % 2 == 1});
  if (terms.empty()) throw CurveRejected("poly: need a term of degree >= 2");

  std::ostringstream name;
  name << "poly:";
  for (std::size_t i = 0; i < terms.size(); ++i)
    name << (i ? " + " : " ") << terms[i].coeff << "*t^" << terms[i].alpha;
  return Curve(name.str(), terms, Regime::derivative_vanishes_at_zero);
}

bool parse_parity(std::istringstream& in) {
  std::string word;
  bool odd = false;
  while (in >> word) {
    if (word == "odd")
      odd = true;
    else if (word == "even")
      odd = false;
    else
      throw CurveRejected("unexpected token '" + word + "'");
  }
  return odd;
}

Curve parse_pow(const std::string& body) {
  std::istringstream in(body);
  double alpha = 0.0;
  if (!(in >> alpha)) throw CurveRejected("pow: missing exponent");
  const bool odd = parse_parity(in);
  if (!(alpha > 0.0) || alpha == 1.0) throw CurveRejected("pow: exponent must be positive and different from 1");
  std::ostringstream name;
  name << "pow: " << alpha << (odd ? " odd" : "");
  const CurveTerm term{1.0, alpha, 0.0, odd};
  return Curve(name.str(), {term}, regime_of_terms({term}));
}

Curve parse_powlog(const std::string& body) {
  static const std::regex key(R"(^\s*a\s*=\s*([-+0-9.eE]+)\s+b\s*=\s*([-+0-9.eE]+)\s*(odd|even)?\s*$)");
  std::smatch m;
  if (!std::regex_match(body, m, key)) throw CurveRejected("powlog: expected 'a=<alpha> b=<beta> [odd]'");
  const double alpha = std::stod(m[1].str());
  const double beta = std::stod(m[2].str());
  const bool odd = m[3].matched && m[3].str() == "odd";
  if (alpha == -1.0 || alpha == 0.0 || alpha == 1.0) throw CurveRejected("powlog: alpha must avoid {-1, 0, 1}");
  std::ostringstream name;
  name << "powlog: a=" << alpha << " b=" << beta << (odd ? " odd" : "");
  const CurveTerm term{1.0, alpha, beta, odd};
  return Curve(name.str(), {term}, regime_of_terms({term}));
}

}  // namespace

const char* to_string(Regime r) {
  return r == Regime::derivative_vanishes_at_zero ? "derivative_vanishes_at_zero" : "derivative_blows_up_at_zero";
}

const char* curve_grammar_help() {
  return "curve descriptors:\n"
         "  poly: <c>*t^<d> + ...      real polynomial, no constant or linear term (e.g. \"poly: 1*t^2 + 0.5*t^3\")\n"
         "  pow: <alpha> [odd|even]    |t|^alpha or sign(t)|t|^alpha, alpha > 0, alpha != 1\n"
         "  powlog: a=<alpha> b=<beta> [odd|even]   |t|^alpha |log|t||^beta, alpha not in {-1,0,1}\n";
}

Curve::Curve(std::string name, Fn eval, Fn deriv, Fn deriv2, Regime regime)
    : name_(std::move(name)), eval_(std::move(eval)), deriv_(std::move(deriv)), deriv2_(std::move(deriv2)),
      regime_(regime) {
  finish_construction();
}

Curve::Curve(std::string name, std::vector<CurveTerm> terms, Regime regime)
    : name_(std::move(name)), terms_(std::move(terms)), regime_(regime) {
  if (terms_.empty()) throw CurveRejected("curve needs at least one term");
  eval_ = [t = terms_](double x) { return sum_terms(t, x, 0); };
  deriv_ = [t = terms_](double x) { return sum_terms(t, x, 1); };
  deriv2_ = [t = terms_](double x) { return sum_terms(t, x, 2); };
  finish_construction();
}

void Curve::finish_construction() {
  c_gamma_ = std::numeric_limits<double>::quiet_NaN();
  delta_ = measure_delta();
  try {
    k_gamma_ = measure_k_gamma(*this);
  } catch (const std::domain_error&) {
    k_gamma_ = -1;
  }
}

double Curve::deriv2(double t) const {
  if (deriv2_) return deriv2_(t);
  const double h = 1e-5 * std::max(std::abs(t), 1e-300);
  auto centred = [&](double step) { return (deriv_(t + step) - deriv_(t - step)) / (2.0 * step); };
  return (4.0 * centred(0.5 * h) - centred(h)) / 3.0;
}

bool Curve::is_power_law() const { return terms_.size() == 1 && terms_.front().beta == 0.0; }

double Curve::measure_delta() const {
  double result = kInf;
  for (int side : {+1, -1}) {
    double prev_tau = 0.0;
    int prev_sign = 0;
    int prev_mono = 0;
    for (int i = 0; i <= 18 * 40; ++i) {
      const double tau = std::pow(10.0, -12.0 + i / 40.0);
      const double t = side * tau;
      const double d1 = deriv_(t);
      const double d2 = deriv2(t);
      const int sign = d1 > 0.0 ? 1 : (d1 < 0.0 ? -1 : 0);
      // d|gamma'(side*tau)|/dtau = sign(gamma') * gamma'' * side
      const double slope = sign * d2 * side;
      const int mono = slope > 0.0 ? 1 : (slope < 0.0 ? -1 : 0);
      const bool broken = !std::isfinite(d1) || sign == 0 || (prev_sign != 0 && sign != prev_sign) ||
                          (prev_mono != 0 && mono != 0 && mono != prev_mono);
      if (broken) {
        result = std::min(result, prev_tau);
        break;
      }
      prev_tau = tau;
      prev_sign = sign;
      if (mono != 0) prev_mono = mono;
    }
  }
  return result;
}

double Curve::deriv_inverse(double v) const {
  if (!(v != 0.0) || !std::isfinite(v)) throw std::domain_error("deriv_inverse: gamma' never takes the value " + std::to_string(v));
  if (is_power_law()) {
    const auto& term = terms_.front();
    const double scale = term.coeff * term.alpha;
    const double ratio = v / scale;
    const double expo = 1.0 / (term.alpha - 1.0);
    if (ratio > 0.0) return std::pow(ratio, expo);
    if (!term.odd) return -std::pow(-ratio, expo);
    throw std::domain_error("deriv_inverse: value " + std::to_string(v) + " has no preimage");
  }
  try {
    return numeric_deriv_inverse(v, +1);
  } catch (const std::domain_error&) {
    return numeric_deriv_inverse(v, -1);
  }
}

double Curve::numeric_deriv_inverse(double v, int side) const {
  const double tau_max = std::min(delta_, 1e8) * (1.0 - 1e-12);
  double lo = std::log(1e-300);
  double hi = std::log(tau_max);
  auto g = [&](double logtau) { return deriv_(side * std::exp(logtau)); };
  const double glo = g(lo);
  const double ghi = g(hi);
  const double target = v;
  const bool inside = (glo - target) * (ghi - target) <= 0.0;
  if (!inside) throw std::domain_error("deriv_inverse: value " + std::to_string(v) + " outside the invertibility range");
  auto f = [&](double logtau) { return g(logtau) - target; };
  boost::uintmax_t iters = 200;
  const auto bracket = boost::math::tools::toms748_solve(f, lo, hi, glo - target, ghi - target,
                                                         boost::math::tools::eps_tolerance<double>(52), iters);
  lo = bracket.first;
  hi = bracket.second;
  double t = side * std::exp(0.5 * (lo + hi));
  for (int it = 0; it < 3; ++it) {
    const double d2 = deriv2(t);
    if (!(std::abs(d2) > 0.0)) break;
    const double step = (deriv_(t) - target) / d2;
    const double next = t - step;
    if (next * side <= 0.0 || std::abs(next) > tau_max) break;
    t = next;
  }
  return t;
}

Curve Curve::with_c_gamma(double c) const {
  Curve copy = *this;
  copy.c_gamma_ = c;
  return copy;
}

Curve Curve::scaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("Curve::scaled: factor must be positive");
  if (!terms_.empty()) {
    auto terms = terms_;
    for (auto& term : terms) term.coeff *= factor;
    std::ostringstream name;
    name << factor << "*(" << name_ << ")";
    return Curve(name.str(), terms, regime_);
  }
  auto e = eval_;
  auto d = deriv_;
  auto d2 = deriv2_;
  Fn scaled_d2;
  if (d2) scaled_d2 = [d2, factor](double t) { return factor * d2(t); };
  return Curve(name_ + " scaled", [e, factor](double t) { return factor * e(t); },
               [d, factor](double t) { return factor * d(t); }, scaled_d2, regime_);
}

Curve builtin_curve(const std::string& descriptor) {
  const auto colon = descriptor.find(':');
  if (colon == std::string::npos) throw CurveRejected("curve descriptor needs a 'kind:' prefix");
  const std::string kind = trim(descriptor.substr(0, colon));
  const std::string body = descriptor.substr(colon + 1);
  if (kind == "poly") return parse_poly(body);
  if (kind == "pow") return parse_pow(body);
  if (kind == "powlog") return parse_powlog(body);
  throw CurveRejected("unknown curve kind '" + kind + "'");
}

std::vector<Curve> reference_family() {
  return {builtin_curve("poly: t^2"), builtin_curve("poly: t^3"), builtin_curve("poly: t^4"),
          builtin_curve("poly: t^5"), builtin_curve("poly: t^2 + t^3")};
}

// ---------------------------------------------------------------------------

int variation_count(const Curve& c, int j_max) {
  if (j_max < 1) throw std::invalid_argument("variation_count: j_max must be >= 1");
  std::vector<double> values;
  values.reserve(j_max + 1);
  for (int j = 0; j <= j_max; ++j) {
    const double t = std::ldexp(1.0, -j);
    values.push_back(std::abs(t * c.deriv(t)));
  }
  std::sort(values.begin(), values.end());
  int best = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto end = std::upper_bound(values.begin() + i, values.end(), 2.0 * values[i]);
    best = std::max(best, static_cast<int>(end - (values.begin() + i)));
  }
  return best;
}

std::vector<double> default_profile_grid() {
  constexpr int n = 256;
  std::vector<double> grid;
  grid.reserve(2 * n);
  for (int i = 0; i < n; ++i) grid.push_back(-4.0 + (3.75 * i) / (n - 1));
  for (int i = 0; i < n; ++i) grid.push_back(0.25 + (3.75 * i) / (n - 1));
  return grid;
}

double q_profile(const Curve& c, int j, double t) {
  const double scale = std::ldexp(1.0, -j);
  const double d = c.deriv(scale);
  if (!(d != 0.0) || !std::isfinite(d)) throw std::domain_error("corrupt curve: gamma'(2^-j) vanishes at j = " + std::to_string(j));
  return c(scale * t) / (scale * d);
}

double q_profile_second(const Curve& c, int j, double t) {
  const double scale = std::ldexp(1.0, -j);
  return scale * c.deriv2(scale * t) / c.deriv(scale);
}

ProfileSlice asymptotic_profile(const Curve& c, int j, const std::vector<double>& grid) {
  if (j < 0) throw std::invalid_argument("asymptotic_profile: j must be >= 0");
  ProfileSlice slice;
  slice.j = j;
  slice.grid = grid;
  for (double t : grid) {
    slice.values.push_back(q_profile(c, j, t));
    slice.limit.push_back(q_profile(c, kLimitScale, t));
    slice.sup_error = std::max(slice.sup_error, std::abs(slice.values.back() - slice.limit.back()));
  }
  return slice;
}

double r_profile_value(const Curve& c, int j, double s) {
  const double scale = std::ldexp(1.0, -j);
  try {
    return c.deriv_inverse(s * c.deriv(scale)) / scale;
  } catch (const std::domain_error&) {
    throw std::domain_error("r_profile: s = " + std::to_string(s) + " is outside the invertibility range");
  }
}

double r_profile_deriv(const Curve& c, int j, double s) {
  const double scale = std::ldexp(1.0, -j);
  const double d = c.deriv(scale);
  const double tau = c.deriv_inverse(s * d);
  return d / (scale * c.deriv2(tau));
}

ProfileSlice r_profile(const Curve& c, int j, const std::vector<double>& grid) {
  ProfileSlice slice;
  slice.j = j;
  slice.grid = grid;
  for (double s : grid) {
    slice.values.push_back(r_profile_value(c, j, s));
    slice.limit.push_back(r_profile_value(c, kLimitScale, s));
    slice.sup_error = std::max(slice.sup_error, std::abs(slice.values.back() - slice.limit.back()));
  }
  return slice;
}

std::vector<double> j_grid(const Curve& c, const std::vector<double>& i_grid) {
  const double scale = std::ldexp(1.0, -kLimitScale);
  const double d = c.deriv(scale);
  std::vector<double> out;
  out.reserve(i_grid.size());
  for (double t : i_grid) out.push_back(c.deriv(scale * t) / d);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }),
            out.end());
  return out;
}

namespace {

NonflatnessReport measure_infima(const Curve& c, const std::vector<double>& i_grid) {
  NonflatnessReport rep;
  rep.inf_q2 = kInf;
  for (double t : i_grid) rep.inf_q2 = std::min(rep.inf_q2, std::abs(q_profile_second(c, kLimitScale, t)));

  const auto J = j_grid(c, i_grid);
  std::vector<double> weighted;
  weighted.reserve(J.size());
  rep.inf_r1 = kInf;
  for (double s : J) {
    const double rp = r_profile_deriv(c, kLimitScale, s);
    rep.inf_r1 = std::min(rep.inf_r1, std::abs(rp));
    weighted.push_back(s * rp);
  }
  rep.inf_dual = kInf;
  for (std::size_t a = 0; a < J.size(); ++a)
    for (std::size_t b = a + 1; b < J.size(); ++b)
      rep.inf_dual = std::min(rep.inf_dual, std::abs(weighted[a] - weighted[b]) / std::abs(J[a] - J[b]));
  return rep;
}

}  // namespace

double default_c_gamma() {
  static const double value = [] {
    double inf = kInf;
    const auto grid = default_profile_grid();
    for (const auto& curve : reference_family()) {
      const auto rep = measure_infima(curve, grid);
      inf = std::min({inf, rep.inf_q2, rep.inf_r1, rep.inf_dual});
    }
    return 0.5 * inf;
  }();
  return value;
}

double Curve::c_gamma() const { return std::isnan(c_gamma_) ? default_c_gamma() : c_gamma_; }

NonflatnessReport nonflatness_report(const Curve& c, const std::vector<double>& i_grid) {
  auto rep = measure_infima(c, i_grid);
  rep.threshold = c.c_gamma();
  rep.pass = rep.inf_q2 > rep.threshold && rep.inf_r1 > rep.threshold && rep.inf_dual > rep.threshold;
  return rep;
}

NonflatnessReport nonflatness_report(const Curve& c) { return nonflatness_report(c, default_profile_grid()); }

GrowthFit growth_dichotomy(const Curve& c, const std::vector<double>& grid) {
  if (grid.size() < 3) throw std::invalid_argument("growth_dichotomy: need at least three grid points");
  std::vector<double> lx, ly;
  for (double t : grid) {
    if (!(t > 0.0) || t >= c.delta()) throw std::invalid_argument("growth_dichotomy: grid must lie in (0, delta)");
    lx.push_back(std::log(t));
    ly.push_back(std::log(std::abs(c.deriv(t))));
  }
  const auto fit = fit_line(lx, ly);
  GrowthFit out;
  out.exponent = fit.slope;
  out.residual = fit.rms_residual;
  out.regime = fit.slope > 0.0 ? Regime::derivative_vanishes_at_zero : Regime::derivative_blows_up_at_zero;

  std::vector<double> local;
  for (std::size_t i = 1; i < lx.size(); ++i) local.push_back((ly[i] - ly[i - 1]) / (lx[i] - lx[i - 1]));
  const double sign = fit.slope > 0.0 ? 1.0 : -1.0;
  double lo = kInf, hi = -kInf;
  for (double s : local) {
    lo = std::min(lo, sign * s);
    hi = std::max(hi, sign * s);
  }
  out.C1 = lo;
  out.C2 = hi;
  double max_c1 = 0.0, min_c2 = kInf, min_c1 = kInf, max_c2 = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = std::abs(c.deriv(grid[i]));
    const double r1 = d / std::pow(grid[i], sign * out.C1);
    const double r2 = d / std::pow(grid[i], sign * out.C2);
    max_c1 = std::max(max_c1, r1);
    min_c1 = std::min(min_c1, r1);
    min_c2 = std::min(min_c2, r2);
    max_c2 = std::max(max_c2, r2);
  }
  if (sign > 0.0) {
    // K2^{-1} t^{C2} < |gamma'| < K1^{-1} t^{C1}
    out.K1 = 1.0 / (max_c1 * (1.0 + 1e-12));
    out.K2 = 1.0 / (min_c2 * (1.0 - 1e-12));
  } else {
    // K1 t^{-C1} < |gamma'| < K2 t^{-C2}
    out.K1 = min_c1 * (1.0 - 1e-12);
    out.K2 = max_c2 * (1.0 + 1e-12);
  }
  constexpr double kResidualTolerance = 0.25;
  out.member = out.residual <= kResidualTolerance && std::abs(out.exponent) > 1e-3;
  return out;
}

GrowthFit growth_dichotomy(const Curve& c) {
  const double top = std::min(1.0, c.delta()) * 1e-3;
  std::vector<double> grid;
  constexpr int n = 64;
  for (int i = 0; i < n; ++i) grid.push_back(top * std::pow(1e-5, 1.0 - static_cast<double>(i) / (n - 1)));
  return growth_dichotomy(c, grid);
}

int measure_k_gamma(const Curve& c) {
  const auto J = j_grid(c, default_profile_grid());
  double lo = kInf, hi = 0.0;
  for (double s : J) {
    lo = std::min(lo, std::abs(s));
    hi = std::max(hi, std::abs(s));
  }
  // r is monotone on each half-line, so the extreme values sit at the ends of
  // the widened window on whichever side r is defined.
  double rlo = kInf, rhi = 0.0;
  bool any = false;
  for (double side : {1.0, -1.0}) {
    for (double s : {side * lo / 10.0, side * hi * 10.0}) {
      try {
        const double r = std::abs(r_profile_value(c, kLimitScale, s));
        rlo = std::min(rlo, r);
        rhi = std::max(rhi, r);
        any = true;
      } catch (const std::domain_error&) {
      }
    }
  }
  if (!any) throw std::domain_error("measure_k_gamma: r is undefined on the widened window");
  int k = 0;
  while (k < 60 && (std::ldexp(1.0, -k) > rlo || std::ldexp(1.0, k) < rhi)) ++k;
  return k;
}

}  // namespace bhtlab
