#include "bhtlab/multiplier.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <sstream>

#include "bhtlab/numerics.hpp"

namespace bhtlab {

double phase_derivative(const Curve& c, const CriticalPointQuery& q, double t) {
  const double s = std::ldexp(1.0, -q.j);
  return -q.xi * s + q.eta * s * c.deriv(t * s);
}

namespace {

double phase_second(const Curve& c, const CriticalPointQuery& q, double t) {
  const double s = std::ldexp(1.0, -q.j);
  return q.eta * s * s * c.deriv2(t * s);
}

int window_exponent(const Curve& c) { return c.k_gamma() > 0 ? c.k_gamma() : 8; }

}  // namespace

double critical_point(const Curve& c, const CriticalPointQuery& q) {
  if (q.eta == 0.0) throw NoCriticalPoint("critical_point: eta must be nonzero");
  const double w = std::ldexp(1.0, window_exponent(c));
  for (double side : {1.0, -1.0}) {
    double lo = side / w, hi = side * w;
    double flo = phase_derivative(c, q, lo), fhi = phase_derivative(c, q, hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) continue;
    while (std::abs(hi - lo) > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      const double fm = phase_derivative(c, q, mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {
      const double f = phase_derivative(c, q, t);
      const double d = phase_second(c, q, t);
      if (f == 0.0 || !(std::abs(d) > 0.0)) break;
      const double next = t - f / d;
      if (std::abs(next - t) > 1e-9 * std::max(1.0, std::abs(t))) break;  // stay inside the bracket
      if (next == t) break;
      t = next;
    }
    return t;
  }
  std::ostringstream msg;
  msg << "no critical point for xi/eta = " << q.xi / q.eta << " at j = " << q.j;
  throw NoCriticalPoint(msg.str());
}

double phase_at_critical(const Curve& c, const CriticalPointQuery& q) {
  const double t = critical_point(c, q);
  const double s = std::ldexp(1.0, -q.j);
  return q.xi * s * t - q.eta * c(t * s);
}

int count_sign_changes(const Curve& c, const CriticalPointQuery& q, int samples) {
  const int k = window_exponent(c);
  for (double side : {1.0, -1.0}) {
    int changes = 0;
    double prev = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double t = side * std::ldexp(1.0, -k) * std::pow(4.0, k * static_cast<double>(i) / (samples - 1));
      const double f = phase_derivative(c, q, t);
      if (i > 0 && ((prev > 0.0 && f < 0.0) || (prev < 0.0 && f > 0.0))) ++changes;
      if (f != 0.0) prev = f;
    }
    if (changes > 0) return changes;
  }
  return 0;
}

// ---------------------------------------------------------------------------

PhaseProfile::PhaseProfile(const Curve& c) : curve_(c) {
  closed_ = c.is_power_law();
  if (closed_) {
    alpha_ = c.power_exponent();
    odd_ = c.power_odd();
  }
  q1_ = q_profile(c, kLimitScale, 1.0);
  try {
    r(-1.0);
    has_negative_ = true;
  } catch (const std::domain_error&) {
    has_negative_ = false;
  }
}

double PhaseProfile::r(double s) const {
  if (closed_) {
    if (s > 0.0) return std::pow(s, 1.0 / (alpha_ - 1.0));
    if (s < 0.0 && !odd_) return -std::pow(-s, 1.0 / (alpha_ - 1.0));
    std::ostringstream msg;
    msg << "r is undefined at s = " << s;
    throw std::domain_error(msg.str());
  }
  return r_profile_value(curve_, kLimitScale, s);
}

double PhaseProfile::r_inverse(double y) const {
  const double eps = std::ldexp(1.0, -kLimitScale);
  return curve_.deriv(eps * y) / curve_.deriv(eps);
}

bool PhaseProfile::R_defined(double s) const {
  if (s == 0.0) return curve_.regime() == Regime::derivative_vanishes_at_zero && has_negative_;
  if (s > 0.0) return true;
  // Crossing 0 needs r defined on both sides and integrable at 0.
  return has_negative_ && curve_.regime() == Regime::derivative_vanishes_at_zero;
}

double PhaseProfile::R_quadrature(double s) const {
  if (!R_defined(s)) {
    std::ostringstream msg;
    msg << "R is undefined at s = " << s;
    throw std::domain_error(msg.str());
  }
  auto f = [this](double u) { return u == 0.0 ? 0.0 : r(u); };
  if (s > 0.0) return adaptive_simpson(f, 1.0, s, 1e-10);
  // Split at 0 where r may have an integrable cusp.
  return adaptive_simpson(f, 1.0, 0.0, 1e-10) + adaptive_simpson(f, 0.0, s, 1e-10);
}

void PhaseProfile::build_table() const {
  using rule = boost::math::quadrature::gauss<double, 20>;
  constexpr int kNodes = 2048;
  auto rf = [this](double u) { return r(u); };
  auto fill = [&](double sign, std::vector<double>& ss, std::vector<double>& RR, std::vector<double>& rr) {
    const double llo = std::log(table_lo_), lhi = std::log(table_hi_);
    for (int i = 0; i < kNodes; ++i) ss.push_back(sign * std::exp(llo + (lhi - llo) * i / (kNodes - 1)));
    RR.resize(kNodes);
    rr.resize(kNodes);
    RR[0] = R_quadrature(ss[0]);
    for (int i = 0; i < kNodes; ++i) rr[i] = r(ss[i]);
    for (int i = 1; i < kNodes; ++i) RR[i] = RR[i - 1] + rule::integrate(rf, ss[i - 1], ss[i]);
  };
  fill(1.0, pos_s_, pos_R_, pos_r_);
  if (R_defined(-1.0)) fill(-1.0, neg_s_, neg_R_, neg_r_);
}

double PhaseProfile::hermite(double s) const {
  const bool pos = s > 0.0;
  const auto& ss = pos ? pos_s_ : neg_s_;
  const auto& RR = pos ? pos_R_ : neg_R_;
  const auto& rr = pos ? pos_r_ : neg_r_;
  const double a = std::abs(s);
  const double llo = std::log(table_lo_), lhi = std::log(table_hi_);
  const double pos_f = (std::log(a) - llo) / (lhi - llo) * (static_cast<double>(ss.size()) - 1.0);
  std::size_t i = static_cast<std::size_t>(std::clamp(std::floor(pos_f), 0.0, static_cast<double>(ss.size() - 2)));
  const double x0 = ss[i], x1 = ss[i + 1];
  const double h = x1 - x0;
  const double t = (s - x0) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * RR[i] + (t3 - 2 * t2 + t) * h * rr[i] + (-2 * t3 + 3 * t2) * RR[i + 1] +
         (t3 - t2) * h * rr[i + 1];
}

bool PhaseProfile::use_table(double s) const {
  const double a = std::abs(s);
  return a >= table_lo_ && a <= table_hi_ && (s > 0.0 || R_defined(-1.0));
}

double PhaseProfile::R(double s) const {
  if (!R_defined(s)) {
    std::ostringstream msg;
    msg << "R is undefined at s = " << s;
    throw std::domain_error(msg.str());
  }
  if (closed_) {
    const double e = alpha_ / (alpha_ - 1.0);
    return (alpha_ - 1.0) / alpha_ * (std::pow(std::abs(s), e) - 1.0);
  }
  if (!use_table(s)) return R_quadrature(s);
  std::call_once(*table_once_, [this] { build_table(); });
  return hermite(s);
}

double PhaseProfile::theta_quadrature(double p0, double y) const {
  if (curve_.regime() != Regime::derivative_vanishes_at_zero)
    throw std::domain_error("theta is defined only when gamma' vanishes at 0");
  const double u = r_inverse(y);
  if (u == 0.0) return 0.0;
  // p0 int_0^u t r'(t) dt = p0 (u r(u) - int_0^u r), and r(u) = y.
  auto f = [this](double v) { return v == 0.0 ? 0.0 : r(v); };
  return p0 * (u * y - adaptive_simpson(f, 0.0, u, 1e-10));
}

double PhaseProfile::theta(double p0, double y) const {
  if (curve_.regime() != Regime::derivative_vanishes_at_zero)
    throw std::domain_error("theta is defined only when gamma' vanishes at 0");
  if (closed_) {
    if (odd_ && y < 0.0) throw std::domain_error("theta: y outside the range of r");
    return p0 * std::pow(std::abs(y), alpha_) / alpha_;
  }
  return theta_quadrature(p0, y);
}

double R_eval(const Curve& c, double s) {
  const PhaseProfile p(c);
  return p.closed_form() ? p.R(s) : p.R_quadrature(s);
}

double theta_eval(const Curve& c, double p0, double y) { return PhaseProfile(c).theta(p0, y); }

ScalingResidual scaling_identity_residual(const PhaseProfile& profile, double xi, double eta, int j) {
  const Curve& c = profile.curve();
  const double eta_scaled = eta / c.deriv(std::ldexp(1.0, -j));
  const double lhs = std::ldexp(1.0, j) * phase_at_critical(c, {xi, eta_scaled, j});
  const double rhs = eta * profile.R(xi / eta);
  ScalingResidual out;
  out.raw = std::abs(lhs - rhs);
  out.corrected = std::abs(lhs - rhs - eta * (1.0 - profile.q_at_one()));
  return out;
}

ScalingResidual scaling_identity_residual(const Curve& c, double xi, double eta, int j) {
  return scaling_identity_residual(PhaseProfile(c), xi, eta, j);
}

}  // namespace bhtlab
