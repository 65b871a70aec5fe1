#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bhtlab {

/// Behaviour of |gamma'(t)| as t -> 0.
enum class Regime { derivative_vanishes_at_zero, derivative_blows_up_at_zero };

const char* to_string(Regime r);

/// One term  coeff * s(t) * |t|^alpha * |log|t||^beta  with s(t) = sign(t) for
/// odd terms and 1 otherwise. Every builtin curve is a finite sum of these.
struct CurveTerm {
  double coeff = 1.0;
  double alpha = 2.0;
  double beta = 0.0;
  bool odd = false;
};

/// Thrown when a curve descriptor names something outside the non-flat class.
class CurveRejected : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A curve gamma together with its first two derivatives and the measured
/// class constants.  Immutable after construction.
class Curve {
 public:
  using Fn = std::function<double(double)>;

  /// Arbitrary closure-backed curve.  `deriv2` may be empty, in which case a
  /// Richardson-extrapolated centred difference of `deriv` is used.
  Curve(std::string name, Fn eval, Fn deriv, Fn deriv2, Regime regime);

  /// Sum-of-terms curve with analytic derivatives.
  Curve(std::string name, std::vector<CurveTerm> terms, Regime regime);

  const std::string& name() const { return name_; }
  Regime regime() const { return regime_; }
  const std::vector<CurveTerm>& terms() const { return terms_; }

  double operator()(double t) const { return eval_(t); }
  double deriv(double t) const { return deriv_(t); }
  double deriv2(double t) const;

  /// (gamma')^{-1}(v).  The positive half-line is preferred; the negative
  /// half-line is used when v has no preimage on t > 0.  Throws
  /// std::domain_error when v is outside the invertibility range.
  double deriv_inverse(double v) const;

  /// Single power term with beta = 0: closed forms exist for every profile.
  bool is_power_law() const;
  /// Exponent of the single power term (valid when is_power_law()).
  double power_exponent() const { return terms_.front().alpha; }
  bool power_odd() const { return terms_.front().odd; }

  /// Radius of the punctured neighbourhood where gamma' has no zeros and
  /// |gamma'| is monotone in |t|.  +inf when no break was found.
  double delta() const { return delta_; }
  /// Non-flatness threshold; defaults to default_c_gamma() unless overridden.
  double c_gamma() const;
  int k_gamma() const { return k_gamma_; }

  Curve with_c_gamma(double c) const;
  /// Multiplies gamma by a positive constant.
  Curve scaled(double factor) const;

 private:
  void finish_construction();
  double measure_delta() const;
  double numeric_deriv_inverse(double v, int side) const;

  std::string name_;
  std::vector<CurveTerm> terms_;
  Fn eval_;
  Fn deriv_;
  Fn deriv2_;
  Regime regime_;
  double delta_ = 0.0;
  double c_gamma_ = 0.0;
  int k_gamma_ = 0;
};

/// Parses "poly: 1*t^2 + 0.5*t^3", "pow: 1.5 [odd|even]", "powlog: a=2 b=1 [odd]".
/// Throws CurveRejected for flat or malformed descriptors.
Curve builtin_curve(const std::string& descriptor);

/// Grammar summary printed by the CLI on usage errors.
const char* curve_grammar_help();

/// The reference family used to calibrate the default c_gamma:
/// t^2, t^3, t^4, t^5 and t^2 + t^3.
std::vector<Curve> reference_family();

/// Half the smallest non-flatness infimum measured over reference_family().
double default_c_gamma();

// ---------------------------------------------------------------------------
// Class-membership diagnostics.

/// max over dyadic windows [a, 2a] of #{ j in [0, j_max] : |2^-j gamma'(2^-j)| in [a, 2a] }.
int variation_count(const Curve& c, int j_max);

/// 256 uniform points on [1/4, 4] and their mirror images on [-4, -1/4].
std::vector<double> default_profile_grid();

struct ProfileSlice {
  int j = 0;
  std::vector<double> grid;
  std::vector<double> values;  // sample at this j
  std::vector<double> limit;   // limit profile (sample at j = 30)
  double sup_error = 0.0;      // a_j estimate
};

constexpr int kLimitScale = 30;

/// Samples gamma(2^-j t) / (2^-j gamma'(2^-j)) and compares against j = 30.
ProfileSlice asymptotic_profile(const Curve& c, int j, const std::vector<double>& grid);

/// Single value of the j-th rescaled profile Q + Q_j at t.
double q_profile(const Curve& c, int j, double t);
/// Second derivative of the j-th rescaled profile at t (analytic chain rule).
double q_profile_second(const Curve& c, int j, double t);

/// Samples (gamma')^{-1}(s gamma'(2^-j)) / 2^-j on a grid over J.
ProfileSlice r_profile(const Curve& c, int j, const std::vector<double>& grid);

double r_profile_value(const Curve& c, int j, double s);
double r_profile_deriv(const Curve& c, int j, double s);

/// Numerical range of Q' over the I grid, sorted and de-duplicated.
std::vector<double> j_grid(const Curve& c, const std::vector<double>& i_grid);

struct NonflatnessReport {
  double inf_q2 = 0.0;
  double inf_r1 = 0.0;
  double inf_dual = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

NonflatnessReport nonflatness_report(const Curve& c, const std::vector<double>& i_grid);
NonflatnessReport nonflatness_report(const Curve& c);

struct GrowthFit {
  Regime regime = Regime::derivative_vanishes_at_zero;
  double exponent = 0.0;  // fitted slope of log|gamma'| against log|t|
  double residual = 0.0;  // rms residual of the log-log fit
  double K1 = 0.0, K2 = 0.0, C1 = 0.0, C2 = 0.0;
  bool member = false;
};

/// Log-log fit of |gamma'| near 0 on a log-spaced grid inside (0, delta).
GrowthFit growth_dichotomy(const Curve& c, const std::vector<double>& grid);
GrowthFit growth_dichotomy(const Curve& c);

/// Smallest k with r([inf|J|/10, 10 sup|J|]) inside [2^-k, 2^k] in absolute value.
int measure_k_gamma(const Curve& c);

}  // namespace bhtlab
