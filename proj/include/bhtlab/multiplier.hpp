#pragma once

#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "bhtlab/curve.hpp"

namespace bhtlab {

/// The query lies outside the window where the phase has a critical point.
class NoCriticalPoint : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct CriticalPointQuery {
  double xi = 0.0;
  double eta = 1.0;
  int j = 0;
};

/// phi'_{xi,eta}(t) = -xi/2^j + (eta/2^j) gamma'(t/2^j)
double phase_derivative(const Curve& c, const CriticalPointQuery& q, double t);

/// Unique zero of phase_derivative in [2^-k, 2^k] (or its mirror image when
/// the root sits on the negative side).  Bisection to 1e-12, then Newton.
double critical_point(const Curve& c, const CriticalPointQuery& q);

/// Psi_eta(xi) = -phi_{xi,eta}(t_c) = (xi/2^j) t_c - eta gamma(t_c/2^j)
double phase_at_critical(const Curve& c, const CriticalPointQuery& q);

/// Number of sign changes of phase_derivative over `samples` points of the
/// positive critical window, or of its mirror image when the positive one has none.
int count_sign_changes(const Curve& c, const CriticalPointQuery& q, int samples);

/// R(s) = int_1^s r(u) du and theta_{p0}(y) = p0 int_0^{r^{-1}(y)} t r'(t) dt.
/// Closed forms for power laws, otherwise quadrature with a Hermite table for
/// the frequency ranges the filter banks touch.
class PhaseProfile {
 public:
  explicit PhaseProfile(const Curve& c);

  const Curve& curve() const { return curve_; }
  bool closed_form() const { return closed_; }

  /// Limit profile r (j = 30).
  double r(double s) const;
  double r_inverse(double y) const;
  /// R(s); throws std::domain_error when r is undefined on [1, s].
  double R(double s) const;
  /// R by adaptive quadrature, bypassing closed forms and tables.
  double R_quadrature(double s) const;
  bool R_defined(double s) const;
  /// theta_{p0}(y), defined in the vanishing regime.
  double theta(double p0, double y) const;
  double theta_quadrature(double p0, double y) const;
  /// Q(1) of the limit profile; the scaling identity carries eta (1 - Q(1)).
  double q_at_one() const { return q1_; }

 private:
  void build_table() const;
  bool use_table(double s) const;
  double hermite(double s) const;

  Curve curve_;
  bool closed_ = false;
  double alpha_ = 0.0;
  bool odd_ = false;
  double q1_ = 0.0;
  bool has_negative_ = false;
  // Hermite table on +-[table_lo, table_hi], log-spaced.
  double table_lo_ = 1.0 / 32.0;
  double table_hi_ = 16.0;
  // Built on first use; guarded so concurrent readers see a complete table.
  mutable std::shared_ptr<std::once_flag> table_once_ = std::make_shared<std::once_flag>();
  mutable std::vector<double> pos_s_, pos_R_, pos_r_;
  mutable std::vector<double> neg_s_, neg_R_, neg_r_;
};

double R_eval(const Curve& c, double s);
double theta_eval(const Curve& c, double p0, double y);

struct ScalingResidual {
  double raw = 0.0;        // |2^j Psi_{eta/gamma'(2^-j)}(xi) - eta R(xi/eta)|
  double corrected = 0.0;  // same after removing eta (1 - Q(1))
};

/// Compares 2^j Psi_{eta/gamma'(2^-j)}(xi) against eta R(xi/eta).  The two
/// differ by the constant eta (1 - Q(1)) even for monomials; `corrected`
/// removes it and tends to 0 at the rate of the profile errors.
ScalingResidual scaling_identity_residual(const Curve& c, double xi, double eta, int j);
ScalingResidual scaling_identity_residual(const PhaseProfile& profile, double xi, double eta, int j);

}  // namespace bhtlab
