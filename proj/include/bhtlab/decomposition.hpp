#pragma once

#include <memory>
#include <vector>

#include "bhtlab/curve.hpp"
#include "bhtlab/multiplier.hpp"
#include "bhtlab/signal.hpp"

namespace bhtlab {

/// Exponents (p, q, r') of a trilinear estimate.  Infinity is allowed.
struct HolderTriple {
  double p = 2.0;
  double q = 2.0;
  double r_prime = kInfExponent;

  /// Throws std::invalid_argument unless 1/p + 1/q + 1/r' = 1 within 1e-12.
  void validate() const;
};

/// A_{j,p0}: the two components around p0 / D with D = 2^-j gamma'(2^-j).
struct SupportInterval {
  int j = 0;
  int p0 = 0;
  double lo1 = 0.0, hi1 = 0.0;
  double lo2 = 0.0, hi2 = 0.0;
};

SupportInterval support_interval(const Curve& c, int j, int p0);

struct OverlapReport {
  int count = 0;               // max over the line of sum_j sum_p0 chi_{A_{j,p0}}
  double where = 0.0;          // a point attaining it
  int scale_multiplicity = 0;  // max number of distinct j covering one point
  int per_scale = 0;           // max over j of sum_p0 chi_{A_{j,p0}}
};

/// Exact sweep over the sorted endpoints of all A_{j,p0}, 0 <= j <= j_max.
OverlapReport overlap_count(const Curve& c, int m, int j_max);

/// The multiplier families of one m:  phi_k, phi_{j,p0}, psi_{m,p0,j}, and
/// the widened localization used for h.  A mirrored bank carries the symbols
/// conj(s(-xi)), which is what every filter looks like after conjugating
/// the output of a real input.
class FilterBank {
 public:
  FilterBank(const Curve& c, int m, int j_max = 24, bool mirrored = false);
  FilterBank(std::shared_ptr<const PhaseProfile> profile, int m, int j_max = 24, bool mirrored = false);

  const Curve& curve() const { return profile_->curve(); }
  const PhaseProfile& profile() const { return *profile_; }
  int m() const { return m_; }
  int j_max() const { return j_max_; }
  int p0_begin() const { return 1 << m_; }
  int p0_end() const { return 1 << (m_ + 1); }  // exclusive
  bool mirrored() const { return mirrored_; }
  FilterBank mirror() const;

  /// D_j = 2^-j gamma'(2^-j)
  double D(int j) const;

  double phi_k(int k, double xi) const;
  double phi_jp0(int j, int p0, double eta) const;
  cplx psi(int j, int p0, double xi) const;
  /// Reach w of the h localization in units of D: every output frequency
  /// -(xi + eta) of the (j, p0) piece satisfies |D(xi + eta) - p0| < w.
  double h_reach(int j) const;
  /// 1 for |D(-zeta) - p0| <= w and 0 beyond 2w.  When 2^{m+j} D is small
  /// this is the g localization made twice larger.
  double h_filter(int j, int p0, double zeta) const;
  /// phi_{m+j} psi_{m,p0,j}, the full symbol applied to f in the form.
  cplx f_symbol(int j, int p0, double xi) const;

  /// Grid whose Nyquist frequency is 1.25 x (largest f frequency + largest g frequency).
  Grid grid_for(int j, std::size_t n) const;

 private:
  std::shared_ptr<const PhaseProfile> profile_;
  int m_;
  int j_max_;
  bool mirrored_;
};

enum class LambdaMethod { spatial, spectral };

struct TrilinearRecord {
  int j = -1;  // -1 for a sum over j
  int m = 0;
  cplx value;
  LambdaMethod method = LambdaMethod::spatial;
  HolderTriple triple;
  double ratio = 0.0;
};

/// sum_p0 (f filtered by psi_{m,p0,j}) (g filtered by phi_{j,p0}) for p0 in [p0_lo, p0_hi).
SampledFunction apply_Tjm(const FilterBank& bank, const SampledFunction& f, const SampledFunction& g, int j,
                          int p0_lo, int p0_hi);
SampledFunction apply_Tjm(const FilterBank& bank, const SampledFunction& f, const SampledFunction& g, int j);

/// sum_p0 sum_x F G H dx with the three filtered inputs.  Since h_filter is 1
/// on every output frequency of the (j, p0) piece this equals int T_{j,m}(f, g) h.
cplx lambda_jm_spatial(const FilterBank& bank, const SampledFunction& f, const SampledFunction& g,
                       const SampledFunction& h, int j);
/// int T_{j,m}(f, g) h as a double sum over frequency pairs,
/// 2 pi dxi^2 sum f^(xi) g^(eta) h^(-xi-eta) times the f and g symbols.
/// Uses no h localization, so it checks the spatial route independently.
cplx lambda_jm_spectral(const FilterBank& bank, const SampledFunction& f, const SampledFunction& g,
                        const SampledFunction& h, int j);

/// Ratio |value| / (|f|_p |g|_q |h|_r').
TrilinearRecord make_record(int j, int m, cplx value, LambdaMethod method, const HolderTriple& triple,
                            const SampledFunction& f, const SampledFunction& g, const SampledFunction& h);

struct LambdaSum {
  cplx value;
  double sum_abs = 0.0;  // sum_j |Lambda_{j,m}|
  std::vector<int> active_j;
  std::vector<cplx> per_j;
};

/// j whose f band and g bands intersect the grid's frequency window and carry energy.
std::vector<int> active_scales(const FilterBank& bank, const SampledFunction& f, const SampledFunction& g);

/// Lambda_m^+ = sum over active j of lambda_jm_spatial.
LambdaSum lambda_m_plus(const FilterBank& bank, const SampledFunction& f, const SampledFunction& g,
                        const SampledFunction& h);

struct ChirpComparison {
  SampledFunction numeric;
  SampledFunction closed_form;
  double max_deviation = 0.0;
  double relative_l2_deviation = 0.0;
};

/// Inverse transform of psi_{m,p0,j} against the stationary-phase formula
/// 2^-m/2 2^j sqrt(2 pi p0/|r'(u)|) phi(p0 u/2^m) e^{i(theta_p0(y) - p0 R(0) - pi/4 sign r'(u))},
/// y = 2^j x, u = r^{-1}(y).
ChirpComparison chirp_kernel(const FilterBank& bank, int p0, int j, std::size_t n);

/// Test triples whose spectra sit in the bands the form at (m, j) sees.
struct TripleModels {
  FunctionModel f, g, h;
};
std::vector<TripleModels> band_ensemble(const FilterBank& bank, int j, const Grid& grid, std::uint64_t seed,
                                        int count, bool real_valued = false);

}  // namespace bhtlab
