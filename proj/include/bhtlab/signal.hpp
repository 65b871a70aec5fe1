#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace bhtlab {

using cplx = std::complex<double>;

/// Uniform grid x_n = x0 + n dx, n = 0..N-1, N a power of two >= 16.
struct Grid {
  double x0 = -64.0;
  double dx = 1.0 / 128.0;
  std::size_t n = 1u << 14;

  /// Symmetric grid [-L, L) with N points.
  static Grid symmetric(double half_width, std::size_t n);

  double x(std::size_t i) const { return x0 + static_cast<double>(i) * dx; }
  double dxi() const;
  /// Signed frequency of FFT slot k: k dxi for k < N/2, (k - N) dxi otherwise.
  double xi(std::size_t k) const;
  double nyquist() const;
  double length() const { return dx * static_cast<double>(n); }
  void validate() const;
};

bool operator==(const Grid& a, const Grid& b);

/// A complex function sampled on a Grid.  Values are immutable after construction.
class SampledFunction {
 public:
  SampledFunction(Grid grid, std::vector<cplx> values);
  static SampledFunction zeros(const Grid& grid);
  static SampledFunction from(const Grid& grid, const std::function<cplx(double)>& f);

  const Grid& grid() const { return grid_; }
  const std::vector<cplx>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  cplx operator[](std::size_t i) const { return values_[i]; }

  SampledFunction operator+(const SampledFunction& o) const;
  SampledFunction operator-(const SampledFunction& o) const;
  SampledFunction scaled(cplx c) const;
  SampledFunction conj() const;

 private:
  Grid grid_;
  std::vector<cplx> values_;
};

/// Fourier data f^(xi_k) in FFT slot order, under f^(xi) = (1/2pi) int f e^{-i xi x} dx.
struct Spectrum {
  Grid grid;            // companion spatial grid
  double xi0 = 0.0;     // frequency origin (slot 0)
  double dxi = 0.0;     // 2 pi / (N dx)
  std::vector<cplx> coeffs;

  double xi(std::size_t k) const { return grid.xi(k); }
};

Spectrum forward_transform(const SampledFunction& f);
SampledFunction inverse_transform(const Spectrum& s);

using Multiplier = std::function<cplx(double)>;

/// Inverse transform of m(xi) f^(xi).  Throws std::domain_error on a
/// non-finite multiplier value.
SampledFunction multiply_spectrum(const SampledFunction& f, const Multiplier& m);

/// Raw FFT of a function kept around so several multipliers can be applied
/// without repeating the forward transform.
class FilterEngine {
 public:
  explicit FilterEngine(const SampledFunction& f);
  const Grid& grid() const { return grid_; }
  SampledFunction apply(const Multiplier& m) const;
  /// Multiplier sampled in FFT slot order.
  SampledFunction apply(const std::vector<cplx>& m) const;
  /// Spectrum values in slot order (includes the x0 phase and 1/2pi factor).
  cplx coefficient(std::size_t k) const;

 private:
  Grid grid_;
  std::vector<cplx> raw_;
};

/// Samples m at every FFT slot frequency.
std::vector<cplx> sample_multiplier(const Grid& grid, const Multiplier& m);

/// sum_m a(x_m) k(x_n - x_m) dx, the offset wrapped into [-L/2, L/2).
SampledFunction circular_convolve(const SampledFunction& a, const std::function<double(double)>& kernel);

/// Riemann-sum L^p norm; p = infinity gives the max norm.
double lp_norm(const SampledFunction& f, double p);
inline constexpr double kInfExponent = std::numeric_limits<double>::infinity();

/// Grid integral sum f dx.
cplx integrate(const SampledFunction& f);

// ---------------------------------------------------------------------------
// Bumps.

/// C^infinity step: 0 for u <= 0, 1 for u >= 1.
double smooth_step(double u);

/// Even bump: 0 for |x| <= a or |x| >= d, 1 on [b, c]; smooth log-scale ramps.
double annular_bump(double x, double a, double b, double c, double d);

/// Even bump: 1 for |x| <= inner, 0 for |x| >= outer, smooth in between.
double plateau_bump(double x, double inner, double outer);

/// The fixed bump: 1 on 1/5 <= |x| <= 5, supported in 1/10 < |x| < 10.
double bump_phi(double x);
Multiplier bump_phi_multiplier();

// ---------------------------------------------------------------------------
// Analytic test functions.

/// amp * exp(-(x - center)^2 / width^2) * exp(i omega x)
struct Atom {
  cplx amp{1.0, 0.0};
  double center = 0.0;
  double width = 1.0;
  double omega = 0.0;
};

/// Finite sum of Gaussian atoms, optionally plus a constant.  Evaluable at
/// arbitrary x so quadratures are not tied to a grid.
class FunctionModel {
 public:
  FunctionModel() = default;
  explicit FunctionModel(std::vector<Atom> atoms, cplx constant = 0.0);
  static FunctionModel constant(cplx c);

  cplx operator()(double x) const;
  SampledFunction sample(const Grid& grid) const;
  const std::vector<Atom>& atoms() const { return atoms_; }
  cplx constant_part() const { return constant_; }
  FunctionModel translated(double a) const;
  FunctionModel scaled(cplx c) const;
  std::string describe() const;

 private:
  std::vector<Atom> atoms_;
  cplx constant_{0.0, 0.0};
};

enum class EnsembleKind { gaussian, lacunary };

struct EnsembleShape {
  EnsembleKind kind = EnsembleKind::gaussian;
  double half_width = 64.0;  // functions live well inside [-L, L]
  int atoms = 4;
  double omega_lo = 0.0;     // |omega| range of the modulations
  double omega_hi = 4.0;
  bool signed_omega = true;  // random sign on each omega
};

/// Deterministic generator.  mt19937_64 is fully specified by the standard and
/// uniform doubles are built from its top 53 bits, so sequences do not depend
/// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t bits() { return engine_(); }
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int sign() { return (bits() >> 63) ? 1 : -1; }

 private:
  std::mt19937_64 engine_;
};

std::vector<FunctionModel> make_ensemble(std::uint64_t seed, int count, const EnsembleShape& shape);

// ---------------------------------------------------------------------------
// Serialization.

void write_csv(const SampledFunction& f, const std::string& path);
/// Header: x0 (f64), dx (f64), N (u64), then N complex64 pairs; little-endian.
void write_binary(const SampledFunction& f, const std::string& path);
SampledFunction read_binary(const std::string& path);

}  // namespace bhtlab
