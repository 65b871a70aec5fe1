#include "bhtlab/signal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "bhtlab/numerics.hpp"

namespace bhtlab {

// ---------------------------------------------------------------------------
// Grid

Grid Grid::symmetric(double half_width, std::size_t n) {
  Grid g;
  g.x0 = -half_width;
  g.dx = 2.0 * half_width / static_cast<double>(n);
  g.n = n;
  g.validate();
  return g;
}

double Grid::dxi() const { return 2.0 * kPi / (static_cast<double>(n) * dx); }

double Grid::xi(std::size_t k) const {
  const double kk = k < n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
  return kk * dxi();
}

double Grid::nyquist() const { return kPi / dx; }

void Grid::validate() const {
  if (n < 16 || !std::has_single_bit(n)) throw std::invalid_argument("grid size must be a power of two >= 16");
  if (!(dx > 0.0) || !std::isfinite(dx) || !std::isfinite(x0)) throw std::invalid_argument("grid step must be positive and finite");
}

bool operator==(const Grid& a, const Grid& b) { return a.x0 == b.x0 && a.dx == b.dx && a.n == b.n; }

// ---------------------------------------------------------------------------
// SampledFunction

SampledFunction::SampledFunction(Grid grid, std::vector<cplx> values) : grid_(grid), values_(std::move(values)) {
  grid_.validate();
  if (values_.size() != grid_.n) throw std::invalid_argument("sample count does not match grid size");
  for (const auto& v : values_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::domain_error("sampled function has a non-finite value");
}

SampledFunction SampledFunction::zeros(const Grid& grid) { return SampledFunction(grid, std::vector<cplx>(grid.n)); }

SampledFunction SampledFunction::from(const Grid& grid, const std::function<cplx(double)>& f) {
  std::vector<cplx> v(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) v[i] = f(grid.x(i));
  return SampledFunction(grid, std::move(v));
}

namespace {

void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw std::invalid_argument("functions live on different grids");
}

}  // namespace

SampledFunction SampledFunction::operator+(const SampledFunction& o) const {
  require_same_grid(grid_, o.grid_);
  auto v = values_;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.values_[i];
  return SampledFunction(grid_, std::move(v));
}

SampledFunction SampledFunction::operator-(const SampledFunction& o) const {
  require_same_grid(grid_, o.grid_);
  auto v = values_;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= o.values_[i];
  return SampledFunction(grid_, std::move(v));
}

SampledFunction SampledFunction::scaled(cplx c) const {
  auto v = values_;
  for (auto& x : v) x *= c;
  return SampledFunction(grid_, std::move(v));
}

SampledFunction SampledFunction::conj() const {
  auto v = values_;
  for (auto& x : v) x = std::conj(x);
  return SampledFunction(grid_, std::move(v));
}

// ---------------------------------------------------------------------------
// FFT

namespace {

// Plans are created once per (size, direction) under a lock; executing a plan
// on fresh arrays through the new-array interface is thread-safe.
fftw_plan plan_for(std::size_t n, int sign) {
  static std::mutex mutex;
  static std::map<std::pair<std::size_t, int>, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(n, sign);
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  std::vector<cplx> scratch(n);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!p) throw std::runtime_error("FFTW failed to create a plan");
  plans.emplace(key, p);
  return p;
}

void fft_inplace(std::vector<cplx>& data, int sign) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_for(data.size(), sign), buf, buf);
}

}  // namespace

Spectrum forward_transform(const SampledFunction& f) {
  const Grid& g = f.grid();
  Spectrum s;
  s.grid = g;
  s.xi0 = 0.0;
  s.dxi = g.dxi();
  s.coeffs = f.values();
  fft_inplace(s.coeffs, FFTW_FORWARD);
  const double scale = g.dx / (2.0 * kPi);
  for (std::size_t k = 0; k < g.n; ++k) s.coeffs[k] *= scale * std::polar(1.0, -g.xi(k) * g.x0);
  return s;
}

SampledFunction inverse_transform(const Spectrum& s) {
  const Grid& g = s.grid;
  std::vector<cplx> v(g.n);
  for (std::size_t k = 0; k < g.n; ++k) v[k] = s.coeffs[k] * std::polar(1.0, g.xi(k) * g.x0) * s.dxi;
  fft_inplace(v, FFTW_BACKWARD);
  return SampledFunction(g, std::move(v));
}

std::vector<cplx> sample_multiplier(const Grid& grid, const Multiplier& m) {
  std::vector<cplx> out(grid.n);
  for (std::size_t k = 0; k < grid.n; ++k) {
    out[k] = m(grid.xi(k));
    if (!std::isfinite(out[k].real()) || !std::isfinite(out[k].imag())) {
      std::ostringstream msg;
      msg << "multiplier is not finite at xi = " << grid.xi(k);
      throw std::domain_error(msg.str());
    }
  }
  return out;
}

FilterEngine::FilterEngine(const SampledFunction& f) : grid_(f.grid()), raw_(f.values()) {
  fft_inplace(raw_, FFTW_FORWARD);
}

SampledFunction FilterEngine::apply(const std::vector<cplx>& m) const {
  if (m.size() != raw_.size()) throw std::invalid_argument("multiplier length does not match grid");
  std::vector<cplx> v(raw_.size());
  const double inv_n = 1.0 / static_cast<double>(raw_.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = raw_[k] * m[k] * inv_n;
  fft_inplace(v, FFTW_BACKWARD);
  return SampledFunction(grid_, std::move(v));
}

SampledFunction FilterEngine::apply(const Multiplier& m) const { return apply(sample_multiplier(grid_, m)); }

cplx FilterEngine::coefficient(std::size_t k) const {
  return raw_[k] * (grid_.dx / (2.0 * kPi)) * std::polar(1.0, -grid_.xi(k) * grid_.x0);
}

SampledFunction multiply_spectrum(const SampledFunction& f, const Multiplier& m) { return FilterEngine(f).apply(m); }

SampledFunction circular_convolve(const SampledFunction& a, const std::function<double(double)>& kernel) {
  const Grid& g = a.grid();
  std::vector<cplx> va = a.values(), vk(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    const double k = i < g.n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(g.n);
    vk[i] = kernel(k * g.dx);
  }
  fft_inplace(va, FFTW_FORWARD);
  fft_inplace(vk, FFTW_FORWARD);
  const double scale = g.dx / static_cast<double>(g.n);
  for (std::size_t i = 0; i < g.n; ++i) va[i] *= vk[i] * scale;
  fft_inplace(va, FFTW_BACKWARD);
  return SampledFunction(g, std::move(va));
}

// ---------------------------------------------------------------------------
// Norms

double lp_norm(const SampledFunction& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: exponent must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& v : f.values()) m = std::max(m, std::abs(v));
    return m;
  }
  // Scale by the max first so large p does not overflow.
  double m = 0.0;
  for (const auto& v : f.values()) m = std::max(m, std::abs(v));
  if (m == 0.0) return 0.0;
  double acc = 0.0;
  for (const auto& v : f.values()) acc += std::pow(std::abs(v) / m, p);
  return m * std::pow(acc * f.grid().dx, 1.0 / p);
}

cplx integrate(const SampledFunction& f) {
  cplx acc = 0.0;
  for (const auto& v : f.values()) acc += v;
  return acc * f.grid().dx;
}

// ---------------------------------------------------------------------------
// Bumps

double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

double annular_bump(double x, double a, double b, double c, double d) {
  const double ax = std::abs(x);
  if (ax <= a || ax >= d) return 0.0;
  if (ax >= b && ax <= c) return 1.0;
  const double l = std::log(ax);
  if (ax < b) return smooth_step((l - std::log(a)) / (std::log(b) - std::log(a)));
  return 1.0 - smooth_step((l - std::log(c)) / (std::log(d) - std::log(c)));
}

double plateau_bump(double x, double inner, double outer) {
  const double ax = std::abs(x);
  if (ax <= inner) return 1.0;
  if (ax >= outer) return 0.0;
  return 1.0 - smooth_step((ax - inner) / (outer - inner));
}

double bump_phi(double x) { return annular_bump(x, 0.1, 0.2, 5.0, 10.0); }

Multiplier bump_phi_multiplier() {
  return [](double xi) { return cplx(bump_phi(xi), 0.0); };
}

// ---------------------------------------------------------------------------
// FunctionModel

FunctionModel::FunctionModel(std::vector<Atom> atoms, cplx constant) : atoms_(std::move(atoms)), constant_(constant) {}

FunctionModel FunctionModel::constant(cplx c) { return FunctionModel({}, c); }

cplx FunctionModel::operator()(double x) const {
  cplx acc = constant_;
  for (const auto& a : atoms_) {
    const double u = (x - a.center) / a.width;
    const double env = std::exp(-u * u);
    if (env == 0.0) continue;
    acc += a.amp * env * std::polar(1.0, a.omega * x);
  }
  return acc;
}

SampledFunction FunctionModel::sample(const Grid& grid) const {
  return SampledFunction::from(grid, [this](double x) { return (*this)(x); });
}

FunctionModel FunctionModel::translated(double a) const {
  // f(x - a): the modulation picks up e^{-i omega a}.
  auto atoms = atoms_;
  for (auto& at : atoms) {
    at.amp *= std::polar(1.0, -at.omega * a);
    at.center += a;
  }
  return FunctionModel(std::move(atoms), constant_);
}

FunctionModel FunctionModel::scaled(cplx c) const {
  auto atoms = atoms_;
  for (auto& at : atoms) at.amp *= c;
  return FunctionModel(std::move(atoms), constant_ * c);
}

std::string FunctionModel::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "const=" << constant_.real() << "," << constant_.imag();
  for (const auto& a : atoms_)
    os << ";amp=" << a.amp.real() << "," << a.amp.imag() << " c=" << a.center << " w=" << a.width << " om=" << a.omega;
  return os.str();
}

std::vector<FunctionModel> make_ensemble(std::uint64_t seed, int count, const EnsembleShape& shape) {
  if (count < 1) throw std::invalid_argument("make_ensemble: count must be >= 1");
  if (shape.atoms < 1) throw std::invalid_argument("make_ensemble: need at least one atom");
  Rng rng(seed);
  const double L = shape.half_width;
  std::vector<FunctionModel> out;
  out.reserve(count);
  for (int member = 0; member < count; ++member) {
    std::vector<Atom> atoms;
    const double base = rng.uniform(shape.omega_lo, shape.omega_hi);
    for (int i = 0; i < shape.atoms; ++i) {
      Atom a;
      a.amp = std::polar(rng.uniform(0.5, 1.5), rng.uniform(0.0, 2.0 * kPi));
      a.center = rng.uniform(-L / 3.0, L / 3.0);
      a.width = rng.uniform(L / 48.0, L / 12.0);
      if (shape.kind == EnsembleKind::gaussian) {
        a.omega = rng.uniform(shape.omega_lo, shape.omega_hi);
      } else {
        a.omega = std::min(base * std::ldexp(1.0, i), shape.omega_hi);
      }
      if (shape.signed_omega) a.omega *= rng.sign();
      atoms.push_back(a);
    }
    out.emplace_back(std::move(atoms));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

void write_csv(const SampledFunction& f, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(fp, "x,re,im\n");
  for (std::size_t i = 0; i < f.size(); ++i)
    std::fprintf(fp, "%.17g,%.17g,%.17g\n", f.grid().x(i), f[i].real(), f[i].imag());
  std::fclose(fp);
}

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw std::runtime_error("truncated binary function file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_binary(const SampledFunction& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  put_le<double>(os, f.grid().x0);
  put_le<double>(os, f.grid().dx);
  put_le<std::uint64_t>(os, f.grid().n);
  for (const auto& v : f.values()) {
    put_le<float>(os, static_cast<float>(v.real()));
    put_le<float>(os, static_cast<float>(v.imag()));
  }
}

SampledFunction read_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  Grid g;
  g.x0 = get_le<double>(is);
  g.dx = get_le<double>(is);
  g.n = static_cast<std::size_t>(get_le<std::uint64_t>(is));
  g.validate();
  std::vector<cplx> v(g.n);
  for (auto& x : v) {
    const float re = get_le<float>(is);
    const float im = get_le<float>(is);
    x = cplx(re, im);
  }
  return SampledFunction(g, std::move(v));
}

}  // namespace bhtlab
