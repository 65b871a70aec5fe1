#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace bhtlab {

inline constexpr double kPi = 3.14159265358979323846;

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};

/// Ordinary least squares y ~ slope * x + intercept.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Adaptive Simpson on [a, b] with absolute tolerance `tol`.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-10,
                        int max_depth = 50);

/// Composite 20-point Gauss-Legendre over `panels` equal panels.
double gauss_panels(const std::function<double(double)>& f, double a, double b, int panels);

/// Same rule applied to a complex-valued integrand given as (re, im) callbacks.
struct ComplexSum {
  double re = 0.0;
  double im = 0.0;
};
ComplexSum gauss_panels_complex(const std::function<void(double, double&, double&)>& f, double a, double b,
                                int panels);

/// Runs body(i) for i in [0, n) on a small worker pool.  Each index writes its
/// own slot, so reductions done afterwards in index order are bit-stable.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Worker count used by parallel_for (BHTLAB_THREADS overrides hardware_concurrency).
unsigned worker_count();

}  // namespace bhtlab
