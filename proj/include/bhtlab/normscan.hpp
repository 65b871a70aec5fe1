#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bhtlab/curve.hpp"
#include "bhtlab/decomposition.hpp"
#include "bhtlab/signal.hpp"

namespace bhtlab {

// ---------------------------------------------------------------------------
// Banach triangle.  Points are (a, b, c) = (1/p, 1/q, 1/r') with vertices
// A = (1,0,0), B = (0,1,0), C = (0,0,1); C1 = (1/2,1/2,0) is the midpoint of
// AB and B1 = (1/2,0,1/2) the midpoint of AC.

enum class TriangleRegion { interior, open_AB, open_AC, open_BC, vertex_A, vertex_B, vertex_C };

const char* to_string(TriangleRegion r);

struct TriangleMembership {
  double a = 0.0, b = 0.0, c = 0.0;
  TriangleRegion region = TriangleRegion::interior;
  bool inside_omega = false;  // int(ABC) u (AC) u (AB)
};

/// Throws std::invalid_argument when the triple is not Holder.
TriangleMembership triangle_membership(const HolderTriple& t);

enum class Edge { AC, AB };

const char* to_string(Edge e);
/// AC: (p, inf, p'); AB: (p, p', inf).
HolderTriple edge_triple(Edge e, double p);

// ---------------------------------------------------------------------------
// Direct principal-value evaluation.

using ComplexFn = std::function<cplx(double)>;

struct PVParams {
  double eps0 = 1.0;        // first inner cutoff; halved from there
  int max_halvings = 20;
  double t_max = 0.0;       // outer cutoff; 0 means twice the grid half-width
  double tolerance = 1e-10; // on successive cutoff values
};

struct BHTResult {
  SampledFunction value = SampledFunction::zeros(Grid{0.0, 1.0, 16});
  std::vector<std::size_t> flagged;  // grid indices that did not converge
  double worst_delta = 0.0;          // largest final cutoff increment
};

/// p.v. int f(x - t) g(x + gamma(t)) dt / t at every grid point, using the
/// paired integrand [f(x-t) g(x+gamma(t)) - f(x+t) g(x+gamma(-t))] / t on t > 0.
BHTResult bht_direct(const Curve& c, const ComplexFn& f, const ComplexFn& g, const Grid& grid,
                     const PVParams& params = {});

/// Grid integral of bht_direct(f, g) against h.
cplx trilinear_direct(const Curve& c, const ComplexFn& f, const ComplexFn& g, const ComplexFn& h, const Grid& grid,
                      const PVParams& params = {});

/// p.v. int f(x - t) dt / t through the multiplier -i pi sign(xi), sampled
/// `refine` times finer and zero-padded `pad` times so the periodic kernel is
/// close to 1/t.
SampledFunction hilbert_oracle(const ComplexFn& f, const Grid& grid, int pad = 512, int refine = 4);

// ---------------------------------------------------------------------------
// Ensemble scans of Lambda_m^+.

struct ScanOptions {
  int ensemble_size = 32;
  std::uint64_t seed = 1;
  std::vector<int> j_list{0, 1, 2};  // member k is tuned to j_list[k % size]
  std::size_t n = 2048;
  // Replace the sampled h by the Holder extremiser conj(T)|T|^{r-2} of
  // T_m(f, g), so a member's ratio is |T_m(f, g)|_r / (|f|_p |g|_q).
  bool dual_h = true;
};

struct ScanResult {
  HolderTriple triple;
  int m = 0;
  double sup_ratio = 0.0;
  int ensemble_size = 0;
  std::uint64_t seed = 0;
  double fitted_alpha = 0.0;  // filled by the decay fits
  double residual = 0.0;
};

/// Ensemble sup of |Lambda_m^+(f,g,h)| / (|f|_p |g|_q |h|_r').
double lambda_sup_ratio(const Curve& c, int m, const HolderTriple& t, const ScanOptions& opts);

std::vector<ScanResult> scan_edge(const Curve& c, Edge edge, const std::vector<double>& p_list,
                                  const std::vector<int>& m_list, const ScanOptions& opts);

struct EnvelopeReport {
  double p = 2.0;
  double exponent = 0.0;  // 2/p' - 1
  double C = 0.0;         // calibrated at the two smallest m
  double spread = 0.0;    // max/min sup ratio over m
  double excess = 0.0;    // max over m of sup_ratio / (C (1 + m^exponent)); within iff <= 2
  bool within = false;    // every ratio <= 2 C (1 + m^exponent)
};

/// Growth envelope C (1 + m^{2/p' - 1}) check for the results of one p.
EnvelopeReport edge_envelope(const std::vector<ScanResult>& results, double p);

struct DecayReport {
  std::vector<int> m;
  std::vector<double> sup_ratio;
  double alpha = 0.0;  // minus the slope of log2(sup_ratio) against m
  double residual = 0.0;
};

/// Decay fit at C1 = (1/2, 1/2, 0).  Throws std::invalid_argument for fewer than
/// three m values or a degenerate (all-zero) ensemble.
DecayReport fit_decay_at_L2point(const Curve& c, const std::vector<int>& m_list, const ScanOptions& opts);

}  // namespace bhtlab
