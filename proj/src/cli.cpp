#include "bhtlab/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bhtlab/curve.hpp"
#include "bhtlab/decomposition.hpp"
#include "bhtlab/multiplier.hpp"
#include "bhtlab/normscan.hpp"
#include "bhtlab/numerics.hpp"
#include "bhtlab/squarefuncs.hpp"

namespace bhtlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Subcommand s) {
  switch (s) {
    case Subcommand::curve_check: return "curve-check";
    case Subcommand::phase: return "phase";
    case Subcommand::decompose: return "decompose";
    case Subcommand::sqfn: return "sqfn";
    case Subcommand::cz: return "cz";
    case Subcommand::scan: return "scan";
    case Subcommand::bht: return "bht";
  }
  return "?";
}

const char* to_string(Format f) { return f == Format::csv ? "csv" : "json"; }

namespace {

/// Bad input detected by run(); maps to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json real_json(double v) { return std::isfinite(v) ? json(v) : json(format_real(v)); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

double parse_real(const std::string& raw) {
  const std::string s = trim(raw);
  std::size_t used = 0;
  try {
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      const double a = std::stod(s.substr(0, slash));
      const std::string rest = s.substr(slash + 1);
      const double b = std::stod(rest, &used);
      if (used != rest.size() || b == 0.0) throw std::invalid_argument(s);
      return a / b;
    }
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
}

int parse_int(const std::string& raw) {
  const std::string s = trim(raw);
  std::size_t used = 0;
  try {
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("not an integer: '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep))
    if (!trim(item).empty()) out.push_back(item);
  return out;
}

// ---------------------------------------------------------------------------
// Workflows.  Each fills tables and checks; run() does the writing.

struct Output {
  std::vector<Table> tables;
  std::vector<std::pair<std::string, std::string>> extra_files;  // name, bytes
  std::vector<Check> checks;
};

Check check_le(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, value <= threshold};
}

Curve load_curve(const RunConfig& cfg) { return builtin_curve(cfg.curve); }

Output run_curve_check(const RunConfig& cfg) {
  const Curve c = load_curve(cfg);
  Output out;
  auto& checks = out.checks;
  checks.push_back({"no_critical_points", c.delta(), 0.0, c.delta() > 0.0});
  // Bounded variation: the count must not grow once j_max passes 20.
  checks.push_back(check_le("variation_count", variation_count(c, 40), variation_count(c, 20)));
  const auto nf = nonflatness_report(c);
  checks.push_back({"inf_Q2", nf.inf_q2, nf.threshold, nf.inf_q2 > nf.threshold});
  checks.push_back({"inf_r1", nf.inf_r1, nf.threshold, nf.inf_r1 > nf.threshold});
  checks.push_back({"inf_dual", nf.inf_dual, nf.threshold, nf.inf_dual > nf.threshold});
  // Profile errors must shrink with j; thresholds are the errors at a
  // coarse scale (j = 4, or the first j where r_j is defined on all of J).
  const auto I = default_profile_grid();
  const double a4 = asymptotic_profile(c, 4, I).sup_error, a20 = asymptotic_profile(c, 20, I).sup_error;
  checks.push_back(check_le("profile_error_Q", a20, a4 + 1e-12));
  const auto J = j_grid(c, I);
  double r_coarse = std::numeric_limits<double>::quiet_NaN();
  for (int j = 4; j <= 16 && std::isnan(r_coarse); ++j) {
    try {
      r_coarse = r_profile(c, j, J).sup_error;
    } catch (const std::domain_error&) {
    }
  }
  const double r20 = r_profile(c, 20, J).sup_error;
  checks.push_back(check_le("profile_error_r", r20, r_coarse + 1e-12));
  const auto growth = growth_dichotomy(c);
  checks.push_back({"growth_exponent", growth.exponent, 0.0, growth.member});

  Table t{"curve-check", {"axiom", "value", "threshold", "pass"}, {}};
  for (const auto& ch : checks) t.rows.push_back({ch.name, ch.value, ch.threshold, ch.pass});
  out.tables.push_back(std::move(t));
  return out;
}

Output run_phase(const RunConfig& cfg) {
  const Curve c = load_curve(cfg);
  if (!(cfg.eta > 0.0)) throw UsageError("--eta must be positive");
  if (cfg.j < 0) throw UsageError("--j must be non-negative");
  std::vector<double> xis = cfg.xi_list;
  if (xis.empty()) {
    // Targets t_c spread over the admissible window.
    const int k = c.k_gamma() > 0 ? c.k_gamma() : 8;
    for (int s = 0; s <= 16; ++s) {
      const double t = std::ldexp(1.0, -k + 1) * std::pow(4.0, (k - 1) * s / 16.0);
      xis.push_back(cfg.eta * c.deriv(t * std::ldexp(1.0, -cfg.j)));
    }
  }
  Table t{"phase", {"xi", "eta", "j", "t_c", "psi", "residual", "envelope_error"}, {}};
  double worst_res = 0.0, worst_env = 0.0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double xi : xis) {
    const CriticalPointQuery q{xi, cfg.eta, cfg.j};
    try {
      const double tc = critical_point(c, q);
      const double psi = phase_at_critical(c, q);
      const double res = std::abs(phase_derivative(c, q, tc));
      const double h = 1e-6 * std::max(std::abs(xi), 1e-3);
      const double dpsi = (phase_at_critical(c, {xi + h, cfg.eta, cfg.j}) - phase_at_critical(c, {xi - h, cfg.eta, cfg.j})) / (2 * h);
      const double env = std::abs(dpsi - tc * std::ldexp(1.0, -cfg.j));
      worst_res = std::max(worst_res, res);
      worst_env = std::max(worst_env, env);
      t.rows.push_back({xi, cfg.eta, static_cast<long long>(cfg.j), tc, psi, res, env});
    } catch (const NoCriticalPoint&) {
      t.rows.push_back({xi, cfg.eta, static_cast<long long>(cfg.j), nan, nan, nan, nan});
    }
  }
  Output out;
  out.checks.push_back(check_le("critical_point_residual", worst_res, 1e-10));
  out.checks.push_back(check_le("envelope_error", worst_env, 1e-6));
  out.tables.push_back(std::move(t));
  return out;
}

Output run_decompose(const RunConfig& cfg) {
  const Curve c = load_curve(cfg);
  if (cfg.m < 1 || cfg.m > 12) throw UsageError("--m must lie in [1, 12]");
  const int j_hi = cfg.j_hi < 0 ? 2 : cfg.j_hi;
  if (cfg.j_lo < 0 || j_hi < cfg.j_lo) throw UsageError("need 0 <= --j-lo <= --j-hi");
  const std::size_t n = cfg.N ? cfg.N : 2048;
  const FilterBank bank(c, cfg.m);
  const HolderTriple triple{2.0, 2.0, kInfExponent};
  Table energy{"decompose_energy", {"j", "p0", "f_energy", "g_energy"}, {}};
  Table lambda{"decompose", {"j", "m", "re", "im", "ratio"}, {}};
  double worst = 0.0;
  for (int j = cfg.j_lo; j <= j_hi; ++j) {
    const Grid grid = bank.grid_for(j, n);
    const auto models = band_ensemble(bank, j, grid, cfg.seed, 1).front();
    const auto f = models.f.sample(grid), g = models.g.sample(grid), h = models.h.sample(grid);
    const int p0_count = bank.p0_end() - bank.p0_begin();
    std::vector<std::pair<double, double>> e(static_cast<std::size_t>(p0_count));
    parallel_for(e.size(), [&](std::size_t k) {
      const int p0 = bank.p0_begin() + static_cast<int>(k);
      const double ef = std::pow(lp_norm(multiply_spectrum(f, [&](double xi) { return bank.f_symbol(j, p0, xi); }), 2.0), 2);
      const double eg = std::pow(lp_norm(multiply_spectrum(g, [&](double eta) { return cplx(bank.phi_jp0(j, p0, eta)); }), 2.0), 2);
      e[k] = {ef, eg};
    });
    for (int k = 0; k < p0_count; ++k)
      energy.rows.push_back({static_cast<long long>(j), static_cast<long long>(bank.p0_begin() + k), e[k].first, e[k].second});
    const cplx spatial = lambda_jm_spatial(bank, f, g, h, j);
    const cplx spectral = lambda_jm_spectral(bank, f, g, h, j);
    const auto rec = make_record(j, cfg.m, spatial, LambdaMethod::spatial, triple, f, g, h);
    lambda.rows.push_back({static_cast<long long>(j), static_cast<long long>(cfg.m), spatial.real(), spatial.imag(), rec.ratio});
    const double scale = std::max(std::abs(spectral), 1e-300);
    worst = std::max(worst, std::abs(spatial - spectral) / scale);
  }
  Output out;
  out.checks.push_back(check_le("spatial_vs_spectral", worst, 1e-6));
  out.tables.push_back(std::move(lambda));
  out.tables.push_back(std::move(energy));
  return out;
}

Output run_sqfn(const RunConfig& cfg) {
  const int j_hi = cfg.j_hi < 0 ? 6 : cfg.j_hi;
  if (cfg.j_lo < 0 || j_hi < cfg.j_lo) throw UsageError("need 0 <= --j-lo <= --j-hi");
  if (cfg.l_list.size() < 2) throw UsageError("--l-list needs at least two shifts");
  const int count = cfg.count > 0 ? cfg.count : 4;
  const Grid grid = Grid::symmetric(cfg.L > 0 ? cfg.L : 64.0, cfg.N ? cfg.N : (1u << 13));
  grid.validate();
  EnsembleShape shape;
  shape.half_width = 0.5 * grid.length() / 2.0;
  shape.omega_hi = std::min(40.0, 0.5 * grid.nyquist());
  std::vector<SampledFunction> fs;
  for (const auto& model : make_ensemble(cfg.seed, count, shape)) fs.push_back(model.sample(grid));

  Output out;
  double iso = 0.0;
  for (const auto& f : fs) {
    const double n0 = lp_norm(shifted_square_function(f, 0, cfg.j_lo, j_hi).Sl, 2.0);
    for (long l : cfg.l_list)
      iso = std::max(iso, std::abs(lp_norm(shifted_square_function(f, l, cfg.j_lo, j_hi).Sl, 2.0) - n0) / n0);
  }
  out.checks.push_back(check_le("l2_isometry", iso, 1e-10));

  Table rows{"sqfn", {"l", "q", "sup_ratio"}, {}};
  Table fits{"sqfn_fit", {"q", "exponent", "predicted", "residual", "pass"}, {}};
  for (double q : cfg.q_list) {
    if (!(q > 1.0)) throw UsageError("--q-list entries must exceed 1");
    const auto rep = norm_growth_in_shift(fs, q, cfg.l_list, cfg.j_lo, j_hi);
    for (std::size_t i = 0; i < rep.l_list.size(); ++i)
      rows.rows.push_back({static_cast<long long>(rep.l_list[i]), q, rep.sup_ratio[i]});
    const bool ok = rep.exponent <= rep.predicted + 0.15;
    fits.rows.push_back({q, rep.exponent, rep.predicted, rep.residual, ok});
    out.checks.push_back({"growth_exponent_q=" + format_real(q), rep.exponent, rep.predicted + 0.15, ok});
  }
  out.tables.push_back(std::move(rows));
  out.tables.push_back(std::move(fits));
  return out;
}

json cz_tree(const SampledFunction& f, const CZDecomposition& cz, std::size_t first, std::size_t cells, int level) {
  long double s = 0.0L;
  for (std::size_t i = first; i < first + cells; ++i) s += std::abs(f[i]);
  json node{{"lo", f.grid().x(first)},
            {"hi", f.grid().x(first) + static_cast<double>(cells) * f.grid().dx},
            {"level", level},
            {"mean_abs", static_cast<double>(s / cells)}};
  bool selected = false, below = false;
  for (const auto& J : cz.intervals) {
    if (J.first == first && J.cells == cells) selected = true;
    if (J.first >= first && J.first + J.cells <= first + cells && J.cells < cells) below = true;
  }
  node["selected"] = selected;
  json children = json::array();
  if (below && cells > 1) {
    children.push_back(cz_tree(f, cz, first, cells / 2, level + 1));
    children.push_back(cz_tree(f, cz, first + cells / 2, cells / 2, level + 1));
  }
  node["children"] = children;
  return node;
}

Output run_cz(const RunConfig& cfg) {
  const std::size_t n = cfg.N ? cfg.N : 1024;
  if ((n & (n - 1)) != 0) throw UsageError("--N must be a power of two");
  const Grid grid{0.0, 1.0 / static_cast<double>(n), n};
  const auto f = random_dyadic_step(grid, cfg.seed);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += std::abs(f[i]);
  mean /= static_cast<double>(n);
  const double lambda = cfg.lambda > 0.0 ? cfg.lambda : 4.0 * mean;
  const auto cz = cz_decompose(f, lambda);
  const auto inv = check_cz_invariants(f, cz);

  Table t{"cz", {"first", "cells", "lo", "hi", "mean_re", "mean_im"}, {}};
  for (const auto& J : cz.intervals)
    t.rows.push_back({static_cast<long long>(J.first), static_cast<long long>(J.cells), J.lo, J.hi, J.mean.real(), J.mean.imag()});
  Output out;
  out.checks.push_back(check_le("reconstruction_error", inv.reconstruction_error, 1e-12));
  out.checks.push_back(check_le("max_abs_mean", inv.max_abs_mean, 1e-12));
  out.checks.push_back(check_le("good_sup", inv.good_sup, 2.0 * lambda));
  out.checks.push_back(check_le("measure", inv.measure, inv.measure_bound));
  json tree{{"lambda", lambda}, {"grid", {{"x0", grid.x0}, {"dx", grid.dx}, {"n", grid.n}}},
            {"root", cz_tree(f, cz, 0, n, 0)}};
  out.extra_files.emplace_back("cz_tree.json", tree.dump(2) + "\n");
  out.tables.push_back(std::move(t));
  return out;
}

Output run_scan(const RunConfig& cfg) {
  const Curve c = load_curve(cfg);
  Edge edge;
  if (cfg.edge == "AC") edge = Edge::AC;
  else if (cfg.edge == "AB") edge = Edge::AB;
  else throw UsageError("--edge must be AC or AB");
  if (cfg.m_list.empty() || cfg.p_list.empty()) throw UsageError("--p-list and --m-list must be non-empty");
  for (int m : cfg.m_list)
    if (m < 1 || m > 12) throw UsageError("--m-list entries must lie in [1, 12]");
  if (cfg.ensemble_size < 1) throw UsageError("--ensemble-size must be positive");
  ScanOptions opts;
  opts.ensemble_size = cfg.ensemble_size;
  opts.seed = cfg.seed;
  if (cfg.N) opts.n = cfg.N;
  const auto results = scan_edge(c, edge, cfg.p_list, cfg.m_list, opts);

  Output out;
  Table t{"scan", {"p", "q", "r_prime", "m", "sup_ratio", "alpha_hat", "residual"}, {}};
  std::string dat;
  for (double p : cfg.p_list) {
    std::vector<double> x, y;
    for (const auto& r : results)
      if (r.triple.p == p && r.sup_ratio > 0.0) {
        x.push_back(r.m);
        y.push_back(std::log2(r.sup_ratio));
      }
    double alpha = std::numeric_limits<double>::quiet_NaN(), res = alpha;
    if (x.size() >= 2) {
      const auto fit = fit_line(x, y);
      alpha = -fit.slope;
      res = fit.rms_residual;
    }
    dat += "# p=" + format_real(p) + "\n# m sup_ratio\n";
    for (const auto& r : results) {
      if (r.triple.p != p) continue;
      t.rows.push_back({r.triple.p, r.triple.q, r.triple.r_prime, static_cast<long long>(r.m), r.sup_ratio, alpha, res});
      dat += std::to_string(r.m) + " " + format_real(r.sup_ratio) + "\n";
    }
    dat += "\n\n";
    if (cfg.m_list.size() >= 2) {
      const auto env = edge_envelope(results, p);
      out.checks.push_back({"envelope_p=" + format_real(p), env.excess, 2.0, env.within});
    }
  }
  if (cfg.emit_dat) out.extra_files.emplace_back("scan.dat", dat);
  out.tables.push_back(std::move(t));
  return out;
}

Output run_bht(const RunConfig& cfg) {
  const Curve c = load_curve(cfg);
  const int count = cfg.count > 0 ? cfg.count : 10;
  const Grid grid = Grid::symmetric(cfg.L > 0 ? cfg.L : 16.0, cfg.N ? cfg.N : 256);
  grid.validate();
  EnsembleShape shape;
  shape.half_width = 0.5 * grid.length() / 2.0;
  const auto fs = make_ensemble(cfg.seed, count, shape);
  Output out;
  if (cfg.g_kind == "const1") {
    Table t{"bht", {"index", "rel_l2_error", "flagged", "worst_delta"}, {}};
    const auto one = [](double) { return cplx(1.0); };
    double worst = 0.0;
    for (std::size_t k = 0; k < fs.size(); ++k) {
      const auto r = bht_direct(c, fs[k], one, grid);
      const auto H = hilbert_oracle(fs[k], grid);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < grid.n; ++i) {
        num += std::norm(r.value[i] - H[i]);
        den += std::norm(H[i]);
      }
      const double rel = std::sqrt(num / den);
      worst = std::max(worst, rel);
      t.rows.push_back({static_cast<long long>(k), rel, static_cast<long long>(r.flagged.size()), r.worst_delta});
    }
    out.checks.push_back(check_le("hilbert_rel_l2", worst, 1e-4));
    out.tables.push_back(std::move(t));
  } else if (cfg.g_kind == "ensemble") {
    const auto gs = make_ensemble(cfg.seed + 1, count, shape);
    const auto hs = make_ensemble(cfg.seed + 2, count, shape);
    Table t{"bht", {"index", "re", "im", "ratio", "flagged"}, {}};
    std::size_t flagged = 0;
    for (std::size_t k = 0; k < fs.size(); ++k) {
      const auto r = bht_direct(c, fs[k], gs[k], grid);
      const auto hv = hs[k].sample(grid);
      cplx lam = 0.0;
      for (std::size_t i = 0; i < grid.n; ++i) lam += r.value[i] * hv[i];
      lam *= grid.dx;
      const double denom = lp_norm(fs[k].sample(grid), 2.0) * lp_norm(gs[k].sample(grid), 2.0) * lp_norm(hv, kInfExponent);
      flagged += r.flagged.size();
      t.rows.push_back({static_cast<long long>(k), lam.real(), lam.imag(), std::abs(lam) / denom,
                        static_cast<long long>(r.flagged.size())});
    }
    out.checks.push_back(check_le("flagged_points", static_cast<double>(flagged), 0.0));
    out.tables.push_back(std::move(t));
  } else {
    throw UsageError("--g must be const1 or ensemble");
  }
  return out;
}

json config_json(const RunConfig& c) {
  json j{{"subcommand", to_string(c.subcommand)},
         {"curve", c.curve},
         {"L", c.L},
         {"N", c.N},
         {"seed", c.seed},
         {"format", to_string(c.format)}};
  switch (c.subcommand) {
    case Subcommand::phase:
      j["j"] = c.j;
      j["eta"] = c.eta;
      j["xi_list"] = c.xi_list;
      break;
    case Subcommand::decompose:
      j["m"] = c.m;
      j["j_lo"] = c.j_lo;
      j["j_hi"] = c.j_hi;
      break;
    case Subcommand::sqfn:
      j["j_lo"] = c.j_lo;
      j["j_hi"] = c.j_hi;
      j["l_list"] = c.l_list;
      j["q_list"] = c.q_list;
      j["count"] = c.count;
      break;
    case Subcommand::cz: j["lambda"] = c.lambda; break;
    case Subcommand::scan:
      j["edge"] = c.edge;
      j["p_list"] = c.p_list;
      j["m_list"] = c.m_list;
      j["ensemble_size"] = c.ensemble_size;
      j["emit_dat"] = c.emit_dat;
      break;
    case Subcommand::bht:
      j["g"] = c.g_kind;
      j["count"] = c.count;
      break;
    case Subcommand::curve_check: break;
  }
  return j;
}

std::string sha1_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("SHA-1 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

fs::path output_dir(const RunConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return kDefaultOutputDir;
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary);
  os << bytes;
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

std::string git_blob_hash(const std::string& bytes) {
  std::string object = "blob " + std::to_string(bytes.size());
  object.push_back('\0');
  return sha1_hex(object + bytes);
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split(text, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_int(item));
      continue;
    }
    const int a = parse_int(item.substr(0, dots)), b = parse_int(item.substr(dots + 2));
    if (b < a) throw UsageError("empty range '" + trim(item) + "'");
    for (int v = a; v <= b; ++v) out.push_back(v);
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_real(item));
  if (out.empty()) throw UsageError("empty list");
  return out;
}

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + csv_field(t.columns[i]);
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      std::visit(
          [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, std::string>) out += csv_field(v);
            else if constexpr (std::is_same_v<V, double>) out += format_real(v);
            else if constexpr (std::is_same_v<V, bool>) out += v ? "true" : "false";
            else out += std::to_string(v);
          },
          row[i]);
    }
    out += "\n";
  }
  return out;
}

std::string to_json(const Table& t) {
  json arr = json::array();
  for (const auto& row : t.rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < row.size() && i < t.columns.size(); ++i)
      std::visit(
          [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, double>) obj[t.columns[i]] = real_json(v);
            else obj[t.columns[i]] = v;
          },
          row[i]);
    arr.push_back(obj);
  }
  return arr.dump(2) + "\n";
}

RunResult run(const RunConfig& cfg) {
  RunResult res;
  Output out;
  try {
    switch (cfg.subcommand) {
      case Subcommand::curve_check: out = run_curve_check(cfg); break;
      case Subcommand::phase: out = run_phase(cfg); break;
      case Subcommand::decompose: out = run_decompose(cfg); break;
      case Subcommand::sqfn: out = run_sqfn(cfg); break;
      case Subcommand::cz: out = run_cz(cfg); break;
      case Subcommand::scan: out = run_scan(cfg); break;
      case Subcommand::bht: out = run_bht(cfg); break;
    }
  } catch (const CurveRejected& e) {
    res.exit_code = kExitUsage;
    res.message = std::string("unknown or rejected curve: ") + e.what() + "\n" + curve_grammar_help();
    return res;
  } catch (const std::invalid_argument& e) {
    res.exit_code = kExitUsage;
    res.message = std::string("usage error: ") + e.what();
    return res;
  }

  const fs::path dir = output_dir(cfg);
  fs::create_directories(dir);
  const char* ext = cfg.format == Format::csv ? ".csv" : ".json";
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& t : out.tables)
    files.emplace_back(t.name + ext, cfg.format == Format::csv ? to_csv(t) : to_json(t));
  for (auto& f : out.extra_files) files.push_back(std::move(f));

  json outputs = json::array();
  std::string listing;
  for (const auto& [name, bytes] : files) {
    write_file(dir / name, bytes);
    const std::string id = git_blob_hash(bytes);
    outputs.push_back({{"file", name}, {"bytes", bytes.size()}, {"blob_sha1", id}});
    listing += id + "  " + name + "\n";
    res.files.push_back((dir / name).string());
  }
  res.outputs_hash = sha1_hex(listing);
  res.checks = out.checks;

  bool pass = true;
  json checks = json::array();
  for (const auto& ch : out.checks) {
    pass = pass && ch.pass;
    checks.push_back({{"name", ch.name}, {"value", real_json(ch.value)}, {"threshold", real_json(ch.threshold)}, {"pass", ch.pass}});
  }
  res.exit_code = pass ? kExitPass : kExitCheckFailed;

  const json manifest{{"tool", "bhtlab"},
                      {"config", config_json(cfg)},
                      {"outputs", outputs},
                      {"outputs_hash", res.outputs_hash},
                      {"checks", checks},
                      {"exit_code", res.exit_code}};
  const fs::path mpath = dir / (std::string(to_string(cfg.subcommand)) + ".manifest.json");
  write_file(mpath, manifest.dump(2) + "\n");
  res.manifest_path = mpath.string();
  return res;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"bhtlab: numerical laboratory for bilinear Hilbert transforms along curves"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string format = "csv", xi_text, l_text, q_text, p_text, m_text;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--curve", cfg.curve, "curve descriptor, e.g. \"pow: 2\" or \"poly: t^2 + t^3\"");
    sub->add_option("--L", cfg.L, "grid half-width");
    sub->add_option("--N", cfg.N, "grid points");
    sub->add_option("--seed", cfg.seed, "ensemble seed");
    sub->add_option("--out", cfg.output_dir, std::string("output directory (default $") + kOutputDirEnv + " or " + kDefaultOutputDir + ")");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };

  std::map<CLI::App*, Subcommand> kinds;
  auto add = [&](const char* name, const char* help, Subcommand s) {
    CLI::App* sub = app.add_subcommand(name, help);
    common(sub);
    kinds[sub] = s;
    return sub;
  };

  add("curve-check", "class-membership diagnostics", Subcommand::curve_check);

  auto* phase = add("phase", "critical points and phase values", Subcommand::phase);
  phase->add_option("--j", cfg.j, "scale");
  phase->add_option("--eta", cfg.eta, "eta > 0");
  phase->add_option("--xi-list", xi_text, "comma-separated xi values");

  auto* dec = add("decompose", "per-(j, p0) energies and trilinear pieces", Subcommand::decompose);
  dec->add_option("--m", cfg.m, "oscillation level");
  dec->add_option("--j-lo", cfg.j_lo);
  dec->add_option("--j-hi", cfg.j_hi);

  auto* sq = add("sqfn", "shifted square functions and growth in the shift", Subcommand::sqfn);
  sq->add_option("--l-list", l_text, "shifts, e.g. 1,4,16");
  sq->add_option("--q-list", q_text, "exponents, e.g. 4/3,2,4");
  sq->add_option("--j-lo", cfg.j_lo);
  sq->add_option("--j-hi", cfg.j_hi);
  sq->add_option("--count", cfg.count, "ensemble size");

  auto* cz = add("cz", "Calderon-Zygmund decomposition of a random dyadic step function", Subcommand::cz);
  cz->add_option("--lambda", cfg.lambda, "height (default 4 x mean |f|)");

  auto* scan = add("scan", "sup ratios of the trilinear form along a triangle edge", Subcommand::scan);
  scan->add_option("--edge", cfg.edge, "AC or AB");
  scan->add_option("--p-list,--p", p_text, "p values, e.g. 2,4/3");
  scan->add_option("--m-list,--m", m_text, "m values, e.g. 2..8");
  scan->add_option("--ensemble-size", cfg.ensemble_size);
  scan->add_flag("--dat", cfg.emit_dat, "also write a gnuplot-ready scan.dat");

  auto* bht = add("bht", "direct principal-value evaluation", Subcommand::bht);
  bht->add_option("--g", cfg.g_kind, "const1 (Hilbert cross-check) or ensemble");
  bht->add_option("--count", cfg.count, "number of ensemble functions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    for (auto& [sub, kind] : kinds)
      if (sub->parsed()) cfg.subcommand = kind;
    cfg.format = format == "json" ? Format::json : Format::csv;
    if (!xi_text.empty()) cfg.xi_list = parse_real_list(xi_text);
    if (!q_text.empty()) cfg.q_list = parse_real_list(q_text);
    if (!p_text.empty()) cfg.p_list = parse_real_list(p_text);
    if (!m_text.empty()) cfg.m_list = parse_int_list(m_text);
    if (!l_text.empty()) {
      cfg.l_list.clear();
      for (int v : parse_int_list(l_text)) cfg.l_list.push_back(v);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  RunResult res;
  try {
    res = run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  if (!res.message.empty()) std::cerr << res.message << "\n";
  if (res.exit_code == kExitUsage) return res.exit_code;
  for (const auto& ch : res.checks)
    std::cout << (ch.pass ? "PASS " : "FAIL ") << ch.name << " value=" << format_real(ch.value)
              << " threshold=" << format_real(ch.threshold) << "\n";
  std::cout << "manifest " << res.manifest_path << " outputs_hash " << res.outputs_hash << "\n";
  return res.exit_code;
}

}  // namespace bhtlab::cli
