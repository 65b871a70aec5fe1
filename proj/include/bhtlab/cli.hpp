#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace bhtlab::cli {

enum class Subcommand { curve_check, phase, decompose, sqfn, cz, scan, bht };
enum class Format { csv, json };

const char* to_string(Subcommand s);
const char* to_string(Format f);

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "BHTLAB_OUT_DIR";
inline constexpr const char* kDefaultOutputDir = "bhtlab_out";

/// Exit codes.
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Everything a run needs.  Zero / empty values mean "subcommand default".
struct RunConfig {
  Subcommand subcommand = Subcommand::curve_check;
  std::string curve = "pow: 2";
  double L = 0.0;       // grid half-width
  std::size_t N = 0;    // grid points
  std::uint64_t seed = 1;
  std::string output_dir;  // empty: $BHTLAB_OUT_DIR, else bhtlab_out
  Format format = Format::csv;

  // phase
  int j = 0;
  double eta = 1.0;
  std::vector<double> xi_list;

  // decompose, sqfn
  int m = 4;
  int j_lo = 0;
  int j_hi = -1;  // -1: 2 for decompose, 6 for sqfn

  // sqfn
  std::vector<long> l_list{1, 4, 16, 64, 256, 1024};
  std::vector<double> q_list{4.0 / 3.0, 2.0, 4.0};
  int count = 0;  // ensemble size; 0: 4 for sqfn, 10 for bht

  // cz
  double lambda = 0.0;  // 0: four times the mean of |f|

  // scan
  std::string edge = "AC";
  std::vector<double> p_list{2.0};
  std::vector<int> m_list{2, 3, 4, 5, 6, 7, 8};
  int ensemble_size = 32;
  bool emit_dat = false;

  // bht
  std::string g_kind = "const1";
};

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct RunResult {
  int exit_code = kExitPass;
  std::string message;               // usage or error text
  std::vector<std::string> files;    // output files, manifest excluded
  std::string manifest_path;
  std::string outputs_hash;          // SHA-1 over the per-file blob hashes
  std::vector<Check> checks;
};

/// Runs one workflow, writes its tables and a manifest.  Never throws for
/// bad input: usage problems come back as exit code 2 with a message.
RunResult run(const RunConfig& config);

/// Parses argv with CLI11 and runs; returns the process exit code.
int main_entry(int argc, char** argv);

/// git's object id for a blob: SHA-1 of "blob <size>\0" followed by the bytes.
std::string git_blob_hash(const std::string& bytes);

/// "2..8" or "2,3,5"
std::vector<int> parse_int_list(const std::string& text);
/// "2,4/3,1.5"
std::vector<double> parse_real_list(const std::string& text);

// Tabular output shared by all subcommands.  CSV and JSON carry the same
// columns; JSON is an array of objects keyed by column name.
using Cell = std::variant<std::string, double, long long, bool>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string to_csv(const Table& t);
std::string to_json(const Table& t);

}  // namespace bhtlab::cli
