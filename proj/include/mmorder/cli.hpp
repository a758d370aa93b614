#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mmorder/families.hpp"
#include "mmorder/mc.hpp"

namespace mmorder::cli {

/// Version of the JSON documents the tool writes.
inline constexpr const char* spec_version = "1.0";

/// Exit codes shared by every command.
enum ExitCode : int {
  exit_ok = 0,
  exit_domain = 2,
  exit_input = 3,
  exit_numeric = 4,
};

/// Fully resolved command-line request.
struct RunRequest {
  std::string command;             ///< estimate | check-family | check-order | simulate
  std::string family;
  FixedParams params;
  std::string spec = "mean";       ///< mean | log | T | k-th:<k> | abs-log
  std::string estimator = "moment";
  std::string theorem;             ///< empty: inferred from the estimator
  std::optional<double> theta;
  std::optional<double> theta2;
  std::size_t n = 20;
  std::size_t reps = 20000;
  std::uint64_t seed = mc::default_seed;
  std::string input;
  std::string output;              ///< empty: stdout
  std::string format = "json";     ///< json | csv
  std::string csv;                 ///< optional per-replicate CSV path (simulate)
  std::size_t grid_size = 512;
  double confidence = mc::default_confidence;
  int bins = mc::default_bins;
  unsigned threads = 1;
};

nlohmann::json to_json(const RunRequest& req);

/// Result of a command: exit code plus the JSON document to emit. On error
/// `report` holds {"error": {"kind", "message", ...}}.
struct CommandOutcome {
  int exit_code = exit_ok;
  nlohmann::json report;
  std::vector<std::string> summary_lines;  ///< human-readable verdict lines
  std::string csv;                         ///< per-replicate CSV (simulate only)
};

CommandOutcome cmd_estimate(const RunRequest& req);
CommandOutcome cmd_check_family(const RunRequest& req);
CommandOutcome cmd_check_order(const RunRequest& req);
CommandOutcome cmd_simulate(const RunRequest& req);

/// Parse values from CSV text: one number per line, optional `x` header,
/// blank lines ignored. Throws InvalidInput naming the offending line.
std::vector<double> parse_values_csv(const std::string& text);

/// Build the Monte Carlo configuration a simulate request describes.
mc::McConfig make_mc_config(const RunRequest& req);
mc::Theorem infer_theorem(const RunRequest& req);

/// Write `contents` to `path` through a temporary file and rename.
void write_atomically(const std::string& path, const std::string& contents);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mmorder::cli
