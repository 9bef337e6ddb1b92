#pragma once

#include <chrono>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dercap/capability/sweep.hpp"

namespace dercap::cli {

/// Six significant digits; NaN and infinities print as "inf".
std::string format_number(double v);

/// Inverse of format_number. "inf" and an empty cell read back as +infinity
/// and NaN respectively. Throws std::invalid_argument on anything else.
double parse_number(const std::string& cell);

inline constexpr const char* kCapabilityHeader =
    "curtailment,q_lower_kvar,q_upper_kvar,q_base_kvar,a,b,v0_lower,v0_upper,d_lo,d_hi,"
    "wc_q_lower_kvar,wc_q_upper_kvar,case_id,feasible_lower,feasible_upper";

/// One capability CSV row, as written. Cells of an infeasible side hold
/// infinity; the worst-case cells are NaN (empty) when no worst case was run.
struct CapabilityRow {
  double curtailment = 0.0;
  double q_lower = 0.0;
  double q_upper = 0.0;
  double q_base = 0.0;
  double a = 0.0;
  double b = 0.0;
  double v0_lower = 0.0;
  double v0_upper = 0.0;
  double d_lo = 0.0;  // grid voltages over which both bounds stay decoupled
  double d_hi = 0.0;
  double wc_q_lower = 0.0;
  double wc_q_upper = 0.0;
  int case_id = 0;
  bool feasible_lower = false;
  bool feasible_upper = false;
};

CapabilityRow capability_row(const capability::CapabilityPoint& pt, const feeder::SubstationParams& tap);
void write_capability_csv(std::ostream& out, const std::vector<CapabilityRow>& rows);
/// Throws std::runtime_error naming the line on a schema violation.
std::vector<CapabilityRow> read_capability_csv(const std::string& path);

/// Lowercase hex SHA-256 of a file's bytes. Throws std::runtime_error when unreadable.
std::string sha256_file(const std::string& path);

/// Threads available to parallel sweeps: DERCAP_THREADS when set to a
/// positive integer, otherwise the OpenMP default. Applies the cap.
int apply_thread_limit();

struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
  nlohmann::json parameters = nlohmann::json::object();
  std::map<std::string, int> status_counts;
  std::vector<std::string> outputs;
  std::string error;
  int exit_code = 0;
  int threads = 1;
  double wall_clock_s = 0.0;

  void add_input(const std::string& path);
  void count(const std::string& status, int n = 1) { status_counts[status] += n; }
  void count(const capability::CapabilitySide& side);
  nlohmann::json to_json() const;
};

/// Writes <dir>/manifest.json.
void write_manifest(const std::string& dir, const RunManifest& manifest);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dercap::cli
