#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dercap::cli {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInfeasible = 2;  // results written, some point infeasible (cosim: every step diverged)

struct CapabilityArgs {
  std::string feeder;
  double vtm = 1.0;
  std::string curtailment_grid = "default";  // "default" or comma-separated fractions
  std::string out;
  bool worst_case = false;
  double vtm_min = 0.9;
  double vtm_max = 1.1;
  double load = 1.0;
  double solar = 1.0;
};

struct DayAheadArgs {
  std::string feeder;
  std::string profiles;
  double curtailment = 0.0;
  std::string ieee1547;  // "", "oversize" or "curtail"
  std::string out;
  double vtm = 1.0;
};

struct SweepArgs {
  std::string feeder;
  std::string vary;  // penetration (percent) | oversize | placement | vtm
  std::string values;
  std::string out;
  double curtailment = 0.0;
  double load = 1.0;
  double solar = 1.0;
  double vtm = 1.0;
};

struct CosimArgs {
  std::string transmission;
  std::string scenario;
  std::string out;
};

struct EnvelopeArgs {
  std::string feeder;
  int samples = 101;
  std::string out;
};

int cmd_capability(const CapabilityArgs& args, std::ostream& log);
int cmd_dayahead(const DayAheadArgs& args, std::ostream& log);
int cmd_sweep(const SweepArgs& args, std::ostream& log);
int cmd_cosim(const CosimArgs& args, std::ostream& log);
int cmd_envelope(const EnvelopeArgs& args, std::ostream& log);

/// "a,b,c" -> {a, b, c}; whitespace around items is dropped.
std::vector<std::string> split_list(const std::string& text);
/// Throws std::invalid_argument naming the bad item.
std::vector<double> parse_values(const std::string& text);

}  // namespace dercap::cli
