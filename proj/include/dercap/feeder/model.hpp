#pragma once

#include <Eigen/Dense>
#include <array>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dercap/agg/device.hpp"

namespace dercap::feeder {

enum class ErrorKind { parse, schema, cycle, dangling, phase, io };

struct FeederError : std::runtime_error {
  ErrorKind kind;
  FeederError(ErrorKind k, const std::string& what) : std::runtime_error(what), kind(k) {}
};

struct PhaseMask {
  std::array<bool, 3> present{};

  /// Accepts any non-empty subset of "abc", e.g. "ac".
  static PhaseMask parse(std::string_view text);
  bool has(int phase) const { return present[phase]; }
  int count() const { return present[0] + present[1] + present[2]; }
  std::string str() const;
};

int parse_phase(std::string_view text);  // "a" -> 0 ...
char phase_name(int phase);

struct BusNode {
  int id = 0;
  PhaseMask phases;
  std::string label;  // optional placement tag
};

/// Impedances in ohm, already multiplied by length.
struct LineSegment {
  int from = 0;
  int to = 0;
  Eigen::Matrix3d r_ohm = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d x_ohm = Eigen::Matrix3d::Zero();
};

struct Load {
  int node = 0;
  int phase = 0;
  double p_kw = 0.0;
  double q_kvar = 0.0;  // capacitors are negative
};

struct SubstationParams {
  double tap_step = 0.0063;
  int max_taps = 16;

  double r_min() const { return 1.0 - max_taps * tap_step; }
  double r_max() const { return 1.0 + max_taps * tap_step; }
};

struct FeederGraph {
  std::vector<BusNode> nodes;
  std::vector<LineSegment> lines;
  std::vector<std::vector<int>> children;
  std::vector<int> parent;     // -1 at the root
  std::vector<int> line_into;  // index into lines, -1 at the root
  std::vector<int> topo_order; // parents before children
};

/// Every (non-root node, phase) pair gets a contiguous slot. The line into a
/// node shares its slots, so flows, voltages and injections are all indexed
/// the same way.
struct SlotMap {
  std::vector<std::array<int, 3>> of_node;  // -1 where absent or at the root
  std::vector<std::pair<int, int>> entries; // slot -> (node, phase)

  int size() const { return static_cast<int>(entries.size()); }
  int at(int node, int phase) const { return of_node[node][phase]; }
};

struct FeederModel {
  double base_kva = 0.0;  // three-phase
  double base_kv = 0.0;   // line-to-line
  SubstationParams substation;
  FeederGraph graph;
  std::vector<Load> loads;
  std::vector<agg::DerUnit> ders;
  SlotMap slots;

  /// Per-phase power base, kVA.
  double phase_kva() const { return base_kva / 3.0; }
  double z_base_ohm() const { return base_kv * base_kv * 1000.0 / base_kva; }
  int num_nodes() const { return static_cast<int>(graph.nodes.size()); }
};

/// Builds children/parent/topological order and the slot map; checks tree
/// shape and phase consistency. load_feeder calls this.
void finalize(FeederModel& model);

FeederModel load_feeder(std::string_view document);
FeederModel load_feeder_file(const std::string& path);

struct OperatingPoint {
  std::vector<double> load_p;     // per slot, kW
  std::vector<double> load_q;     // per slot, kvar
  std::vector<double> der_avail;  // per DER, kW
  std::string label;
};

/// Model loads scaled by load_mult and DER availability p_rated * solar_mult.
OperatingPoint nominal_operating_point(const FeederModel& model, double load_mult = 1.0, double solar_mult = 1.0,
                                       std::string label = "nominal");

}  // namespace dercap::feeder
