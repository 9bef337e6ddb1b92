#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dercap::tdsim {

struct NetworkError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Removing a branch would split the grid.
struct IslandingError : NetworkError {
  using NetworkError::NetworkError;
};

enum class BusType { slack, pv, pq };

struct TransmissionBus {
  int id = 0;
  BusType type = BusType::pq;
  double v_set = 1.0;  // pu, used by slack and PV buses
  double p_load_mw = 0.0;
  double q_load_mvar = 0.0;
};

struct Branch {
  int id = 0;
  int from = 0;  // bus ids
  int to = 0;
  double r_pu = 0.0;
  double x_pu = 0.0;
  double b_pu = 0.0;  // total line charging
  bool in_service = true;
};

struct Generator {
  int bus = 0;
  double p_mw = 0.0;
  double q_min_mvar = -1e9;
  double q_max_mvar = 1e9;
};

struct TransmissionNetwork {
  double base_mva = 100.0;
  std::vector<TransmissionBus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> gens;

  /// Position of a bus id in `buses`; throws NetworkError when unknown.
  int bus_index(int id) const;
  int branch_index(int id) const;
  int in_service_count() const;
};

/// Parses and validates: unique ids, exactly one slack, branch and generator
/// ends on known buses, positive reactance, connected with every branch in.
TransmissionNetwork load_transmission(std::string_view document);
TransmissionNetwork load_transmission_file(const std::string& path);

/// True when the in-service branches reach every bus.
bool is_connected(const TransmissionNetwork& net);

/// Copy with the branch taken out. Unknown or already-out branches throw
/// NetworkError; a split grid throws IslandingError.
TransmissionNetwork apply_contingency(const TransmissionNetwork& net, int branch_id);

/// Extra load on top of the bus's own, MW / Mvar.
struct BusInjection {
  double p_mw = 0.0;
  double q_mvar = 0.0;
};

struct PowerFlowOptions {
  double tolerance = 1e-8;  // pu mismatch
  int max_iterations = 30;
  bool enforce_q_limits = true;
};

struct PowerFlowResult {
  bool converged = false;
  int iterations = 0;  // Newton steps, summed over PV-to-PQ switches
  double mismatch = 0.0;
  std::vector<double> vm;  // per bus, pu
  std::vector<double> va;  // rad
  double slack_p_mw = 0.0;
  double slack_q_mvar = 0.0;
  std::vector<double> gen_q_mvar;  // per generator
  double loss_mw = 0.0;
  std::vector<int> limited_buses;  // PV buses held at a Q limit
};

/// Newton-Raphson in polar form. `extra` is indexed like net.buses (empty = none).
/// Divergence is reported through `converged`, never thrown.
PowerFlowResult ac_power_flow(const TransmissionNetwork& net, const std::vector<BusInjection>& extra = {},
                              const PowerFlowOptions& opts = {});

/// Bus admittance matrix of the in-service branches, ordered like net.buses.
Eigen::MatrixXcd admittance_matrix(const TransmissionNetwork& net);

}  // namespace dercap::tdsim
