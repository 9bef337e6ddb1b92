#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "dercap/capability/opf.hpp"
#include "dercap/feeder/linear.hpp"
#include "dercap/feeder/model.hpp"
#include "dercap/tdsim/network.hpp"

namespace dercap::tdsim {

/// A feeder frozen at one operating point, with its loss constants.
struct FeederContext {
  feeder::FeederModel model;
  feeder::FeederSensitivities lossless;
  feeder::OperatingPoint op;
  feeder::FeederSensitivities sens;
};

FeederContext make_feeder_context(feeder::FeederModel model, double load_mult = 1.0, double solar_mult = 1.0);

/// DER set-points plus the secondary voltage the tap aims for.
struct FeederDispatch {
  std::vector<double> p_kw;
  std::vector<double> q_kvar;
  double v0_target = 1.0;
};

/// Full availability, unity power factor; the tap aims for the secondary
/// voltage that centres the feeder's voltage band on 1 pu (within ANSI).
FeederDispatch unity_dispatch(const FeederContext& ctx);

struct FeederResponse {
  double p_kw = 0.0;  // net draw of one feeder copy
  double q_kvar = 0.0;
  double v0 = 0.0;
  double v_min = 0.0;  // over all node-phases, pu
  double v_max = 0.0;
};

/// Net draw at grid voltage v_tm. The tap lands as close to the dispatch's
/// target as its range allows.
FeederResponse feeder_response(const FeederContext& ctx, const FeederDispatch& dispatch, double v_tm);

struct VarSupportOptions {
  /// Per-unit |q| cap as a fraction of p_rated (infinity = inverter rating only).
  double q_headroom = std::numeric_limits<double>::infinity();
  /// Requests this far outside the capability are still served at the edge.
  double reject_margin_kvar = 1.0;
  double match_tol_kvar = 1e-3;
  int max_loss_updates = 12;
  capability::OpfOptions opf;
};

struct VarSupportResult {
  bool accepted = false;
  double requested_kvar = 0.0;
  double nearest_kvar = 0.0;   // the request projected onto [q_lower, q_upper]
  double achieved_kvar = 0.0;  // net var demand of the returned dispatch, losses included
  double q_lower_kvar = 0.0;
  double q_upper_kvar = 0.0;
  double curtailment = 0.0;  // fleet-wide fraction
  FeederDispatch dispatch;
};

/// Capability of one feeder at a curtailment cap and grid voltage, with the
/// edge dispatches. Either side may be infeasible.
struct SupportInterval {
  double curtailment_cap = 0.0;
  double v_tm = 1.0;
  capability::CapabilitySide lower;
  capability::CapabilitySide upper;
};

SupportInterval support_interval(const FeederContext& ctx, double curtailment_cap, double v_tm,
                                 const VarSupportOptions& opts = {});

/// Dispatch that makes the feeder draw `requested_kvar` with the least
/// curtailment, curtailment capped at `curtailment_cap`; among those the one
/// with the smallest total |q|. Requests outside the capability interval
/// (beyond the reject margin) come back with accepted = false and the nearest
/// reachable value.
VarSupportResult var_support_dispatch(const FeederContext& ctx, double requested_kvar, double curtailment_cap,
                                      double v_tm, const VarSupportOptions& opts = {});

/// Same, against an interval computed earlier with the same options.
VarSupportResult var_support_dispatch(const FeederContext& ctx, const SupportInterval& interval,
                                      double requested_kvar, const VarSupportOptions& opts = {});

struct Boundary {
  int bus = 0;
  std::shared_ptr<const FeederContext> feeder;
  int multiplicity = 1;
};

struct BoundaryOptions {
  double tolerance = 1e-4;  // max |dv_tm|, pu
  double relaxation = 0.5;
  int max_iterations = 50;
  PowerFlowOptions power_flow;
};

struct BoundaryState {
  double v_tm = 0.0;        // grid voltage the feeders were evaluated at
  FeederResponse response;  // one copy
  BusInjection injection;   // all copies, MW / Mvar, as used by the power flow
};

struct BoundaryResult {
  bool converged = false;
  int iterations = 0;
  double max_dv = 0.0;
  PowerFlowResult pf;
  std::vector<BoundaryState> states;  // per boundary
};

/// Gauss-Seidel exchange: power flow with the feeders' net draw at the
/// boundary buses, feeders re-evaluated at the returned voltages, relaxed
/// update of v_tm. Feeder draws are added to whatever load the bus already
/// carries. Without `v_start` the first guess comes from a power flow with
/// the feeders evaluated at 1 pu.
BoundaryResult boundary_iterate(const TransmissionNetwork& net, const std::vector<Boundary>& boundaries,
                                const std::vector<FeederDispatch>& dispatches, const std::vector<double>& v_start = {},
                                const BoundaryOptions& opts = {});

enum class EventKind { branch_outage, var_request };

/// One boundary's var request. With `just_enough` set, q_kvar is ignored and
/// the request is sized by bisection.
struct SupportRequest {
  int bus = 0;
  double q_kvar = 0.0;
  bool just_enough = false;
  double curtailment_cap = 0.0;
  double q_headroom = std::numeric_limits<double>::infinity();
};

struct CosimEvent {
  int t = 0;
  EventKind kind = EventKind::branch_outage;
  int branch = -1;
  std::vector<SupportRequest> requests;
  /// Buses that just-enough sizing must lift to v_target (default: the requesting buses).
  std::vector<int> watch;
  double v_target = 0.95;
};

struct StepRecord {
  int t = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> vm;              // per transmission bus
  std::vector<BoundaryState> boundary; // per boundary
};

struct SupportRecord {
  int t = 0;
  int bus = 0;
  double lambda = 0.0;  // share of the maximum capacitive support used
  VarSupportResult result;
};

struct CosimResult {
  std::vector<int> bus_ids;
  std::vector<int> boundary_buses;
  std::vector<StepRecord> steps;  // t = 0 .. horizon
  std::vector<SupportRecord> support;
  int diverged_steps = 0;
};

struct CosimOptions {
  BoundaryOptions boundary;
  VarSupportOptions support;
  double lambda_tol = 1e-3;
};

/// Steps t = 0 .. horizon. Events at t are applied before that step's
/// exchange; dispatched support stays in place afterwards.
CosimResult cosimulate(const TransmissionNetwork& net, const std::vector<Boundary>& boundaries,
                       std::vector<CosimEvent> events, int horizon, const CosimOptions& opts = {});

struct Scenario {
  int horizon = 0;
  double load_mult = 1.0;
  double solar_mult = 1.0;
  /// Scale non-slack generator set-points by the change in total demand.
  bool redispatch = true;
  std::vector<CosimEvent> events;
  struct Site {
    int bus = 0;
    std::string feeder_file;  // resolved against the scenario's directory
    int multiplicity = 1;
  };
  std::vector<Site> boundaries;
  std::string name;
};

Scenario load_scenario(std::string_view document, const std::string& base_dir = ".");
Scenario load_scenario_file(const std::string& path);

/// Loads every referenced feeder once and drops the fixture load at the
/// boundary buses, which the feeders replace. With redispatch on, non-slack
/// generation is scaled by (new demand / fixture demand), the feeders counted
/// at unity power factor and 1 pu.
struct PreparedScenario {
  TransmissionNetwork net;
  std::vector<Boundary> boundaries;
};
PreparedScenario prepare_scenario(const TransmissionNetwork& net, const Scenario& scenario);

/// Long-format series: (t, series name, value) rows grouped by series.
struct SeriesTable {
  std::vector<std::string> names;
  std::vector<std::vector<std::pair<int, double>>> rows;
};
SeriesTable cosim_series(const CosimResult& result);

}  // namespace dercap::tdsim
