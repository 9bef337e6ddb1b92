#pragma once

#include <limits>
#include <string>
#include <vector>

#include "dercap/conic/solver.hpp"
#include "dercap/feeder/linear.hpp"
#include "dercap/feeder/model.hpp"

namespace dercap::capability {

enum class Direction { min, max };

enum class CurtailmentMode {
  exact,   // sum p_bar_j cur_j = C sum p_bar_j
  at_most  // sum p_bar_j cur_j <= C sum p_bar_j
};

struct OpfOptions {
  double v_min = 0.95;
  double v_max = 1.05;
  CurtailmentMode curtailment_mode = CurtailmentMode::exact;
  /// Per-DER lower bound on the curtailment fraction; empty means zero.
  std::vector<double> cur_floor;
  /// Per-DER bound on |q| in kvar on top of the inverter rating; empty means none.
  std::vector<double> q_cap_kvar;
  conic::SolverOptions solver;
};

/// Variable indices inside the built problem.
struct OpfVariables {
  std::vector<int> q;    // DER var output, pu (positive = injection)
  std::vector<int> cur;  // curtailment fraction per DER
  int y0 = -1;           // squared secondary voltage
  std::vector<int> loss; // epigraph of the per-slot var loss, min problem only (-1 where x_self = 0)
};

/// Every built problem carries the pieces needed to read a solution back or
/// to extend it (target-q rows, alternative objectives).
struct DerOpf {
  conic::ConicProblem problem;
  OpfVariables vars;
  /// Lossless net var demand = constant + sum coef * x, pu.
  conic::Affine lossless_q;
  /// Squared voltage of every slot as an affine expression.
  std::vector<conic::Affine> y;
  double base_kva = 0.0;  // per-phase power base used for the pu values
  int curtailment_row = -1;
};

/// Both directions share the constraint set. The min problem adds the var
/// losses through rotated cones P^2 + Q^2 <= t Y; the max problem drops them.
DerOpf build_der_opf(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                     const feeder::OperatingPoint& op, double curtailment, double v_tm, Direction direction,
                     const OpfOptions& opts = {});

struct Dispatch {
  std::vector<double> cur;     // fraction per DER
  std::vector<double> p_kw;    // output after curtailment
  std::vector<double> q_kvar;  // positive = injection
  double v0 = 0.0;
};

struct CapabilitySide {
  conic::Status status = conic::Status::max_iterations;
  bool feasible = false;
  double q_kvar = std::numeric_limits<double>::quiet_NaN();
  Dispatch dispatch;
  conic::ConicSolution solution;
  /// Forward check of the returned dispatch against the voltage box and the
  /// inverter limits.
  double voltage_violation = 0.0;  // pu^2, positive when outside
  double cone_margin = 0.0;        // min over DERs of S - |(p, q)|, kVA
  bool verified = false;
};

/// Voltage tolerance of the forward check, pu^2.
inline constexpr double kVoltageCheckTol = 1e-6;

/// Lowest reachable net var demand (maximum capacitive support). The value is
/// re-evaluated with losses at the solved point.
CapabilitySide capacitive_capability(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                                     const feeder::OperatingPoint& op, double curtailment, double v_tm,
                                     const OpfOptions& opts = {});

/// Highest reachable net var demand. Solved lossless; among lossless optima
/// the one with the lowest secondary voltage is taken, then losses are re-added.
CapabilitySide inductive_capability(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                                    const feeder::OperatingPoint& op, double curtailment, double v_tm,
                                    const OpfOptions& opts = {});

/// Reads the dispatch out of a solved problem and runs the forward check.
CapabilitySide finish_side(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                           const feeder::OperatingPoint& op, const DerOpf& opf, conic::ConicSolution sol,
                           const OpfOptions& opts);

/// Sensitivities with the loss constants of this operating point installed.
feeder::FeederSensitivities sensitivities_at(const feeder::FeederModel& model,
                                             const feeder::FeederSensitivities& lossless,
                                             const feeder::OperatingPoint& op);

/// Secondary voltage the tap reaches when aiming for 1 pu.
double nominal_v0(const feeder::FeederModel& model, double v_tm);

/// Net var demand with every inverter at unity power factor, no curtailment,
/// v0 = nominal_v0(v_tm), losses included.
double base_var_demand(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                       const feeder::OperatingPoint& op, double v_tm = 1.0);

}  // namespace dercap::capability
