#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dercap/feeder/model.hpp"

namespace dercap::feeder {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Rows of m are non-root node slots, columns are line slots; the line (i, j)
/// carries +1 in the rows of i and -1 in the rows of j, phase by phase.
/// m0 holds the root's part transposed (line slots x 3 root phases).
struct IncidenceMatrices {
  MatrixXd m;
  MatrixXd m0;
};

IncidenceMatrices build_incidence(const FeederModel& model);

/// Z^p, Z^q of one line in pu, restricted to the phases of its downstream node.
struct LineCoupling {
  MatrixXd zp;
  MatrixXd zq;
  std::vector<int> phases;
};

LineCoupling line_coupling(const FeederModel& model, int line);

/// Block-diagonal Z_D^p, Z_D^q over line slots.
void assemble_zd(const FeederModel& model, MatrixXd& zp_d, MatrixXd& zq_d);

struct LossConstants {
  VectorXd l_p;  // pu per slot
  VectorXd l_q;
};

struct FeederSensitivities {
  MatrixXd r_eq;
  MatrixXd x_eq;
  VectorXd l_p;
  VectorXd l_q;
  VectorXd l_c;
};

enum class Exec { serial, parallel };

/// Tree sweeps, one column per slot. Loss vectors start at zero.
FeederSensitivities compute_sensitivities(const FeederModel& model, Exec exec = Exec::parallel);

/// Same matrices from dense incidence algebra; for cross-checking only.
FeederSensitivities dense_sensitivities(const FeederModel& model);

/// Copy of sens with the loss constants installed and l_c recomputed.
FeederSensitivities with_losses(const FeederSensitivities& sens, const LossConstants& losses);

/// Y = r_eq p + x_eq q + v0^2 1 + l_c
VectorXd solve_voltages(const FeederSensitivities& sens, const VectorXd& p, const VectorXd& q, double v0);

struct Injections {
  VectorXd p;  // pu per slot, generation minus load
  VectorXd q;
};

/// der_p / der_q in kW / kvar per DER unit (empty means zero).
Injections net_injections(const FeederModel& model, const OperatingPoint& op, const std::vector<double>& der_p,
                          const std::vector<double>& der_q);

struct LineFlows {
  VectorXd p;  // pu per line slot, positive downstream
  VectorXd q;
};

/// P_j = -p_j + sum over children P_k + L_j, accumulated leaves first.
LineFlows line_flows(const FeederModel& model, const VectorXd& p, const VectorXd& q, const VectorXd& l_p,
                     const VectorXd& l_q);

/// (p^2 + q^2) / y * x
double reactive_loss(double p_flow, double q_flow, double y, double x_phase);

/// Self resistance / reactance of every line slot, pu.
void self_impedance(const FeederModel& model, VectorXd& r_self, VectorXd& x_self);

/// Loss factors from the lossless linear solution at the base point
/// (DER at full availability and unity power factor, v0 = 1).
LossConstants estimate_loss_constants(const FeederModel& model, const FeederSensitivities& lossless,
                                      const OperatingPoint& base);

struct SubstationPower {
  double p_kw = 0.0;
  double q_kvar = 0.0;
};

/// Net power drawn from the grid: loads minus DER output plus line losses
/// evaluated at the given flows and voltages.
SubstationPower net_substation_power(const FeederModel& model, const OperatingPoint& op,
                                     const std::vector<double>& der_p, const std::vector<double>& der_q,
                                     const VectorXd& y, const LineFlows& flows);

double net_substation_var(const FeederModel& model, const OperatingPoint& op, const std::vector<double>& der_q,
                          const VectorXd& y, const LineFlows& flows);

/// Voltages, flows and substation power for a complete dispatch.
struct FeederState {
  VectorXd y;
  LineFlows flows;
  SubstationPower sub;
};

FeederState evaluate_dispatch(const FeederModel& model, const FeederSensitivities& sens, const OperatingPoint& op,
                              const std::vector<double>& der_p, const std::vector<double>& der_q, double v0);

}  // namespace dercap::feeder
