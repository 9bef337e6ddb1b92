#include "dercap/capability/interval.hpp"

#include <cmath>
#include <stdexcept>

namespace dercap::capability {

DecouplingRange decoupling_range(double v0_star, const feeder::SubstationParams& tap) {
  if (!(v0_star > 0.0)) throw std::invalid_argument("decoupling_range: v0* must be positive");
  return {v0_star / tap.r_max(), v0_star / tap.r_min()};
}

WorstCaseBounds worst_case_bounds(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                                  const feeder::OperatingPoint& op, double curtailment, double q_lower,
                                  double q_upper, double v_tm_min, double v_tm_max, const OpfOptions& opts) {
  if (!(v_tm_min <= v_tm_max)) throw std::invalid_argument("worst_case_bounds: v_tm_min > v_tm_max");
  WorstCaseBounds out;
  out.lower = capacitive_capability(model, sens, op, curtailment, v_tm_max, opts);
  out.upper = inductive_capability(model, sens, op, curtailment, v_tm_min, opts);
  out.feasible_lower = out.lower.feasible;
  out.feasible_upper = out.upper.feasible;
  if (out.feasible_lower) out.eps_lower = q_lower - out.lower.q_kvar;
  if (out.feasible_upper) out.eps_upper = q_upper - out.upper.q_kvar;
  return out;
}

CapabilityInterval capability_interval(const CapabilitySide& lower, const CapabilitySide& upper,
                                       const WorstCaseBounds& eps, const feeder::SubstationParams& tap,
                                       double v_tm_min, double v_tm_max) {
  CapabilityInterval out;
  out.q_lower = lower.q_kvar;
  out.q_upper = upper.q_kvar;
  out.eps_lower = eps.eps_lower;
  out.eps_upper = eps.eps_upper;
  out.worst_lower = eps.feasible_lower ? eps.lower.q_kvar : std::nan("");
  out.worst_upper = eps.feasible_upper ? eps.upper.q_kvar : std::nan("");
  if (!lower.feasible || !upper.feasible) return out;

  out.d_lower = decoupling_range(lower.dispatch.v0, tap);
  out.d_upper = decoupling_range(upper.dispatch.v0, tap);
  const bool shift_lower = !out.d_lower.contains(v_tm_max);
  const bool shift_upper = !out.d_upper.contains(v_tm_min);
  out.case_id = shift_lower ? (shift_upper ? 4 : 2) : (shift_upper ? 3 : 1);
  out.reported_lower = shift_lower ? out.q_lower - out.eps_lower : out.q_lower;
  out.reported_upper = shift_upper ? out.q_upper - out.eps_upper : out.q_upper;
  return out;
}

FlexibilityRange rpfr(double q_lower, double q_upper, double q_base) {
  if (q_base == 0.0) throw std::invalid_argument("rpfr: zero base var demand");
  return {(q_lower - q_base) / q_base, (q_upper - q_base) / q_base, q_base};
}

}  // namespace dercap::capability
