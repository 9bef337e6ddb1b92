#pragma once

#include <stdexcept>
#include <vector>

#include "dercap/conic/problem.hpp"
#include "dercap/conic/solver.hpp"

namespace dercap::agg {

/// One inverter-interfaced PV unit. Powers in kW / kVA.
struct DerUnit {
  int id = 0;
  int node = 0;
  int phase = 0;  // 0..2 for a, b, c
  double s_rating = 0.0;
  double p_rated = 0.0;
  double p_avail = 0.0;
};

struct AllocationError : std::domain_error {
  using std::domain_error::domain_error;
};

struct QBounds {
  double q_min = 0.0;
  double q_max = 0.0;
};

/// Reactive range of one inverter at real output p_gen (circular capability).
QBounds device_q_bounds(const DerUnit& unit, double p_gen);

struct Allocation {
  std::vector<double> p;
  bool saturated = false;  // at least one unit clamped to its availability
};

/// Splits p_sub across units in proportion to their ratings, clamping units
/// that would exceed availability and re-spreading the remainder.
Allocation proportional_allocation(const std::vector<DerUnit>& units, double p_sub);

struct EnvelopeValue {
  double q_min = 0.0;
  double q_max = 0.0;
  bool numeric_fallback = false;
};

EnvelopeValue analytic_envelope(const std::vector<DerUnit>& units, double p_sub);

/// max (or min) sum q_i  s.t.  sum p_i = p_sub, 0 <= p_i <= p_avail_i, ||(p_i, q_i)|| <= S_i.
/// Variables are laid out as p_0, q_0, p_1, q_1, ...
conic::ConicProblem envelope_problem(const std::vector<DerUnit>& units, double p_sub, bool maximize);

struct NumericEnvelope {
  double q_min = 0.0;
  double q_max = 0.0;
  conic::ConicSolution lower;
  conic::ConicSolution upper;
};

NumericEnvelope numeric_envelope(const std::vector<DerUnit>& units, double p_sub,
                                 const conic::SolverOptions& opts = {});

struct EnvelopeSample {
  double p_sub = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
};

/// Evenly spaced samples of p_sub on [0, sum p_avail]; uses the closed form
/// where it applies and the conic solve otherwise.
std::vector<EnvelopeSample> aggregate_envelope(const std::vector<DerUnit>& units, int samples = 101);

}  // namespace dercap::agg
