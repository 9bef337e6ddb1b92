#pragma once

#include <limits>

#include "dercap/capability/opf.hpp"

namespace dercap::capability {

/// Grid-side voltages for which the tap can still hold the secondary at v0*.
struct DecouplingRange {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v_tm) const { return lo <= v_tm && v_tm <= hi; }
};

/// [v0* / r_max, v0* / r_min]. Throws std::invalid_argument for v0* <= 0.
DecouplingRange decoupling_range(double v0_star, const feeder::SubstationParams& tap);

struct WorstCaseBounds {
  double eps_lower = std::numeric_limits<double>::quiet_NaN();
  double eps_upper = std::numeric_limits<double>::quiet_NaN();
  bool feasible_lower = false;
  bool feasible_upper = false;
  CapabilitySide lower;  // min problem at v_tm_max
  CapabilitySide upper;  // lossless max problem at v_tm_min
};

/// Re-solves both sides at the extreme grid voltages. eps = nominal - worst,
/// so that worst = nominal - eps. An infeasible re-solve leaves eps at NaN.
WorstCaseBounds worst_case_bounds(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                                  const feeder::OperatingPoint& op, double curtailment, double q_lower,
                                  double q_upper, double v_tm_min, double v_tm_max, const OpfOptions& opts = {});

struct CapabilityInterval {
  double q_lower = std::numeric_limits<double>::quiet_NaN();
  double q_upper = std::numeric_limits<double>::quiet_NaN();
  double eps_lower = std::numeric_limits<double>::quiet_NaN();
  double eps_upper = std::numeric_limits<double>::quiet_NaN();
  DecouplingRange d_lower;  // from the min problem's v0*
  DecouplingRange d_upper;  // from the max problem's v0*
  double worst_lower = std::numeric_limits<double>::quiet_NaN();
  double worst_upper = std::numeric_limits<double>::quiet_NaN();
  /// The bounds the feeder can promise over [v_tm_min, v_tm_max].
  double reported_lower = std::numeric_limits<double>::quiet_NaN();
  double reported_upper = std::numeric_limits<double>::quiet_NaN();
  /// 1: both extremes decoupled, 2: only v_tm_max outside d_lower,
  /// 3: only v_tm_min outside d_upper, 4: both outside, 0: a nominal side is infeasible.
  int case_id = 0;
};

CapabilityInterval capability_interval(const CapabilitySide& lower, const CapabilitySide& upper,
                                       const WorstCaseBounds& eps, const feeder::SubstationParams& tap,
                                       double v_tm_min, double v_tm_max);

struct FlexibilityRange {
  double a = 0.0;
  double b = 0.0;
  double q_base = 0.0;
};

/// a = (q_lower - q_base) / q_base, b likewise. NaN bounds give NaN entries.
/// Throws std::invalid_argument when q_base is zero.
FlexibilityRange rpfr(double q_lower, double q_upper, double q_base);

}  // namespace dercap::capability
