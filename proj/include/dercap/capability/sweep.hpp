#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dercap/capability/interval.hpp"

namespace dercap::capability {

struct SweepOptions {
  double v_tm = 1.0;
  bool worst_case = false;
  double v_tm_min = 0.9;
  double v_tm_max = 1.1;
  OpfOptions opf;
  feeder::Exec exec = feeder::Exec::parallel;
};

struct CapabilityPoint {
  double curtailment = 0.0;
  CapabilitySide lower;
  CapabilitySide upper;
  double q_base = 0.0;
  FlexibilityRange range;
  bool has_worst_case = false;
  WorstCaseBounds worst;
  CapabilityInterval interval;

  bool feasible() const { return lower.feasible && upper.feasible; }
};

struct CapabilityCurve {
  std::vector<CapabilityPoint> points;
  std::string label;
  double v_tm = 1.0;
};

/// 0, 0.05, ..., 1.
std::vector<double> default_curtailment_grid();

/// Throws std::invalid_argument unless the grid is strictly increasing inside [0, 1].
void check_curtailment_grid(const std::vector<double>& grid);

/// One point per grid value. `lossless` are the sensitivities without loss
/// constants; the constants of `op` are installed here.
CapabilityCurve curtailment_sweep(const feeder::FeederModel& model, const feeder::FeederSensitivities& lossless,
                                  const feeder::OperatingPoint& op, const std::vector<double>& grid,
                                  const SweepOptions& opts = {});

struct HourProfile {
  int hour = 0;
  double load_mult = 1.0;
  double solar_mult = 1.0;
};

/// `hour,load_mult,solar_mult` with exactly 24 data rows; multipliers in [0, 1].
/// Throws std::runtime_error naming the offending row.
std::vector<HourProfile> read_profiles_csv(const std::string& path);

struct DayAheadSurface {
  std::vector<HourProfile> profile;
  std::vector<CapabilityCurve> hours;
};

/// Per-DER curtailment floor for an hour's operating point.
using FloorRule = std::function<std::vector<double>(const feeder::FeederModel&, const feeder::OperatingPoint&)>;

DayAheadSurface day_ahead_sweep(const feeder::FeederModel& model, const feeder::FeederSensitivities& lossless,
                                const std::vector<HourProfile>& profile, const std::vector<double>& grid,
                                const SweepOptions& opts = {}, const FloorRule& floor = {});

/// Var headroom every inverter must keep, as a fraction of its kW rating.
inline constexpr double kIeee1547Headroom = 0.44;
inline constexpr double kIeee1547Oversize = 1.113;
inline constexpr double kIeee1547MaxCurtailment = 0.102;

/// Smallest curtailment that leaves sqrt(S^2 - p^2) >= 0.44 p_rated, capped at 10.2%.
std::vector<double> ieee1547_curtailment_floor(const feeder::FeederModel& model, const feeder::OperatingPoint& op);

/// min over units of sqrt(S^2 - p^2) / p_rated with p = avail (1 - cur).
double min_headroom_ratio(const feeder::FeederModel& model, const feeder::OperatingPoint& op,
                          const std::vector<double>& cur);

struct Ieee1547Comparison {
  DayAheadSurface curtail;  // no oversize, per-unit curtailment floor
  DayAheadSurface oversize; // S = 1.113 p_rated, no curtailment
  std::vector<double> curtail_headroom;   // per hour, min_headroom_ratio
  std::vector<double> oversize_headroom;
};

Ieee1547Comparison ieee1547_scenarios(const feeder::FeederModel& model, const std::vector<HourProfile>& profile,
                                      const SweepOptions& opts = {});

/// Inverter ratings set to factor * p_rated.
feeder::FeederModel with_oversize(const feeder::FeederModel& model, double factor);

/// Ratings rescaled so total p_rated = fraction * total load kW; the
/// S / p_rated ratio of each unit is kept.
feeder::FeederModel with_penetration(const feeder::FeederModel& model, double fraction);

/// Moves the whole DER fleet onto the node-phases of nodes tagged `label`,
/// split equally, same total rating and oversize. "distributed" returns the
/// model unchanged.
feeder::FeederModel with_placement(const feeder::FeederModel& model, const std::string& label);

struct VtmWindow {
  /// Bisection brackets: *_infeasible is outside the window, *_feasible inside.
  double lo_infeasible = 0.0;
  double lo_feasible = 0.0;
  double hi_feasible = 0.0;
  double hi_infeasible = 0.0;
  bool found = false;  // both outer probes infeasible and the inner probe feasible
};

/// True when the DER-OPF constraint set is non-empty at this grid voltage.
bool opf_feasible(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                  const feeder::OperatingPoint& op, double curtailment, double v_tm, const OpfOptions& opts = {});

VtmWindow vtm_window(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                     const feeder::OperatingPoint& op, double curtailment, double v_outer_lo, double v_outer_hi,
                     double tol = 0.005, const OpfOptions& opts = {});

}  // namespace dercap::capability
