#include "dercap/capability/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dercap::capability {

namespace {

// Runs f(0..n-1). Exceptions are captured per item and the first one (by
// index) is rethrown, so the outcome does not depend on scheduling.
template <class F>
void parallel_map(int n, feeder::Exec exec, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  const bool par = exec == feeder::Exec::parallel;
#pragma omp parallel for schedule(dynamic) if (par)
  for (int i = 0; i < n; ++i) {
    try {
      f(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct PointTask {
  const feeder::OperatingPoint* op;
  const feeder::FeederSensitivities* sens;
  const OpfOptions* opf;
  double q_base;
  double curtailment;
};

CapabilityPoint solve_point(const feeder::FeederModel& model, const PointTask& t, const SweepOptions& opts) {
  CapabilityPoint pt;
  pt.curtailment = t.curtailment;
  pt.q_base = t.q_base;
  pt.lower = capacitive_capability(model, *t.sens, *t.op, t.curtailment, opts.v_tm, *t.opf);
  pt.upper = inductive_capability(model, *t.sens, *t.op, t.curtailment, opts.v_tm, *t.opf);
  pt.range = rpfr(pt.lower.q_kvar, pt.upper.q_kvar, t.q_base);
  if (opts.worst_case) {
    pt.has_worst_case = true;
    pt.worst = worst_case_bounds(model, *t.sens, *t.op, t.curtailment, pt.lower.q_kvar, pt.upper.q_kvar,
                                 opts.v_tm_min, opts.v_tm_max, *t.opf);
    pt.interval =
        capability_interval(pt.lower, pt.upper, pt.worst, model.substation, opts.v_tm_min, opts.v_tm_max);
  }
  return pt;
}

double total_rated(const feeder::FeederModel& model) {
  double s = 0.0;
  for (const auto& d : model.ders) s += d.p_rated;
  return s;
}

}  // namespace

std::vector<double> default_curtailment_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 20; ++k) g.push_back(k / 20.0);
  return g;
}

void check_curtailment_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("curtailment grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0))
      throw std::invalid_argument("curtailment " + std::to_string(grid[i]) + " outside [0, 1]");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw std::invalid_argument("curtailment grid must be strictly increasing");
  }
}

CapabilityCurve curtailment_sweep(const feeder::FeederModel& model, const feeder::FeederSensitivities& lossless,
                                  const feeder::OperatingPoint& op, const std::vector<double>& grid,
                                  const SweepOptions& opts) {
  check_curtailment_grid(grid);
  const auto sens = sensitivities_at(model, lossless, op);
  const double q_base = base_var_demand(model, sens, op, opts.v_tm);
  CapabilityCurve curve;
  curve.label = op.label;
  curve.v_tm = opts.v_tm;
  curve.points.resize(grid.size());
  parallel_map(static_cast<int>(grid.size()), opts.exec, [&](int k) {
    curve.points[k] = solve_point(model, {&op, &sens, &opts.opf, q_base, grid[k]}, opts);
  });
  return curve;
}

std::vector<HourProfile> read_profiles_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile file " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty profile file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "hour,load_mult,solar_mult")
    throw std::runtime_error(path + ": header must be hour,load_mult,solar_mult");
  std::vector<HourProfile> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell[3];
    for (auto& c : cell)
      if (!std::getline(ss, c, ',')) throw std::runtime_error(path + ": row " + std::to_string(row) + " has < 3 fields");
    HourProfile h;
    try {
      h.hour = std::stoi(cell[0]);
      h.load_mult = std::stod(cell[1]);
      h.solar_mult = std::stod(cell[2]);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ": row " + std::to_string(row) + " is not numeric");
    }
    if (h.load_mult < 0.0 || h.load_mult > 1.0 || h.solar_mult < 0.0 || h.solar_mult > 1.0)
      throw std::runtime_error(path + ": row " + std::to_string(row) + " multiplier outside [0, 1]");
    out.push_back(h);
  }
  if (out.size() != 24)
    throw std::runtime_error(path + ": expected 24 rows, found " + std::to_string(out.size()));
  return out;
}

DayAheadSurface day_ahead_sweep(const feeder::FeederModel& model, const feeder::FeederSensitivities& lossless,
                                const std::vector<HourProfile>& profile, const std::vector<double>& grid,
                                const SweepOptions& opts, const FloorRule& floor) {
  check_curtailment_grid(grid);
  const int nh = static_cast<int>(profile.size());
  std::vector<feeder::OperatingPoint> ops(nh);
  std::vector<feeder::FeederSensitivities> sens(nh);
  std::vector<OpfOptions> opf(nh, opts.opf);
  std::vector<double> q_base(nh);
  parallel_map(nh, opts.exec, [&](int h) {
    const auto& hp = profile[h];
    ops[h] = feeder::nominal_operating_point(model, hp.load_mult, hp.solar_mult, "hour " + std::to_string(hp.hour));
    sens[h] = sensitivities_at(model, lossless, ops[h]);
    q_base[h] = base_var_demand(model, sens[h], ops[h], opts.v_tm);
    if (floor) opf[h].cur_floor = floor(model, ops[h]);
  });

  DayAheadSurface out;
  out.profile = profile;
  out.hours.resize(nh);
  const int ng = static_cast<int>(grid.size());
  for (int h = 0; h < nh; ++h) {
    out.hours[h].label = ops[h].label;
    out.hours[h].v_tm = opts.v_tm;
    out.hours[h].points.resize(ng);
  }
  parallel_map(nh * ng, opts.exec, [&](int k) {
    const int h = k / ng, g = k % ng;
    out.hours[h].points[g] = solve_point(model, {&ops[h], &sens[h], &opf[h], q_base[h], grid[g]}, opts);
  });
  return out;
}

std::vector<double> ieee1547_curtailment_floor(const feeder::FeederModel& model, const feeder::OperatingPoint& op) {
  std::vector<double> out(model.ders.size(), 0.0);
  for (std::size_t j = 0; j < model.ders.size(); ++j) {
    const auto& d = model.ders[j];
    const double avail = op.der_avail[j];
    if (avail <= 0.0) continue;
    const double q_need = kIeee1547Headroom * d.p_rated;
    const double p_allowed = std::sqrt(std::max(0.0, d.s_rating * d.s_rating - q_need * q_need));
    out[j] = std::clamp(1.0 - p_allowed / avail, 0.0, kIeee1547MaxCurtailment);
  }
  return out;
}

double min_headroom_ratio(const feeder::FeederModel& model, const feeder::OperatingPoint& op,
                          const std::vector<double>& cur) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < model.ders.size(); ++j) {
    const auto& d = model.ders[j];
    if (d.p_rated <= 0.0) continue;
    const double p = op.der_avail[j] * (1.0 - (cur.empty() ? 0.0 : cur[j]));
    worst = std::min(worst, std::sqrt(std::max(0.0, d.s_rating * d.s_rating - p * p)) / d.p_rated);
  }
  return worst;
}

Ieee1547Comparison ieee1547_scenarios(const feeder::FeederModel& model, const std::vector<HourProfile>& profile,
                                      const SweepOptions& opts) {
  const auto plain = with_oversize(model, 1.0);
  const auto big = with_oversize(model, kIeee1547Oversize);
  // Line data and therefore the lossless sensitivities are shared.
  const auto lossless = feeder::compute_sensitivities(model, opts.exec);
  Ieee1547Comparison out;
  out.curtail = day_ahead_sweep(plain, lossless, profile, {0.0}, opts, ieee1547_curtailment_floor);
  out.oversize = day_ahead_sweep(big, lossless, profile, {0.0}, opts);
  for (const auto& hp : profile) {
    const auto op_plain = feeder::nominal_operating_point(plain, hp.load_mult, hp.solar_mult);
    const auto op_big = feeder::nominal_operating_point(big, hp.load_mult, hp.solar_mult);
    out.curtail_headroom.push_back(
        min_headroom_ratio(plain, op_plain, ieee1547_curtailment_floor(plain, op_plain)));
    out.oversize_headroom.push_back(min_headroom_ratio(big, op_big, {}));
  }
  return out;
}

feeder::FeederModel with_oversize(const feeder::FeederModel& model, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("oversize factor must be positive");
  auto out = model;
  for (auto& d : out.ders) d.s_rating = factor * d.p_rated;
  return out;
}

feeder::FeederModel with_penetration(const feeder::FeederModel& model, double fraction) {
  if (!(fraction >= 0.0)) throw std::invalid_argument("penetration must be non-negative");
  double load = 0.0;
  for (const auto& l : model.loads) load += l.p_kw;
  const double rated = total_rated(model);
  if (rated <= 0.0) throw std::invalid_argument("feeder has no rated DER to rescale");
  const double k = fraction * load / rated;
  auto out = model;
  for (auto& d : out.ders) {
    d.p_rated *= k;
    d.s_rating *= k;
    d.p_avail *= k;
  }
  return out;
}

feeder::FeederModel with_placement(const feeder::FeederModel& model, const std::string& label) {
  if (label == "distributed") return model;
  std::vector<std::pair<int, int>> sites;
  for (const auto& n : model.graph.nodes)
    if (n.label == label)
      for (int ph = 0; ph < 3; ++ph)
        if (n.phases.has(ph)) sites.emplace_back(n.id, ph);
  if (sites.empty()) throw std::invalid_argument("no node carries placement label '" + label + "'");
  const double rated = total_rated(model);
  double s_total = 0.0;
  for (const auto& d : model.ders) s_total += d.s_rating;
  const double share = rated / static_cast<double>(sites.size());
  const double ratio = rated > 0.0 ? s_total / rated : 1.0;

  auto out = model;
  out.ders.clear();
  for (const auto& [node, ph] : sites) {
    agg::DerUnit u;
    u.id = static_cast<int>(out.ders.size());
    u.node = node;
    u.phase = ph;
    u.p_rated = share;
    u.p_avail = share;
    u.s_rating = ratio * share;
    out.ders.push_back(u);
  }
  return out;
}

bool opf_feasible(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                  const feeder::OperatingPoint& op, double curtailment, double v_tm, const OpfOptions& opts) {
  const auto opf = build_der_opf(model, sens, op, curtailment, v_tm, Direction::max, opts);
  return conic::solve(opf.problem, opts.solver).status == conic::Status::optimal;
}

VtmWindow vtm_window(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                     const feeder::OperatingPoint& op, double curtailment, double v_outer_lo, double v_outer_hi,
                     double tol, const OpfOptions& opts) {
  auto feasible = [&](double v) { return opf_feasible(model, sens, op, curtailment, v, opts); };
  VtmWindow w;
  const double mid = 1.0;
  if (!(v_outer_lo < mid && mid < v_outer_hi)) throw std::invalid_argument("vtm_window: need lo < 1 < hi");
  if (!feasible(mid) || feasible(v_outer_lo) || feasible(v_outer_hi)) return w;
  w.lo_infeasible = v_outer_lo;
  w.lo_feasible = mid;
  w.hi_feasible = mid;
  w.hi_infeasible = v_outer_hi;
  while (w.lo_feasible - w.lo_infeasible > tol) {
    const double v = 0.5 * (w.lo_infeasible + w.lo_feasible);
    (feasible(v) ? w.lo_feasible : w.lo_infeasible) = v;
  }
  while (w.hi_infeasible - w.hi_feasible > tol) {
    const double v = 0.5 * (w.hi_feasible + w.hi_infeasible);
    (feasible(v) ? w.hi_feasible : w.hi_infeasible) = v;
  }
  w.found = true;
  return w;
}

}  // namespace dercap::capability
