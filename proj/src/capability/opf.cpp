#include "dercap/capability/opf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dercap::capability {

using conic::Affine;
using conic::kInf;
using Eigen::VectorXd;

namespace {

// Relative slack used to decide that a feasible range has collapsed to a point.
constexpr double kPinTol = 1e-12;

double sq(double v) { return v * v; }

}  // namespace

DerOpf build_der_opf(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                     const feeder::OperatingPoint& op, double curtailment, double v_tm, Direction direction,
                     const OpfOptions& opts) {
  const int n = model.slots.size();
  const int nd = static_cast<int>(model.ders.size());
  const double base = model.phase_kva();

  DerOpf out;
  out.base_kva = base;
  auto& prob = out.problem;

  // Everything is written relative to the point "full availability, unity pf";
  // curtailment and var output enter as deviations from it.
  const auto inj = feeder::net_injections(model, op, op.der_avail, {});
  const VectorXd y_fix = feeder::solve_voltages(sens, inj.p, inj.q, 0.0);
  const auto flows = feeder::line_flows(model, inj.p, inj.q, sens.l_p, sens.l_q);

  std::vector<int> slot(nd);
  std::vector<double> pbar(nd), srat(nd), floor(nd, 0.0);
  double sum_bar = 0.0, floor_sum = 0.0;
  for (int j = 0; j < nd; ++j) {
    const auto& d = model.ders[j];
    slot[j] = model.slots.at(d.node, d.phase);
    pbar[j] = op.der_avail[j] / base;
    srat[j] = d.s_rating / base;
    if (!opts.cur_floor.empty()) floor[j] = std::clamp(opts.cur_floor[j], 0.0, 1.0);
    sum_bar += pbar[j];
    floor_sum += pbar[j] * floor[j];
  }
  const bool exact = opts.curtailment_mode == CurtailmentMode::exact;
  const double target = curtailment * sum_bar;
  const bool all_at_floor = exact && sum_bar > 0.0 && target <= floor_sum + kPinTol * (1.0 + sum_bar);
  const bool all_at_one = exact && curtailment >= 1.0 - kPinTol;

  const double qsign = direction == Direction::min ? -1.0 : 1.0;
  out.vars.q.resize(nd);
  out.vars.cur.resize(nd);
  for (int j = 0; j < nd; ++j) {
    const std::string id = std::to_string(model.ders[j].id);
    double lo = floor[j], hi = 1.0;
    if (pbar[j] <= 0.0) {
      hi = lo;
    } else if (all_at_one) {
      lo = hi = 1.0;
    } else if (all_at_floor) {
      hi = lo;
    }
    out.vars.cur[j] = prob.add_variable("cur" + id, lo, hi);
    const double u_fixed = pbar[j] * (1.0 - lo);
    if (lo == hi && srat[j] <= u_fixed * (1.0 + kPinTol) && srat[j] >= u_fixed * (1.0 - 1e-9)) {
      // Output pinned at the rating: the cone has no interior in q. Keep the
      // exact feasible set as a box instead.
      const double h = std::sqrt(std::max(0.0, sq(srat[j]) - sq(u_fixed)));
      out.vars.q[j] = prob.add_variable("q" + id, -h, h, qsign);
      continue;
    }
    out.vars.q[j] = prob.add_variable("q" + id, -kInf, kInf, qsign);
    Affine u = Affine::value(pbar[j]);
    u.add(out.vars.cur[j], -pbar[j]);
    prob.add_cone(conic::Cone{Affine::value(srat[j]), {u, Affine::of(out.vars.q[j])}});
  }
  if (!opts.q_cap_kvar.empty()) {
    for (int j = 0; j < nd; ++j) {
      const double cap = std::max(0.0, opts.q_cap_kvar[j]) / base;
      const int v = out.vars.q[j];
      prob.set_bounds(v, std::max(prob.lower()[v], -cap), std::min(prob.upper()[v], cap));
    }
  }

  const auto& sub = model.substation;
  const double y0_lo = std::max(sq(v_tm * sub.r_min()), sq(opts.v_min));
  const double y0_hi = std::min(sq(v_tm * sub.r_max()), sq(opts.v_max));
  out.vars.y0 = prob.add_variable("y0", y0_lo, y0_hi);

  double load_q = 0.0;
  for (double v : op.load_q) load_q += v / base;
  out.lossless_q = Affine::value(load_q);
  for (int j = 0; j < nd; ++j) out.lossless_q.add(out.vars.q[j], -1.0);
  prob.add_objective_offset(direction == Direction::min ? load_q : -load_q);

  if (sum_bar > 0.0) {
    std::vector<conic::Term> terms;
    for (int j = 0; j < nd; ++j)
      if (pbar[j] > 0.0) terms.push_back({out.vars.cur[j], pbar[j]});
    if (exact) {
      // Below the floors the curtailment is the floors themselves.
      out.curtailment_row = prob.add_equality(terms, all_at_floor ? floor_sum : target);
    } else {
      Affine e;
      e.terms = terms;
      out.curtailment_row = prob.add_range(e, -kInf, std::max(target, floor_sum));
    }
  }

  out.y.resize(n);
  for (int s = 0; s < n; ++s) {
    Affine& e = out.y[s];
    e.constant = y_fix(s);
    e.add(out.vars.y0, 1.0);
    for (int j = 0; j < nd; ++j) {
      e.add(out.vars.cur[j], -sens.r_eq(s, slot[j]) * pbar[j]);
      e.add(out.vars.q[j], sens.x_eq(s, slot[j]));
    }
    prob.add_range(e, sq(opts.v_min), sq(opts.v_max));
  }

  if (direction == Direction::min) {
    // DERs below each slot, for the flow expressions.
    std::vector<std::vector<int>> below(n);
    for (int j = 0; j < nd; ++j) {
      const int ph = model.ders[j].phase;
      for (int v = model.ders[j].node; v != 0; v = model.graph.parent[v]) below[model.slots.at(v, ph)].push_back(j);
    }
    VectorXd r_self, x_self;
    feeder::self_impedance(model, r_self, x_self);
    out.vars.loss.assign(n, -1);
    for (int s = 0; s < n; ++s) {
      if (x_self(s) <= 0.0) continue;
      const int t = prob.add_variable("loss" + std::to_string(s), 0.0, kInf, x_self(s));
      out.vars.loss[s] = t;
      Affine p = Affine::value(2.0 * flows.p(s));
      Affine q = Affine::value(2.0 * flows.q(s));
      for (int j : below[s]) {
        p.add(out.vars.cur[j], 2.0 * pbar[j]);
        q.add(out.vars.q[j], -2.0);
      }
      Affine lhs = out.y[s];
      lhs.add(t, 1.0);
      Affine diff = out.y[s];
      for (auto& term : diff.terms) term.coef = -term.coef;
      diff.constant = -diff.constant;
      diff.add(t, 1.0);
      // P^2 + Q^2 <= t Y  <=>  ||(2P, 2Q, t - Y)|| <= t + Y
      prob.add_cone(conic::Cone{lhs, {p, q, diff}});
    }
  }
  return out;
}

CapabilitySide finish_side(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                           const feeder::OperatingPoint& op, const DerOpf& opf, conic::ConicSolution sol,
                           const OpfOptions& opts) {
  CapabilitySide side;
  side.status = sol.status;
  side.feasible = sol.status == conic::Status::optimal;
  if (side.feasible) {
    const int nd = static_cast<int>(model.ders.size());
    const double base = opf.base_kva;
    auto& d = side.dispatch;
    d.cur.resize(nd);
    d.p_kw.resize(nd);
    d.q_kvar.resize(nd);
    side.cone_margin = kInf;
    for (int j = 0; j < nd; ++j) {
      d.cur[j] = sol.x[opf.vars.cur[j]];
      d.p_kw[j] = op.der_avail[j] * (1.0 - d.cur[j]);
      d.q_kvar[j] = sol.x[opf.vars.q[j]] * base;
      const double margin = (model.ders[j].s_rating - std::hypot(d.p_kw[j], d.q_kvar[j])) / base;
      side.cone_margin = std::min(side.cone_margin, margin);
    }
    const double y0 = sol.x[opf.vars.y0];
    d.v0 = std::sqrt(std::max(0.0, y0));
    const auto st = feeder::evaluate_dispatch(model, sens, op, d.p_kw, d.q_kvar, d.v0);
    side.q_kvar = st.sub.q_kvar;
    const double ylo = sq(opts.v_min), yhi = sq(opts.v_max);
    double viol = std::max({0.0, y0 - yhi, ylo - y0});
    for (int s = 0; s < st.y.size(); ++s) viol = std::max({viol, st.y(s) - yhi, ylo - st.y(s)});
    side.voltage_violation = viol;
    side.verified = viol <= kVoltageCheckTol && side.cone_margin >= -1e-8;
  }
  side.solution = std::move(sol);
  return side;
}

CapabilitySide capacitive_capability(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                                     const feeder::OperatingPoint& op, double curtailment, double v_tm,
                                     const OpfOptions& opts) {
  const auto opf = build_der_opf(model, sens, op, curtailment, v_tm, Direction::min, opts);
  return finish_side(model, sens, op, opf, conic::solve(opf.problem, opts.solver), opts);
}

CapabilitySide inductive_capability(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                                    const feeder::OperatingPoint& op, double curtailment, double v_tm,
                                    const OpfOptions& opts) {
  auto opf = build_der_opf(model, sens, op, curtailment, v_tm, Direction::max, opts);
  auto first = conic::solve(opf.problem, opts.solver);
  if (first.status != conic::Status::optimal) return finish_side(model, sens, op, opf, std::move(first), opts);

  // The lossless optimum is often a face (y0 free when no voltage limit
  // binds). Losses grow as voltage drops, so take the lowest y0 on that face.
  const double best = -first.objective;
  DerOpf tie = opf;
  auto& p = tie.problem;
  for (int i = 0; i < p.num_variables(); ++i) p.set_cost(i, 0.0);
  p.add_objective_offset(-p.objective_offset());
  p.set_cost(tie.vars.y0, 1.0);
  p.add_range(tie.lossless_q, best - 1e-6 * (1.0 + std::abs(best)), kInf);
  auto second = conic::solve(p, opts.solver);
  if (second.status != conic::Status::optimal) return finish_side(model, sens, op, opf, std::move(first), opts);
  return finish_side(model, sens, op, tie, std::move(second), opts);
}

feeder::FeederSensitivities sensitivities_at(const feeder::FeederModel& model,
                                             const feeder::FeederSensitivities& lossless,
                                             const feeder::OperatingPoint& op) {
  return feeder::with_losses(lossless, feeder::estimate_loss_constants(model, lossless, op));
}

double nominal_v0(const feeder::FeederModel& model, double v_tm) {
  const auto& sub = model.substation;
  return v_tm * std::clamp(1.0 / v_tm, sub.r_min(), sub.r_max());
}

double base_var_demand(const feeder::FeederModel& model, const feeder::FeederSensitivities& sens,
                       const feeder::OperatingPoint& op, double v_tm) {
  return feeder::evaluate_dispatch(model, sens, op, op.der_avail, {}, nominal_v0(model, v_tm)).sub.q_kvar;
}

}  // namespace dercap::capability
