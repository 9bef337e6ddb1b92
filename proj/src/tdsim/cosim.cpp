#include "dercap/tdsim/cosim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

namespace dercap::tdsim {

using capability::CapabilitySide;
using capability::Direction;
using capability::DerOpf;
using conic::Affine;
using conic::kInf;

FeederContext make_feeder_context(feeder::FeederModel model, double load_mult, double solar_mult) {
  FeederContext ctx;
  ctx.model = std::move(model);
  ctx.lossless = feeder::compute_sensitivities(ctx.model);
  ctx.op = feeder::nominal_operating_point(ctx.model, load_mult, solar_mult);
  ctx.sens = capability::sensitivities_at(ctx.model, ctx.lossless, ctx.op);
  return ctx;
}

FeederDispatch unity_dispatch(const FeederContext& ctx) {
  FeederDispatch d;
  d.p_kw = ctx.op.der_avail;
  d.q_kvar.assign(ctx.model.ders.size(), 0.0);
  // v0^2 shifts every squared node voltage by the same amount, so one
  // evaluation at 1 pu fixes the target that centres the band on 1 pu.
  const auto st = feeder::evaluate_dispatch(ctx.model, ctx.sens, ctx.op, d.p_kw, d.q_kvar, 1.0);
  const double y0 = 2.0 - 0.5 * (st.y.minCoeff() + st.y.maxCoeff());
  d.v0_target = std::clamp(std::sqrt(std::max(y0, 0.0)), 0.95, 1.05);
  return d;
}

FeederResponse feeder_response(const FeederContext& ctx, const FeederDispatch& dispatch, double v_tm) {
  const auto& sub = ctx.model.substation;
  FeederResponse r;
  r.v0 = std::clamp(dispatch.v0_target, v_tm * sub.r_min(), v_tm * sub.r_max());
  const auto st = feeder::evaluate_dispatch(ctx.model, ctx.sens, ctx.op, dispatch.p_kw, dispatch.q_kvar, r.v0);
  r.p_kw = st.sub.p_kw;
  r.q_kvar = st.sub.q_kvar;
  r.v_min = std::sqrt(std::max(0.0, st.y.minCoeff()));
  r.v_max = std::sqrt(std::max(0.0, st.y.maxCoeff()));
  return r;
}

namespace {

FeederDispatch from_side(const CapabilitySide& side) {
  return {side.dispatch.p_kw, side.dispatch.q_kvar, side.dispatch.v0};
}

double fleet_curtailment(const FeederContext& ctx, const std::vector<double>& p_kw) {
  double avail = 0.0, out = 0.0;
  for (std::size_t j = 0; j < p_kw.size(); ++j) {
    avail += ctx.op.der_avail[j];
    out += p_kw[j];
  }
  return avail > 0.0 ? std::clamp(1.0 - out / avail, 0.0, 1.0) : 0.0;
}

capability::OpfOptions support_opf(const FeederContext& ctx, const VarSupportOptions& opts) {
  auto o = opts.opf;
  o.curtailment_mode = capability::CurtailmentMode::at_most;
  if (std::isfinite(opts.q_headroom)) {
    o.q_cap_kvar.clear();
    for (const auto& d : ctx.model.ders) o.q_cap_kvar.push_back(opts.q_headroom * d.p_rated);
  }
  return o;
}

// Least curtailment, then least total |q| with the secondary voltage as close
// to its nominal value as possible, subject to lossless net var = target_pu.
bool solve_target(const FeederContext& ctx, double cap, double v_tm, double target_pu,
                  const capability::OpfOptions& o, DerOpf& out, conic::ConicSolution& sol) {
  const auto& m = ctx.model;
  const int nd = static_cast<int>(m.ders.size());
  DerOpf opf = capability::build_der_opf(m, ctx.sens, ctx.op, cap, v_tm, Direction::max, o);
  auto& p = opf.problem;
  for (int i = 0; i < p.num_variables(); ++i) p.set_cost(i, 0.0);
  p.add_objective_offset(-p.objective_offset());
  p.add_range(opf.lossless_q, target_pu, target_pu);

  const double base = opf.base_kva;
  Affine used;
  double sum_bar = 0.0;
  for (int j = 0; j < nd; ++j) {
    const double pbar = ctx.op.der_avail[j] / base;
    sum_bar += pbar;
    used.add(opf.vars.cur[j], pbar);
  }
  auto first = p;
  for (const auto& t : used.terms) first.set_cost(t.var, t.coef);
  const auto s1 = conic::solve(first, o.solver);
  if (s1.status != conic::Status::optimal) {
    out = std::move(opf);
    sol = s1;
    return false;
  }
  double least = 0.0;
  for (const auto& t : used.terms) least += t.coef * s1.x[t.var];

  if (!used.terms.empty()) p.add_range(used, -kInf, least + 1e-7 * (1.0 + sum_bar));
  for (int j = 0; j < nd; ++j) {
    const int s = p.add_variable("abs_q" + std::to_string(j), 0.0, kInf, 1.0);
    p.add_range(Affine::of(s).add(opf.vars.q[j], -1.0), 0.0, kInf);
    p.add_range(Affine::of(s).add(opf.vars.q[j], 1.0), 0.0, kInf);
  }
  const double y_nom = std::pow(capability::nominal_v0(m, v_tm), 2);
  const int d = p.add_variable("dev_y0", 0.0, kInf, 1.0);
  p.add_range(Affine::of(d).add(opf.vars.y0, -1.0).shift(y_nom), 0.0, kInf);
  p.add_range(Affine::of(d).add(opf.vars.y0, 1.0).shift(-y_nom), 0.0, kInf);
  auto s2 = conic::solve(p, o.solver);
  if (s2.status != conic::Status::optimal) {
    out = std::move(opf);
    out.problem = std::move(first);
    sol = s1;
    return true;
  }
  out = std::move(opf);
  sol = std::move(s2);
  return true;
}

}  // namespace

SupportInterval support_interval(const FeederContext& ctx, double curtailment_cap, double v_tm,
                                 const VarSupportOptions& opts) {
  if (!(curtailment_cap >= 0.0 && curtailment_cap <= 1.0))
    throw std::invalid_argument("var_support_dispatch: curtailment cap must lie in [0, 1]");
  if (!(v_tm > 0.0)) throw std::invalid_argument("var_support_dispatch: v_tm must be positive");
  const auto o = support_opf(ctx, opts);
  SupportInterval iv;
  iv.curtailment_cap = curtailment_cap;
  iv.v_tm = v_tm;
  iv.lower = capability::capacitive_capability(ctx.model, ctx.sens, ctx.op, curtailment_cap, v_tm, o);
  iv.upper = capability::inductive_capability(ctx.model, ctx.sens, ctx.op, curtailment_cap, v_tm, o);
  return iv;
}

VarSupportResult var_support_dispatch(const FeederContext& ctx, double requested_kvar, double curtailment_cap,
                                      double v_tm, const VarSupportOptions& opts) {
  return var_support_dispatch(ctx, support_interval(ctx, curtailment_cap, v_tm, opts), requested_kvar, opts);
}

VarSupportResult var_support_dispatch(const FeederContext& ctx, const SupportInterval& interval,
                                      double requested_kvar, const VarSupportOptions& opts) {
  const auto& m = ctx.model;
  const auto o = support_opf(ctx, opts);
  const double base = m.phase_kva();
  const double curtailment_cap = interval.curtailment_cap, v_tm = interval.v_tm;
  const auto& lo = interval.lower;
  const auto& hi = interval.upper;

  VarSupportResult res;
  res.requested_kvar = requested_kvar;
  if (!lo.feasible || !hi.feasible) {
    res.q_lower_kvar = res.q_upper_kvar = res.nearest_kvar = std::numeric_limits<double>::quiet_NaN();
    return res;
  }
  res.q_lower_kvar = lo.q_kvar;
  res.q_upper_kvar = hi.q_kvar;
  res.nearest_kvar = std::clamp(requested_kvar, lo.q_kvar, hi.q_kvar);
  if (requested_kvar < lo.q_kvar - opts.reject_margin_kvar || requested_kvar > hi.q_kvar + opts.reject_margin_kvar)
    return res;

  const double target = res.nearest_kvar;
  auto finish = [&](const FeederDispatch& d, double achieved) {
    res.accepted = true;
    res.dispatch = d;
    res.achieved_kvar = achieved;
    res.curtailment = fleet_curtailment(ctx, d.p_kw);
    return res;
  };
  if (std::abs(target - lo.q_kvar) <= opts.match_tol_kvar) return finish(from_side(lo), lo.q_kvar);
  if (std::abs(target - hi.q_kvar) <= opts.match_tol_kvar) return finish(from_side(hi), hi.q_kvar);

  double load_q = 0.0;
  for (double v : ctx.op.load_q) load_q += v;
  // Losses of the unsupported feeder as the first guess of the gap between
  // the lossless row and the true net var.
  double loss = (capability::base_var_demand(m, ctx.sens, ctx.op, v_tm) - load_q) / base;
  CapabilitySide best;
  for (int it = 0; it < opts.max_loss_updates; ++it) {
    DerOpf opf;
    conic::ConicSolution sol;
    if (!solve_target(ctx, curtailment_cap, v_tm, target / base - loss, o, opf, sol)) break;
    auto side = capability::finish_side(m, ctx.sens, ctx.op, opf, std::move(sol), o);
    const double miss = side.q_kvar - target;
    const bool better = !best.feasible || std::abs(miss) < std::abs(best.q_kvar - target);
    if (better) best = std::move(side);
    if (std::abs(miss) <= opts.match_tol_kvar) break;
    loss += miss / base;
  }
  if (!best.feasible) {
    // The loss correction walked out of the feasible set; serve the closer edge.
    return finish(from_side(target - lo.q_kvar < hi.q_kvar - target ? lo : hi),
                  target - lo.q_kvar < hi.q_kvar - target ? lo.q_kvar : hi.q_kvar);
  }
  return finish(from_side(best), best.q_kvar);
}

BoundaryResult boundary_iterate(const TransmissionNetwork& net, const std::vector<Boundary>& boundaries,
                                const std::vector<FeederDispatch>& dispatches, const std::vector<double>& v_start,
                                const BoundaryOptions& opts) {
  const int nb = static_cast<int>(boundaries.size());
  if (static_cast<int>(dispatches.size()) != nb) throw std::invalid_argument("boundary_iterate: one dispatch per boundary");
  std::vector<int> at(nb);
  for (int b = 0; b < nb; ++b) {
    at[b] = net.bus_index(boundaries[b].bus);
    if (boundaries[b].multiplicity < 1) throw std::invalid_argument("boundary_iterate: multiplicity must be >= 1");
  }

  BoundaryResult res;
  res.states.resize(nb);
  auto exchange = [&](const std::vector<double>& v) {
    std::vector<BusInjection> extra(net.buses.size());
    for (int b = 0; b < nb; ++b) {
      auto& s = res.states[b];
      s.v_tm = v[b];
      s.response = feeder_response(*boundaries[b].feeder, dispatches[b], v[b]);
      const double k = boundaries[b].multiplicity / 1000.0;
      s.injection = {s.response.p_kw * k, s.response.q_kvar * k};
      extra[at[b]].p_mw += s.injection.p_mw;
      extra[at[b]].q_mvar += s.injection.q_mvar;
    }
    return ac_power_flow(net, extra, opts.power_flow);
  };

  std::vector<double> v = v_start;
  if (v.empty()) {
    const auto pf = exchange(std::vector<double>(nb, 1.0));
    if (!pf.converged) {
      res.pf = pf;
      return res;
    }
    v.resize(nb);
    for (int b = 0; b < nb; ++b) v[b] = pf.vm[at[b]];
  }
  for (int k = 1; k <= opts.max_iterations; ++k) {
    res.iterations = k;
    res.pf = exchange(v);
    if (!res.pf.converged) return res;
    res.max_dv = 0.0;
    for (int b = 0; b < nb; ++b) res.max_dv = std::max(res.max_dv, std::abs(res.pf.vm[at[b]] - v[b]));
    if (res.max_dv <= opts.tolerance) {
      res.converged = true;
      return res;
    }
    for (int b = 0; b < nb; ++b) v[b] += opts.relaxation * (res.pf.vm[at[b]] - v[b]);
  }
  return res;
}

namespace {

int boundary_of(const std::vector<Boundary>& boundaries, int bus) {
  for (std::size_t b = 0; b < boundaries.size(); ++b)
    if (boundaries[b].bus == bus) return static_cast<int>(b);
  throw NetworkError("var request at bus " + std::to_string(bus) + ", which has no feeder");
}

double watched_min(const TransmissionNetwork& net, const BoundaryResult& r, const std::vector<int>& watch) {
  double v = kInf;
  for (int bus : watch) v = std::min(v, r.pf.vm[net.bus_index(bus)]);
  return v;
}

}  // namespace

CosimResult cosimulate(const TransmissionNetwork& net, const std::vector<Boundary>& boundaries,
                       std::vector<CosimEvent> events, int horizon, const CosimOptions& opts) {
  if (horizon < 0) throw std::invalid_argument("cosimulate: negative horizon");
  for (std::size_t e = 0; e < events.size(); ++e) {
    if (events[e].t < 0 || events[e].t > horizon) throw std::invalid_argument("cosimulate: event outside the horizon");
    if (e > 0 && events[e].t < events[e - 1].t) throw std::invalid_argument("cosimulate: events out of order");
  }
  CosimResult out;
  for (const auto& b : net.buses) out.bus_ids.push_back(b.id);
  for (const auto& b : boundaries) out.boundary_buses.push_back(b.bus);

  TransmissionNetwork grid = net;
  std::vector<FeederDispatch> dispatch;
  for (const auto& b : boundaries) dispatch.push_back(unity_dispatch(*b.feeder));
  std::vector<double> v_prev;
  std::size_t next = 0;

  for (int t = 0; t <= horizon; ++t) {
    for (; next < events.size() && events[next].t == t; ++next) {
      const auto& ev = events[next];
      if (ev.kind == EventKind::branch_outage) {
        grid = apply_contingency(grid, ev.branch);
        continue;
      }
      // Var requests are sized against the state the grid is in right now.
      const auto before = boundary_iterate(grid, boundaries, dispatch, v_prev, opts.boundary);
      if (!before.converged) continue;
      std::vector<double> v_now;
      for (const auto& s : before.states) v_now.push_back(s.v_tm);

      struct Pending {
        int b;
        const SupportRequest* req;
        double q_now;
        SupportInterval interval;
        VarSupportOptions o;
      };
      std::vector<Pending> fixed, sized;
      for (const auto& rq : ev.requests) {
        const int b = boundary_of(boundaries, rq.bus);
        Pending p{b, &rq, before.states[b].response.q_kvar, {}, opts.support};
        p.o.q_headroom = rq.q_headroom;
        p.interval = support_interval(*boundaries[b].feeder, rq.curtailment_cap, v_now[b], p.o);
        (rq.just_enough ? sized : fixed).push_back(std::move(p));
      }
      // Requests outside the interval are recorded as rejected and served at
      // the nearest edge.
      auto serve = [&](const Pending& p, double q) {
        auto r = var_support_dispatch(*boundaries[p.b].feeder, p.interval, q, p.o);
        if (!r.accepted && std::isfinite(r.nearest_kvar)) {
          auto served = var_support_dispatch(*boundaries[p.b].feeder, p.interval, r.nearest_kvar, p.o);
          served.requested_kvar = q;
          served.accepted = false;
          return served;
        }
        return r;
      };
      for (const auto& p : fixed) {
        auto r = serve(p, p.req->q_kvar);
        if (r.dispatch.p_kw.size()) dispatch[p.b] = r.dispatch;
        out.support.push_back({t, p.req->bus, 1.0, std::move(r)});
      }
      if (sized.empty()) continue;

      std::vector<int> watch = ev.watch;
      if (watch.empty())
        for (const auto& p : sized) watch.push_back(p.req->bus);
      auto trial = [&](double lambda, std::vector<VarSupportResult>& served) {
        auto d = dispatch;
        served.clear();
        for (const auto& p : sized) {
          served.push_back(serve(p, p.q_now + lambda * (p.interval.lower.q_kvar - p.q_now)));
          if (served.back().dispatch.p_kw.size()) d[p.b] = served.back().dispatch;
        }
        const auto r = boundary_iterate(grid, boundaries, d, v_now, opts.boundary);
        return std::pair{r.converged && watched_min(grid, r, watch) >= ev.v_target, d};
      };
      std::vector<VarSupportResult> served;
      double lambda = 0.0;
      if (watched_min(grid, before, watch) < ev.v_target) {
        auto [ok, d] = trial(1.0, served);
        lambda = 1.0;
        if (ok) {
          double lo = 0.0, hi = 1.0;
          while (hi - lo > opts.lambda_tol) {
            const double mid = 0.5 * (lo + hi);
            std::vector<VarSupportResult> s;
            if (trial(mid, s).first) hi = mid;
            else lo = mid;
          }
          lambda = hi;
          std::tie(ok, d) = trial(hi, served);
        }
        dispatch = d;
      }
      for (std::size_t k = 0; k < sized.size(); ++k) {
        SupportRecord rec{t, sized[k].req->bus, lambda, {}};
        if (k < served.size()) rec.result = served[k];
        out.support.push_back(std::move(rec));
      }
    }

    const auto r = boundary_iterate(grid, boundaries, dispatch, v_prev, opts.boundary);
    StepRecord step;
    step.t = t;
    step.converged = r.converged;
    step.iterations = r.iterations;
    step.vm = r.pf.vm;
    step.boundary = r.states;
    if (r.converged) {
      v_prev.clear();
      for (const auto& s : r.states) v_prev.push_back(s.v_tm);
    } else {
      ++out.diverged_steps;
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

namespace {

using nlohmann::json;

const json& need(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw NetworkError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw NetworkError(where + "." + key + ": missing");
  return *it;
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) throw NetworkError(where + "." + key + ": expected a number");
  return it->get<double>();
}

int integer(const json& obj, const char* key, const std::string& where) {
  const auto& v = need(obj, key, where);
  if (!v.is_number_integer()) throw NetworkError(where + "." + key + ": expected an integer");
  return v.get<int>();
}

}  // namespace

Scenario load_scenario(std::string_view document, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw NetworkError(std::string("scenario JSON: ") + e.what());
  }
  Scenario sc;
  sc.horizon = integer(doc, "horizon", "scenario");
  if (sc.horizon < 0) throw NetworkError("scenario.horizon: must be non-negative");
  sc.load_mult = number_or(doc, "load_mult", 1.0, "scenario");
  sc.solar_mult = number_or(doc, "solar_mult", 1.0, "scenario");
  if (doc.contains("redispatch")) {
    if (!doc["redispatch"].is_boolean()) throw NetworkError("scenario.redispatch: expected true or false");
    sc.redispatch = doc["redispatch"].get<bool>();
  }
  if (doc.contains("name") && doc["name"].is_string()) sc.name = doc["name"].get<std::string>();

  const auto& sites = need(doc, "boundaries", "scenario");
  if (!sites.is_array()) throw NetworkError("scenario.boundaries: expected an array");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto where = "scenario.boundaries[" + std::to_string(i) + "]";
    Scenario::Site s;
    s.bus = integer(sites[i], "bus", where);
    const auto& f = need(sites[i], "feeder_file", where);
    if (!f.is_string()) throw NetworkError(where + ".feeder_file: expected a string");
    std::filesystem::path path = f.get<std::string>();
    if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
    s.feeder_file = path.lexically_normal().string();
    s.multiplicity = sites[i].contains("multiplicity") ? integer(sites[i], "multiplicity", where) : 1;
    if (s.multiplicity < 1) throw NetworkError(where + ".multiplicity: must be >= 1");
    sc.boundaries.push_back(s);
  }

  const auto& events = need(doc, "events", "scenario");
  if (!events.is_array()) throw NetworkError("scenario.events: expected an array");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto where = "scenario.events[" + std::to_string(i) + "]";
    CosimEvent ev;
    ev.t = integer(events[i], "t", where);
    const auto& kind = need(events[i], "kind", where);
    if (!kind.is_string()) throw NetworkError(where + ".kind: expected a string");
    const auto k = kind.get<std::string>();
    if (ev.t < 0 || ev.t > sc.horizon) throw NetworkError(where + ".t: outside the horizon");
    if (!sc.events.empty() && ev.t < sc.events.back().t) throw NetworkError(where + ".t: events must be in time order");
    if (k == "branch-outage") {
      ev.kind = EventKind::branch_outage;
      ev.branch = integer(events[i], "branch", where);
    } else if (k == "var-request") {
      ev.kind = EventKind::var_request;
      ev.v_target = number_or(events[i], "v_target", 0.95, where);
      if (events[i].contains("watch")) {
        for (const auto& w : events[i]["watch"]) {
          if (!w.is_number_integer()) throw NetworkError(where + ".watch: expected bus ids");
          ev.watch.push_back(w.get<int>());
        }
      }
      const auto& reqs = need(events[i], "requests", where);
      if (!reqs.is_array() || reqs.empty()) throw NetworkError(where + ".requests: expected a non-empty array");
      for (std::size_t r = 0; r < reqs.size(); ++r) {
        const auto rw = where + ".requests[" + std::to_string(r) + "]";
        SupportRequest rq;
        rq.bus = integer(reqs[r], "bus", rw);
        const auto& q = need(reqs[r], "q_kvar", rw);
        if (q.is_string() && q.get<std::string>() == "just-enough") rq.just_enough = true;
        else if (q.is_number()) rq.q_kvar = q.get<double>();
        else throw NetworkError(rw + ".q_kvar: expected a number or \"just-enough\"");
        rq.curtailment_cap = number_or(reqs[r], "curtailment_cap", 0.0, rw);
        if (rq.curtailment_cap < 0.0 || rq.curtailment_cap > 1.0) throw NetworkError(rw + ".curtailment_cap: outside [0, 1]");
        rq.q_headroom = number_or(reqs[r], "q_headroom", kInf, rw);
        ev.requests.push_back(rq);
      }
    } else {
      throw NetworkError(where + ".kind: expected branch-outage or var-request");
    }
    sc.events.push_back(std::move(ev));
  }
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NetworkError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto sc = load_scenario(ss.str(), std::filesystem::path(path).parent_path().string());
  if (sc.name.empty()) sc.name = std::filesystem::path(path).stem().string();
  return sc;
}

PreparedScenario prepare_scenario(const TransmissionNetwork& net, const Scenario& scenario) {
  PreparedScenario out;
  out.net = net;
  std::map<std::string, std::shared_ptr<const FeederContext>> cache;
  for (const auto& site : scenario.boundaries) {
    auto& bus = out.net.buses[out.net.bus_index(site.bus)];
    if (bus.type != BusType::pq) throw NetworkError("boundary bus " + std::to_string(site.bus) + " is not a PQ bus");
    bus.p_load_mw = bus.q_load_mvar = 0.0;
    auto& ctx = cache[site.feeder_file];
    if (!ctx) {
      if (!std::filesystem::exists(site.feeder_file)) throw NetworkError("feeder file not found: " + site.feeder_file);
      ctx = std::make_shared<const FeederContext>(
          make_feeder_context(feeder::load_feeder_file(site.feeder_file), scenario.load_mult, scenario.solar_mult));
    }
    out.boundaries.push_back({site.bus, ctx, site.multiplicity});
  }
  if (scenario.redispatch) {
    // Scheduled generation follows the change in demand; the slack keeps
    // picking up only the mismatch and losses.
    double before = 0.0, after = 0.0;
    for (const auto& b : net.buses) before += b.p_load_mw;
    for (const auto& b : out.net.buses) after += b.p_load_mw;
    for (const auto& bd : out.boundaries) {
      const auto r = feeder_response(*bd.feeder, unity_dispatch(*bd.feeder), 1.0);
      after += bd.multiplicity * r.p_kw / 1000.0;
    }
    if (before > 0.0) {
      const double k = std::max(0.0, after / before);
      for (auto& g : out.net.gens)
        if (out.net.buses[out.net.bus_index(g.bus)].type != BusType::slack) g.p_mw *= k;
    }
  }
  for (const auto& ev : scenario.events) {
    if (ev.kind == EventKind::branch_outage) out.net.branch_index(ev.branch);
    for (const auto& rq : ev.requests) boundary_of(out.boundaries, rq.bus);
    for (int w : ev.watch) out.net.bus_index(w);
  }
  return out;
}

SeriesTable cosim_series(const CosimResult& result) {
  SeriesTable tab;
  auto add = [&](std::string name, auto&& value) {
    tab.names.push_back(std::move(name));
    auto& rows = tab.rows.emplace_back();
    for (const auto& s : result.steps) rows.emplace_back(s.t, value(s));
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < result.bus_ids.size(); ++i)
    add("vm_bus" + std::to_string(result.bus_ids[i]), [&](const StepRecord& s) { return i < s.vm.size() ? s.vm[i] : nan; });
  for (std::size_t b = 0; b < result.boundary_buses.size(); ++b) {
    const auto tag = "_bus" + std::to_string(result.boundary_buses[b]);
    auto field = [&](auto get) {
      return [&, get](const StepRecord& s) { return b < s.boundary.size() ? get(s.boundary[b]) : nan; };
    };
    add("p_mw" + tag, field([](const BoundaryState& x) { return x.injection.p_mw; }));
    add("q_mvar" + tag, field([](const BoundaryState& x) { return x.injection.q_mvar; }));
    add("vtm" + tag, field([](const BoundaryState& x) { return x.v_tm; }));
    add("feeder_vmin" + tag, field([](const BoundaryState& x) { return x.response.v_min; }));
    add("feeder_vmax" + tag, field([](const BoundaryState& x) { return x.response.v_max; }));
  }
  add("iterations", [](const StepRecord& s) { return static_cast<double>(s.iterations); });
  add("converged", [](const StepRecord& s) { return s.converged ? 1.0 : 0.0; });
  return tab;
}

}  // namespace dercap::tdsim
