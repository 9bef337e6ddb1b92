#include "dercap/agg/device.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dercap::agg {

namespace {

constexpr double kSlack = 1e-9;

double total(const std::vector<DerUnit>& units, double DerUnit::*field) {
  double s = 0.0;
  for (const auto& u : units) s += u.*field;
  return s;
}

}  // namespace

QBounds device_q_bounds(const DerUnit& unit, double p_gen) {
  if (p_gen < -kSlack || p_gen > unit.p_avail + kSlack * (1.0 + unit.p_avail))
    throw AllocationError("device_q_bounds: p_gen " + std::to_string(p_gen) + " outside [0, " +
                          std::to_string(unit.p_avail) + "]");
  const double p = std::clamp(p_gen, 0.0, unit.s_rating);
  const double q = std::sqrt(std::max(0.0, unit.s_rating * unit.s_rating - p * p));
  return {-q, q};
}

Allocation proportional_allocation(const std::vector<DerUnit>& units, double p_sub) {
  const double avail = total(units, &DerUnit::p_avail);
  if (p_sub < -kSlack || p_sub > avail + kSlack * (1.0 + avail))
    throw AllocationError("proportional_allocation: p_sub exceeds total availability");

  Allocation out;
  out.p.assign(units.size(), 0.0);
  std::vector<char> clamped(units.size(), 0);
  double remaining = std::max(0.0, p_sub);
  for (;;) {
    double s_free = 0.0;
    for (std::size_t i = 0; i < units.size(); ++i)
      if (!clamped[i]) s_free += units[i].s_rating;
    bool changed = false;
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (clamped[i]) continue;
      const double share = s_free > 0.0 ? units[i].s_rating / s_free * remaining : 0.0;
      if (share > units[i].p_avail) {
        clamped[i] = 1;
        out.p[i] = units[i].p_avail;
        remaining -= units[i].p_avail;
        changed = true;
      }
    }
    if (!changed) {
      for (std::size_t i = 0; i < units.size(); ++i)
        if (!clamped[i]) out.p[i] = s_free > 0.0 ? units[i].s_rating / s_free * remaining : 0.0;
      break;
    }
    out.saturated = true;
  }
  return out;
}

conic::ConicProblem envelope_problem(const std::vector<DerUnit>& units, double p_sub, bool maximize) {
  conic::ConicProblem prob;
  std::vector<conic::Term> sum;
  // At full output every p_i is pinned; the cone then reduces to a q box, and
  // keeping it as a cone would leave units with S_i == p_avail without a
  // finite multiplier.
  const double avail = total(units, &DerUnit::p_avail);
  const bool pinned = p_sub >= avail * (1.0 - 1e-12);
  for (const auto& u : units) {
    const double cost = maximize ? -1.0 : 1.0;
    if (pinned) {
      const int p = prob.add_variable("p" + std::to_string(u.id), u.p_avail, u.p_avail);
      const double h = std::sqrt(std::max(0.0, u.s_rating * u.s_rating - u.p_avail * u.p_avail));
      prob.add_variable("q" + std::to_string(u.id), -h, h, cost);
      sum.push_back({p, 1.0});
      continue;
    }
    const int p = prob.add_variable("p" + std::to_string(u.id), 0.0, u.p_avail);
    const int q = prob.add_variable("q" + std::to_string(u.id), -conic::kInf, conic::kInf, cost);
    prob.add_cone(conic::Cone{conic::Affine::value(u.s_rating), {conic::Affine::of(p), conic::Affine::of(q)}});
    sum.push_back({p, 1.0});
  }
  prob.add_equality(sum, p_sub);
  return prob;
}

EnvelopeValue analytic_envelope(const std::vector<DerUnit>& units, double p_sub) {
  const auto alloc = proportional_allocation(units, p_sub);
  if (alloc.saturated) {
    const auto num = numeric_envelope(units, p_sub);
    return {num.q_min, num.q_max, true};
  }
  const double s = total(units, &DerUnit::s_rating);
  const double q = std::sqrt(std::max(0.0, s * s - p_sub * p_sub));
  return {-q, q, false};
}

NumericEnvelope numeric_envelope(const std::vector<DerUnit>& units, double p_sub, const conic::SolverOptions& opts) {
  NumericEnvelope out;
  out.lower = conic::solve(envelope_problem(units, p_sub, false), opts);
  out.upper = conic::solve(envelope_problem(units, p_sub, true), opts);
  if (out.lower.status != conic::Status::optimal || out.upper.status != conic::Status::optimal)
    throw AllocationError("numeric_envelope: solver returned " + std::string(conic::to_string(out.upper.status)));
  out.q_min = out.lower.objective;
  out.q_max = -out.upper.objective;
  return out;
}

std::vector<EnvelopeSample> aggregate_envelope(const std::vector<DerUnit>& units, int samples) {
  const double avail = total(units, &DerUnit::p_avail);
  std::vector<EnvelopeSample> out(std::max(samples, 2));
  const int n = static_cast<int>(out.size());
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n; ++k) {
    const double p = avail * k / (n - 1);
    const auto e = analytic_envelope(units, p);
    out[k] = {p, e.q_min, e.q_max};
  }
  return out;
}

}  // namespace dercap::agg
