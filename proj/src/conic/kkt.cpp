// Residual checks computed from the user-level problem only.

#include <algorithm>
#include <cmath>

#include "dercap/conic/solver.hpp"

namespace dercap::conic {

double KktResiduals::max() const { return std::max({primal, dual, gap}); }

namespace {

double norm2(const std::vector<double>& v, std::size_t from = 0) {
  double s = 0.0;
  for (std::size_t i = from; i < v.size(); ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

// Distance-like violation of membership in the second-order cone.
double soc_violation(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::max(0.0, norm2(v, 1) - v[0]);
}

double at(const std::vector<double>& v, std::size_t i) { return i < v.size() ? v[i] : 0.0; }

// g = A'y + G'z laid out per variable, following the Multipliers sign convention.
std::vector<double> dual_image(const ConicProblem& p, const Multipliers& m) {
  std::vector<double> g(p.num_variables(), 0.0);
  for (std::size_t r = 0; r < p.equalities().size(); ++r)
    for (const auto& t : p.equalities()[r].terms) g[t.var] += t.coef * at(m.equality, r);
  for (int i = 0; i < p.num_variables(); ++i) g[i] += at(m.upper, i) - at(m.lower, i);
  for (std::size_t r = 0; r < p.ranges().size(); ++r) {
    const double w = at(m.range_upper, r) - at(m.range_lower, r);
    for (const auto& t : p.ranges()[r].expr.terms) g[t.var] += t.coef * w;
  }
  for (std::size_t k = 0; k < p.cones().size(); ++k) {
    const auto& cone = p.cones()[k];
    if (k >= m.cones.size()) continue;
    const auto& z = m.cones[k];
    for (const auto& t : cone.t.terms) g[t.var] -= t.coef * at(z, 0);
    for (std::size_t j = 0; j < cone.u.size(); ++j)
      for (const auto& t : cone.u[j].terms) g[t.var] -= t.coef * at(z, j + 1);
  }
  return g;
}

// Largest violation of LP sign / cone membership for a multiplier set, plus
// multipliers sitting on infinite bounds.
double dual_cone_violation(const ConicProblem& p, const Multipliers& m) {
  double v = 0.0;
  for (int i = 0; i < p.num_variables(); ++i) {
    const double lo = at(m.lower, i);
    const double up = at(m.upper, i);
    v = std::max({v, -lo, -up});
    if (!std::isfinite(p.lower()[i])) v = std::max(v, std::abs(lo));
    if (!std::isfinite(p.upper()[i])) v = std::max(v, std::abs(up));
  }
  for (std::size_t r = 0; r < p.ranges().size(); ++r) {
    const double lo = at(m.range_lower, r);
    const double up = at(m.range_upper, r);
    v = std::max({v, -lo, -up});
    if (!std::isfinite(p.ranges()[r].lower)) v = std::max(v, std::abs(lo));
    if (!std::isfinite(p.ranges()[r].upper)) v = std::max(v, std::abs(up));
  }
  for (const auto& z : m.cones) v = std::max(v, soc_violation(z));
  return v;
}

std::vector<double> cone_value(const Cone& c, const std::vector<double>& x) {
  std::vector<double> s;
  s.reserve(c.u.size() + 1);
  s.push_back(evaluate(c.t, x));
  for (const auto& u : c.u) s.push_back(evaluate(u, x));
  return s;
}

}  // namespace

KktResiduals check_kkt(const ConicProblem& p, const ConicSolution& sol) {
  const auto& x = sol.x;
  const auto& m = sol.duals;
  const int n = p.num_variables();
  KktResiduals out;
  if (static_cast<int>(x.size()) != n) {
    out.primal = out.dual = out.gap = kInf;
    return out;
  }

  double scale = 0.0;
  double viol = 0.0;
  for (const auto& row : p.equalities()) {
    double ax = 0.0;
    for (const auto& t : row.terms) ax += t.coef * x[t.var];
    viol = std::max(viol, std::abs(ax - row.rhs));
    scale = std::max(scale, std::abs(row.rhs));
  }
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(p.upper()[i])) {
      viol = std::max(viol, x[i] - p.upper()[i]);
      scale = std::max(scale, std::abs(p.upper()[i]));
    }
    if (std::isfinite(p.lower()[i])) {
      viol = std::max(viol, p.lower()[i] - x[i]);
      scale = std::max(scale, std::abs(p.lower()[i]));
    }
  }
  for (const auto& row : p.ranges()) {
    const double v = evaluate(row.expr, x);
    if (std::isfinite(row.upper)) {
      viol = std::max(viol, v - row.upper);
      scale = std::max(scale, std::abs(row.upper - row.expr.constant));
    }
    if (std::isfinite(row.lower)) {
      viol = std::max(viol, row.lower - v);
      scale = std::max(scale, std::abs(row.lower - row.expr.constant));
    }
  }
  for (const auto& c : p.cones()) {
    viol = std::max(viol, soc_violation(cone_value(c, x)));
    scale = std::max(scale, std::abs(c.t.constant));
    for (const auto& u : c.u) scale = std::max(scale, std::abs(u.constant));
  }
  out.primal = viol / (1.0 + scale);

  const auto g = dual_image(p, m);
  double cnorm = 0.0;
  double stat = 0.0;
  for (int i = 0; i < n; ++i) {
    cnorm = std::max(cnorm, std::abs(p.cost()[i]));
    stat = std::max(stat, std::abs(p.cost()[i] + g[i]));
  }
  out.dual = std::max(stat, dual_cone_violation(p, m)) / (1.0 + cnorm);

  double comp = 0.0;
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(p.upper()[i])) comp += std::abs(at(m.upper, i) * (p.upper()[i] - x[i]));
    if (std::isfinite(p.lower()[i])) comp += std::abs(at(m.lower, i) * (x[i] - p.lower()[i]));
  }
  for (std::size_t r = 0; r < p.ranges().size(); ++r) {
    const auto& row = p.ranges()[r];
    const double v = evaluate(row.expr, x);
    if (std::isfinite(row.upper)) comp += std::abs(at(m.range_upper, r) * (row.upper - v));
    if (std::isfinite(row.lower)) comp += std::abs(at(m.range_lower, r) * (v - row.lower));
  }
  for (std::size_t k = 0; k < p.cones().size() && k < m.cones.size(); ++k) {
    const auto s = cone_value(p.cones()[k], x);
    double dot = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) dot += s[j] * at(m.cones[k], j);
    comp += std::abs(dot);
  }
  double cx = 0.0;
  for (int i = 0; i < n; ++i) cx += p.cost()[i] * x[i];
  out.gap = comp / (1.0 + std::abs(cx));
  return out;
}

CertificateReport check_certificate(const ConicProblem& p, const Multipliers& m, double tol) {
  CertificateReport rep;
  double value = 0.0;
  for (std::size_t r = 0; r < p.equalities().size(); ++r) value += p.equalities()[r].rhs * at(m.equality, r);
  for (int i = 0; i < p.num_variables(); ++i) {
    if (std::isfinite(p.upper()[i])) value += at(m.upper, i) * p.upper()[i];
    if (std::isfinite(p.lower()[i])) value -= at(m.lower, i) * p.lower()[i];
  }
  for (std::size_t r = 0; r < p.ranges().size(); ++r) {
    const auto& row = p.ranges()[r];
    if (std::isfinite(row.upper)) value += at(m.range_upper, r) * (row.upper - row.expr.constant);
    if (std::isfinite(row.lower)) value += at(m.range_lower, r) * (row.expr.constant - row.lower);
  }
  for (std::size_t k = 0; k < p.cones().size() && k < m.cones.size(); ++k) {
    const auto& c = p.cones()[k];
    value += c.t.constant * at(m.cones[k], 0);
    for (std::size_t j = 0; j < c.u.size(); ++j) value += c.u[j].constant * at(m.cones[k], j + 1);
  }
  rep.value = value;
  if (!(value < 0.0)) return rep;

  const auto g = dual_image(p, m);
  double res = 0.0;
  for (double gi : g) res = std::max(res, std::abs(gi));
  rep.residual = res / -value;
  rep.cone_violation = dual_cone_violation(p, m) / -value;
  rep.valid = rep.residual <= tol && rep.cone_violation <= tol;
  return rep;
}

}  // namespace dercap::conic
