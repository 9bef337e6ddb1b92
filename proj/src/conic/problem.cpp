#include "dercap/conic/problem.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>

namespace dercap::conic {

int ConicProblem::add_variable(std::string name, double lower, double upper, double cost) {
  names_.push_back(std::move(name));
  lower_.push_back(lower);
  upper_.push_back(upper);
  cost_.push_back(cost);
  return static_cast<int>(cost_.size()) - 1;
}

void ConicProblem::set_cost(int var, double cost) {
  if (var < 0 || var >= num_variables()) throw DimensionError("set_cost: variable index out of range");
  cost_[var] = cost;
}

void ConicProblem::set_bounds(int var, double lower, double upper) {
  if (var < 0 || var >= num_variables()) throw DimensionError("set_bounds: variable index out of range");
  lower_[var] = lower;
  upper_[var] = upper;
}

int ConicProblem::add_equality(std::vector<Term> terms, double rhs) {
  equalities_.push_back({std::move(terms), rhs});
  return static_cast<int>(equalities_.size()) - 1;
}

int ConicProblem::add_range(Affine expr, double lower, double upper) {
  ranges_.push_back({std::move(expr), lower, upper});
  return static_cast<int>(ranges_.size()) - 1;
}

int ConicProblem::add_cone(int t, const std::vector<int>& u) {
  std::vector<int> tuple;
  tuple.push_back(t);
  tuple.insert(tuple.end(), u.begin(), u.end());
  index_cones_.push_back(tuple);
  Cone c;
  c.t = Affine::of(t);
  for (int v : u) c.u.push_back(Affine::of(v));
  cones_.push_back(std::move(c));
  return static_cast<int>(cones_.size()) - 1;
}

int ConicProblem::add_cone(Cone cone) {
  cones_.push_back(std::move(cone));
  return static_cast<int>(cones_.size()) - 1;
}

void ConicProblem::validate() const {
  const int n = num_variables();
  auto check_terms = [n](const std::vector<Term>& terms, const char* where) {
    for (const auto& t : terms) {
      if (t.var < 0 || t.var >= n) throw DimensionError(std::string(where) + ": variable index out of range");
      if (!std::isfinite(t.coef)) throw DimensionError(std::string(where) + ": non-finite coefficient");
    }
  };
  for (const auto& row : equalities_) check_terms(row.terms, "equality");
  for (const auto& row : ranges_) check_terms(row.expr.terms, "range");
  for (const auto& c : cones_) {
    check_terms(c.t.terms, "cone");
    for (const auto& u : c.u) check_terms(u.terms, "cone");
  }
  for (const auto& tuple : index_cones_) {
    std::set<int> seen;
    for (int v : tuple) {
      if (v < 0 || v >= n) throw DimensionError("cone: variable index out of range");
      if (!seen.insert(v).second) throw DimensionError("cone: variable repeated within one cone");
    }
  }
}

double evaluate(const Affine& a, const std::vector<double>& x) {
  double v = a.constant;
  for (const auto& t : a.terms) v += t.coef * x[t.var];
  return v;
}

double ConicProblem::objective(const std::vector<double>& x) const {
  double v = offset_;
  for (int i = 0; i < num_variables(); ++i) v += cost_[i] * x[i];
  return v;
}

namespace {

void dump_affine(std::ostream& os, const Affine& a) {
  os << a.constant;
  for (const auto& t : a.terms) os << ' ' << t.var << ':' << t.coef;
}

}  // namespace

void write_dump(std::ostream& os, const ConicProblem& p) {
  os << "CONIC-DUMP v1\n";
  os << std::setprecision(17);
  os << "variables " << p.num_variables() << '\n';
  for (int i = 0; i < p.num_variables(); ++i) {
    os << "var " << i << ' ' << (p.names()[i].empty() ? "-" : p.names()[i]) << " cost " << p.cost()[i]
       << " box " << p.lower()[i] << ' ' << p.upper()[i] << '\n';
  }
  os << "offset " << p.objective_offset() << '\n';
  os << "equalities " << p.equalities().size() << '\n';
  for (const auto& row : p.equalities()) {
    os << "eq " << row.rhs;
    for (const auto& t : row.terms) os << ' ' << t.var << ':' << t.coef;
    os << '\n';
  }
  os << "ranges " << p.ranges().size() << '\n';
  for (const auto& row : p.ranges()) {
    os << "range " << row.lower << ' ' << row.upper << " | ";
    dump_affine(os, row.expr);
    os << '\n';
  }
  os << "cones " << p.cones().size() << '\n';
  for (const auto& c : p.cones()) {
    os << "cone " << c.u.size() + 1 << '\n';
    os << "  t ";
    dump_affine(os, c.t);
    os << '\n';
    for (const auto& u : c.u) {
      os << "  u ";
      dump_affine(os, u);
      os << '\n';
    }
  }
}

}  // namespace dercap::conic
