#pragma once

#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace dercap::conic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Term {
  int var;
  double coef;
};

/// sum(coef * x[var]) + constant
struct Affine {
  std::vector<Term> terms;
  double constant = 0.0;

  static Affine of(int var, double coef = 1.0) { return Affine{{{var, coef}}, 0.0}; }
  static Affine value(double c) { return Affine{{}, c}; }

  Affine& add(int var, double coef) {
    if (coef != 0.0) terms.push_back({var, coef});
    return *this;
  }
  Affine& shift(double c) {
    constant += c;
    return *this;
  }
};

/// ||(u_1, ..., u_k)||_2 <= t, every entry affine in x.
struct Cone {
  Affine t;
  std::vector<Affine> u;
};

struct EqualityRow {
  std::vector<Term> terms;
  double rhs = 0.0;
};

/// lower <= expr <= upper; either side may be infinite.
struct RangeRow {
  Affine expr;
  double lower = -kInf;
  double upper = kInf;
};

/// Linear objective over linear equalities, variable boxes, range rows and
/// second-order cones. Immutable once handed to the solver.
class ConicProblem {
 public:
  int add_variable(std::string name, double lower = -kInf, double upper = kInf, double cost = 0.0);
  void set_cost(int var, double cost);
  void set_bounds(int var, double lower, double upper);
  void add_objective_offset(double offset) { offset_ += offset; }

  int add_equality(std::vector<Term> terms, double rhs);
  int add_range(Affine expr, double lower, double upper);
  /// Index-tuple cone: ||(x[u_0], x[u_1], ...)|| <= x[t].
  int add_cone(int t, const std::vector<int>& u);
  int add_cone(Cone cone);

  /// Throws DimensionError on out-of-range indices or malformed index-tuple cones.
  void validate() const;

  int num_variables() const { return static_cast<int>(cost_.size()); }
  const std::vector<double>& cost() const { return cost_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<EqualityRow>& equalities() const { return equalities_; }
  const std::vector<RangeRow>& ranges() const { return ranges_; }
  const std::vector<Cone>& cones() const { return cones_; }
  double objective_offset() const { return offset_; }

  double objective(const std::vector<double>& x) const;

 private:
  std::vector<double> cost_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<std::string> names_;
  std::vector<EqualityRow> equalities_;
  std::vector<RangeRow> ranges_;
  std::vector<Cone> cones_;
  std::vector<std::vector<int>> index_cones_;  // original tuples, for validation
  double offset_ = 0.0;
};

double evaluate(const Affine& a, const std::vector<double>& x);

/// Plain-text listing headed by "CONIC-DUMP v1".
void write_dump(std::ostream& os, const ConicProblem& problem);

}  // namespace dercap::conic
