#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "dercap/conic/problem.hpp"

namespace dercap::conic {

enum class Status { optimal, infeasible, unbounded, max_iterations };

std::string_view to_string(Status s);

/// Lagrange multipliers laid out against the user-level constraint blocks.
///
/// Stationarity reads
///   c + A'y + sum_i (upper_i - lower_i) e_i + sum_r (range_upper_r - range_lower_r) a_r
///     - sum_k J_k' z_k = 0
/// where J_k is the Jacobian of cone k's stacked entries (t, u_1, ...).
/// LP multipliers are non-negative and every z_k lies in the second-order cone.
struct Multipliers {
  std::vector<double> equality;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> range_lower;
  std::vector<double> range_upper;
  std::vector<std::vector<double>> cones;
};

struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;

  double max() const;
};

struct ConicSolution {
  Status status = Status::max_iterations;
  std::vector<double> x;
  Multipliers duals;
  double objective = 0.0;
  KktResiduals kkt;
  int iterations = 0;
  /// Farkas ray when status == infeasible (same layout as duals).
  Multipliers certificate;
  /// Primal improving ray when status == unbounded.
  std::vector<double> ray;
};

struct SolverOptions {
  double feastol = 1e-8;
  double gaptol = 1e-8;
  int max_iterations = 200;
  bool presolve = true;
  /// Per-iteration residual log on stderr.
  bool verbose = false;
};

ConicSolution solve(const ConicProblem& problem, const SolverOptions& opts = {});

/// Called after every solve, from whichever thread ran it.
using SolveObserver = std::function<void(const ConicProblem&, const ConicSolution&)>;

/// Installs a process-wide observer (empty removes it) and returns the old one.
SolveObserver set_solve_observer(SolveObserver obs);

/// Recomputes stationarity, primal feasibility and complementarity directly
/// from the problem definition. Does not touch solver state.
KktResiduals check_kkt(const ConicProblem& problem, const ConicSolution& solution);

struct CertificateReport {
  bool valid = false;
  /// b'y + h'z before normalisation; must be negative.
  double value = 0.0;
  /// ||A'y + G'z||_inf after scaling to b'y + h'z = -1.
  double residual = 0.0;
  /// Largest violation of the dual-cone membership of the certificate.
  double cone_violation = 0.0;
};

CertificateReport check_certificate(const ConicProblem& problem, const Multipliers& cert,
                                    double tol = 1e-7);

}  // namespace dercap::conic
