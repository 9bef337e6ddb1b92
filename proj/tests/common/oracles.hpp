#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dercap/capability/opf.hpp"
#include "dercap/feeder/linear.hpp"
#include "dercap/feeder/model.hpp"

namespace dercap::testing {

using feeder::FeederModel;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Case {
  FeederModel model;
  feeder::FeederSensitivities lossless;
  feeder::OperatingPoint op;
  feeder::FeederSensitivities sens;
};

inline Case make_case(FeederModel model, double load = 1.0, double solar = 1.0) {
  Case c;
  c.model = std::move(model);
  c.lossless = feeder::compute_sensitivities(c.model);
  c.op = feeder::nominal_operating_point(c.model, load, solar);
  c.sens = capability::sensitivities_at(c.model, c.lossless, c.op);
  return c;
}

// Single-phase chain 0-1-...-n evaluated by the plain DistFlow recursion:
// P_j = sum of downstream net demand plus downstream loss constants,
// y_j = y_{j-1} - 2 (r_j P_j + x_j Q_j). Returns net var demand in pu with
// or without the line losses, or NaN when a limit is violated.
struct ChainOracle {
  std::vector<double> r, x, load_p, load_q, l_p, l_q;  // per node 1..n, pu
  std::vector<int> der_node;
  std::vector<double> pbar, srat;
  double v_min = 0.95, v_max = 1.05;

  double eval(const std::vector<double>& q, const std::vector<double>& cur, double y0, bool losses) const {
    const int n = static_cast<int>(r.size());
    std::vector<double> dp(load_p), dq(load_q);
    for (std::size_t j = 0; j < der_node.size(); ++j) {
      const double p = pbar[j] * (1.0 - cur[j]);
      if (p * p + q[j] * q[j] > srat[j] * srat[j] * (1.0 + 1e-9)) return std::nan("");
      dp[der_node[j]] -= p;
      dq[der_node[j]] -= q[j];
    }
    std::vector<double> P(n), Q(n);
    double accp = 0.0, accq = 0.0;
    for (int j = n - 1; j >= 0; --j) {
      accp += dp[j] + l_p[j];
      accq += dq[j] + l_q[j];
      P[j] = accp;
      Q[j] = accq;
    }
    double y = y0, total = 0.0;
    const double lo = v_min * v_min, hi = v_max * v_max;
    if (y0 < lo - 1e-7 || y0 > hi + 1e-7) return std::nan("");
    for (int j = 0; j < n; ++j) {
      y -= 2.0 * (r[j] * P[j] + x[j] * Q[j]);
      if (y < lo - 1e-7 || y > hi + 1e-7) return std::nan("");
      if (losses) total += x[j] * (P[j] * P[j] + Q[j] * Q[j]) / y;
    }
    for (int j = 0; j < n; ++j) total += load_q[j];
    for (double v : q) total -= v;
    return total;
  }
};

inline ChainOracle chain_oracle(const Case& c) {
  ChainOracle o;
  const auto& m = c.model;
  const double zb = m.z_base_ohm(), base = m.phase_kva();
  const int n = m.num_nodes() - 1;
  for (int j = 1; j <= n; ++j) {
    const auto& line = m.graph.lines[m.graph.line_into[j]];
    o.r.push_back(line.r_ohm(0, 0) / zb);
    o.x.push_back(line.x_ohm(0, 0) / zb);
    const int s = m.slots.at(j, 0);
    o.load_p.push_back(c.op.load_p[s] / base);
    o.load_q.push_back(c.op.load_q[s] / base);
    o.l_p.push_back(c.sens.l_p(s));
    o.l_q.push_back(c.sens.l_q(s));
  }
  for (std::size_t k = 0; k < m.ders.size(); ++k) {
    o.der_node.push_back(m.ders[k].node - 1);
    o.pbar.push_back(c.op.der_avail[k] / base);
    o.srat.push_back(m.ders[k].s_rating / base);
  }
  return o;
}

// Grid search on the 4-node fixture: q at 0.01 pu, cur_1 at 0.01 (cur_2 from
// the curtailment equality), v0 at 0.01 pu inside the tap box.
inline double grid_best(const ChainOracle& o, double curtailment, double v_tm, const feeder::SubstationParams& tap,
                 bool minimize) {
  const double sum = o.pbar[0] + o.pbar[1];
  const double target = curtailment * sum;
  double best = minimize ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  const double v_lo = std::max(v_tm * tap.r_min(), o.v_min), v_hi = std::min(v_tm * tap.r_max(), o.v_max);
  std::vector<double> q(2), cur(2);
  for (int iv = 0;; ++iv) {
    const double v0 = std::ceil(v_lo * 100.0 - 1e-9) / 100.0 + iv * 0.01;
    if (v0 > v_hi + 1e-12) break;
    for (int ic = 0; ic <= 100; ++ic) {
      cur[0] = ic * 0.01;
      cur[1] = (target - o.pbar[0] * cur[0]) / o.pbar[1];
      if (cur[1] < -1e-12 || cur[1] > 1.0 + 1e-12) continue;
      for (int a = -100; a <= 100; ++a) {
        q[0] = a * 0.01;
        if (std::abs(q[0]) > o.srat[0]) continue;
        for (int b = -100; b <= 100; ++b) {
          q[1] = b * 0.01;
          if (std::abs(q[1]) > o.srat[1]) continue;
          const double v = o.eval(q, cur, v0 * v0, minimize);
          if (std::isnan(v)) continue;
          best = minimize ? std::min(best, v) : std::max(best, v);
        }
      }
    }
  }
  return best;
}

// Independent route to Y: solve -M P = -p and M0 Y0 + M' Y = Zp P + Zq Q
// directly, without the tree sweeps.
inline VectorXd dense_voltages(const FeederModel& m, const VectorXd& p, const VectorXd& q, double v0) {
  const auto inc = feeder::build_incidence(m);
  MatrixXd zp, zq;
  feeder::assemble_zd(m, zp, zq);
  const Eigen::PartialPivLU<MatrixXd> lu(inc.m);
  const VectorXd P = lu.solve(p);
  const VectorXd Q = lu.solve(q);
  const VectorXd rhs = zp * P + zq * Q - inc.m0 * Eigen::Vector3d::Constant(v0 * v0);
  return inc.m.transpose().partialPivLu().solve(rhs);
}

}  // namespace dercap::testing
