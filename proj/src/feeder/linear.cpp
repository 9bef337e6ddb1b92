#include "dercap/feeder/linear.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace dercap::feeder {

namespace {

using cd = std::complex<double>;

// Gamma = alpha alpha^H with alpha = (1, a^2, a), a = exp(j 2 pi / 3).
Eigen::Matrix3cd gamma_matrix() {
  const double t = 2.0 * M_PI / 3.0;
  const Eigen::Vector3cd alpha(cd(1.0, 0.0), std::polar(1.0, -t), std::polar(1.0, t));
  return alpha * alpha.adjoint();
}

// Full 3x3 Z^p / Z^q of a line in pu (absent phases left in; callers mask).
void coupling3(const FeederModel& model, const LineSegment& line, Eigen::Matrix3d& zp, Eigen::Matrix3d& zq) {
  static const Eigen::Matrix3cd gamma = gamma_matrix();
  const double zb = model.z_base_ohm();
  Eigen::Matrix3cd z;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) z(i, j) = cd(line.r_ohm(i, j), line.x_ohm(i, j)) / zb;
  const Eigen::Matrix3cd g = gamma.cwiseProduct(z.conjugate());
  zp = 2.0 * g.real();
  zq = -2.0 * g.imag();
}

}  // namespace

LineCoupling line_coupling(const FeederModel& model, int line) {
  const auto& seg = model.graph.lines[line];
  Eigen::Matrix3d zp, zq;
  coupling3(model, seg, zp, zq);
  LineCoupling out;
  for (int p = 0; p < 3; ++p)
    if (model.graph.nodes[seg.to].phases.has(p)) out.phases.push_back(p);
  const int k = static_cast<int>(out.phases.size());
  out.zp.resize(k, k);
  out.zq.resize(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      out.zp(a, b) = zp(out.phases[a], out.phases[b]);
      out.zq(a, b) = zq(out.phases[a], out.phases[b]);
    }
  return out;
}

IncidenceMatrices build_incidence(const FeederModel& model) {
  const auto& s = model.slots;
  const int n = s.size();
  IncidenceMatrices inc;
  inc.m = MatrixXd::Zero(n, n);
  inc.m0 = MatrixXd::Zero(n, 3);
  for (const auto& line : model.graph.lines) {
    for (int p = 0; p < 3; ++p) {
      const int col = s.at(line.to, p);
      if (col < 0) continue;
      inc.m(col, col) = -1.0;
      if (line.from == 0)
        inc.m0(col, p) = 1.0;
      else
        inc.m(s.at(line.from, p), col) = 1.0;
    }
  }
  return inc;
}

void assemble_zd(const FeederModel& model, MatrixXd& zp_d, MatrixXd& zq_d) {
  const int n = model.slots.size();
  zp_d = MatrixXd::Zero(n, n);
  zq_d = MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < model.graph.lines.size(); ++k) {
    const auto c = line_coupling(model, static_cast<int>(k));
    const int to = model.graph.lines[k].to;
    for (std::size_t a = 0; a < c.phases.size(); ++a)
      for (std::size_t b = 0; b < c.phases.size(); ++b) {
        const int i = model.slots.at(to, c.phases[a]);
        const int j = model.slots.at(to, c.phases[b]);
        zp_d(i, j) = c.zp(a, b);
        zq_d(i, j) = c.zq(a, b);
      }
  }
}

FeederSensitivities compute_sensitivities(const FeederModel& model, Exec exec) {
  const auto& g = model.graph;
  const auto& slots = model.slots;
  const int n = slots.size();
  const int nodes = model.num_nodes();

  // Per-node 3x3 couplings of the line feeding it, zero for absent phases.
  std::vector<Eigen::Matrix3d> zp(nodes, Eigen::Matrix3d::Zero()), zq(nodes, Eigen::Matrix3d::Zero());
  for (int v = 1; v < nodes; ++v) {
    Eigen::Matrix3d p3, q3;
    coupling3(model, g.lines[g.line_into[v]], p3, q3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (g.nodes[v].phases.has(a) && g.nodes[v].phases.has(b)) {
          zp[v](a, b) = p3(a, b);
          zq[v](a, b) = q3(a, b);
        }
  }

  FeederSensitivities out;
  out.r_eq = MatrixXd::Zero(n, n);
  out.x_eq = MatrixXd::Zero(n, n);

  // Column i (node src, phase ph): entry (j, psi) sums Z(psi, ph) over the
  // lines shared by the paths root->j and root->src.
  auto column = [&](int i) {
    const auto [src, ph] = slots.entries[i];
    std::vector<char> on_path(nodes, 0);
    for (int v = src; v > 0; v = g.parent[v]) on_path[v] = 1;
    std::vector<Eigen::Vector3d> acc_p(nodes, Eigen::Vector3d::Zero()), acc_q(nodes, Eigen::Vector3d::Zero());
    for (int v : g.topo_order) {
      if (v == 0) continue;
      const int up = g.parent[v];
      acc_p[v] = acc_p[up];
      acc_q[v] = acc_q[up];
      if (on_path[v]) {
        acc_p[v] += zp[v].col(ph);
        acc_q[v] += zq[v].col(ph);
      }
      for (int psi = 0; psi < 3; ++psi) {
        const int row = slots.at(v, psi);
        if (row < 0) continue;
        out.r_eq(row, i) = acc_p[v](psi);
        out.x_eq(row, i) = acc_q[v](psi);
      }
    }
  };

  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) column(i);
  } else {
    for (int i = 0; i < n; ++i) column(i);
  }

  out.l_p = VectorXd::Zero(n);
  out.l_q = VectorXd::Zero(n);
  out.l_c = VectorXd::Zero(n);
  return out;
}

FeederSensitivities dense_sensitivities(const FeederModel& model) {
  const auto inc = build_incidence(model);
  MatrixXd zp_d, zq_d;
  assemble_zd(model, zp_d, zq_d);
  const Eigen::FullPivLU<MatrixXd> lu(inc.m);
  if (!lu.isInvertible()) throw std::runtime_error("incidence matrix is singular");
  const MatrixXd minv = lu.inverse();
  FeederSensitivities out;
  out.r_eq = minv.transpose() * zp_d * minv;
  out.x_eq = minv.transpose() * zq_d * minv;
  const int n = model.slots.size();
  out.l_p = VectorXd::Zero(n);
  out.l_q = VectorXd::Zero(n);
  out.l_c = VectorXd::Zero(n);
  return out;
}

FeederSensitivities with_losses(const FeederSensitivities& sens, const LossConstants& losses) {
  FeederSensitivities out = sens;
  out.l_p = losses.l_p;
  out.l_q = losses.l_q;
  // Loss terms behave like extra load at each slot.
  out.l_c = -(sens.r_eq * losses.l_p) - sens.x_eq * losses.l_q;
  return out;
}

VectorXd solve_voltages(const FeederSensitivities& sens, const VectorXd& p, const VectorXd& q, double v0) {
  if (p.size() != sens.r_eq.cols() || q.size() != sens.x_eq.cols())
    throw std::invalid_argument("solve_voltages: injection size does not match the feeder");
  VectorXd y = sens.r_eq * p + sens.x_eq * q + sens.l_c;
  y.array() += v0 * v0;
  return y;
}

Injections net_injections(const FeederModel& model, const OperatingPoint& op, const std::vector<double>& der_p,
                          const std::vector<double>& der_q) {
  const int n = model.slots.size();
  const double base = model.phase_kva();
  Injections inj;
  inj.p = VectorXd::Zero(n);
  inj.q = VectorXd::Zero(n);
  for (int s = 0; s < n; ++s) {
    inj.p(s) = -op.load_p[s] / base;
    inj.q(s) = -op.load_q[s] / base;
  }
  for (std::size_t k = 0; k < model.ders.size(); ++k) {
    const int s = model.slots.at(model.ders[k].node, model.ders[k].phase);
    if (!der_p.empty()) inj.p(s) += der_p[k] / base;
    if (!der_q.empty()) inj.q(s) += der_q[k] / base;
  }
  return inj;
}

LineFlows line_flows(const FeederModel& model, const VectorXd& p, const VectorXd& q, const VectorXd& l_p,
                     const VectorXd& l_q) {
  const auto& g = model.graph;
  const auto& s = model.slots;
  LineFlows f;
  f.p = l_p - p;
  f.q = l_q - q;
  for (auto it = g.topo_order.rbegin(); it != g.topo_order.rend(); ++it) {
    const int v = *it;
    if (v == 0) continue;
    for (int c : g.children[v])
      for (int ph = 0; ph < 3; ++ph) {
        const int sc = s.at(c, ph);
        if (sc < 0) continue;
        f.p(s.at(v, ph)) += f.p(sc);
        f.q(s.at(v, ph)) += f.q(sc);
      }
  }
  return f;
}

double reactive_loss(double p_flow, double q_flow, double y, double x_phase) {
  if (!(y > 0.0)) throw std::domain_error("reactive_loss: squared voltage must be positive");
  return (p_flow * p_flow + q_flow * q_flow) / y * x_phase;
}

void self_impedance(const FeederModel& model, VectorXd& r_self, VectorXd& x_self) {
  const int n = model.slots.size();
  const double zb = model.z_base_ohm();
  r_self.resize(n);
  x_self.resize(n);
  for (int s = 0; s < n; ++s) {
    const auto [node, ph] = model.slots.entries[s];
    const auto& line = model.graph.lines[model.graph.line_into[node]];
    r_self(s) = line.r_ohm(ph, ph) / zb;
    x_self(s) = line.x_ohm(ph, ph) / zb;
  }
}

LossConstants estimate_loss_constants(const FeederModel& model, const FeederSensitivities& lossless,
                                      const OperatingPoint& base) {
  const int n = model.slots.size();
  const auto inj = net_injections(model, base, base.der_avail, {});
  const VectorXd zero = VectorXd::Zero(n);
  const auto flows = line_flows(model, inj.p, inj.q, zero, zero);
  FeederSensitivities clean = lossless;
  clean.l_c.setZero();
  const VectorXd y = solve_voltages(clean, inj.p, inj.q, 1.0);
  VectorXd r, x;
  self_impedance(model, r, x);
  LossConstants out;
  out.l_p.resize(n);
  out.l_q.resize(n);
  for (int s = 0; s < n; ++s) {
    out.l_p(s) = reactive_loss(flows.p(s), flows.q(s), y(s), r(s));
    out.l_q(s) = reactive_loss(flows.p(s), flows.q(s), y(s), x(s));
  }
  return out;
}

SubstationPower net_substation_power(const FeederModel& model, const OperatingPoint& op,
                                     const std::vector<double>& der_p, const std::vector<double>& der_q,
                                     const VectorXd& y, const LineFlows& flows) {
  SubstationPower out;
  for (double v : op.load_p) out.p_kw += v;
  for (double v : op.load_q) out.q_kvar += v;
  for (double v : der_p) out.p_kw -= v;
  for (double v : der_q) out.q_kvar -= v;
  VectorXd r, x;
  self_impedance(model, r, x);
  double lp = 0.0, lq = 0.0;
  for (int s = 0; s < model.slots.size(); ++s) {
    lp += reactive_loss(flows.p(s), flows.q(s), y(s), r(s));
    lq += reactive_loss(flows.p(s), flows.q(s), y(s), x(s));
  }
  out.p_kw += lp * model.phase_kva();
  out.q_kvar += lq * model.phase_kva();
  return out;
}

double net_substation_var(const FeederModel& model, const OperatingPoint& op, const std::vector<double>& der_q,
                          const VectorXd& y, const LineFlows& flows) {
  return net_substation_power(model, op, {}, der_q, y, flows).q_kvar;
}

FeederState evaluate_dispatch(const FeederModel& model, const FeederSensitivities& sens, const OperatingPoint& op,
                              const std::vector<double>& der_p, const std::vector<double>& der_q, double v0) {
  const auto inj = net_injections(model, op, der_p, der_q);
  FeederState st;
  st.y = solve_voltages(sens, inj.p, inj.q, v0);
  st.flows = line_flows(model, inj.p, inj.q, sens.l_p, sens.l_q);
  st.sub = net_substation_power(model, op, der_p, der_q, st.y, st.flows);
  return st;
}

}  // namespace dercap::feeder
