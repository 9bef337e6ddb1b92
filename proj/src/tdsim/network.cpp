#include "dercap/tdsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <set>
#include <sstream>

namespace dercap::tdsim {

using nlohmann::json;

int TransmissionNetwork::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<int>(i);
  throw NetworkError("unknown bus " + std::to_string(id));
}

int TransmissionNetwork::branch_index(int id) const {
  for (std::size_t i = 0; i < branches.size(); ++i)
    if (branches[i].id == id) return static_cast<int>(i);
  throw NetworkError("unknown branch " + std::to_string(id));
}

int TransmissionNetwork::in_service_count() const {
  return static_cast<int>(std::count_if(branches.begin(), branches.end(), [](const Branch& b) { return b.in_service; }));
}

namespace {

const json& need(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw NetworkError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw NetworkError(where + "." + key + ": missing");
  return *it;
}

double num(const json& obj, const char* key, const std::string& where) {
  const auto& v = need(obj, key, where);
  if (!v.is_number()) throw NetworkError(where + "." + key + ": expected a number");
  return v.get<double>();
}

int whole(const json& obj, const char* key, const std::string& where) {
  const auto& v = need(obj, key, where);
  if (!v.is_number_integer()) throw NetworkError(where + "." + key + ": expected an integer");
  return v.get<int>();
}

const json& list(const json& obj, const char* key) {
  const auto& v = need(obj, key, "transmission");
  if (!v.is_array()) throw NetworkError(std::string("transmission.") + key + ": expected an array");
  return v;
}

std::string at(const char* key, std::size_t i) { return std::string(key) + "[" + std::to_string(i) + "]"; }

BusType bus_type(const std::string& s, const std::string& where) {
  if (s == "slack") return BusType::slack;
  if (s == "PV" || s == "pv") return BusType::pv;
  if (s == "PQ" || s == "pq") return BusType::pq;
  throw NetworkError(where + ".type: expected slack, PV or PQ");
}

}  // namespace

bool is_connected(const TransmissionNetwork& net) {
  const int n = static_cast<int>(net.buses.size());
  if (n == 0) return true;
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int v) {
    while (root[v] != v) v = root[v] = root[root[v]];
    return v;
  };
  int parts = n;
  for (const auto& b : net.branches) {
    if (!b.in_service) continue;
    const int u = find(net.bus_index(b.from)), v = find(net.bus_index(b.to));
    if (u != v) {
      root[u] = v;
      --parts;
    }
  }
  return parts == 1;
}

TransmissionNetwork load_transmission(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw NetworkError(std::string("transmission JSON: ") + e.what());
  }
  TransmissionNetwork net;
  net.base_mva = num(doc, "base_mva", "transmission");
  if (net.base_mva <= 0.0) throw NetworkError("transmission.base_mva: must be positive");

  std::set<int> ids;
  int slacks = 0;
  const auto& buses = list(doc, "buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const auto where = at("buses", i);
    TransmissionBus b;
    b.id = whole(buses[i], "id", where);
    const auto& t = need(buses[i], "type", where);
    if (!t.is_string()) throw NetworkError(where + ".type: expected a string");
    b.type = bus_type(t.get<std::string>(), where);
    if (buses[i].contains("v_set")) b.v_set = num(buses[i], "v_set", where);
    if (buses[i].contains("p_load_mw")) b.p_load_mw = num(buses[i], "p_load_mw", where);
    if (buses[i].contains("q_load_mvar")) b.q_load_mvar = num(buses[i], "q_load_mvar", where);
    if (b.v_set <= 0.0) throw NetworkError(where + ".v_set: must be positive");
    if (!ids.insert(b.id).second) throw NetworkError(where + ".id: duplicate bus id " + std::to_string(b.id));
    slacks += b.type == BusType::slack;
    net.buses.push_back(b);
  }
  if (slacks != 1) throw NetworkError("transmission: exactly one slack bus required, found " + std::to_string(slacks));

  std::set<int> branch_ids;
  const auto& branches = list(doc, "branches");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const auto where = at("branches", i);
    Branch br;
    br.id = whole(branches[i], "id", where);
    br.from = whole(branches[i], "from", where);
    br.to = whole(branches[i], "to", where);
    br.r_pu = num(branches[i], "r_pu", where);
    br.x_pu = num(branches[i], "x_pu", where);
    if (branches[i].contains("b_pu")) br.b_pu = num(branches[i], "b_pu", where);
    if (branches[i].contains("status")) br.in_service = whole(branches[i], "status", where) != 0;
    if (!ids.count(br.from) || !ids.count(br.to)) throw NetworkError(where + ": references an unknown bus");
    if (br.from == br.to) throw NetworkError(where + ": connects a bus to itself");
    if (br.x_pu <= 0.0 || br.r_pu < 0.0) throw NetworkError(where + ": needs r >= 0 and x > 0");
    if (!branch_ids.insert(br.id).second) throw NetworkError(where + ".id: duplicate branch id");
    net.branches.push_back(br);
  }

  const auto& gens = list(doc, "gens");
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const auto where = at("gens", i);
    Generator g;
    g.bus = whole(gens[i], "bus", where);
    g.p_mw = num(gens[i], "p_mw", where);
    if (gens[i].contains("q_min_mvar")) g.q_min_mvar = num(gens[i], "q_min_mvar", where);
    if (gens[i].contains("q_max_mvar")) g.q_max_mvar = num(gens[i], "q_max_mvar", where);
    if (!ids.count(g.bus)) throw NetworkError(where + ".bus: unknown bus");
    if (g.q_min_mvar > g.q_max_mvar) throw NetworkError(where + ": q_min_mvar above q_max_mvar");
    net.gens.push_back(g);
  }
  for (const auto& b : net.buses) {
    if (b.type != BusType::pv) continue;
    const bool has_gen = std::any_of(net.gens.begin(), net.gens.end(), [&](const Generator& g) { return g.bus == b.id; });
    if (!has_gen) throw NetworkError("bus " + std::to_string(b.id) + " is PV but has no generator");
  }

  auto all_in = net;
  for (auto& br : all_in.branches) br.in_service = true;
  if (!is_connected(all_in)) throw NetworkError("transmission: network is not connected");
  return net;
}

TransmissionNetwork load_transmission_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NetworkError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_transmission(ss.str());
}

TransmissionNetwork apply_contingency(const TransmissionNetwork& net, int branch_id) {
  auto out = net;
  auto& br = out.branches[out.branch_index(branch_id)];
  if (!br.in_service) throw NetworkError("branch " + std::to_string(branch_id) + " is already out of service");
  br.in_service = false;
  if (!is_connected(out)) throw IslandingError("removing branch " + std::to_string(branch_id) + " islands part of the grid");
  return out;
}

Eigen::MatrixXcd admittance_matrix(const TransmissionNetwork& net) {
  const int n = static_cast<int>(net.buses.size());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& br : net.branches) {
    if (!br.in_service) continue;
    const int f = net.bus_index(br.from), t = net.bus_index(br.to);
    const std::complex<double> ys = 1.0 / std::complex<double>(br.r_pu, br.x_pu);
    const std::complex<double> ysh(0.0, br.b_pu / 2.0);
    y(f, f) += ys + ysh;
    y(t, t) += ys + ysh;
    y(f, t) -= ys;
    y(t, f) -= ys;
  }
  return y;
}

PowerFlowResult ac_power_flow(const TransmissionNetwork& net, const std::vector<BusInjection>& extra,
                              const PowerFlowOptions& opts) {
  using Eigen::VectorXcd;
  using Eigen::VectorXd;
  const int n = static_cast<int>(net.buses.size());
  if (!extra.empty() && static_cast<int>(extra.size()) != n)
    throw std::invalid_argument("ac_power_flow: one injection per bus expected");
  const double base = net.base_mva;
  const auto ybus = admittance_matrix(net);

  std::vector<BusType> type(n);
  VectorXd p_spec(n), q_spec(n), q_lo(n), q_hi(n);
  VectorXd vm(n), va = VectorXd::Zero(n);
  q_lo.setZero();
  q_hi.setZero();
  for (int i = 0; i < n; ++i) {
    const auto& b = net.buses[i];
    type[i] = b.type;
    p_spec(i) = -b.p_load_mw;
    q_spec(i) = -b.q_load_mvar;
    if (!extra.empty()) {
      p_spec(i) -= extra[i].p_mw;
      q_spec(i) -= extra[i].q_mvar;
    }
    vm(i) = b.type == BusType::pq ? 1.0 : b.v_set;
  }
  for (const auto& g : net.gens) {
    const int i = net.bus_index(g.bus);
    p_spec(i) += g.p_mw;
    q_lo(i) += g.q_min_mvar;
    q_hi(i) += g.q_max_mvar;
  }
  // Bus demand (own load plus extra), as seen by generator outputs.
  const VectorXd q_load = -q_spec;
  VectorXd p_load(n);
  for (int i = 0; i < n; ++i) p_load(i) = net.buses[i].p_load_mw + (extra.empty() ? 0.0 : extra[i].p_mw);
  p_spec /= base;

  PowerFlowResult res;
  std::vector<double> q_fixed(n, 0.0);  // gen Q at buses switched to PQ, MVAr
  std::vector<bool> switched(n, false);

  auto solve = [&]() {
    std::vector<int> pvpq, pq;
    for (int i = 0; i < n; ++i) {
      if (type[i] != BusType::slack) pvpq.push_back(i);
      if (type[i] == BusType::pq) pq.push_back(i);
    }
    VectorXd qs(n);
    for (int i = 0; i < n; ++i) qs(i) = (switched[i] ? q_fixed[i] - q_load(i) : q_spec(i)) / base;
    const int a = static_cast<int>(pvpq.size()), b = static_cast<int>(pq.size());
    for (int it = 0;; ++it) {
      VectorXcd v(n);
      for (int i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));
      const VectorXcd cur = ybus * v;
      const VectorXcd s = v.cwiseProduct(cur.conjugate());
      VectorXd f(a + b);
      for (int k = 0; k < a; ++k) f(k) = s(pvpq[k]).real() - p_spec(pvpq[k]);
      for (int k = 0; k < b; ++k) f(a + k) = s(pq[k]).imag() - qs(pq[k]);
      res.mismatch = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
      if (res.mismatch <= opts.tolerance) return true;
      if (it >= opts.max_iterations || !std::isfinite(res.mismatch)) return false;
      ++res.iterations;

      // dS/dVa = j diag(V) conj(diag(I) - Y diag(V)); dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
      const VectorXcd vn = v.cwiseQuotient(vm.cast<std::complex<double>>());
      Eigen::MatrixXcd ds_da = -(ybus * v.asDiagonal()).conjugate();
      ds_da.diagonal() += cur.conjugate();
      ds_da = std::complex<double>(0.0, 1.0) * (v.asDiagonal() * ds_da);
      Eigen::MatrixXcd ds_dm = v.asDiagonal() * (ybus * vn.asDiagonal()).conjugate();
      ds_dm.diagonal() += cur.conjugate().cwiseProduct(vn);

      Eigen::MatrixXd jac(a + b, a + b);
      for (int r = 0; r < a; ++r) {
        for (int c = 0; c < a; ++c) jac(r, c) = ds_da(pvpq[r], pvpq[c]).real();
        for (int c = 0; c < b; ++c) jac(r, a + c) = ds_dm(pvpq[r], pq[c]).real();
      }
      for (int r = 0; r < b; ++r) {
        for (int c = 0; c < a; ++c) jac(a + r, c) = ds_da(pq[r], pvpq[c]).imag();
        for (int c = 0; c < b; ++c) jac(a + r, a + c) = ds_dm(pq[r], pq[c]).imag();
      }
      const VectorXd dx = jac.partialPivLu().solve(-f);
      for (int k = 0; k < a; ++k) va(pvpq[k]) += dx(k);
      for (int k = 0; k < b; ++k) vm(pq[k]) += dx(a + k);
    }
  };

  // PV buses that run out of reactive range are held at the limit and
  // re-solved as PQ; a bus never returns to PV.
  for (;;) {
    res.converged = solve();
    if (!res.converged || !opts.enforce_q_limits) break;
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));
    const Eigen::VectorXcd s = v.cwiseProduct((ybus * v).conjugate());
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      if (type[i] != BusType::pv) continue;
      const double qg = s(i).imag() * base + q_load(i);
      if (qg > q_hi(i) + 1e-9 || qg < q_lo(i) - 1e-9) {
        type[i] = BusType::pq;
        switched[i] = true;
        q_fixed[i] = std::clamp(qg, q_lo(i), q_hi(i));
        res.limited_buses.push_back(net.buses[i].id);
        changed = true;
      }
    }
    if (!changed) break;
  }

  res.vm.assign(vm.data(), vm.data() + n);
  res.va.assign(va.data(), va.data() + n);
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));
  const Eigen::VectorXcd s = v.cwiseProduct((ybus * v).conjugate());
  double injected = 0.0;
  for (int i = 0; i < n; ++i) {
    injected += s(i).real() * base;
    if (net.buses[i].type == BusType::slack) {
      res.slack_p_mw = s(i).real() * base + p_load(i);
      res.slack_q_mvar = s(i).imag() * base + q_load(i);
    }
  }
  res.loss_mw = injected;
  res.gen_q_mvar.assign(net.gens.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double total = s(i).imag() * base + q_load(i);
    std::vector<std::size_t> at_bus;
    for (std::size_t g = 0; g < net.gens.size(); ++g)
      if (net.gens[g].bus == net.buses[i].id) at_bus.push_back(g);
    if (at_bus.empty()) continue;
    double span = 0.0;
    for (auto g : at_bus) span += net.gens[g].q_max_mvar - net.gens[g].q_min_mvar;
    for (auto g : at_bus) {
      const double share = span > 0.0 ? (net.gens[g].q_max_mvar - net.gens[g].q_min_mvar) / span : 1.0 / at_bus.size();
      res.gen_q_mvar[g] = total * share;
    }
  }
  return res;
}

}  // namespace dercap::tdsim
