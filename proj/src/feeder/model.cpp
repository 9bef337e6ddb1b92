#include "dercap/feeder/model.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace dercap::feeder {

using nlohmann::json;

PhaseMask PhaseMask::parse(std::string_view text) {
  PhaseMask m;
  for (char c : text) {
    if (c < 'a' || c > 'c') throw FeederError(ErrorKind::schema, "phase string '" + std::string(text) + "' is not a subset of abc");
    m.present[c - 'a'] = true;
  }
  if (m.count() == 0) throw FeederError(ErrorKind::schema, "empty phase string");
  return m;
}

std::string PhaseMask::str() const {
  std::string s;
  for (int p = 0; p < 3; ++p)
    if (present[p]) s += phase_name(p);
  return s;
}

int parse_phase(std::string_view text) {
  if (text.size() != 1 || text[0] < 'a' || text[0] > 'c')
    throw FeederError(ErrorKind::schema, "phase '" + std::string(text) + "' must be one of a, b, c");
  return text[0] - 'a';
}

char phase_name(int phase) { return static_cast<char>('a' + phase); }

namespace {

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw FeederError(ErrorKind::schema, where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw FeederError(ErrorKind::schema, where + "." + key + ": missing");
  return *it;
}

double number(const json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_number()) throw FeederError(ErrorKind::schema, where + "." + key + ": expected a number");
  return v.get<double>();
}

int integer(const json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_number_integer()) throw FeederError(ErrorKind::schema, where + "." + key + ": expected an integer");
  return v.get<int>();
}

std::string text(const json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_string()) throw FeederError(ErrorKind::schema, where + "." + key + ": expected a string");
  return v.get<std::string>();
}

const json& array(const json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_array()) throw FeederError(ErrorKind::schema, where + "." + key + ": expected an array");
  return v;
}

Eigen::Matrix3d matrix3(const json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  const std::string at = where + "." + key;
  if (!v.is_array() || v.size() != 3) throw FeederError(ErrorKind::schema, at + ": expected a 3x3 array");
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_array() || v[i].size() != 3) throw FeederError(ErrorKind::schema, at + ": expected a 3x3 array");
    for (int j = 0; j < 3; ++j) {
      if (!v[i][j].is_number()) throw FeederError(ErrorKind::schema, at + ": non-numeric entry");
      m(i, j) = v[i][j].get<double>();
    }
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff()))
    throw FeederError(ErrorKind::schema, at + ": matrix is not symmetric");
  return m;
}

std::string idx(const char* base, std::size_t i) { return std::string(base) + "[" + std::to_string(i) + "]"; }

}  // namespace

void finalize(FeederModel& model) {
  auto& g = model.graph;
  const int n = static_cast<int>(g.nodes.size());
  if (n < 2) throw FeederError(ErrorKind::schema, "nodes: a feeder needs the root and at least one more node");
  for (int i = 0; i < n; ++i)
    if (g.nodes[i].id != i) throw FeederError(ErrorKind::schema, idx("nodes", i) + ".id: ids must be 0..N in order");
  if (model.base_kva <= 0.0 || model.base_kv <= 0.0) throw FeederError(ErrorKind::schema, "base_kva/base_kv must be positive");

  g.parent.assign(n, -1);
  g.line_into.assign(n, -1);
  g.children.assign(n, {});
  for (std::size_t k = 0; k < g.lines.size(); ++k) {
    const auto& l = g.lines[k];
    const std::string at = idx("lines", k);
    if (l.from < 0 || l.from >= n || l.to < 0 || l.to >= n)
      throw FeederError(ErrorKind::dangling, at + ": references an unknown node");
    if (l.to == 0 || l.to == l.from || g.line_into[l.to] >= 0)
      throw FeederError(ErrorKind::cycle, at + ": node " + std::to_string(l.to) + " would have two supplies (loop)");
    g.line_into[l.to] = static_cast<int>(k);
    g.parent[l.to] = l.from;
    g.children[l.from].push_back(l.to);
    for (int p = 0; p < 3; ++p) {
      if (g.nodes[l.to].phases.has(p) && !g.nodes[l.from].phases.has(p))
        throw FeederError(ErrorKind::phase, at + ": phase " + phase_name(p) + " missing upstream");
      if (g.nodes[l.to].phases.has(p) && (l.r_ohm(p, p) < 0.0 || l.x_ohm(p, p) < 0.0))
        throw FeederError(ErrorKind::schema, at + ": negative self impedance");
    }
  }
  for (int i = 1; i < n; ++i)
    if (g.line_into[i] < 0) throw FeederError(ErrorKind::dangling, "node " + std::to_string(i) + " is not supplied by any line");

  g.topo_order.clear();
  std::vector<int> stack{0};
  std::vector<char> seen(n, 0);
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (seen[v]) throw FeederError(ErrorKind::cycle, "cycle through node " + std::to_string(v));
    seen[v] = 1;
    g.topo_order.push_back(v);
    for (auto it = g.children[v].rbegin(); it != g.children[v].rend(); ++it) stack.push_back(*it);
  }
  if (static_cast<int>(g.topo_order.size()) != n)
    throw FeederError(ErrorKind::cycle, "some nodes are not reachable from the root (loop in the line list)");

  auto& s = model.slots;
  s.of_node.assign(n, {-1, -1, -1});
  s.entries.clear();
  for (int v = 1; v < n; ++v)
    for (int p = 0; p < 3; ++p)
      if (g.nodes[v].phases.has(p)) {
        s.of_node[v][p] = static_cast<int>(s.entries.size());
        s.entries.emplace_back(v, p);
      }

  for (std::size_t k = 0; k < model.loads.size(); ++k) {
    const auto& l = model.loads[k];
    if (l.node <= 0 || l.node >= n) throw FeederError(ErrorKind::dangling, idx("loads", k) + ".node: not a non-root node");
    if (!g.nodes[l.node].phases.has(l.phase)) throw FeederError(ErrorKind::phase, idx("loads", k) + ".phase: absent at node");
  }
  for (std::size_t k = 0; k < model.ders.size(); ++k) {
    const auto& d = model.ders[k];
    if (d.node <= 0 || d.node >= n) throw FeederError(ErrorKind::dangling, idx("ders", k) + ".node: not a non-root node");
    if (!g.nodes[d.node].phases.has(d.phase)) throw FeederError(ErrorKind::phase, idx("ders", k) + ".phase: absent at node");
    if (d.s_rating <= 0.0 || d.p_rated < 0.0) throw FeederError(ErrorKind::schema, idx("ders", k) + ": ratings must be positive");
  }
}

FeederModel load_feeder(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw FeederError(ErrorKind::parse, std::string("feeder JSON: ") + e.what());
  }
  const std::string top = "feeder";
  FeederModel m;
  m.base_kva = number(doc, "base_kva", top);
  m.base_kv = number(doc, "base_kv", top);
  const auto& sub = field(doc, "substation", top);
  m.substation.tap_step = number(sub, "tap_step", "substation");
  m.substation.max_taps = integer(sub, "max_taps", "substation");

  const auto& nodes = array(doc, "nodes", top);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string at = idx("nodes", i);
    BusNode b;
    b.id = integer(nodes[i], "id", at);
    try {
      b.phases = PhaseMask::parse(text(nodes[i], "phases", at));
    } catch (const FeederError& e) {
      throw FeederError(ErrorKind::schema, at + ".phases: " + e.what());
    }
    if (nodes[i].contains("label")) b.label = text(nodes[i], "label", at);
    m.graph.nodes.push_back(b);
  }
  const auto& lines = array(doc, "lines", top);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string at = idx("lines", i);
    LineSegment l;
    l.from = integer(lines[i], "from", at);
    l.to = integer(lines[i], "to", at);
    l.r_ohm = matrix3(lines[i], "r_ohm", at);
    l.x_ohm = matrix3(lines[i], "x_ohm", at);
    m.graph.lines.push_back(l);
  }
  const auto& loads = array(doc, "loads", top);
  for (std::size_t i = 0; i < loads.size(); ++i) {
    const std::string at = idx("loads", i);
    Load l;
    l.node = integer(loads[i], "node", at);
    l.phase = parse_phase(text(loads[i], "phase", at));
    l.p_kw = number(loads[i], "p_kw", at);
    l.q_kvar = number(loads[i], "q_kvar", at);
    m.loads.push_back(l);
  }
  const auto& ders = array(doc, "ders", top);
  for (std::size_t i = 0; i < ders.size(); ++i) {
    const std::string at = idx("ders", i);
    agg::DerUnit d;
    d.id = integer(ders[i], "id", at);
    d.node = integer(ders[i], "node", at);
    d.phase = parse_phase(text(ders[i], "phase", at));
    d.p_rated = number(ders[i], "p_rated_kw", at);
    d.s_rating = number(ders[i], "s_kva", at);
    d.p_avail = d.p_rated;
    m.ders.push_back(d);
  }
  finalize(m);
  return m;
}

FeederModel load_feeder_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FeederError(ErrorKind::io, "cannot open feeder file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_feeder(ss.str());
}

OperatingPoint nominal_operating_point(const FeederModel& model, double load_mult, double solar_mult,
                                       std::string label) {
  OperatingPoint op;
  op.label = std::move(label);
  op.load_p.assign(model.slots.size(), 0.0);
  op.load_q.assign(model.slots.size(), 0.0);
  for (const auto& l : model.loads) {
    const int s = model.slots.at(l.node, l.phase);
    op.load_p[s] += l.p_kw * load_mult;
    op.load_q[s] += l.q_kvar * load_mult;
  }
  for (const auto& d : model.ders) op.der_avail.push_back(d.p_rated * solar_mult);
  return op;
}

}  // namespace dercap::feeder
