#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "dercap/feeder/linear.hpp"
#include "dercap/feeder/model.hpp"
#include "../common/oracles.hpp"

using namespace dercap::feeder;
using dercap::testing::dense_voltages;

namespace {

const std::string kData = DERCAP_DATA_DIR;

// Three-phase line with diagonal (or full) impedance, in ohm, on a 1-ohm base.
std::string line_json(int from, int to, double r, double x, double mutual = 0.0) {
  auto m = [&](double d) {
    return "[[" + std::to_string(d) + "," + std::to_string(mutual) + "," + std::to_string(mutual) + "],[" +
           std::to_string(mutual) + "," + std::to_string(d) + "," + std::to_string(mutual) + "],[" +
           std::to_string(mutual) + "," + std::to_string(mutual) + "," + std::to_string(d) + "]]";
  };
  return "{\"from\":" + std::to_string(from) + ",\"to\":" + std::to_string(to) + ",\"r_ohm\":" + m(r) +
         ",\"x_ohm\":" + m(x) + "}";
}

std::string feeder_json(int nodes, const std::vector<std::string>& lines, const std::string& loads = "",
                        const std::string& phases = "abc") {
  std::string s = R"({"base_kva":3000,"base_kv":1.7320508075688772,"substation":{"tap_step":0.0063,"max_taps":16},"nodes":[)";
  for (int i = 0; i < nodes; ++i) s += (i ? "," : "") + std::string("{\"id\":") + std::to_string(i) + ",\"phases\":\"" + phases + "\"}";
  s += "],\"lines\":[";
  for (std::size_t i = 0; i < lines.size(); ++i) s += (i ? "," : "") + lines[i];
  s += "],\"loads\":[" + loads + "],\"ders\":[]}";
  return s;
}

}  // namespace

TEST_CASE("smallest feeder loads") {
  auto m = load_feeder_file(kData + "/two_node.json");
  CHECK(m.num_nodes() == 2);
  CHECK(m.graph.lines.size() == 1);
  CHECK(m.slots.size() == 1);
}

TEST_CASE("loops and dangling nodes are rejected") {
  const auto loop = feeder_json(3, {line_json(0, 1, 1, 1), line_json(1, 2, 1, 1), line_json(2, 1, 1, 1)});
  try {
    load_feeder(loop);
    FAIL("expected a cycle error");
  } catch (const FeederError& e) {
    CHECK(e.kind == ErrorKind::cycle);
  }
  const auto dangling = feeder_json(3, {line_json(0, 1, 1, 1)});
  try {
    load_feeder(dangling);
    FAIL("expected a dangling error");
  } catch (const FeederError& e) {
    CHECK(e.kind == ErrorKind::dangling);
  }
  try {
    load_feeder("{\"base_kva\": 1,");
    FAIL("expected a parse error");
  } catch (const FeederError& e) {
    CHECK(e.kind == ErrorKind::parse);
  }
  try {
    load_feeder(R"({"base_kva":1,"base_kv":1,"substation":{"tap_step":0.01,"max_taps":16},"nodes":[{"id":0,"phases":"abc"},{"id":1,"phases":"abc"}],"lines":[{"from":0,"to":1,"r_ohm":[[1,0,0],[0,1,0],[0,0,1]]}],"loads":[],"ders":[]})");
    FAIL("expected a schema error");
  } catch (const FeederError& e) {
    CHECK(e.kind == ErrorKind::schema);
    CHECK(std::string(e.what()).find("lines[0].x_ohm") != std::string::npos);
  }
}

TEST_CASE("37-bus fixture shape") {
  auto m = load_feeder_file(kData + "/ieee37.json");
  CHECK(m.num_nodes() == 37);
  CHECK(m.graph.lines.size() == 36);
  CHECK(m.ders.size() == 105);
  CHECK(m.slots.size() == 108);
  double p = 0.0;
  for (const auto& l : m.loads) p += l.p_kw;
  CHECK(p == doctest::Approx(2000.0).epsilon(1e-6));
}

TEST_CASE("incidence of the two-node feeder") {
  auto m = load_feeder(feeder_json(2, {line_json(0, 1, 0.1, 0.1)}));
  const auto inc = build_incidence(m);
  CHECK(inc.m.isApprox(-MatrixXd::Identity(3, 3)));
  CHECK(inc.m0.isApprox(MatrixXd::Identity(3, 3)));
}

TEST_CASE("star feeder: M^-T M0 is minus identity per block") {
  auto m = load_feeder(feeder_json(4, {line_json(0, 1, 0.1, 0.2), line_json(1, 2, 0.1, 0.2), line_json(1, 3, 0.1, 0.2)}));
  const auto inc = build_incidence(m);
  const MatrixXd prod = inc.m.transpose().partialPivLu().solve(inc.m0);
  MatrixXd expect(9, 3);
  expect << -MatrixXd::Identity(3, 3), -MatrixXd::Identity(3, 3), -MatrixXd::Identity(3, 3);
  CHECK((prod - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("chain voltages by hand") {
  // single phase chain 0 -> 1 -> 2, z = 0.1 + j0.2 each, load 1 + j0.5 at node 2
  auto m = load_feeder(feeder_json(3, {line_json(0, 1, 0.1, 0.2), line_json(1, 2, 0.1, 0.2)}, "", "a"));
  const auto sens = compute_sensitivities(m);
  VectorXd p(2), q(2);
  p << 0.0, -1.0;
  q << 0.0, -0.5;
  const VectorXd y = solve_voltages(sens, p, q, 1.0);
  // y1 = 1 - 2(0.1*1 + 0.2*0.5), y2 = y1 - same drop
  CHECK(y(0) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(y(1) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("single-phase identity y1 - y0 = 2(r p + x q)") {
  auto m = load_feeder_file(kData + "/two_node.json");
  const auto sens = compute_sensitivities(m);
  VectorXd p(1), q(1);
  p << 0.7;
  q << -0.3;
  const VectorXd y = solve_voltages(sens, p, q, 1.0);
  CHECK(y(0) - 1.0 == doctest::Approx(2.0 * (0.02 * 0.7 + 0.04 * -0.3)).epsilon(1e-13));
}

TEST_CASE("zero impedance gives a flat profile") {
  auto m = load_feeder(feeder_json(3, {line_json(0, 1, 0, 0), line_json(1, 2, 0, 0)}));
  const auto sens = compute_sensitivities(m);
  CHECK(sens.r_eq.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sens.x_eq.cwiseAbs().maxCoeff() == 0.0);
  const VectorXd y = solve_voltages(sens, VectorXd::Constant(6, -0.3), VectorXd::Constant(6, 0.1), 1.02);
  for (int i = 0; i < 6; ++i) CHECK(y(i) == doctest::Approx(1.0404).epsilon(1e-15));
}

TEST_CASE("diagonal impedances decouple phases") {
  auto m = load_feeder(feeder_json(3, {line_json(0, 1, 0.1, 0.3), line_json(1, 2, 0.2, 0.1)}));
  const auto sens = compute_sensitivities(m);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      if (m.slots.entries[i].second == m.slots.entries[j].second) continue;
      CHECK(sens.r_eq(i, j) == 0.0);
      CHECK(sens.x_eq(i, j) == 0.0);
    }
  CHECK(sens.r_eq.minCoeff() >= 0.0);
  CHECK(sens.x_eq.minCoeff() >= 0.0);
}

TEST_CASE("tree sweeps match dense incidence algebra") {
  for (const char* file : {"/two_node.json", "/four_node_1ph.json", "/ieee37.json"}) {
    auto m = load_feeder_file(kData + file);
    const auto fast = compute_sensitivities(m, Exec::parallel);
    const auto serial = compute_sensitivities(m, Exec::serial);
    const auto dense = dense_sensitivities(m);
    CHECK(fast.r_eq == serial.r_eq);
    CHECK(fast.x_eq == serial.x_eq);
    const double scale = 1.0 + dense.r_eq.cwiseAbs().maxCoeff() + dense.x_eq.cwiseAbs().maxCoeff();
    CHECK((fast.r_eq - dense.r_eq).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    CHECK((fast.x_eq - dense.x_eq).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  }
}

TEST_CASE("voltages match a dense solve of the branch equations") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (const char* file : {"/two_node.json", "/four_node_1ph.json", "/ieee37.json"}) {
    auto m = load_feeder_file(kData + file);
    const auto sens = compute_sensitivities(m);
    const int n = m.slots.size();
    VectorXd p(n), q(n);
    for (int i = 0; i < n; ++i) {
      p(i) = u(rng) * 0.05;
      q(i) = u(rng) * 0.05;
    }
    const VectorXd y = solve_voltages(sens, p, q, 1.01);
    const VectorXd yd = dense_voltages(m, p, q, 1.01);
    CHECK(((y - yd).cwiseAbs().array() / yd.cwiseAbs().array()).maxCoeff() <= 1e-12);
  }
}

TEST_CASE("voltage drop is linear in the injections") {
  auto m = load_feeder_file(kData + "/ieee37.json");
  const auto sens = compute_sensitivities(m);
  const auto op = nominal_operating_point(m);
  const auto inj = net_injections(m, op, {}, {});
  const VectorXd y1 = solve_voltages(sens, inj.p, inj.q, 1.0).array() - 1.0;
  const VectorXd y3 = solve_voltages(sens, 3.0 * inj.p, 3.0 * inj.q, 1.0).array() - 1.0;
  CHECK((y3 - 3.0 * y1).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("flows: a leaf load travels up unchanged") {
  auto m = load_feeder(feeder_json(4, {line_json(0, 1, 0.1, 0.2), line_json(1, 2, 0.1, 0.2), line_json(2, 3, 0.1, 0.2)}, "", "a"));
  VectorXd p = VectorXd::Zero(3), q = VectorXd::Zero(3), z = VectorXd::Zero(3);
  p(2) = -1.0;
  q(2) = -0.5;
  const auto f = line_flows(m, p, q, z, z);
  for (int i = 0; i < 3; ++i) {
    CHECK(f.p(i) == 1.0);
    CHECK(f.q(i) == 0.5);
  }
  const auto zero = line_flows(m, z, z, z, z);
  CHECK(zero.p.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flows satisfy the incidence relation and root conservation") {
  auto m = load_feeder_file(kData + "/ieee37.json");
  const auto op = nominal_operating_point(m);
  const auto inj = net_injections(m, op, {}, {});
  const auto lossless = compute_sensitivities(m);
  const auto L = estimate_loss_constants(m, lossless, op);
  const auto f = line_flows(m, inj.p, inj.q, L.l_p, L.l_q);
  const auto inc = build_incidence(m);
  CHECK((-inc.m * f.p - (-inj.p + L.l_p)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((-inc.m * f.q - (-inj.q + L.l_q)).cwiseAbs().maxCoeff() < 1e-12);
  // root line 799-701 per phase equals per-phase load plus losses
  const int root_child = m.graph.children[0][0];
  for (int ph = 0; ph < 3; ++ph) {
    double load = 0.0, loss = 0.0;
    for (int s = 0; s < m.slots.size(); ++s)
      if (m.slots.entries[s].second == ph) {
        load -= inj.p(s);
        loss += L.l_p(s);
      }
    CHECK(f.p(m.slots.at(root_child, ph)) == doctest::Approx(load + loss).epsilon(1e-12));
  }
}

TEST_CASE("reactive loss formula") {
  CHECK(reactive_loss(1, 0, 1, 0.1) == doctest::Approx(0.1));
  CHECK(reactive_loss(0, 0, 1, 0.1) == 0.0);
  CHECK(reactive_loss(0.6, 0.8, 1.0, 0.05) == doctest::Approx(0.05));
  CHECK_THROWS_AS(reactive_loss(1, 0, 0.0, 0.1), std::domain_error);
}

TEST_CASE("loss constants") {
  SUBCASE("zero load") {
    auto m = load_feeder_file(kData + "/four_node_1ph.json");
    auto op = nominal_operating_point(m, 0.0, 0.0);
    const auto L = estimate_loss_constants(m, compute_sensitivities(m), op);
    CHECK(L.l_p.cwiseAbs().maxCoeff() == 0.0);
    CHECK(L.l_q.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("two-node direct") {
    // line x = 0.1 pu, P = 1, Q = 0; r = 0 keeps y = 1 at the far end
    auto m = load_feeder(feeder_json(2, {line_json(0, 1, 0.0, 0.1)}, R"({"node":1,"phase":"a","p_kw":1000,"q_kvar":0})", "a"));
    const auto L = estimate_loss_constants(m, compute_sensitivities(m), nominal_operating_point(m));
    CHECK(L.l_q(0) == doctest::Approx(0.1).epsilon(1e-14));
  }
  SUBCASE("37-bus against one re-substitution") {
    auto m = load_feeder_file(kData + "/ieee37.json");
    const auto op = nominal_operating_point(m, 1.0, 0.0);
    const auto lossless = compute_sensitivities(m);
    const auto L = estimate_loss_constants(m, lossless, op);
    // Oracle: install the losses, re-solve flows and voltages, re-evaluate.
    const auto sens = with_losses(lossless, L);
    const auto inj = net_injections(m, op, {}, {});
    const auto f = line_flows(m, inj.p, inj.q, L.l_p, L.l_q);
    const VectorXd y = solve_voltages(sens, inj.p, inj.q, 1.0);
    VectorXd r, x;
    self_impedance(m, r, x);
    double again = 0.0;
    for (int s = 0; s < m.slots.size(); ++s) again += reactive_loss(f.p(s), f.q(s), y(s), x(s));
    CHECK(std::abs(L.l_q.sum() - again) <= 0.25 * again);
  }
}

TEST_CASE("net substation var") {
  auto m = load_feeder(feeder_json(2, {line_json(0, 1, 0.0, 0.0)}, R"({"node":1,"phase":"a","p_kw":0,"q_kvar":500})", "a"));
  const auto op = nominal_operating_point(m);
  const auto sens = compute_sensitivities(m);
  auto st = evaluate_dispatch(m, sens, op, {}, {}, 1.0);
  CHECK(net_substation_var(m, op, {}, st.y, st.flows) == doctest::Approx(500.0));

  auto m2 = load_feeder(R"({"base_kva":3000,"base_kv":1.7320508075688772,"substation":{"tap_step":0.0063,"max_taps":16},
    "nodes":[{"id":0,"phases":"a"},{"id":1,"phases":"a"}],
    "lines":[{"from":0,"to":1,"r_ohm":[[0,0,0],[0,0,0],[0,0,0]],"x_ohm":[[0,0,0],[0,0,0],[0,0,0]]}],
    "loads":[{"node":1,"phase":"a","p_kw":100,"q_kvar":300}],
    "ders":[{"id":0,"node":1,"phase":"a","p_rated_kw":100,"s_kva":400}]})");
  const auto op2 = nominal_operating_point(m2);
  const auto s2 = compute_sensitivities(m2);
  auto st2 = evaluate_dispatch(m2, s2, op2, {0.0}, {300.0}, 1.0);
  CHECK(net_substation_var(m2, op2, {300.0}, st2.y, st2.flows) == doctest::Approx(0.0));
}

TEST_CASE("37-bus base var demand near 2000 kvar") {
  auto m = load_feeder_file(kData + "/ieee37.json");
  const auto op = nominal_operating_point(m);
  const auto lossless = compute_sensitivities(m);
  const auto sens = with_losses(lossless, estimate_loss_constants(m, lossless, op));
  const auto st = evaluate_dispatch(m, sens, op, op.der_avail, {}, 1.0);
  CHECK(st.sub.q_kvar == doctest::Approx(2000.0).epsilon(0.15));
}
