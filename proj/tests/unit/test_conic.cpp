#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "dercap/conic/problem.hpp"
#include "dercap/conic/solver.hpp"

using namespace dercap::conic;

namespace {

void require_optimal(const ConicProblem& p, const ConicSolution& s) {
  REQUIRE(s.status == Status::optimal);
  const auto r = check_kkt(p, s);
  CHECK(r.primal <= 1e-8);
  CHECK(r.dual <= 1e-8);
  CHECK(r.gap <= 1e-8);
}

}  // namespace

TEST_CASE("single bound") {
  ConicProblem p;
  p.add_variable("x", 3.0, kInf, 1.0);
  auto s = solve(p);
  require_optimal(p, s);
  CHECK(s.x[0] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("bound kept when presolve is off") {
  ConicProblem p;
  int x = p.add_variable("x", -kInf, kInf, 1.0);
  p.add_range(Affine::of(x), 3.0, kInf);
  SolverOptions o;
  o.presolve = false;
  auto s = solve(p, o);
  require_optimal(p, s);
  CHECK(s.x[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(s.duals.range_lower[0] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("circle section") {
  ConicProblem p;
  int t = p.add_variable("t", 5.0, 5.0);
  int pv = p.add_variable("p", 4.0, 4.0);
  int q = p.add_variable("q", -kInf, kInf, 1.0);
  p.add_cone(t, {pv, q});
  auto s = solve(p);
  require_optimal(p, s);
  CHECK(s.x[q] == doctest::Approx(-3.0).epsilon(1e-8));
}

TEST_CASE("circle section with a live radius variable") {
  ConicProblem p;
  int t = p.add_variable("t");
  int pv = p.add_variable("p");
  int q = p.add_variable("q", -kInf, kInf, 1.0);
  p.add_equality({{t, 1.0}}, 5.0);
  p.add_equality({{pv, 1.0}}, 4.0);
  p.add_cone(t, {pv, q});
  SolverOptions o;
  o.presolve = false;
  auto s = solve(p, o);
  require_optimal(p, s);
  CHECK(s.x[q] == doctest::Approx(-3.0).epsilon(1e-8));
}

TEST_CASE("separable cones") {
  ConicProblem p;
  int q1 = p.add_variable("q1", -kInf, kInf, 1.0);
  int q2 = p.add_variable("q2", -kInf, kInf, 1.0);
  p.add_cone(Cone{Affine::value(5.0), {Affine::value(3.0), Affine::of(q1)}});
  p.add_cone(Cone{Affine::value(2.0), {Affine::value(0.0), Affine::of(q2)}});
  auto s = solve(p);
  require_optimal(p, s);
  CHECK(s.objective == doctest::Approx(-6.0).epsilon(1e-8));
}

TEST_CASE("contradictory equality and box") {
  ConicProblem p;
  int x = p.add_variable("x", -kInf, 0.0);
  p.add_equality({{x, 1.0}}, 1.0);
  auto s = solve(p);
  REQUIRE(s.status == Status::infeasible);
  CHECK(check_certificate(p, s.certificate).valid);
}

TEST_CASE("infeasible cone intersection carries a certificate") {
  // ||(x, y)|| <= 1 with x + y >= 2 has no solution.
  ConicProblem p;
  int x = p.add_variable("x");
  int y = p.add_variable("y");
  p.add_cone(Cone{Affine::value(1.0), {Affine::of(x), Affine::of(y)}});
  p.add_range(Affine::of(x).add(y, 1.0), 2.0, kInf);
  auto s = solve(p);
  REQUIRE(s.status == Status::infeasible);
  CHECK(check_certificate(p, s.certificate).valid);
}

TEST_CASE("unbounded ray") {
  ConicProblem p;
  int x = p.add_variable("x", -kInf, kInf, 1.0);
  int y = p.add_variable("y", 0.0, kInf);
  p.add_range(Affine::of(x).add(y, -1.0), -kInf, 0.0);
  auto s = solve(p);
  CHECK(s.status == Status::unbounded);
  REQUIRE(s.ray.size() == 2);
  CHECK(s.ray[0] < 0.0);
}

TEST_CASE("index cones are validated") {
  ConicProblem p;
  int t = p.add_variable("t");
  p.add_cone(t, {t});
  CHECK_THROWS_AS(p.validate(), DimensionError);
  ConicProblem q;
  q.add_variable("a");
  q.add_equality({{3, 1.0}}, 0.0);
  CHECK_THROWS_AS(solve(q), DimensionError);
}

TEST_CASE("kkt check flags a perturbed point") {
  ConicProblem p;
  int x = p.add_variable("x", 3.0, kInf, 1.0);
  int y = p.add_variable("y", -kInf, kInf, 1.0);
  p.add_cone(Cone{Affine::value(2.0), {Affine::of(y)}});
  auto s = solve(p);
  require_optimal(p, s);
  s.x[x] -= 1e-3;
  CHECK(check_kkt(p, s).primal >= 1e-4);
}

TEST_CASE("hand-built optimum of the circle example") {
  ConicProblem p;
  int q = p.add_variable("q", -kInf, kInf, 1.0);
  p.add_cone(Cone{Affine::value(5.0), {Affine::value(4.0), Affine::of(q)}});
  ConicSolution s;
  s.x = {-3.0};
  s.duals.lower = {0.0};
  s.duals.upper = {0.0};
  // stationarity: 1 - z_q = 0, z on the cone boundary aligned with (4, -3)
  s.duals.cones = {{5.0 / 3.0, -4.0 / 3.0, 1.0}};
  const auto r = check_kkt(p, s);
  CHECK(r.max() <= 1e-14);
}

TEST_CASE("deterministic across calls") {
  ConicProblem p;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<int> v;
  for (int i = 0; i < 6; ++i) v.push_back(p.add_variable("v", -2.0, 2.0, u(rng)));
  for (int k = 0; k < 3; ++k) {
    Cone c{Affine::value(1.5 + k), {}};
    for (int i = 0; i < 3; ++i) c.u.push_back(Affine::of(v[(k + i) % 6], u(rng)).shift(u(rng)));
    p.add_cone(c);
  }
  p.add_equality({{v[0], 1.0}, {v[1], 1.0}}, 0.3);
  auto a = solve(p);
  auto b = solve(p);
  REQUIRE(a.status == Status::optimal);
  CHECK(a.objective == b.objective);
  CHECK(a.x == b.x);
}

TEST_CASE("random small problems never lose to sampling") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    ConicProblem p;
    const int n = 2 + trial % 3;
    std::vector<int> v;
    for (int i = 0; i < n; ++i) v.push_back(p.add_variable("v", -1.0, 1.0, u(rng)));
    std::vector<Cone> cones;
    for (int k = 0; k < 2; ++k) {
      Cone c{Affine::value(1.0 + std::abs(u(rng))), {}};
      for (int i = 0; i < n; ++i) c.u.push_back(Affine::of(v[i], u(rng)));
      p.add_cone(c);
    }
    auto s = solve(p);
    REQUIRE(s.status == Status::optimal);
    CHECK(check_kkt(p, s).max() <= 1e-8);
    std::uniform_real_distribution<double> box(-1.0, 1.0);
    for (int k = 0; k < 20000; ++k) {
      std::vector<double> x(n);
      for (auto& xi : x) xi = box(rng);
      bool ok = true;
      for (const auto& c : p.cones()) {
        double nn = 0.0;
        for (const auto& e : c.u) nn += std::pow(evaluate(e, x), 2);
        if (std::sqrt(nn) > evaluate(c.t, x)) ok = false;
      }
      if (ok) CHECK(p.objective(x) >= s.objective - 1e-7);
    }
  }
}

TEST_CASE("dump header") {
  ConicProblem p;
  int x = p.add_variable("x", 0.0, 1.0, 2.0);
  p.add_equality({{x, 1.0}}, 0.5);
  std::ostringstream os;
  write_dump(os, p);
  CHECK(os.str().rfind("CONIC-DUMP v1\n", 0) == 0);
  CHECK(os.str().find("eq 0.5 0:1") != std::string::npos);
}
