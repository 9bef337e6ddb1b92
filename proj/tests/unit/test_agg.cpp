#include <doctest.h>

#include <cmath>
#include <random>

#include "dercap/agg/device.hpp"

using namespace dercap::agg;

namespace {

std::vector<DerUnit> units(std::vector<double> s, std::vector<double> avail = {}) {
  std::vector<DerUnit> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    DerUnit u;
    u.id = static_cast<int>(i);
    u.s_rating = s[i];
    u.p_rated = avail.empty() ? s[i] : avail[i];
    u.p_avail = u.p_rated;
    out.push_back(u);
  }
  return out;
}

}  // namespace

TEST_CASE("device bounds on the circle") {
  DerUnit u{0, 1, 0, 10.0, 10.0, 10.0};
  CHECK(device_q_bounds(u, 10.0).q_max == doctest::Approx(0.0));
  CHECK(device_q_bounds(u, 0.0).q_min == doctest::Approx(-10.0));
  DerUnit v{0, 1, 0, 5.0, 5.0, 5.0};
  CHECK(device_q_bounds(v, 3.0).q_max == doctest::Approx(4.0));
  CHECK(device_q_bounds(v, 3.0).q_min == doctest::Approx(-4.0));
  CHECK_THROWS_AS(device_q_bounds(v, 6.0), AllocationError);
}

TEST_CASE("proportional allocation") {
  auto a = proportional_allocation(units({6, 4}), 5.0);
  CHECK(a.p[0] == doctest::Approx(3.0));
  CHECK(a.p[1] == doctest::Approx(2.0));
  CHECK_FALSE(a.saturated);
  auto b = proportional_allocation(units({6, 4}, {2, 4}), 5.0);
  CHECK(b.p[0] == doctest::Approx(2.0));
  CHECK(b.p[1] == doctest::Approx(3.0));
  CHECK(b.saturated);
  auto c = proportional_allocation(units({6, 4}), 0.0);
  CHECK(c.p[0] == 0.0);
  CHECK(c.p[1] == 0.0);
  CHECK_THROWS_AS(proportional_allocation(units({6, 4}, {2, 4}), 6.5), AllocationError);
}

TEST_CASE("envelopes") {
  auto e = analytic_envelope(units({50, 50}), 60.0);
  CHECK(e.q_max == doctest::Approx(80.0));
  CHECK(analytic_envelope(units({50, 50}), 0.0).q_max == doctest::Approx(100.0));
  CHECK(analytic_envelope(units({50, 50}), 100.0).q_max == doctest::Approx(0.0));

  auto n0 = numeric_envelope(units({5, 5, 5}), 0.0);
  CHECK(n0.q_min == doctest::Approx(-15.0).epsilon(1e-7));
  CHECK(n0.q_max == doctest::Approx(15.0).epsilon(1e-7));
  auto n1 = numeric_envelope(units({6, 4}), 5.0);
  CHECK(n1.q_max == doctest::Approx(std::sqrt(75.0)).epsilon(1e-7));
  auto n2 = numeric_envelope(units({6, 4}, {2, 4}), 5.0);
  CHECK(n2.q_max == doctest::Approx(std::sqrt(32.0) + std::sqrt(7.0)).epsilon(1e-7));
  auto fallback = analytic_envelope(units({6, 4}, {2, 4}), 5.0);
  CHECK(fallback.numeric_fallback);
}

TEST_CASE("saturated optimum against a fine grid") {
  // S = [6, 4], p_avail = [2, 4], p_sub = 5: search p_1 on a 0.001 grid
  double best = -1.0;
  for (int k = 0; k <= 2000; ++k) {
    const double p1 = k * 0.001;
    const double p2 = 5.0 - p1;
    if (p2 < 0.0 || p2 > 4.0) continue;
    best = std::max(best, std::sqrt(36.0 - p1 * p1) + std::sqrt(16.0 - p2 * p2));
  }
  auto n = numeric_envelope(units({6, 4}, {2, 4}), 5.0);
  CHECK(n.q_max >= best - 1e-7);
  CHECK(n.q_max - best < 1e-3);
}

TEST_CASE("envelope is symmetric and shrinks with p") {
  auto env = aggregate_envelope(units({3, 5, 7}, {2, 5, 6}), 21);
  for (std::size_t k = 0; k < env.size(); ++k) {
    CHECK(env[k].q_min == doctest::Approx(-env[k].q_max).epsilon(1e-7));
    if (k > 0) CHECK(env[k].q_max <= env[k - 1].q_max + 1e-9);
  }
}

TEST_CASE("random alternative allocations never beat the returned bound") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto us = units({4, 7, 2, 9}, {3, 7, 1, 5});
  const double p_sub = 10.0;
  const double qmax = analytic_envelope(us, p_sub).q_max;
  for (int t = 0; t < 5000; ++t) {
    std::vector<double> w(us.size());
    double tot = 0.0;
    for (auto& x : w) tot += (x = u(rng));
    bool ok = true;
    double q = 0.0;
    for (std::size_t i = 0; i < us.size(); ++i) {
      const double p = w[i] / tot * p_sub;
      if (p > us[i].p_avail) ok = false;
      else q += std::sqrt(us[i].s_rating * us[i].s_rating - p * p);
    }
    if (ok) CHECK(q <= qmax + 1e-7);
  }
}
