// Serial reference vs OpenMP kernels on the 37-bus fixture. Prints one line
// per kernel with both timings, the speed-up and whether the results agree.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "dercap/capability/sweep.hpp"
#include "dercap/cli/io.hpp"
#include "dercap/feeder/linear.hpp"

using namespace dercap;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-28s serial %9.4f s  parallel %9.4f s  speed-up %5.2fx  %s\n", name, serial, parallel,
              serial / parallel, same ? "identical" : "MISMATCH");
}

bool same_curve(const capability::CapabilityCurve& a, const capability::CapabilityCurve& b) {
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    const auto &x = a.points[k], &y = b.points[k];
    if (x.lower.feasible != y.lower.feasible || x.upper.feasible != y.upper.feasible) return false;
    if (x.lower.feasible && x.lower.q_kvar != y.lower.q_kvar) return false;
    if (x.upper.feasible && x.upper.q_kvar != y.upper.q_kvar) return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs parallel kernels"};
  std::string feeder_path = std::string(DERCAP_DATA_DIR) + "/ieee37.json";
  std::string profiles = std::string(DERCAP_DATA_DIR) + "/profiles_day.csv";
  int reps = 3;
  app.add_option("--feeder", feeder_path)->capture_default_str();
  app.add_option("--profiles", profiles)->capture_default_str();
  app.add_option("--reps", reps, "Repetitions, best time kept")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const int threads = cli::apply_thread_limit();
  std::printf("threads: %d\n", threads);
  const auto model = feeder::load_feeder_file(feeder_path);

  feeder::FeederSensitivities ss, sp;
  const double t_ss = best_of(reps, [&] { ss = feeder::compute_sensitivities(model, feeder::Exec::serial); });
  const double t_sp = best_of(reps, [&] { sp = feeder::compute_sensitivities(model, feeder::Exec::parallel); });
  report("sensitivity columns", t_ss, t_sp, ss.r_eq == sp.r_eq && ss.x_eq == sp.x_eq);

  const auto op = feeder::nominal_operating_point(model);
  const auto grid = capability::default_curtailment_grid();
  capability::SweepOptions so;
  capability::CapabilityCurve cs, cp;
  so.exec = feeder::Exec::serial;
  const double t_cs = best_of(reps, [&] { cs = capability::curtailment_sweep(model, ss, op, grid, so); });
  so.exec = feeder::Exec::parallel;
  const double t_cp = best_of(reps, [&] { cp = capability::curtailment_sweep(model, ss, op, grid, so); });
  report("curtailment sweep (21 pts)", t_cs, t_cp, same_curve(cs, cp));

  const auto profile = capability::read_profiles_csv(profiles);
  const std::vector<double> day_grid{0.0, 0.2, 0.4};
  capability::DayAheadSurface ds, dp;
  so.exec = feeder::Exec::serial;
  const double t_ds = best_of(1, [&] { ds = capability::day_ahead_sweep(model, ss, profile, day_grid, so); });
  so.exec = feeder::Exec::parallel;
  const double t_dp = best_of(1, [&] { dp = capability::day_ahead_sweep(model, ss, profile, day_grid, so); });
  bool same = true;
  for (std::size_t h = 0; h < ds.hours.size(); ++h) same = same && same_curve(ds.hours[h], dp.hours[h]);
  report("day-ahead (24 h x 3 pts)", t_ds, t_dp, same);
  return 0;
}
