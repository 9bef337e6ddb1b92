#include "dercap/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "dercap/agg/device.hpp"
#include "dercap/capability/sweep.hpp"
#include "dercap/cli/io.hpp"
#include "dercap/feeder/linear.hpp"
#include "dercap/feeder/model.hpp"
#include "dercap/tdsim/cosim.hpp"

namespace dercap::cli {

namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string() : item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size()) throw std::invalid_argument("not a number in list: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty value list");
  return out;
}

namespace {

std::ofstream open_out(const fs::path& path, RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  m.outputs.push_back(path.filename().string());
  return out;
}

// Creates the output directory, runs the body and always leaves a manifest
// behind, also when the body throws half-way.
int run_command(RunManifest& m, const std::string& out_dir, std::ostream& log, const std::function<int()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  m.threads = apply_thread_limit();
  std::error_code ec;
  if (out_dir.empty()) {
    log << m.command << ": --out is required\n";
    return kExitInputError;
  }
  fs::create_directories(out_dir, ec);
  if (ec) {
    log << m.command << ": cannot create " << out_dir << ": " << ec.message() << '\n';
    return kExitInputError;
  }
  try {
    m.exit_code = body();
  } catch (const std::exception& e) {
    m.exit_code = kExitInputError;
    m.error = e.what();
    log << m.command << ": " << e.what() << '\n';
  }
  m.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    write_manifest(out_dir, m);
  } catch (const std::exception& e) {
    log << m.command << ": " << e.what() << '\n';
    if (m.exit_code == kExitOk) m.exit_code = kExitInputError;
  }
  return m.exit_code;
}

std::vector<double> parse_grid(const std::string& text) {
  if (text == "default") return capability::default_curtailment_grid();
  auto g = parse_values(text);
  capability::check_curtailment_grid(g);
  return g;
}

int tally(RunManifest& m, const std::vector<capability::CapabilityPoint>& pts) {
  bool all = true;
  for (const auto& p : pts) {
    m.count(p.lower);
    m.count(p.upper);
    all = all && p.feasible();
    if (p.has_worst_case) {
      m.count(p.worst.lower);
      m.count(p.worst.upper);
      all = all && p.worst.feasible_lower && p.worst.feasible_upper;
    }
  }
  return all ? kExitOk : kExitInfeasible;
}

void write_curve(const fs::path& path, const capability::CapabilityCurve& curve, const feeder::FeederModel& model,
                 RunManifest& m) {
  std::vector<CapabilityRow> rows;
  for (const auto& p : curve.points) rows.push_back(capability_row(p, model.substation));
  auto out = open_out(path, m);
  write_capability_csv(out, rows);
}

}  // namespace

int cmd_capability(const CapabilityArgs& args, std::ostream& log) {
  RunManifest m;
  m.command = "capability";
  m.parameters = {{"vtm", args.vtm},       {"curtailment_grid", args.curtailment_grid},
                  {"worst_case", args.worst_case}, {"vtm_min", args.vtm_min},
                  {"vtm_max", args.vtm_max}, {"load", args.load},
                  {"solar", args.solar}};
  return run_command(m, args.out, log, [&] {
    m.add_input(args.feeder);
    const auto grid = parse_grid(args.curtailment_grid);
    if (args.worst_case && !(args.vtm_min < args.vtm_max))
      throw std::invalid_argument("--vtm-min must be below --vtm-max");
    const auto model = feeder::load_feeder_file(args.feeder);
    const auto lossless = feeder::compute_sensitivities(model);
    const auto op = feeder::nominal_operating_point(model, args.load, args.solar);
    capability::SweepOptions so;
    so.v_tm = args.vtm;
    so.worst_case = args.worst_case;
    so.v_tm_min = args.vtm_min;
    so.v_tm_max = args.vtm_max;
    const auto curve = capability::curtailment_sweep(model, lossless, op, grid, so);
    write_curve(fs::path(args.out) / "capability.csv", curve, model, m);
    return tally(m, curve.points);
  });
}

int cmd_dayahead(const DayAheadArgs& args, std::ostream& log) {
  RunManifest m;
  m.command = "dayahead";
  m.parameters = {{"curtailment", args.curtailment}, {"ieee1547", args.ieee1547}, {"vtm", args.vtm}};
  return run_command(m, args.out, log, [&] {
    m.add_input(args.feeder);
    m.add_input(args.profiles);
    if (!args.ieee1547.empty() && args.ieee1547 != "oversize" && args.ieee1547 != "curtail")
      throw std::invalid_argument("--ieee1547 must be oversize or curtail");
    if (!(args.curtailment >= 0.0 && args.curtailment <= 1.0))
      throw std::invalid_argument("--curtailment must lie in [0, 1]");
    const auto profile = capability::read_profiles_csv(args.profiles);
    auto model = feeder::load_feeder_file(args.feeder);
    capability::FloorRule floor;
    if (args.ieee1547 == "oversize") model = capability::with_oversize(model, capability::kIeee1547Oversize);
    if (args.ieee1547 == "curtail") {
      model = capability::with_oversize(model, 1.0);
      floor = capability::ieee1547_curtailment_floor;
    }

    // Every default grid point below the requested level, then the level itself.
    std::vector<double> grid;
    for (double c : capability::default_curtailment_grid())
      if (c < args.curtailment - 1e-12) grid.push_back(c);
    grid.push_back(args.curtailment);

    capability::SweepOptions so;
    so.v_tm = args.vtm;
    const auto lossless = feeder::compute_sensitivities(model);
    const auto surface = capability::day_ahead_sweep(model, lossless, profile, grid, so, floor);

    auto index = open_out(fs::path(args.out) / "index.csv", m);
    index << "hour,load_mult,solar_mult,file,curtailment,q_lower_kvar,q_upper_kvar,q_base_kvar,a,b,min_headroom\n";
    int code = kExitOk;
    for (std::size_t h = 0; h < surface.hours.size(); ++h) {
      const auto& hp = profile[h];
      char name[32];
      std::snprintf(name, sizeof name, "hour_%02d.csv", hp.hour);
      write_curve(fs::path(args.out) / name, surface.hours[h], model, m);
      code = std::max(code, tally(m, surface.hours[h].points));

      const auto op = feeder::nominal_operating_point(model, hp.load_mult, hp.solar_mult);
      const auto cur = floor ? floor(model, op) : std::vector<double>{};
      const auto row = capability_row(surface.hours[h].points.back(), model.substation);
      index << hp.hour << ',' << format_number(hp.load_mult) << ',' << format_number(hp.solar_mult) << ',' << name
            << ',' << format_number(row.curtailment) << ',' << format_number(row.q_lower) << ','
            << format_number(row.q_upper) << ',' << format_number(row.q_base) << ',' << format_number(row.a) << ','
            << format_number(row.b) << ',' << format_number(capability::min_headroom_ratio(model, op, cur)) << '\n';
    }
    return code;
  });
}

int cmd_sweep(const SweepArgs& args, std::ostream& log) {
  RunManifest m;
  m.command = "sweep";
  m.parameters = {{"vary", args.vary},   {"values", args.values}, {"curtailment", args.curtailment},
                  {"load", args.load},   {"solar", args.solar},   {"vtm", args.vtm}};
  return run_command(m, args.out, log, [&] {
    m.add_input(args.feeder);
    const auto& vary = args.vary;
    if (vary != "penetration" && vary != "oversize" && vary != "placement" && vary != "vtm")
      throw std::invalid_argument("--vary must be penetration, oversize, placement or vtm, not '" + vary + "'");
    const auto labels = split_list(args.values);
    const std::vector<double> numbers = vary == "placement" ? std::vector<double>{} : parse_values(args.values);
    const std::size_t n = labels.size();
    const auto base = feeder::load_feeder_file(args.feeder);

    std::vector<capability::CapabilityPoint> pts(n);
    for (std::size_t k = 0; k < n; ++k) {
      auto model = base;
      capability::SweepOptions so;
      so.v_tm = args.vtm;
      if (vary == "penetration") model = capability::with_penetration(base, numbers[k] / 100.0);
      if (vary == "oversize") model = capability::with_oversize(base, numbers[k]);
      if (vary == "placement") model = capability::with_placement(base, labels[k]);
      if (vary == "vtm") so.v_tm = numbers[k];
      const auto lossless = feeder::compute_sensitivities(model);
      const auto op = feeder::nominal_operating_point(model, args.load, args.solar);
      pts[k] = capability::curtailment_sweep(model, lossless, op, {args.curtailment}, so).points[0];
    }

    auto out = open_out(fs::path(args.out) / "sweep.csv", m);
    out << "vary,value,curtailment,q_lower_kvar,q_upper_kvar,q_base_kvar,a,b,feasible_lower,feasible_upper\n";
    for (std::size_t k = 0; k < n; ++k) {
      const auto r = capability_row(pts[k], base.substation);
      out << vary << ',' << (vary == "placement" ? labels[k] : format_number(numbers[k])) << ','
          << format_number(r.curtailment) << ',' << format_number(r.q_lower) << ',' << format_number(r.q_upper) << ','
          << format_number(r.q_base) << ',' << format_number(r.a) << ',' << format_number(r.b) << ','
          << (r.feasible_lower ? 1 : 0) << ',' << (r.feasible_upper ? 1 : 0) << '\n';
    }
    return tally(m, pts);
  });
}

int cmd_cosim(const CosimArgs& args, std::ostream& log) {
  RunManifest m;
  m.command = "cosim";
  return run_command(m, args.out, log, [&] {
    m.add_input(args.transmission);
    m.add_input(args.scenario);
    const auto net = tdsim::load_transmission_file(args.transmission);
    const auto sc = tdsim::load_scenario_file(args.scenario);
    for (const auto& site : sc.boundaries) m.add_input(site.feeder_file);
    m.parameters = {{"scenario", sc.name}, {"horizon", sc.horizon}, {"load_mult", sc.load_mult},
                    {"solar_mult", sc.solar_mult}, {"redispatch", sc.redispatch}};
    const auto prep = tdsim::prepare_scenario(net, sc);
    const auto res = tdsim::cosimulate(prep.net, prep.boundaries, sc.events, sc.horizon);

    const auto table = tdsim::cosim_series(res);
    for (std::size_t s = 0; s < table.names.size(); ++s) {
      auto out = open_out(fs::path(args.out) / (table.names[s] + ".csv"), m);
      out << "t,series,value\n";
      for (const auto& [t, v] : table.rows[s]) out << t << ',' << table.names[s] << ',' << format_number(v) << '\n';
    }
    auto sup = open_out(fs::path(args.out) / "support.csv", m);
    sup << "t,bus,lambda,accepted,requested_kvar,achieved_kvar,nearest_kvar,q_lower_kvar,q_upper_kvar,curtailment\n";
    for (const auto& s : res.support) {
      const auto& r = s.result;
      sup << s.t << ',' << s.bus << ',' << format_number(s.lambda) << ',' << (r.accepted ? 1 : 0) << ','
          << format_number(r.requested_kvar) << ',' << format_number(r.achieved_kvar) << ','
          << format_number(r.nearest_kvar) << ',' << format_number(r.q_lower_kvar) << ','
          << format_number(r.q_upper_kvar) << ',' << format_number(r.curtailment) << '\n';
      m.count(r.accepted ? "support_accepted" : "support_rejected");
    }
    const int steps = static_cast<int>(res.steps.size());
    m.count("steps_converged", steps - res.diverged_steps);
    m.count("steps_diverged", res.diverged_steps);
    if (res.diverged_steps > 0) log << "cosim: " << res.diverged_steps << " of " << steps << " steps diverged\n";
    return steps > 0 && res.diverged_steps == steps ? kExitInfeasible : kExitOk;
  });
}

int cmd_envelope(const EnvelopeArgs& args, std::ostream& log) {
  RunManifest m;
  m.command = "envelope";
  m.parameters = {{"samples", args.samples}};
  return run_command(m, args.out, log, [&] {
    m.add_input(args.feeder);
    if (args.samples < 2) throw std::invalid_argument("--samples must be at least 2");
    const auto model = feeder::load_feeder_file(args.feeder);
    const auto env = agg::aggregate_envelope(model.ders, args.samples);
    auto out = open_out(fs::path(args.out) / "envelope.csv", m);
    out << "p_kw,q_min_kvar,q_max_kvar\n";
    for (const auto& s : env)
      out << format_number(s.p_sub) << ',' << format_number(s.q_min) << ',' << format_number(s.q_max) << '\n';
    m.count("samples", static_cast<int>(env.size()));
    return kExitOk;
  });
}

}  // namespace dercap::cli
