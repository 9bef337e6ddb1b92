#include <CLI11.hpp>

#include <iostream>

#include "dercap/cli/commands.hpp"
#include "dercap/cli/io.hpp"

using namespace dercap::cli;

int main(int argc, char** argv) {
  CLI::App app{"Reactive power capability of DER-rich feeders"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CapabilityArgs cap;
  auto* c = app.add_subcommand("capability", "Capability interval over a curtailment grid");
  c->add_option("--feeder", cap.feeder, "Feeder JSON")->required();
  c->add_option("--vtm", cap.vtm, "Grid-side voltage, pu")->capture_default_str();
  c->add_option("--curtailment-grid", cap.curtailment_grid, "'default' or comma-separated fractions")
      ->capture_default_str();
  c->add_option("--out", cap.out, "Output directory")->required();
  c->add_flag("--worst-case", cap.worst_case, "Also re-solve at the grid voltage extremes");
  c->add_option("--vtm-min", cap.vtm_min)->capture_default_str();
  c->add_option("--vtm-max", cap.vtm_max)->capture_default_str();
  c->add_option("--load", cap.load, "Load multiplier")->capture_default_str();
  c->add_option("--solar", cap.solar, "Solar availability multiplier")->capture_default_str();

  DayAheadArgs day;
  auto* d = app.add_subcommand("dayahead", "Hourly capability curves from a 24-row profile");
  d->add_option("--feeder", day.feeder)->required();
  d->add_option("--profiles", day.profiles, "CSV: hour,load_mult,solar_mult")->required();
  d->add_option("--curtailment", day.curtailment, "Highest curtailment level")->capture_default_str();
  d->add_option("--ieee1547", day.ieee1547, "Var headroom by oversizing or by curtailment")
      ->check(CLI::IsMember({"oversize", "curtail"}));
  d->add_option("--vtm", day.vtm)->capture_default_str();
  d->add_option("--out", day.out)->required();

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "One capability point per scenario value");
  s->add_option("--feeder", sw.feeder)->required();
  s->add_option("--vary", sw.vary, "penetration | oversize | placement | vtm")->required();
  s->add_option("--values", sw.values, "Comma-separated; penetration in percent, placement as labels")->required();
  s->add_option("--curtailment", sw.curtailment)->capture_default_str();
  s->add_option("--load", sw.load)->capture_default_str();
  s->add_option("--solar", sw.solar)->capture_default_str();
  s->add_option("--vtm", sw.vtm)->capture_default_str();
  s->add_option("--out", sw.out)->required();

  CosimArgs co;
  auto* q = app.add_subcommand("cosim", "Quasi-static transmission-distribution run");
  q->add_option("--transmission", co.transmission)->required();
  q->add_option("--scenario", co.scenario)->required();
  q->add_option("--out", co.out)->required();

  EnvelopeArgs env;
  auto* e = app.add_subcommand("envelope", "Aggregate P-Q envelope of a feeder's inverters, network ignored");
  e->add_option("--feeder", env.feeder)->required();
  e->add_option("--samples", env.samples)->capture_default_str();
  e->add_option("--out", env.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kExitOk : kExitInputError;
  }

  if (*c) return cmd_capability(cap, std::cerr);
  if (*d) return cmd_dayahead(day, std::cerr);
  if (*s) return cmd_sweep(sw, std::cerr);
  if (*q) return cmd_cosim(co, std::cerr);
  return cmd_envelope(env, std::cerr);
}
