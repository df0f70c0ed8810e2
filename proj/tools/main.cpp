// pwsync: thresholds, simulations, sweeps and graph inspection from one
// INI-style experiment config.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace pwsync::cli;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  RunOptions run;
};

void add_common(CLI::App* sub, Common& c, bool with_workers) {
  sub->add_option("--config,-c", c.config, "experiment config file")->check(CLI::ExistingFile);
  sub->add_option("--out,-o", c.run.out_dir, "output directory")->capture_default_str();
  sub->add_option("--set", c.overrides, "override a key: section.key=value (repeatable)");
  sub->add_option("--seed", c.run.seed, "seed for random initial conditions (overrides ics.seed / sweep.seed)");
  if (with_workers)
    sub->add_option("--workers,-j", c.run.workers, "worker threads (0 = all cores)")->capture_default_str();
  sub->footer(config_reference());
}

Config load(const Common& c) {
  Config cfg = c.config.empty() ? Config{} : Config::load(c.config);
  for (const auto& o : c.overrides) cfg.set(o);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synchronization toolkit for networks of piecewise-smooth systems"};
  app.require_subcommand(1);

  Common common;
  auto* thresholds = app.add_subcommand("thresholds", "coupling-gain thresholds c*, c_d* for [certify]");
  auto* sim = app.add_subcommand("simulate", "integrate the network; writes simulation.csv");
  auto* sweep = app.add_subcommand("sweep", "(c, c_d) grid sweep; writes sweep.csv and sweep_manifest.txt");
  auto* graph = app.add_subcommand("graph", "graph size, lambda_2 and spectrum; writes graph.txt");
  add_common(thresholds, common, false);
  add_common(sim, common, false);
  add_common(sweep, common, true);
  add_common(graph, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  return guarded(
      [&] {
        const Config cfg = load(common);
        if (thresholds->parsed()) return cmd_thresholds(cfg, common.run, std::cout);
        if (sim->parsed()) return cmd_simulate(cfg, common.run, std::cout);
        if (sweep->parsed()) return cmd_sweep(cfg, common.run, std::cout);
        return cmd_graph(cfg, common.run, std::cout, std::cerr);
      },
      std::cerr);
}
