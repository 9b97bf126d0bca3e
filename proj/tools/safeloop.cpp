#include "safeloop/cli/commands.hpp"
#include "safeloop/cli/config.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace cli = safeloop::cli;

int main(int argc, char** argv) {
  CLI::App app{"Safety certification and secondary-controller synthesis for attacked LTI loops", "safeloop"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "safeloop 1.0.0");

  cli::CommandOptions opts;
  std::string out = ".";
  std::string config, grid, controller, axes, dump;
  std::vector<std::string> reports;
  std::uint64_t seed = 0;

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"verify", "Certify safety with the primary controller alone"},
      {"assess", "Find the smallest-trace attack shape the primary loop tolerates"},
      {"synthesize", "Design and certify a secondary controller"},
      {"simulate", "Simulate the loop under admissible attacks and check the certificate"},
      {"plot", "Draw the safe set and invariant ellipses from reports"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--config", config, "Problem file (JSON)")->required()->check(CLI::ExistingFile);
    s->add_option("--out", out, "Output directory")->capture_default_str();
    s->add_option("--grid", grid, "Scalar grid file (JSON with alphas, betas, deltas)")->check(CLI::ExistingFile);
    s->add_option("--seed", seed, "Random seed for simulations");
    s->add_flag("--serial", opts.serial, "Solve grid points and simulations on one thread");
    subs.push_back(s);
  }
  subs[2]->add_option("--dump-sdp", dump, "Write the first grid point's SDP to this file");
  subs[3]->add_option("--controller", controller, "Controller file written by synthesize")->check(CLI::ExistingFile);
  subs[4]->add_option("--report", reports, "Report file(s) to draw; repeatable")->check(CLI::ExistingFile);
  subs[4]->add_option("--axes", axes, "Coordinate pair to project onto, e.g. 1,2");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  opts.config = config;
  opts.out = out;
  if (!grid.empty()) opts.grid = grid;
  if (!controller.empty()) opts.controller = controller;
  if (!dump.empty()) opts.dump_sdp = dump;
  for (const auto& r : reports) opts.reports.emplace_back(r);
  for (CLI::App* s : subs)
    if (s->parsed() && s->count("--seed")) opts.seed = seed;
  if (!axes.empty()) {
    try {
      opts.axes = cli::parse_axes(axes);
    } catch (const cli::ConfigError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return cli::kExitUsage;
    }
  }
  for (CLI::App* s : subs)
    if (s->parsed()) return cli::run_command(s->get_name(), opts, std::cout, std::cerr);
  return cli::kExitUsage;
}
