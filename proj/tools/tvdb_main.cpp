// Command-line entry point; all logic lives in the headers so tests can
// drive the same code in-process.
#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "tvdb/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tvdb: singular-diffusion laboratory with dynamic boundary conditions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool have_seed = false;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "config file path");
    if (config_required) opt->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed, "seed (overrides config)")
        ->each([&](const std::string&) { have_seed = true; });
  };

  add_common(app.add_subcommand("solve", "run one flow"), true);
  add_common(app.add_subcommand("mosco", "energy/trajectory convergence sweeps"), true);
  add_common(app.add_subcommand("compare", "comparison-principle check"), true);
  add_common(app.add_subcommand("lattice", "lattice inequality and T-monotonicity sweeps"), true);
  add_common(app.add_subcommand("selftest", "condensed property checks"), false);

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  return tvdb::cli::run_command(
      command, config_path,
      out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir),
      have_seed ? std::optional<std::uint64_t>(seed) : std::nullopt,
      std::cout);
}
