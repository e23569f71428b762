// hlp: run hybrid Lie-Poisson experiments from JSON configs.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hlp/app/run.hpp"

#ifndef HLP_VERSION
#define HLP_VERSION "0.0.0"
#endif

int main(int argc, char ** argv)
{
  CLI::App app{"Hybrid Lie-Poisson reduction on SE(2): simulations, solver and figures"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;

  auto * run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output_dir in the config)");
  run->add_option("--seed", seed, "Seed echoed into report.json");

  auto * validate = app.add_subcommand("validate", "Check a config file without running it");
  validate->add_option("config", config_path, "Experiment config (JSON)")->required();

  app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hlp::app::kExitValidation;
  }

  hlp::app::configure_logging();

  if (*run) {
    std::optional<std::filesystem::path> out;
    if (!out_dir.empty()) { out = out_dir; }
    return hlp::app::run_command(config_path, out, seed);
  }
  if (*validate) { return hlp::app::validate_command(config_path); }
  std::cout << "hlp " << HLP_VERSION << "\n";
  return 0;
}
