#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlp/app/config.hpp"

namespace hlp::app {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitNumerical = 2 };

struct Artifact
{
  std::string filename;
  std::string content;
};

struct RunResult
{
  std::vector<Artifact> files;  ///< CSVs and plot.svg
  nlohmann::json report;        ///< written as report.json
};

/// Run the configured experiment in memory. Throws ConfigError or the core's numerical errors.
RunResult run_experiment(const ExperimentConfig & config, std::uint64_t seed = 0);

/// Create `dir` if needed and write every artifact plus report.json.
void write_artifacts(const RunResult & result, const std::filesystem::path & dir);

/// File name of a branch leaf: "trajectory.csv" for a single leaf, else "trajectory_pm.csv" for path "+-".
std::string leaf_filename(const std::string & stem, const std::string & branch_path, bool single_leaf);

/// Set the diagnostic verbosity from HLP_LOG (quiet, info, debug).
void configure_logging();

int run_command(const std::filesystem::path & config_path, const std::optional<std::filesystem::path> & out_dir,
                std::uint64_t seed);
int validate_command(const std::filesystem::path & config_path);

}  // namespace hlp::app
