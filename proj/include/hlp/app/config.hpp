#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlp/hybrid.hpp"
#include "hlp/se2.hpp"
#include "hlp/se2_system.hpp"
#include "hlp/solver.hpp"

namespace hlp::app {

/// Invalid or incomplete experiment configuration; the message names the key.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class Mode { simulate_plant, simulate_reduced, simulate_reconstructed, solve, fig2, fig3 };

std::string to_string(Mode m);

/**
 * Branch policy as written in a config file.
 *
 *   "plus" | "minus"   fixed choice at every event
 *   "+-+"              explicit sequence, then plus
 *   "enumerate"        fork at every event (up to exec.max_events)
 *   "enumerate:N"      fork at the first N events, then plus
 */
struct BranchSpec
{
  std::vector<Branch> sequence;
  Branch fallback{Branch::plus};
  std::size_t enumerate_depth{0};

  static BranchSpec parse(const std::string & text, std::size_t max_events);
  BranchPolicy policy() const;
};

struct ExperimentConfig
{
  Mode mode{Mode::fig2};
  double t0{0.0};
  std::optional<double> tf;
  PlantParams params{PlantParams::standard()};
  ExecConfig exec{};
  SolveConfig solve{};
  std::string branch_text{"plus"};
  BranchSpec branch{};

  // initial conditions; which ones are used depends on the mode
  GroupElement g0{};
  Momentum mu0{};
  double q0{0.0};
  double C{1.0};
  double D{1.0};
  double mu_theta0{-1.0};
  Eigen::Vector3d controls{0.0, 0.0, 0.0};  ///< (u, v, omega) for simulate-plant

  QuadraticTerminalCost terminal{};
  std::optional<GroupElement> guess;

  std::filesystem::path output_dir{"."};
  nlohmann::json source;  ///< the parsed file, echoed into report.json
};

/// Parse and validate. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json & doc);

/// Read, parse and validate a config file. Throws ConfigError.
ExperimentConfig load_config(const std::filesystem::path & path);

}  // namespace hlp::app
