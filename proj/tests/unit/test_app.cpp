#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>

#include "hlp/app/config.hpp"
#include "hlp/app/output.hpp"
#include "hlp/app/run.hpp"

using namespace hlp;
using namespace hlp::app;
using nlohmann::json;

namespace {

std::string config_error(const json & doc)
{
  try {
    parse_config(doc);
  } catch (const ConfigError & e) {
    return e.what();
  }
  return "";
}

const Artifact * find_file(const RunResult & r, const std::string & name)
{
  for (const Artifact & a : r.files) {
    if (a.filename == name) { return &a; }
  }
  return nullptr;
}

std::vector<std::vector<std::string>> parse_csv(const std::string & text)
{
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) { cells.push_back(cell); }
    if (!line.empty() && line.back() == ',') { cells.emplace_back(); }
    rows.push_back(cells);
  }
  return rows;
}

json fig2_doc() { return {{"mode", "fig2"}}; }

std::filesystem::path temp_dir(const std::string & name)
{
  const auto dir = std::filesystem::path(HLP_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Config, MissingKeysAreNamed)
{
  EXPECT_NE(config_error(json::object()).find("'mode'"), std::string::npos);
  EXPECT_NE(config_error({{"mode", "bogus"}}).find("bogus"), std::string::npos);
  const json plant = {{"mode", "simulate-plant"}, {"tf", 1.0}, {"initial", {{"x", 0}, {"y", 0}}}};
  EXPECT_NE(config_error(plant).find("'initial.theta'"), std::string::npos);
  const json no_tf = {{"mode", "simulate-reduced"}, {"initial", {{"mu_x", 1}, {"mu_y", 0}, {"mu_theta", 1}, {"q", 0}}}};
  EXPECT_NE(config_error(no_tf).find("'tf'"), std::string::npos);
  const json solve = {{"mode", "solve"}, {"tf", 1.0}, {"initial", {{"x", 0}, {"y", 0}, {"theta", 0}}}, {"solve", json::object()}};
  EXPECT_NE(config_error(solve).find("'solve.terminal_cost'"), std::string::npos);
}

TEST(Config, RejectsBadValues)
{
  EXPECT_NE(config_error({{"mode", "fig2"}, {"exec", {{"step", -1.0}}}}).find("step"), std::string::npos);
  EXPECT_NE(config_error({{"mode", "fig2"}, {"exec", {{"max_events", 0}}}}).find("exec.max_events"), std::string::npos);
  EXPECT_NE(config_error({{"mode", "fig2"}, {"plant", {{"jump", {{"theta", 0.0}}}}}}).find("plant.jump.theta"),
            std::string::npos);
  EXPECT_NE(config_error({{"mode", "fig2"}, {"initial", {{"theta", std::numbers::pi / 2}}}}).find("guard"),
            std::string::npos);
  EXPECT_NE(config_error({{"mode", "fig2"}, {"branch_policy", "sideways"}}).find("branch_policy"), std::string::npos);
  EXPECT_NE(config_error({{"mode", "fig2"}, {"tf", "soon"}}).find("'tf'"), std::string::npos);
}

TEST(Config, Defaults)
{
  const ExperimentConfig cfg = parse_config(fig2_doc());
  EXPECT_EQ(cfg.mode, Mode::fig2);
  EXPECT_FALSE(cfg.tf.has_value());
  EXPECT_EQ(cfg.branch.enumerate_depth, 1u);
  EXPECT_DOUBLE_EQ(cfg.C, 1.0);
  EXPECT_DOUBLE_EQ(cfg.D, 1.0);
  EXPECT_DOUBLE_EQ(cfg.mu_theta0, -1.0);
  EXPECT_NEAR(cfg.params.theta_star(), std::numbers::pi / 2, 1e-15);
}

TEST(BranchSpec, Parsing)
{
  EXPECT_EQ(BranchSpec::parse("minus", 8).fallback, Branch::minus);
  EXPECT_EQ(BranchSpec::parse("enumerate", 8).enumerate_depth, 8u);
  EXPECT_EQ(BranchSpec::parse("enumerate:2", 8).enumerate_depth, 2u);
  const BranchSpec seq = BranchSpec::parse("+-", 8);
  ASSERT_EQ(seq.sequence.size(), 2u);
  EXPECT_EQ(seq.policy()(1, State()), Branch::minus);
  EXPECT_EQ(seq.policy()(2, State()), Branch::plus);
  EXPECT_THROW(BranchSpec::parse("enumerate:x", 8), ConfigError);
}

TEST(Csv, Format)
{
  EXPECT_EQ(to_csv(std::vector<CsvRow>{}), std::string(kCsvHeader) + "\n");
  CsvRow r;
  r.t        = 0.5;
  r.theta    = 1.25;
  r.mu_x     = -2.0;
  r.mu_y     = 0.1;
  r.mu_theta = 3.0;
  r.segment  = 1;
  r.event    = true;
  r.branch_path = "+";
  EXPECT_EQ(to_csv({r}), std::string(kCsvHeader) + "\n0.5,,,1.25,-2,0.1,3,1,1,+\n");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(std::stod(format_number(std::numbers::pi)), std::numbers::pi);
}

TEST(Csv, LeafFilenames)
{
  EXPECT_EQ(leaf_filename("trajectory", "+-", true), "trajectory.csv");
  EXPECT_EQ(leaf_filename("trajectory", "+-", false), "trajectory_pm.csv");
  EXPECT_EQ(leaf_filename("cost", "", false), "cost_root.csv");
}

TEST(Run, SingleArcRowCount)
{
  const json doc = {{"mode", "simulate-plant"},
                    {"tf", 2.0},
                    {"initial", {{"x", 0}, {"y", 0}, {"theta", 0}}},
                    {"controls", {{"u", 1.0}, {"omega", 0.0}}},
                    {"exec", {{"step", 0.01}}}};
  const RunResult r = run_experiment(parse_config(doc));
  const Artifact * csv = find_file(r, "trajectory.csv");
  ASSERT_NE(csv, nullptr);
  const auto rows = parse_csv(csv->content);
  EXPECT_EQ(rows.size() - 1, static_cast<std::size_t>(std::floor(2.0 / 0.01)) + 1);
  EXPECT_EQ(rows[1].size(), 10u);
  EXPECT_TRUE(rows[1][4].empty());  // plant mode leaves the momentum columns empty
}

TEST(Run, ReducedModeLeavesPositionEmpty)
{
  const json doc = {{"mode", "simulate-reduced"},
                    {"tf", 3.0},
                    {"initial", {{"mu_x", 0.5}, {"mu_y", 0.3}, {"mu_theta", -1.0}, {"q", 0.0}}}};
  const RunResult r = run_experiment(parse_config(doc));
  const auto rows   = parse_csv(find_file(r, "trajectory.csv")->content);
  EXPECT_TRUE(rows[1][1].empty());
  EXPECT_TRUE(rows[1][2].empty());
  EXPECT_FALSE(rows[1][3].empty());
  const auto & inv = r.report["branches"][0]["invariants"];
  EXPECT_LT(inv["casimir"]["max_drift_total"].get<double>(), 1e-9);
  EXPECT_LT(inv["restricted_hamiltonian"]["max_jump_across_events"].get<double>(), 1e-12);
}

TEST(Run, Fig2Artifacts)
{
  const RunResult r = run_experiment(parse_config(fig2_doc()), 7);
  EXPECT_EQ(r.report["seed"], 7);
  EXPECT_EQ(r.report["tf_source"], "third reset plus 10% margin");
  const auto & branches = r.report["branches"];
  ASSERT_EQ(branches.size(), 2u);
  const Artifact * plus  = find_file(r, "trajectory_ppp.csv");
  const Artifact * minus = find_file(r, "trajectory_mpp.csv");
  ASSERT_NE(plus, nullptr);
  ASSERT_NE(minus, nullptr);

  // rows: timestamps increase except for the duplicated pre/post event rows
  for (const Artifact * a : {plus, minus}) {
    const auto rows = parse_csv(a->content);
    std::size_t events = 0;
    for (std::size_t i = 2; i < rows.size(); ++i) {
      const double t0 = std::stod(rows[i - 1][0]), t1 = std::stod(rows[i][0]);
      if (rows[i - 1][8] == "1" && rows[i][8] == "1" && t0 == t1) {
        ++events;
        EXPECT_NEAR(std::stod(rows[i][2]) - std::stod(rows[i - 1][2]), -1.0, 1e-9);  // y drops by 1
        EXPECT_EQ(rows[i][9].size(), rows[i - 1][9].size() + 1);
      } else {
        EXPECT_LT(t0, t1);
      }
    }
    EXPECT_GE(events, 3u);
  }

  // shared segment 0: identical rows up to the first event
  const auto pr = parse_csv(plus->content), mr = parse_csv(minus->content);
  for (std::size_t i = 1; i < pr.size() && pr[i][7] == "0"; ++i) { EXPECT_EQ(pr[i], mr[i]); }

  const Artifact * svg = find_file(r, "plot.svg");
  ASSERT_NE(svg, nullptr);
  const std::string & s = svg->content;
  std::ptrdiff_t polylines = 0;
  for (std::size_t p = s.find("<polyline"); p != std::string::npos; p = s.find("<polyline", p + 1)) { ++polylines; }
  EXPECT_EQ(polylines, 2);
  EXPECT_NE(s.find("class=\"event\""), std::string::npos);
}

TEST(Run, Fig3CostFiles)
{
  const RunResult r = run_experiment(parse_config({{"mode", "fig3"}}));
  const Artifact * cost = find_file(r, "cost_ppp.csv");
  ASSERT_NE(cost, nullptr);
  EXPECT_EQ(cost->content.substr(0, cost->content.find('\n')), "t,cost,segment,event,branch_path");
  const double slope = r.report["expected_cost_slope"];
  for (const auto & b : r.report["branches"]) {
    EXPECT_NEAR(b["invariants"]["cost_fit"]["slope"].get<double>(), slope, 1e-8);
  }
  EXPECT_LT(r.report["branch_agreement"]["max_event_cost_difference"].get<double>(), 1e-8);
}

TEST(Run, Deterministic)
{
  const ExperimentConfig cfg = parse_config(fig2_doc());
  const RunResult a = run_experiment(cfg), b = run_experiment(cfg);
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) { EXPECT_EQ(a.files[i].content, b.files[i].content); }
  EXPECT_EQ(a.report.dump(), b.report.dump());
}

TEST(Run, SolveMode)
{
  const json doc = {{"mode", "solve"},
                    {"tf", 1.0},
                    {"initial", {{"x", 0}, {"y", 0}, {"theta", 0}}},
                    {"solve", {{"terminal_cost", {{"x", 0.6}, {"y", 0.2}, {"theta", 0.1}}}, {"relaxation", 0.5}}}};
  const RunResult r = run_experiment(parse_config(doc));
  EXPECT_TRUE(r.report["solve"]["converged"].get<bool>());
  EXPECT_LT(r.report["solve"]["cost_law_residual"].get<double>(), 1e-6);
  const auto rows = parse_csv(find_file(r, "trajectory.csv")->content);
  EXPECT_FALSE(rows[1][1].empty());
  EXPECT_FALSE(rows[1][4].empty());
}

TEST(Command, ExitCodes)
{
  const auto dir = temp_dir("exit_codes");
  auto write     = [&dir](const std::string & name, const std::string & text) {
    std::ofstream(dir / name) << text;
    return dir / name;
  };
  EXPECT_EQ(validate_command(write("ok.json", R"({"mode": "fig2"})")), kExitOk);
  EXPECT_EQ(validate_command(write("bad.json", R"({"mode": "simulate-plant"})")), kExitValidation);
  EXPECT_EQ(validate_command(write("broken.json", "{not json")), kExitValidation);
  EXPECT_EQ(validate_command(dir / "absent.json"), kExitValidation);

  EXPECT_EQ(run_command(write("fig2.json", R"({"mode": "fig2"})"), dir / "out", 3), kExitOk);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "plot.svg"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "trajectory_ppp.csv"));

  // a reset with no real energy-matching solution is a numerical failure
  const std::string no_root = R"({"mode": "simulate-reduced", "tf": 5,
    "plant": {"theta_star": 0.3, "jump": {"x": 0, "y": 0, "theta": 1.5707963267948966}},
    "initial": {"mu_x": 0.0, "mu_y": 2.0, "mu_theta": -0.1, "q": 0.29}})";
  EXPECT_EQ(run_command(write("noroot.json", no_root), dir / "out2", 0), kExitNumerical);
}
