#include "hlp/app/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "hlp/app/output.hpp"
#include "hlp/errors.hpp"
#include "hlp/se2_system.hpp"
#include "hlp/solver.hpp"

#ifndef HLP_VERSION
#define HLP_VERSION "0.0.0"
#endif

namespace hlp::app {

namespace {

using nlohmann::json;

/// Fills the CSV columns of one sample from the mode's state layout.
using RowMapper = std::function<void(CsvRow & row, const State & x, double t, std::size_t segment)>;

std::vector<CsvRow> rows_from(const HybridTrajectory & traj, const RowMapper & map)
{
  std::vector<CsvRow> rows;
  std::string path;
  for (std::size_t k = 0; k < traj.arcs.size(); ++k) {
    const Arc & arc = traj.arcs[k];
    for (std::size_t i = 0; i < arc.times.size(); ++i) {
      CsvRow row;
      row.t           = arc.times[i];
      row.segment     = k;
      row.event       = (i == 0 && k > 0) || (i + 1 == arc.times.size() && k < traj.events.size());
      row.branch_path = path;
      map(row, arc.states[i], arc.times[i], k);
      rows.push_back(std::move(row));
    }
    if (k < traj.events.size()) { path.push_back(branch_symbol(traj.events[k].branch)); }
  }
  return rows;
}

json to_json(const State & x) { return std::vector<double>(x.data(), x.data() + x.size()); }

json pose_json(const GroupElement & g) { return {{"x", g.x()}, {"y", g.y()}, {"theta", g.theta()}}; }

json events_json(const HybridTrajectory & traj)
{
  json out = json::array();
  for (std::size_t i = 0; i < traj.events.size(); ++i) {
    const Event & e = traj.events[i];
    out.push_back({{"index", i},
                   {"time", e.time},
                   {"branch", std::string(1, branch_symbol(e.branch))},
                   {"pre_state", to_json(e.pre_state)},
                   {"post_state", to_json(e.post_state)}});
  }
  return out;
}

/// Largest deviation of f from its value at the start of each arc, and across each event.
struct DriftSummary
{
  double along_arcs{0.0};
  double across_events{0.0};
  double total{0.0};

  json to_json() const { return {{"max_drift_along_arcs", along_arcs}, {"max_jump_across_events", across_events}, {"max_drift_total", total}}; }
};

DriftSummary drift(const HybridTrajectory & traj, const std::function<double(const State &)> & f,
                   const std::function<double(double, double)> & diff = [](double a, double b) { return a - b; })
{
  DriftSummary s;
  const double f0 = f(traj.initial_state());
  for (const Arc & arc : traj.arcs) {
    const double a0 = f(arc.states.front());
    for (const State & x : arc.states) {
      const double v = f(x);
      s.along_arcs   = std::max(s.along_arcs, std::abs(diff(v, a0)));
      s.total        = std::max(s.total, std::abs(diff(v, f0)));
    }
  }
  for (const Event & e : traj.events) {
    s.across_events = std::max(s.across_events, std::abs(diff(f(e.post_state), f(e.pre_state))));
  }
  return s;
}

/// Least-squares line through (t, c) samples: slope and coefficient of determination.
json affine_fit(const std::vector<std::pair<double, double>> & pts)
{
  const double n = static_cast<double>(pts.size());
  double st = 0, sc = 0;
  for (const auto & [t, c] : pts) {
    st += t;
    sc += c;
  }
  const double mt = st / n, mc = sc / n;
  double stt = 0, stc = 0, scc = 0;
  for (const auto & [t, c] : pts) {
    stt += (t - mt) * (t - mt);
    stc += (t - mt) * (c - mc);
    scc += (c - mc) * (c - mc);
  }
  const double slope     = stt > 0 ? stc / stt : 0.0;
  const double intercept = mc - slope * mt;
  double ss_res = 0;
  for (const auto & [t, c] : pts) {
    const double r = c - (intercept + slope * t);
    ss_res += r * r;
  }
  const double r2 = scc > 0 ? 1.0 - ss_res / scc : 1.0;
  return {{"slope", slope}, {"intercept", intercept}, {"r_squared", r2}};
}

std::vector<HybridTrajectory> run_tree(const HybridSystemDef & sys, const State & x0, double t0, double tf,
                                       const ExperimentConfig & cfg)
{
  return execute_tree(sys, x0, t0, tf, cfg.exec, cfg.branch.enumerate_depth, cfg.branch.policy());
}

/// Horizon of the figure modes: the latest third event over the branch tree plus 10 % of the elapsed time.
double figure_horizon(const HybridSystemDef & sys, const State & x0, const ExperimentConfig & cfg)
{
  ExecConfig probe = cfg.exec;
  probe.max_events = std::max<std::size_t>(probe.max_events, 64);
  const std::size_t depth = std::min<std::size_t>(cfg.branch.enumerate_depth, 3);
  for (double span = 2.0; span <= 1024.0; span *= 2.0) {
    const auto leaves = execute_tree(sys, x0, cfg.t0, cfg.t0 + span, probe, depth, cfg.branch.policy());
    const bool enough = std::all_of(leaves.begin(), leaves.end(), [](const HybridTrajectory & l) { return l.events.size() >= 3; });
    if (!enough) { continue; }
    double t3 = cfg.t0;
    for (const auto & l : leaves) { t3 = std::max(t3, l.events[2].time); }
    return t3 + 0.1 * (t3 - cfg.t0);
  }
  throw ConfigError("key 'tf': no three resets occur within 1024 time units; set tf explicitly");
}

struct Leaves
{
  std::vector<HybridTrajectory> trajectories;
  std::vector<std::vector<CsvRow>> rows;
};

void add_leaf_files(RunResult & result, const Leaves & leaves, json & branches)
{
  const bool single = leaves.trajectories.size() == 1;
  for (std::size_t i = 0; i < leaves.trajectories.size(); ++i) {
    const HybridTrajectory & tr = leaves.trajectories[i];
    const std::string name      = leaf_filename("trajectory", tr.branch_path(), single);
    result.files.push_back({name, to_csv(leaves.rows[i])});
    branches.push_back({{"branch_path", tr.branch_path()},
                        {"file", name},
                        {"events", events_json(tr)},
                        {"final_state", to_json(tr.final_state())}});
  }
}

PlotSeries xy_series(const HybridTrajectory & tr, const std::string & label)
{
  PlotSeries s;
  s.label = label;
  for (const Arc & arc : tr.arcs) {
    for (const State & x : arc.states) { s.points.emplace_back(x[0], x[1]); }
  }
  for (const Event & e : tr.events) {
    s.markers.emplace_back(e.pre_state[0], e.pre_state[1]);
    s.markers.emplace_back(e.post_state[0], e.post_state[1]);
  }
  return s;
}

std::string leaf_label(const HybridTrajectory & tr) { return tr.branch_path().empty() ? "trajectory" : "branch " + tr.branch_path(); }

// --- modes -------------------------------------------------------------------

void simulate_plant(const ExperimentConfig & cfg, RunResult & result)
{
  const Eigen::Vector3d u = cfg.controls;
  const auto sys          = plant_system(cfg.params, [u](double, std::size_t) { return u; });
  State x0(4);
  x0 << cfg.g0.x(), cfg.g0.y(), cfg.g0.theta(), 0.0;

  Leaves leaves;
  leaves.trajectories = run_tree(sys, x0, cfg.t0, *cfg.tf, cfg);
  PlotSpec plot{"Plant trajectory", "x", "y", {}};
  json branches = json::array();
  for (const auto & tr : leaves.trajectories) {
    leaves.rows.push_back(rows_from(tr, [](CsvRow & r, const State & x, double, std::size_t) {
      r.x     = x[0];
      r.y     = x[1];
      r.theta = wrap_angle(x[2]);
    }));
    plot.series.push_back(xy_series(tr, leaf_label(tr)));
  }
  add_leaf_files(result, leaves, branches);
  for (std::size_t i = 0; i < leaves.trajectories.size(); ++i) {
    branches[i]["running_cost"] = leaves.trajectories[i].final_state()[3];
  }
  result.report["branches"] = branches;
  result.files.push_back({"plot.svg", to_svg(plot)});
}

void simulate_reduced(const ExperimentConfig & cfg, RunResult & result)
{
  const auto sys = reduced_system(cfg.params);
  State x0(4);
  x0 << cfg.mu0.mu_x, cfg.mu0.mu_y, cfg.mu0.mu_theta, cfg.q0;

  Leaves leaves;
  leaves.trajectories = run_tree(sys, x0, cfg.t0, *cfg.tf, cfg);
  PlotSpec plot{"Reduced momentum", "t", "mu_theta", {}};
  json branches = json::array();
  for (const auto & tr : leaves.trajectories) {
    leaves.rows.push_back(rows_from(tr, [](CsvRow & r, const State & x, double, std::size_t) {
      r.theta    = wrap_angle(x[3]);
      r.mu_x     = x[0];
      r.mu_y     = x[1];
      r.mu_theta = x[2];
    }));
    PlotSeries s;
    s.label = leaf_label(tr);
    for (const Arc & arc : tr.arcs) {
      for (std::size_t i = 0; i < arc.times.size(); ++i) { s.points.emplace_back(arc.times[i], arc.states[i][2]); }
    }
    for (const Event & e : tr.events) {
      s.markers.emplace_back(e.time, e.pre_state[2]);
      s.markers.emplace_back(e.time, e.post_state[2]);
    }
    plot.series.push_back(std::move(s));
  }
  add_leaf_files(result, leaves, branches);

  const bool chartable = std::hypot(cfg.mu0.mu_x, cfg.mu0.mu_y) > 0.0;
  for (std::size_t i = 0; i < leaves.trajectories.size(); ++i) {
    const auto & tr  = leaves.trajectories[i];
    auto mu          = [](const State & x) { return Momentum{x[0], x[1], x[2]}; };
    json inv;
    inv["casimir"]                = drift(tr, [&](const State & x) { return casimir(mu(x)); }).to_json();
    inv["restricted_hamiltonian"] = drift(tr, [&](const State & x) { return restricted_hamiltonian(mu(x)); }).to_json();
    if (chartable) {
      const CasimirState c0 = casimir_chart(mu(tr.initial_state()), tr.initial_state()[3]);
      inv["hybrid_constant_D"] =
        drift(tr, [&](const State & x) { return casimir_chart(mu(x), x[3]).D; },
              [](double a, double b) { return signed_gap(a, b); })
          .to_json();
      inv["planar_hamiltonian"] =
        drift(tr, [&](const State & x) { return planar_hamiltonian(x[3], x[2], c0.C, c0.D); }).to_json();
    }
    branches[i]["invariants"] = inv;
  }
  result.report["branches"] = branches;
  result.files.push_back({"plot.svg", to_svg(plot)});
}

/// Reconstructed system rows, shared by simulate-reconstructed, fig2 and fig3.
RowMapper reconstructed_mapper(double C, double D)
{
  return [C, D](CsvRow & r, const State & x, double, std::size_t) {
    r.x        = x[0];
    r.y        = x[1];
    r.theta    = wrap_angle(x[2]);
    r.mu_x     = C * std::cos(D + x[2]);
    r.mu_y     = C * std::sin(D + x[2]);
    r.mu_theta = x[3];
  };
}

void reconstructed(const ExperimentConfig & cfg, RunResult & result)
{
  const auto sys = reconstructed_system(cfg.C, cfg.D, cfg.params);
  State x0(5);
  x0 << cfg.g0.x(), cfg.g0.y(), cfg.g0.theta(), cfg.mu_theta0, 0.0;

  const double tf   = cfg.tf ? *cfg.tf : figure_horizon(sys, x0, cfg);
  result.report["tf"]        = tf;
  result.report["tf_source"] = cfg.tf ? "config" : "third reset plus 10% margin";

  Leaves leaves;
  leaves.trajectories = run_tree(sys, x0, cfg.t0, tf, cfg);
  json branches       = json::array();
  for (const auto & tr : leaves.trajectories) { leaves.rows.push_back(rows_from(tr, reconstructed_mapper(cfg.C, cfg.D))); }
  add_leaf_files(result, leaves, branches);

  auto planar = [&](const State & x) { return planar_hamiltonian(x[2], x[3], cfg.C, cfg.D); };
  const double h0 = planar(x0) - 0.25 * cfg.C * cfg.C;
  result.report["restricted_hamiltonian_initial"] = h0;
  result.report["expected_cost_slope"]            = -h0;

  PlotSpec xy{"Reconstructed trajectories", "x", "y", {}};
  PlotSpec cost{"Accumulated running cost", "t", "cost", {}};
  for (std::size_t i = 0; i < leaves.trajectories.size(); ++i) {
    const auto & tr = leaves.trajectories[i];
    std::vector<std::pair<double, double>> pts;
    PlotSeries cs;
    cs.label = leaf_label(tr);
    std::vector<std::vector<std::string>> cost_rows;
    std::string path;
    for (std::size_t k = 0; k < tr.arcs.size(); ++k) {
      const Arc & arc = tr.arcs[k];
      for (std::size_t j = 0; j < arc.times.size(); ++j) {
        pts.emplace_back(arc.times[j], arc.states[j][4]);
        const bool ev = (j == 0 && k > 0) || (j + 1 == arc.times.size() && k < tr.events.size());
        cost_rows.push_back({format_number(arc.times[j]), format_number(arc.states[j][4]), std::to_string(k),
                             ev ? "1" : "0", path});
      }
      if (k < tr.events.size()) { path.push_back(branch_symbol(tr.events[k].branch)); }
    }
    cs.points = pts;
    for (const Event & e : tr.events) { cs.markers.emplace_back(e.time, e.pre_state[4]); }
    cost.series.push_back(std::move(cs));
    xy.series.push_back(xy_series(tr, leaf_label(tr)));

    json inv;
    inv["planar_hamiltonian"] = drift(tr, planar).to_json();
    inv["cost_fit"]           = affine_fit(pts);
    json dy                   = json::array();
    for (const Event & e : tr.events) { dy.push_back(e.post_state[1] - e.pre_state[1]); }
    inv["y_jump_at_events"]   = dy;
    branches[i]["invariants"] = inv;
    branches[i]["running_cost"] = tr.final_state()[4];

    if (cfg.mode == Mode::fig3) {
      const std::string name = leaf_filename("cost", tr.branch_path(), leaves.trajectories.size() == 1);
      result.files.push_back({name, to_csv({"t", "cost", "segment", "event", "branch_path"}, cost_rows)});
      branches[i]["cost_file"] = name;
    }
  }

  // Branch agreement: event times and accumulated cost at matching event indices.
  double time_spread = 0.0, cost_spread = 0.0;
  for (const auto & a : leaves.trajectories) {
    for (const auto & b : leaves.trajectories) {
      const std::size_t n = std::min(a.events.size(), b.events.size());
      for (std::size_t k = 0; k < n; ++k) {
        time_spread = std::max(time_spread, std::abs(a.events[k].time - b.events[k].time));
        cost_spread = std::max(cost_spread, std::abs(a.events[k].pre_state[4] - b.events[k].pre_state[4]));
      }
    }
  }
  result.report["branch_agreement"] = {{"max_event_time_difference", time_spread},
                                       {"max_event_cost_difference", cost_spread}};
  result.report["branches"]         = branches;
  result.files.push_back({"plot.svg", to_svg(cfg.mode == Mode::fig3 ? cost : xy)});
}

void solve_mode(const ExperimentConfig & cfg, RunResult & result)
{
  OcpProblem problem;
  problem.g_init        = cfg.g0;
  problem.t0            = cfg.t0;
  problem.tf            = *cfg.tf;
  problem.phi           = cfg.terminal;
  problem.params        = cfg.params;
  problem.branch_policy = cfg.branch.policy();

  const GroupElement guess = cfg.guess ? *cfg.guess : cfg.g0;
  const SolveReport rep    = solve(problem, guess, cfg.solve);
  const SolveIteration & last = rep.last();
  if (!rep.converged) {
    spdlog::warn("solver stopped after {} iterations without converging (last delta {})", rep.iterations.size(), last.delta);
  }
  if (rep.event_mismatch) { spdlog::warn("forward and backward passes disagree on the reset events"); }

  const HybridTrajectory & fwd = last.forward;
  const HybridTrajectory & bwd = last.backward;
  std::vector<CsvRow> rows     = rows_from(fwd, [&bwd](CsvRow & r, const State & x, double t, std::size_t seg) {
    const State mu = bwd.sample(t, seg);
    r.x            = x[0];
    r.y            = x[1];
    r.theta        = wrap_angle(x[2]);
    r.mu_x         = mu[0];
    r.mu_y         = mu[1];
    r.mu_theta     = mu[2];
  });
  result.files.push_back({"trajectory.csv", to_csv(rows)});

  json iters = json::array();
  for (std::size_t i = 0; i < rep.iterations.size(); ++i) {
    const SolveIteration & it = rep.iterations[i];
    iters.push_back({{"index", i},
                     {"guess", pose_json(it.guess)},
                     {"achieved", pose_json(it.achieved)},
                     {"delta", it.delta},
                     {"forward_events", it.forward.events.size()},
                     {"backward_events", it.backward.events.size()},
                     {"events_agree", it.events_agree}});
  }
  const State & mu0 = bwd.initial_state();
  const double h0   = restricted_hamiltonian({mu0[0], mu0[1], mu0[2]});
  result.report["solve"] = {
    {"converged", rep.converged},
    {"iterations", iters},
    {"final_cost", rep.final_cost},
    {"running_cost", rep.running_cost},
    {"terminal_cost", rep.terminal_cost},
    {"event_mismatch", rep.event_mismatch},
    {"terminal_state", pose_json(last.achieved)},
    {"restricted_hamiltonian_initial", h0},
    {"cost_law_residual", std::abs(rep.final_cost - (-h0 * (problem.tf - problem.t0) + rep.terminal_cost))},
  };
  result.report["branches"] = json::array({{{"branch_path", fwd.branch_path()},
                                            {"file", "trajectory.csv"},
                                            {"events", events_json(fwd)},
                                            {"final_state", to_json(fwd.final_state())}}});

  PlotSpec plot{"Solver trajectory", "x", "y", {xy_series(fwd, "forward pass")}};
  PlotSeries target;
  target.label = "target";
  target.points.emplace_back(cfg.terminal.x_target, cfg.terminal.y_target);
  target.markers.emplace_back(cfg.terminal.x_target, cfg.terminal.y_target);
  plot.series.push_back(std::move(target));
  result.files.push_back({"plot.svg", to_svg(plot)});
}

bool configured = false;

}  // namespace

std::string leaf_filename(const std::string & stem, const std::string & branch_path, bool single_leaf)
{
  if (single_leaf) { return stem + ".csv"; }
  std::string tag;
  for (char c : branch_path) { tag.push_back(c == '+' ? 'p' : 'm'); }
  return stem + "_" + (tag.empty() ? "root" : tag) + ".csv";
}

RunResult run_experiment(const ExperimentConfig & cfg, std::uint64_t seed)
{
  RunResult result;
  result.report = {
    {"tool", {{"name", "hlp"}, {"version", HLP_VERSION}}},
    {"mode", to_string(cfg.mode)},
    {"seed", seed},
    {"config", cfg.source},
    {"branch_policy", cfg.branch_text},
    {"t0", cfg.t0},
  };
  if (cfg.tf) { result.report["tf"] = *cfg.tf; }

  spdlog::info("running mode {}", to_string(cfg.mode));
  switch (cfg.mode) {
  case Mode::simulate_plant: simulate_plant(cfg, result); break;
  case Mode::simulate_reduced: simulate_reduced(cfg, result); break;
  case Mode::simulate_reconstructed:
  case Mode::fig2:
  case Mode::fig3: reconstructed(cfg, result); break;
  case Mode::solve: solve_mode(cfg, result); break;
  }

  json outputs = json::array();
  for (const Artifact & a : result.files) { outputs.push_back(a.filename); }
  outputs.push_back("report.json");
  result.report["outputs"] = outputs;
  return result;
}

void write_artifacts(const RunResult & result, const std::filesystem::path & dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) { throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message()); }
  for (const Artifact & a : result.files) {
    write_text(dir / a.filename, a.content);
    spdlog::debug("wrote {}", (dir / a.filename).string());
  }
  write_text(dir / "report.json", result.report.dump(2) + "\n");
}

void configure_logging()
{
  if (!configured) {
    auto logger = std::make_shared<spdlog::logger>("hlp", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    logger->set_pattern("hlp: %l: %v");
    spdlog::set_default_logger(logger);
    configured = true;
  }
  const char * env        = std::getenv("HLP_LOG");
  const std::string level = env ? env : "info";
  if (level == "quiet") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
    if (level != "info") { spdlog::warn("unknown HLP_LOG value '{}', using info", level); }
  }
}

int run_command(const std::filesystem::path & config_path, const std::optional<std::filesystem::path> & out_dir,
                std::uint64_t seed)
{
  try {
    const ExperimentConfig cfg = load_config(config_path);
    const RunResult result     = run_experiment(cfg, seed);
    const auto dir             = out_dir ? *out_dir : cfg.output_dir;
    write_artifacts(result, dir);
    spdlog::info("wrote {} files to {}", result.files.size() + 1, dir.string());
    return kExitOk;
  } catch (const ConfigError & e) {
    spdlog::error("invalid config: {}", e.what());
    return kExitValidation;
  } catch (const PreconditionError & e) {
    spdlog::error("invalid input: {}", e.what());
    return kExitValidation;
  } catch (const NumericalBlowup & e) {
    spdlog::error("numerical failure at t = {}: {}", e.time(), e.what());
    return kExitNumerical;
  } catch (const MaxBisectionDepth & e) {
    spdlog::error("numerical failure: {}", e.what());
    return kExitNumerical;
  } catch (const MaxEventsExceeded & e) {
    spdlog::error("numerical failure: {}", e.what());
    return kExitNumerical;
  } catch (const std::domain_error & e) {
    spdlog::error("numerical failure: {}", e.what());
    return kExitNumerical;
  } catch (const std::exception & e) {
    spdlog::error("{}", e.what());
    return kExitValidation;
  }
}

int validate_command(const std::filesystem::path & config_path)
{
  try {
    const ExperimentConfig cfg = load_config(config_path);
    spdlog::info("config is valid (mode {})", to_string(cfg.mode));
    return kExitOk;
  } catch (const ConfigError & e) {
    spdlog::error("invalid config: {}", e.what());
    return kExitValidation;
  }
}

}  // namespace hlp::app
