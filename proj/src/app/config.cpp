#include "hlp/app/config.hpp"

#include <fstream>
#include <sstream>

#include "hlp/errors.hpp"

namespace hlp::app {

namespace {

using nlohmann::json;

std::string join(const std::string & prefix, const std::string & key)
{
  return prefix.empty() ? key : prefix + "." + key;
}

const json * find(const json & obj, const std::string & key)
{
  if (!obj.is_object()) { return nullptr; }
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json & object_at(const json & obj, const std::string & key, const std::string & path)
{
  const json * v = find(obj, key);
  if (!v) { throw ConfigError("missing required key '" + join(path, key) + "'"); }
  if (!v->is_object()) { throw ConfigError("key '" + join(path, key) + "' must be an object"); }
  return *v;
}

double number(const json & v, const std::string & path)
{
  if (!v.is_number()) { throw ConfigError("key '" + path + "' must be a number"); }
  return v.get<double>();
}

double required_number(const json & obj, const std::string & key, const std::string & path)
{
  const json * v = find(obj, key);
  if (!v) { throw ConfigError("missing required key '" + join(path, key) + "'"); }
  return number(*v, join(path, key));
}

double optional_number(const json & obj, const std::string & key, const std::string & path, double fallback)
{
  const json * v = find(obj, key);
  return v ? number(*v, join(path, key)) : fallback;
}

std::size_t optional_count(const json & obj, const std::string & key, const std::string & path, std::size_t fallback)
{
  const json * v = find(obj, key);
  if (!v) { return fallback; }
  if (!v->is_number_integer() || v->get<long long>() <= 0) {
    throw ConfigError("key '" + join(path, key) + "' must be a positive integer");
  }
  return v->get<std::size_t>();
}

Mode parse_mode(const json & doc)
{
  const json * v = find(doc, "mode");
  if (!v) { throw ConfigError("missing required key 'mode'"); }
  if (!v->is_string()) { throw ConfigError("key 'mode' must be a string"); }
  const std::string m = v->get<std::string>();
  if (m == "simulate-plant") { return Mode::simulate_plant; }
  if (m == "simulate-reduced") { return Mode::simulate_reduced; }
  if (m == "simulate-reconstructed") { return Mode::simulate_reconstructed; }
  if (m == "solve") { return Mode::solve; }
  if (m == "fig2") { return Mode::fig2; }
  if (m == "fig3") { return Mode::fig3; }
  throw ConfigError("key 'mode' has unknown value '" + m + "'");
}

PlantParams parse_plant(const json & doc)
{
  const json * plant = find(doc, "plant");
  if (!plant) { return PlantParams::standard(); }
  if (!plant->is_object()) { throw ConfigError("key 'plant' must be an object"); }
  const PlantParams standard = PlantParams::standard();
  const double theta_star = optional_number(*plant, "theta_star", "plant", standard.theta_star());
  JumpOffset jump         = standard.jump();
  if (const json * j = find(*plant, "jump")) {
    if (!j->is_object()) { throw ConfigError("key 'plant.jump' must be an object"); }
    jump.x     = optional_number(*j, "x", "plant.jump", jump.x);
    jump.y     = optional_number(*j, "y", "plant.jump", jump.y);
    jump.theta = optional_number(*j, "theta", "plant.jump", jump.theta);
  }
  Actuation act = Actuation::under;
  if (const json * a = find(*plant, "actuation")) {
    if (*a == "full") {
      act = Actuation::full;
    } else if (*a != "under") {
      throw ConfigError("key 'plant.actuation' must be \"full\" or \"under\"");
    }
  }
  try {
    return PlantParams(theta_star, jump, act);
  } catch (const PreconditionError & e) {
    throw ConfigError(std::string("key 'plant.jump.theta': ") + e.what());
  }
}

ExecConfig parse_exec(const json & doc)
{
  ExecConfig exec;
  if (const json * e = find(doc, "exec")) {
    if (!e->is_object()) { throw ConfigError("key 'exec' must be an object"); }
    exec.step       = optional_number(*e, "step", "exec", exec.step);
    exec.event_tol  = optional_number(*e, "event_tol", "exec", exec.event_tol);
    exec.max_events = optional_count(*e, "max_events", "exec", exec.max_events);
    exec.min_dwell  = optional_number(*e, "min_dwell", "exec", exec.min_dwell);
  }
  try {
    exec.validate();
  } catch (const PreconditionError & e) {
    throw ConfigError(e.what());
  }
  return exec;
}

GroupElement parse_pose(const json & obj, const std::string & path)
{
  return {required_number(obj, "x", path), required_number(obj, "y", path), required_number(obj, "theta", path)};
}

}  // namespace

std::string to_string(Mode m)
{
  switch (m) {
  case Mode::simulate_plant: return "simulate-plant";
  case Mode::simulate_reduced: return "simulate-reduced";
  case Mode::simulate_reconstructed: return "simulate-reconstructed";
  case Mode::solve: return "solve";
  case Mode::fig2: return "fig2";
  case Mode::fig3: return "fig3";
  }
  return "unknown";
}

BranchSpec BranchSpec::parse(const std::string & text, std::size_t max_events)
{
  BranchSpec spec;
  if (text == "plus") { return spec; }
  if (text == "minus") {
    spec.fallback = Branch::minus;
    return spec;
  }
  if (text == "enumerate") {
    spec.enumerate_depth = max_events;
    return spec;
  }
  if (text.rfind("enumerate:", 0) == 0) {
    const std::string n = text.substr(10);
    if (n.empty() || n.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("key 'branch_policy': expected enumerate:N with a non-negative integer N");
    }
    spec.enumerate_depth = std::stoul(n);
    return spec;
  }
  if (!text.empty() && text.find_first_not_of("+-") == std::string::npos) {
    for (char c : text) { spec.sequence.push_back(c == '+' ? Branch::plus : Branch::minus); }
    return spec;
  }
  throw ConfigError("key 'branch_policy' has unknown value '" + text + "'");
}

BranchPolicy BranchSpec::policy() const { return branch_sequence(sequence, fallback); }

ExperimentConfig parse_config(const nlohmann::json & doc)
{
  if (!doc.is_object()) { throw ConfigError("config must be a JSON object"); }

  ExperimentConfig cfg;
  cfg.source = doc;
  cfg.mode   = parse_mode(doc);
  cfg.t0     = optional_number(doc, "t0", "", 0.0);
  if (const json * tf = find(doc, "tf")) { cfg.tf = number(*tf, "tf"); }
  cfg.params = parse_plant(doc);
  cfg.exec   = parse_exec(doc);

  const bool figure = cfg.mode == Mode::fig2 || cfg.mode == Mode::fig3;
  if (!figure && !cfg.tf) { throw ConfigError("missing required key 'tf'"); }
  if (cfg.tf && !(*cfg.tf > cfg.t0)) { throw ConfigError("key 'tf' must exceed t0"); }

  cfg.branch_text = figure ? "enumerate:1" : "plus";
  if (const json * b = find(doc, "branch_policy")) {
    if (!b->is_string()) { throw ConfigError("key 'branch_policy' must be a string"); }
    cfg.branch_text = b->get<std::string>();
  }
  cfg.branch = BranchSpec::parse(cfg.branch_text, cfg.exec.max_events);

  if (const json * out = find(doc, "output_dir")) {
    if (!out->is_string()) { throw ConfigError("key 'output_dir' must be a string"); }
    cfg.output_dir = out->get<std::string>();
  }

  switch (cfg.mode) {
  case Mode::simulate_plant: {
    const json & init = object_at(doc, "initial", "");
    cfg.g0            = parse_pose(init, "initial");
    const json & ctl  = object_at(doc, "controls", "");
    cfg.controls      = {
      required_number(ctl, "u", "controls"),
      optional_number(ctl, "v", "controls", 0.0),
      required_number(ctl, "omega", "controls"),
    };
    break;
  }
  case Mode::simulate_reduced: {
    const json & init = object_at(doc, "initial", "");
    cfg.mu0 = {
      required_number(init, "mu_x", "initial"),
      required_number(init, "mu_y", "initial"),
      required_number(init, "mu_theta", "initial"),
    };
    cfg.q0 = required_number(init, "q", "initial");
    break;
  }
  case Mode::simulate_reconstructed: {
    const json & init = object_at(doc, "initial", "");
    cfg.g0            = parse_pose(init, "initial");
    cfg.mu_theta0     = required_number(init, "mu_theta", "initial");
    cfg.C             = required_number(init, "C", "initial");
    cfg.D             = required_number(init, "D", "initial");
    break;
  }
  case Mode::solve: {
    const json & init = object_at(doc, "initial", "");
    cfg.g0            = parse_pose(init, "initial");
    const json & sv   = object_at(doc, "solve", "");
    const json & tc   = object_at(sv, "terminal_cost", "solve");
    cfg.terminal      = {
      required_number(tc, "x", "solve.terminal_cost"),
      required_number(tc, "y", "solve.terminal_cost"),
      required_number(tc, "theta", "solve.terminal_cost"),
      optional_number(tc, "kappa", "solve.terminal_cost", 1.0),
    };
    if (const json * g = find(sv, "guess")) { cfg.guess = parse_pose(*g, "solve.guess"); }
    cfg.solve.tol        = optional_number(sv, "tol", "solve", cfg.solve.tol);
    cfg.solve.max_iters  = optional_count(sv, "max_iters", "solve", cfg.solve.max_iters);
    cfg.solve.relaxation = optional_number(sv, "relaxation", "solve", cfg.solve.relaxation);
    cfg.solve.exec       = cfg.exec;
    try {
      cfg.solve.validate();
    } catch (const PreconditionError & e) {
      throw ConfigError(e.what());
    }
    if (cfg.branch.enumerate_depth > 0) { throw ConfigError("key 'branch_policy': enumerate is not available in solve mode"); }
    if (cfg.params.actuation() != Actuation::under) {
      throw ConfigError("key 'plant.actuation': solve mode requires the under-actuated plant");
    }
    break;
  }
  case Mode::fig2:
  case Mode::fig3: {
    if (const json * init = find(doc, "initial")) {
      if (!init->is_object()) { throw ConfigError("key 'initial' must be an object"); }
      cfg.g0        = {optional_number(*init, "x", "initial", 0.0), optional_number(*init, "y", "initial", 0.0),
                       optional_number(*init, "theta", "initial", 0.0)};
      cfg.mu_theta0 = optional_number(*init, "mu_theta", "initial", -1.0);
      cfg.C         = optional_number(*init, "C", "initial", 1.0);
      cfg.D         = optional_number(*init, "D", "initial", 1.0);
    }
    break;
  }
  }

  if (cfg.mode != Mode::simulate_reduced && cfg.params.on_guard(cfg.g0.theta(), 0.0)) {
    throw ConfigError("key 'initial.theta': the initial heading lies on the guard");
  }
  if (cfg.mode == Mode::simulate_reduced && cfg.params.on_guard(cfg.q0, 0.0)) {
    throw ConfigError("key 'initial.q': the initial coset point lies on the guard");
  }
  if ((cfg.mode == Mode::simulate_reconstructed || figure) && !(cfg.C >= 0.0)) {
    throw ConfigError("key 'initial.C': the Casimir radius must be non-negative");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) { throw ConfigError("cannot read config file '" + path.string() + "'"); }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error & e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace hlp::app
