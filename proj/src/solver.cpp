#include "hlp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "hlp/errors.hpp"

namespace hlp {

namespace {

/// Cubic Hermite interpolation of the co-state along one backward arc.
class CostateInterpolant
{
public:
  explicit CostateInterpolant(const Arc & arc) : times_(arc.times)
  {
    values_.reserve(arc.states.size());
    slopes_.reserve(arc.states.size());
    for (const State & s : arc.states) {
      const Momentum mu{s[0], s[1], s[2]};
      values_.push_back(mu.coeffs());
      slopes_.push_back(reduced_field({mu, {s[3]}}).head<3>());
    }
  }

  Eigen::Vector3d operator()(double t) const
  {
    if (times_.size() == 1) { return values_.front(); }
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t i = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
    i = std::min(i, times_.size() - 2);
    const double h  = times_[i + 1] - times_[i];
    const double s  = (t - times_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * values_[i] + h10 * h * slopes_[i] + h01 * values_[i + 1] + h11 * h * slopes_[i + 1];
  }

private:
  std::vector<double> times_;
  std::vector<Eigen::Vector3d> values_;
  std::vector<Eigen::Vector3d> slopes_;
};

/**
 * Forward and backward event times agree to 10 event_tol plus the shift caused
 * by the heading mismatch between guess and achieved state: both passes turn at
 * rate -mu_theta, so a heading offset d moves a crossing by d / |mu_theta|.
 */
bool events_agree(
  const HybridTrajectory & forward, const HybridTrajectory & backward, double heading_gap, double event_tol)
{
  if (forward.events.size() != backward.events.size()) { return false; }
  for (std::size_t i = 0; i < forward.events.size(); ++i) {
    const double rate  = std::max(std::abs(backward.events[i].pre_state[2]), 1e-12);
    const double bound = 10.0 * event_tol + 2.0 * heading_gap / rate;
    if (std::abs(forward.events[i].time - backward.events[i].time) > bound) { return false; }
  }
  return true;
}

}  // namespace

void OcpProblem::validate() const
{
  if (!(tf > t0)) { throw PreconditionError("problem: tf must exceed t0"); }
  if (!phi) { throw PreconditionError("problem: terminal cost is missing"); }
  if (params.actuation() != Actuation::under) {
    throw PreconditionError("problem: the reduced solver covers the under-actuated plant only");
  }
  if (params.guard(g_init.theta()) == 0.0) { throw PreconditionError("problem: g_init lies on the guard"); }
}

void SolveConfig::validate() const
{
  if (!(tol > 0.0)) { throw PreconditionError("solve.tol must be positive"); }
  if (max_iters == 0) { throw PreconditionError("solve.max_iters must be positive"); }
  if (!(relaxation > 0.0 && relaxation <= 1.0)) { throw PreconditionError("solve.relaxation must lie in (0, 1]"); }
  exec.validate();
}

double group_distance(const GroupElement & a, const GroupElement & b)
{
  const double dx = a.x() - b.x(), dy = a.y() - b.y();
  const double dt = signed_gap(a.theta(), b.theta());
  return std::sqrt(dx * dx + dy * dy + dt * dt);
}

GroupElement chart_interpolate(const GroupElement & a, const GroupElement & b, double r)
{
  return {
    a.x() + r * (b.x() - a.x()),
    a.y() + r * (b.y() - a.y()),
    a.theta() + r * signed_gap(b.theta(), a.theta()),
  };
}

HybridTrajectory backward_pass(
  const GroupElement & g_T, const OcpProblem & problem, const SolveConfig & config, std::size_t expected_events)
{
  const Momentum mu_f = terminal_momentum(g_T, problem.phi);
  State x_T(4);
  x_T << mu_f.mu_x, mu_f.mu_y, mu_f.mu_theta, coset_project(g_T).q;

  const HybridSystemDef sys = reduced_system(problem.params);
  auto run = [&](std::size_t n_events) {
    const BranchPolicy reversed = [&problem, n_events](std::size_t j, const State & s) {
      return problem.branch_policy(j < n_events ? n_events - 1 - j : j, s);
    };
    return execute_backward(sys, x_T, problem.tf, problem.t0, config.exec, reversed);
  };

  HybridTrajectory traj = run(expected_events);
  if (traj.events.size() != expected_events) { traj = run(traj.events.size()); }
  return traj;
}

HybridTrajectory forward_pass(const HybridTrajectory & mu_traj, const OcpProblem & problem, const SolveConfig & config)
{
  std::vector<CostateInterpolant> costates;
  costates.reserve(mu_traj.arcs.size());
  for (const Arc & arc : mu_traj.arcs) { costates.emplace_back(arc); }

  ControlLaw law = [costates = std::move(costates)](double t, std::size_t segment) {
    const Eigen::Vector3d mu = costates[std::min(segment, costates.size() - 1)](t);
    return Eigen::Vector3d{-mu.x(), 0.0, -mu.z()};
  };

  State x0(4);
  x0 << problem.g_init.x(), problem.g_init.y(), problem.g_init.theta(), 0.0;
  return execute(plant_system(problem.params, std::move(law)), x0, problem.t0, problem.tf, config.exec,
                 problem.branch_policy);
}

SolveReport solve(const OcpProblem & problem, const GroupElement & g_T_guess, const SolveConfig & config)
{
  problem.validate();
  config.validate();

  SolveReport report;
  GroupElement guess         = g_T_guess;
  std::size_t expected_events = 0;
  for (std::size_t it = 0; it < config.max_iters; ++it) {
    SolveIteration iter;
    iter.guess    = guess;
    iter.backward = backward_pass(guess, problem, config, expected_events);
    iter.forward  = forward_pass(iter.backward, problem, config);
    const State & xf = iter.forward.final_state();
    iter.achieved     = {xf[0], xf[1], xf[2]};
    iter.delta        = group_distance(guess, iter.achieved);
    iter.events_agree = events_agree(iter.forward, iter.backward, std::abs(signed_gap(iter.achieved.theta(), guess.theta())),
                                     config.exec.event_tol);
    expected_events   = iter.forward.events.size();

    const bool done = iter.delta <= config.tol;
    guess           = chart_interpolate(guess, iter.achieved, config.relaxation);
    report.iterations.push_back(std::move(iter));
    if (done) {
      report.converged = true;
      break;
    }
  }

  const SolveIteration & last = report.last();
  report.running_cost         = last.forward.final_state()[3];
  report.terminal_cost        = problem.phi(last.achieved);
  report.final_cost           = report.running_cost + report.terminal_cost;
  report.event_mismatch       = !last.events_agree;
  return report;
}

}  // namespace hlp
