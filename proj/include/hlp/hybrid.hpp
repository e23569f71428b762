#pragma once

/**
 * @file Fixed-step hybrid-system executor.
 *
 * Flow with classical RK4 on a uniform grid, detect guard crossings by a sign
 * change between consecutive samples, localize them by bisection on time and
 * apply the reset. A refractory period (min_dwell) and an event cap
 * (max_events) keep executions finite.
 */

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hlp {

using State = Eigen::VectorXd;
using VectorField = std::function<State(double t, const State & x)>;
using GuardFunction = std::function<double(const State & x)>;

enum class Branch { plus, minus };

char branch_symbol(Branch b);

/// Hybrid system: a mode-indexed vector field, a guard and a (possibly multi-valued) reset.
struct HybridSystemDef
{
  std::size_t dimension{0};
  /// Vector field; `segment` counts the resets applied so far.
  std::function<State(double t, const State & x, std::size_t segment)> field;
  GuardFunction guard;
  std::function<State(const State & x, Branch b)> reset;
  std::vector<Branch> branch_tags{Branch::plus};

  /// Guard used in reverse time: zero on the image of the reset. Defaults to `guard`.
  GuardFunction backward_guard;
  std::function<State(const State & x, Branch b)> inverse_reset;

  /// Sign changes with a larger jump in guard value are discontinuities of the
  /// guard function (angle wrap), not crossings.
  double max_guard_jump{std::numeric_limits<double>::infinity()};
};

struct ExecConfig
{
  double step{1e-3};
  double event_tol{1e-10};
  std::size_t max_events{16};
  double min_dwell{1e-6};

  /// Throws PreconditionError unless event_tol < step and min_dwell >= 2 event_tol.
  void validate() const;
};

struct Arc
{
  double t_start{0.0};
  double t_end{0.0};
  std::vector<double> times;
  std::vector<State> states;
};

struct Event
{
  double time{0.0};
  State pre_state;
  State post_state;
  Branch branch{Branch::plus};
};

struct HybridTrajectory
{
  std::vector<Arc> arcs;
  std::vector<Event> events;

  const State & initial_state() const { return arcs.front().states.front(); }
  const State & final_state() const { return arcs.back().states.back(); }
  double t_start() const { return arcs.front().t_start; }
  double t_end() const { return arcs.back().t_end; }

  /// Branch choices so far, e.g. "+-".
  std::string branch_path() const;

  /// Sample with time inside arc `segment` (clamped to the arc), linear in time.
  State sample(double t, std::size_t segment) const;
};

/// Selects the reset branch for the event with the given (0-based) index.
using BranchPolicy = std::function<Branch(std::size_t event_index, const State & pre_state)>;

BranchPolicy always_plus();
BranchPolicy always_minus();
/// Follows `choices`, then `fallback` once they run out.
BranchPolicy branch_sequence(std::vector<Branch> choices, Branch fallback = Branch::plus);

/// One classical Runge-Kutta step; h may be negative. Throws NumericalBlowup.
State rk4_step(const VectorField & field, double t, const State & x, double h);

/// Uniform RK4 samples from t0 to t1 inclusive, final partial step landing on t1.
Arc integrate_arc(const VectorField & field, const State & x0, double t0, double t1, const ExecConfig & config);

struct EventLocation
{
  double time{0.0};
  State state;  ///< state on the pre-event side of the root
};

/**
 * Bisection on time for a guard root in [t_lo, t_hi].
 *
 * Every trial state is a single RK4 step from (t_lo, x_lo). Terminates once the
 * bracket is narrower than config.event_tol. Works for t_hi < t_lo as well
 * (reverse time). Throws PreconditionError unless the guard changes sign
 * strictly and |t_hi - t_lo| <= config.step; MaxBisectionDepth after 128 halvings.
 */
EventLocation locate_event(
  const VectorField & field,
  const GuardFunction & guard,
  double t_lo,
  const State & x_lo,
  double t_hi,
  const State & x_hi,
  const ExecConfig & config);

/// Forward execution from x0 over [t0, tf]. Requires guard(x0) != 0.
HybridTrajectory execute(
  const HybridSystemDef & system,
  const State & x0,
  double t0,
  double tf,
  const ExecConfig & config,
  const BranchPolicy & policy);

/**
 * Reverse-time execution from x_T at tf down to t0, re-ordered to increasing time.
 *
 * Events are detected on system.backward_guard and undone with
 * system.inverse_reset. The policy sees the reverse encounter index (0 is the
 * last event in forward time). Recorded events keep forward semantics:
 * pre_state is the inverse-reset output.
 */
HybridTrajectory execute_backward(
  const HybridSystemDef & system,
  const State & x_T,
  double tf,
  double t0,
  const ExecConfig & config,
  const BranchPolicy & policy);

/**
 * Forward execution that forks at each of the first `depth` events over every
 * branch tag, then follows `tail` for later events. Leaves come out in
 * lexicographic branch order (plus before minus). depth is capped at
 * config.max_events.
 */
std::vector<HybridTrajectory> execute_tree(
  const HybridSystemDef & system,
  const State & x0,
  double t0,
  double tf,
  const ExecConfig & config,
  std::size_t depth,
  const BranchPolicy & tail = always_plus());

}  // namespace hlp
