#pragma once

/**
 * @file Forward-backward fixed-point solver for the reduced hybrid optimal control problem.
 *
 * Each iteration seeds the terminal co-state from a guess of g(T), solves the
 * reduced (mu, q) system backward through the inverse co-state jumps, drives the
 * plant forward with the resulting optimal controls, and moves the guess toward
 * the terminal state that was actually reached. Convergence is not guaranteed;
 * a non-converged run is reported, not thrown.
 */

#include <cstddef>
#include <vector>

#include "hlp/hybrid.hpp"
#include "hlp/se2.hpp"
#include "hlp/se2_system.hpp"

namespace hlp {

struct OcpProblem
{
  GroupElement g_init;
  double t0{0.0};
  double tf{1.0};
  TerminalCost phi;
  PlantParams params{PlantParams::standard()};
  /// Indexed by forward-time event order; the backward pass replays it in reverse.
  BranchPolicy branch_policy{always_plus()};

  /// Throws PreconditionError on tf <= t0, g_init on the guard, a missing
  /// terminal cost or a fully actuated plant.
  void validate() const;
};

struct SolveConfig
{
  double tol{1e-6};
  std::size_t max_iters{50};
  double relaxation{1.0};
  ExecConfig exec{};

  void validate() const;
};

struct SolveIteration
{
  GroupElement guess;
  HybridTrajectory backward;  ///< over (mu_x, mu_y, mu_theta, q)
  HybridTrajectory forward;   ///< over (x, y, theta, running cost)
  GroupElement achieved;
  double delta{0.0};          ///< group_distance(guess, achieved)
  bool events_agree{true};    ///< same count, times within 10 event_tol plus the heading-offset shift
};

struct SolveReport
{
  std::vector<SolveIteration> iterations;
  bool converged{false};
  double final_cost{0.0};
  double running_cost{0.0};
  double terminal_cost{0.0};
  bool event_mismatch{false};  ///< the last iteration's passes disagree on events

  const SolveIteration & last() const { return iterations.back(); }
};

/// Chart distance sqrt(dx^2 + dy^2 + signed_gap(theta_a, theta_b)^2).
double group_distance(const GroupElement & a, const GroupElement & b);

/// a + r (b - a) in the chart, theta along the shorter arc.
GroupElement chart_interpolate(const GroupElement & a, const GroupElement & b, double r);

/**
 * Backward solve of the reduced system from mu_f = terminal_momentum(g_T, phi),
 * q_f = coset_project(g_T). `expected_events` maps reverse encounter order to
 * forward event indices for the branch policy; when the pass finds a different
 * number of events it is re-run once with the count it found.
 */
HybridTrajectory backward_pass(
  const GroupElement & g_T, const OcpProblem & problem, const SolveConfig & config, std::size_t expected_events = 0);

/**
 * Forward solve of the plant under u = -mu_x(t), omega = -mu_theta(t).
 *
 * Arc k of the plant reads the co-state from arc k of `mu_traj` (the last arc if
 * the plant sees more resets), interpolated with cubic Hermite polynomials whose
 * slopes come from the reduced field.
 */
HybridTrajectory forward_pass(const HybridTrajectory & mu_traj, const OcpProblem & problem, const SolveConfig & config);

SolveReport solve(const OcpProblem & problem, const GroupElement & g_T_guess, const SolveConfig & config);

}  // namespace hlp
