#pragma once

/**
 * @file The SE(2) hybrid optimal control reference system.
 *
 * Plant (under-actuated): xdot = u cos(theta), ydot = -u sin(theta), thetadot = omega,
 * reset g -> g h0 on the guard theta = theta*, running cost (u^2 + omega^2) / 2.
 *
 * Conventions used throughout this header:
 *  - the restricted Hamiltonian is h(mu) = -(mu_x^2 + mu_theta^2) / 2 with optimal
 *    controls u = -mu_x, omega = -mu_theta;
 *  - the reduced flow is the Lie-Poisson flow mu_dot = ad*_{dh} mu of that h, i.e.
 *    (mu_y mu_theta, -mu_x mu_theta, -mu_x mu_y), with q_dot = -mu_theta;
 *  - the Casimir chart is mu_x = C cos(alpha), mu_y = C sin(alpha) with C the radius
 *    sqrt(mu_x^2 + mu_y^2). Along the flow alpha_dot = -mu_theta, so D = alpha - theta
 *    is constant along arcs and across resets.
 */

#include <Eigen/Core>

#include <functional>

#include "hlp/hybrid.hpp"
#include "hlp/se2.hpp"

namespace hlp {

/// Tolerance for "state lies on the guard" preconditions.
inline constexpr double kGuardTol = 1e-9;

enum class Actuation { full, under };

/// Reset offsets (x~, y~, theta~); the reset is right translation by h0 = (x~, y~, theta~).
struct JumpOffset
{
  double x{1.0};
  double y{0.0};
  double theta{std::numbers::pi};
};

class PlantParams
{
public:
  /// Throws PreconditionError if theta~ is a multiple of 2pi (h0 would lie in K).
  PlantParams(double theta_star, JumpOffset jump, Actuation actuation = Actuation::under);

  /// theta* = pi/2, (x~, y~, theta~) = (1, 0, pi), under-actuated.
  static PlantParams standard();

  double theta_star() const { return theta_star_; }
  const JumpOffset & jump() const { return jump_; }
  Actuation actuation() const { return actuation_; }

  /// h0.
  GroupElement reset_element() const { return {jump_.x, jump_.y, jump_.theta}; }
  /// Heading right after a reset, wrap(theta* + theta~).
  double landing_angle() const { return wrap_angle(theta_star_ + jump_.theta); }

  /// signed_gap(theta, theta*): the event function of the guard.
  double guard(double theta) const { return signed_gap(theta, theta_star_); }
  bool on_guard(double theta, double tol = kGuardTol) const;

private:
  double theta_star_;
  JumpOffset jump_;
  Actuation actuation_;
};

struct ReducedState
{
  Momentum mu;
  CosetPoint q;
};

struct CasimirState
{
  double C{0.0};      ///< Casimir radius
  double alpha{0.0};  ///< chart angle of (mu_x, mu_y), in [0, 2pi)
  double D{0.0};      ///< hybrid constant wrap(alpha - theta)
  double theta{0.0};
  double mu_theta{0.0};
};

struct Controls
{
  double u{0.0};
  double omega{0.0};
};

struct ReconstructedState
{
  double x{0.0};
  double y{0.0};
  double theta{0.0};
  double mu_theta{0.0};
};

using PmpState     = Eigen::Matrix<double, 6, 1>;  ///< (x, y, theta, px, py, ptheta)
using TerminalCost = std::function<double(const GroupElement &)>;

// --- plant ---------------------------------------------------------------

/// Chart velocity (xdot, ydot, thetadot). `v` is ignored for the under-actuated plant.
Eigen::Vector3d plant_field(const GroupElement & g, double u, double omega, const PlantParams & params, double v = 0.0);

/// g h0. Throws PreconditionError unless g is on the guard.
GroupElement plant_reset(const GroupElement & g, const PlantParams & params);

// --- reduced optimal control --------------------------------------------

double restricted_hamiltonian(const Momentum & mu);
Controls optimal_controls(const Momentum & mu);

/// (mu_x_dot, mu_y_dot, mu_theta_dot, q_dot).
Eigen::Vector4d reduced_field(const ReducedState & s);

/**
 * Co-state jump mu -> Ad*_{h0} mu + eps e3 with eps chosen so that h is preserved.
 *
 * The energy condition is quadratic in eps. Branch::plus keeps the sign of
 * mu_theta, Branch::minus flips it; for the default parameters this is
 * (-mu_x, -mu_y, +-mu_theta). Throws NoRealRoot if no real eps exists.
 */
Momentum costate_jump(const Momentum & mu_minus, Branch branch, const PlantParams & params = PlantParams::standard());

/// Inverse of costate_jump for the same branch.
Momentum costate_jump_inverse(const Momentum & mu_plus, Branch branch, const PlantParams & params = PlantParams::standard());

// --- Casimir reduction ---------------------------------------------------

/// Casimir radius sqrt(mu_x^2 + mu_y^2).
double casimir(const Momentum & mu);

/// Throws OriginMomentum when mu_x = mu_y = 0.
CasimirState casimir_chart(const Momentum & mu, double theta);
Momentum momentum_from_chart(const CasimirState & cs);

/// (alpha_dot, mu_theta_dot, theta_dot) = (-mu_theta, -C^2 sin(alpha) cos(alpha), -mu_theta).
Eigen::Vector3d casimir_reduced_field(const CasimirState & cs);

/// alpha -> alpha + theta~, theta -> theta + theta~, mu_theta from energy. Requires theta on the guard.
CasimirState casimir_reduced_reset(
  const CasimirState & cs, Branch branch, const PlantParams & params = PlantParams::standard());

/// -mu_theta^2 / 2 - (C^2 / 4) cos(2D + 2theta); equals h + C^2/4.
double planar_hamiltonian(double theta, double mu_theta, double C, double D);

/// (xdot, ydot, thetadot, mu_theta_dot) of the plant driven by the optimal controls at fixed (C, D).
Eigen::Vector4d reconstructed_field(const ReconstructedState & s, double C, double D);

/// Plant reset on (x, y, theta), mu_theta from energy. Requires theta on the guard.
ReconstructedState reconstructed_reset(
  const ReconstructedState & s, Branch branch, double C, double D, const PlantParams & params = PlantParams::standard());

// --- unreduced oracle on T*SE(2) ------------------------------------------

/// H(g, p) = -((px cos(theta) - py sin(theta))^2 + ptheta^2) / 2.
double full_hamiltonian(const PmpState & s);

/// Canonical Hamilton's equations of full_hamiltonian in the (x, y, theta) chart.
PmpState full_pmp_field(const PmpState & s);

/**
 * Hamiltonian jump condition in the chart: (x, y, theta) -> plant_reset, px and py
 * unchanged (the annihilator condition), ptheta re-solved so that H+ = H-.
 * Throws NoRealRoot if the energy equation has no real solution.
 */
PmpState full_pmp_jump(const PmpState & s, Branch branch, const PlantParams & params = PlantParams::standard());

// --- terminal condition ----------------------------------------------------

/// Central difference of s -> phi(g_T exp(s e_i)), step 1e-6: the pullback (l_{g_T})^* dphi.
Momentum terminal_momentum(const GroupElement & g_T, const TerminalCost & phi);

/// phi(g) = ((x - x*)^2 + (y - y*)^2) / 2 + kappa (1 - cos(theta - theta*)).
struct QuadraticTerminalCost
{
  double x_target{0.0};
  double y_target{0.0};
  double theta_target{0.0};
  double kappa{1.0};

  double operator()(const GroupElement & g) const;
  ChartCovector chart_gradient(const GroupElement & g) const;
  /// Analytic counterpart of terminal_momentum.
  Momentum momentum(const GroupElement & g) const;
};

// --- hybrid systems for the executor ----------------------------------------

/// Control law for the plant system: (t, segment) -> (u, v, omega).
using ControlLaw = std::function<Eigen::Vector3d(double t, std::size_t segment)>;

/// State (x, y, theta, cost), cost rate (u^2 + v^2 + omega^2) / 2.
HybridSystemDef plant_system(const PlantParams & params, ControlLaw controls);

/// State (mu_x, mu_y, mu_theta, q). Backward guard is the landing angle.
HybridSystemDef reduced_system(const PlantParams & params);

/// State (x, y, theta, mu_x, mu_y, mu_theta, cost): plant under the optimal controls with co-states.
HybridSystemDef extremal_system(const PlantParams & params);

/// State (x, y, theta, mu_theta, cost) at fixed Casimir radius C and hybrid constant D.
HybridSystemDef reconstructed_system(double C, double D, const PlantParams & params);

}  // namespace hlp
