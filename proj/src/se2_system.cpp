#include "hlp/se2_system.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "hlp/errors.hpp"

namespace hlp {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

/**
 * Solve m+^2 = reference^2 + (old_sq - new_sq) for the energy-matching component.
 * Branch::plus keeps the sign of `reference`. Differences at roundoff level are
 * treated as exact zeros so that rotations by pi give exactly +-reference.
 */
double energy_matched(double reference, double old_sq, double new_sq, Branch branch)
{
  double delta = old_sq - new_sq;
  const double scale = reference * reference + old_sq + new_sq;
  if (std::abs(delta) <= 64.0 * kEps * (old_sq + new_sq)) { delta = 0.0; }
  double magnitude = std::abs(reference);
  if (delta != 0.0) {
    double sq = reference * reference + delta;
    if (sq < 0.0) {
      if (sq < -64.0 * kEps * scale) {
        std::ostringstream msg;
        msg << "energy matching across the reset has no real solution (residual " << sq << ")";
        throw NoRealRoot(msg.str());
      }
      sq = 0.0;
    }
    magnitude = std::sqrt(sq);
  }
  const double kept = std::copysign(magnitude, reference);
  return branch == Branch::plus ? kept : -kept;
}

void require_on_guard(const PlantParams & params, double theta, const char * op)
{
  if (!params.on_guard(theta)) {
    std::ostringstream msg;
    msg << op << ": heading " << theta << " is not on the guard theta* = " << params.theta_star();
    throw PreconditionError(msg.str());
  }
}

GroupElement chart_point(const State & x) { return {x[0], x[1], x[2]}; }

}  // namespace

PlantParams::PlantParams(double theta_star, JumpOffset jump, Actuation actuation)
    : theta_star_(wrap_angle(theta_star)), jump_(jump), actuation_(actuation)
{
  const double residue = std::abs(signed_gap(jump.theta, 0.0));
  if (residue < 1e-12) {
    throw PreconditionError("reset rotation theta~ must not be a multiple of 2pi (h0 would be a pure translation)");
  }
}

PlantParams PlantParams::standard() { return {std::numbers::pi / 2.0, JumpOffset{1.0, 0.0, std::numbers::pi}}; }

bool PlantParams::on_guard(double theta, double tol) const { return std::abs(guard(theta)) <= tol; }

Eigen::Vector3d plant_field(const GroupElement & g, double u, double omega, const PlantParams & params, double v)
{
  const double c = std::cos(g.theta()), s = std::sin(g.theta());
  if (params.actuation() == Actuation::under) { v = 0.0; }
  return {u * c + v * s, v * c - u * s, omega};
}

GroupElement plant_reset(const GroupElement & g, const PlantParams & params)
{
  require_on_guard(params, g.theta(), "plant_reset");
  return mul(g, params.reset_element());
}

double restricted_hamiltonian(const Momentum & mu)
{
  return -0.5 * (mu.mu_x * mu.mu_x + mu.mu_theta * mu.mu_theta);
}

Controls optimal_controls(const Momentum & mu) { return {-mu.mu_x, -mu.mu_theta}; }

Eigen::Vector4d reduced_field(const ReducedState & s)
{
  const auto & [mx, my, mt] = s.mu;
  return {my * mt, -mx * mt, -mx * my, -mt};
}

Momentum costate_jump(const Momentum & mu_minus, Branch branch, const PlantParams & params)
{
  const Momentum rotated = coadjoint(params.reset_element(), mu_minus);
  const double mt = energy_matched(mu_minus.mu_theta, mu_minus.mu_x * mu_minus.mu_x, rotated.mu_x * rotated.mu_x, branch);
  return {rotated.mu_x, rotated.mu_y, mt};
}

Momentum costate_jump_inverse(const Momentum & mu_plus, Branch branch, const PlantParams & params)
{
  const Momentum rotated = coadjoint(inv(params.reset_element()), mu_plus);
  const double mt = energy_matched(mu_plus.mu_theta, mu_plus.mu_x * mu_plus.mu_x, rotated.mu_x * rotated.mu_x, branch);
  return {rotated.mu_x, rotated.mu_y, mt};
}

double casimir(const Momentum & mu) { return std::hypot(mu.mu_x, mu.mu_y); }

CasimirState casimir_chart(const Momentum & mu, double theta)
{
  if (mu.mu_x == 0.0 && mu.mu_y == 0.0) { throw OriginMomentum("Casimir chart angle is undefined at mu_x = mu_y = 0"); }
  CasimirState cs;
  cs.C        = casimir(mu);
  cs.alpha    = wrap_angle(std::atan2(mu.mu_y, mu.mu_x));
  cs.theta    = theta;
  cs.D        = wrap_angle(cs.alpha - theta);
  cs.mu_theta = mu.mu_theta;
  return cs;
}

Momentum momentum_from_chart(const CasimirState & cs)
{
  return {cs.C * std::cos(cs.alpha), cs.C * std::sin(cs.alpha), cs.mu_theta};
}

Eigen::Vector3d casimir_reduced_field(const CasimirState & cs)
{
  const double sa = std::sin(cs.alpha), ca = std::cos(cs.alpha);
  return {-cs.mu_theta, -cs.C * cs.C * sa * ca, -cs.mu_theta};
}

CasimirState casimir_reduced_reset(const CasimirState & cs, Branch branch, const PlantParams & params)
{
  require_on_guard(params, cs.theta, "casimir_reduced_reset");
  const double shift = params.jump().theta;
  CasimirState out   = cs;
  out.alpha          = wrap_angle(cs.alpha + shift);
  out.theta          = wrap_angle(cs.theta + shift);
  const double c_old = cs.C * std::cos(cs.alpha);
  const double c_new = cs.C * std::cos(out.alpha);
  out.mu_theta       = energy_matched(cs.mu_theta, c_old * c_old, c_new * c_new, branch);
  out.D              = wrap_angle(out.alpha - out.theta);
  return out;
}

double planar_hamiltonian(double theta, double mu_theta, double C, double D)
{
  return -0.5 * mu_theta * mu_theta - 0.25 * C * C * std::cos(2.0 * D + 2.0 * theta);
}

Eigen::Vector4d reconstructed_field(const ReconstructedState & s, double C, double D)
{
  const double alpha = D + s.theta;
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  return {
    -C * ca * std::cos(s.theta),
    C * ca * std::sin(s.theta),
    -s.mu_theta,
    -C * C * sa * ca,
  };
}

ReconstructedState reconstructed_reset(
  const ReconstructedState & s, Branch branch, double C, double D, const PlantParams & params)
{
  require_on_guard(params, s.theta, "reconstructed_reset");
  const GroupElement g = mul(GroupElement{s.x, s.y, s.theta}, params.reset_element());
  const double c_old   = C * std::cos(D + s.theta);
  const double c_new   = C * std::cos(D + s.theta + params.jump().theta);
  return {g.x(), g.y(), g.theta(), energy_matched(s.mu_theta, c_old * c_old, c_new * c_new, branch)};
}

double full_hamiltonian(const PmpState & s)
{
  const double a = s[3] * std::cos(s[2]) - s[4] * std::sin(s[2]);
  return -0.5 * (a * a + s[5] * s[5]);
}

PmpState full_pmp_field(const PmpState & s)
{
  const double c = std::cos(s[2]), sn = std::sin(s[2]);
  const double a = s[3] * c - s[4] * sn;   // dH/da = -a
  const double b = s[3] * sn + s[4] * c;   // da/dtheta = -b
  PmpState d;
  d << -a * c, a * sn, -s[5], 0.0, 0.0, -a * b;
  return d;
}

PmpState full_pmp_jump(const PmpState & s, Branch branch, const PlantParams & params)
{
  require_on_guard(params, s[2], "full_pmp_jump");
  const GroupElement g = mul(GroupElement{s[0], s[1], s[2]}, params.reset_element());
  const double a_old   = s[3] * std::cos(s[2]) - s[4] * std::sin(s[2]);
  const double a_new   = s[3] * std::cos(g.theta()) - s[4] * std::sin(g.theta());
  PmpState out;
  out << g.x(), g.y(), g.theta(), s[3], s[4], energy_matched(s[5], a_old * a_old, a_new * a_new, branch);
  return out;
}

Momentum terminal_momentum(const GroupElement & g_T, const TerminalCost & phi)
{
  constexpr double h = 1e-6;
  Eigen::Vector3d mu;
  for (int i = 0; i < 3; ++i) {
    const AlgebraVector e = AlgebraVector::basis(i);
    mu[i] = (phi(mul(g_T, exp(e, h))) - phi(mul(g_T, exp(e, -h)))) / (2.0 * h);
  }
  return Momentum::from_coeffs(mu);
}

double QuadraticTerminalCost::operator()(const GroupElement & g) const
{
  const double dx = g.x() - x_target, dy = g.y() - y_target;
  return 0.5 * (dx * dx + dy * dy) + kappa * (1.0 - std::cos(g.theta() - theta_target));
}

ChartCovector QuadraticTerminalCost::chart_gradient(const GroupElement & g) const
{
  return {g.x() - x_target, g.y() - y_target, kappa * std::sin(g.theta() - theta_target)};
}

Momentum QuadraticTerminalCost::momentum(const GroupElement & g) const
{
  return left_trivialize(g, chart_gradient(g));
}

HybridSystemDef plant_system(const PlantParams & params, ControlLaw controls)
{
  HybridSystemDef sys;
  sys.dimension = 4;
  sys.field     = [params, controls = std::move(controls)](double t, const State & x, std::size_t segment) {
    const Eigen::Vector3d uvw = controls(t, segment);
    const double v            = params.actuation() == Actuation::full ? uvw[1] : 0.0;
    const Eigen::Vector3d d   = plant_field(chart_point(x), uvw[0], uvw[2], params, v);
    State out(4);
    out << d, 0.5 * (uvw[0] * uvw[0] + v * v + uvw[2] * uvw[2]);
    return out;
  };
  sys.guard = [params](const State & x) { return params.guard(x[2]); };
  sys.backward_guard = [params](const State & x) { return signed_gap(x[2], params.landing_angle()); };
  // the plant reset is single-valued; both tags are admitted so one policy can drive plant and co-states
  sys.branch_tags = {Branch::plus, Branch::minus};
  sys.reset       = [params](const State & x, Branch) {
    const GroupElement g = mul(chart_point(x), params.reset_element());
    State out(4);
    out << g.x(), g.y(), g.theta(), x[3];
    return out;
  };
  sys.inverse_reset = [params](const State & x, Branch) {
    const GroupElement g = mul(chart_point(x), inv(params.reset_element()));
    State out(4);
    out << g.x(), g.y(), g.theta(), x[3];
    return out;
  };
  sys.max_guard_jump = std::numbers::pi;
  return sys;
}

HybridSystemDef reduced_system(const PlantParams & params)
{
  HybridSystemDef sys;
  sys.dimension = 4;
  sys.field     = [](double, const State & x, std::size_t) -> State {
    return reduced_field({{x[0], x[1], x[2]}, {x[3]}});
  };
  sys.guard          = [params](const State & x) { return params.guard(x[3]); };
  sys.backward_guard = [params](const State & x) { return signed_gap(x[3], params.landing_angle()); };
  sys.branch_tags    = {Branch::plus, Branch::minus};
  sys.reset          = [params](const State & x, Branch b) {
    const Momentum mu = costate_jump({x[0], x[1], x[2]}, b, params);
    State out(4);
    out << mu.mu_x, mu.mu_y, mu.mu_theta, wrap_angle(x[3] + params.jump().theta);
    return out;
  };
  sys.inverse_reset = [params](const State & x, Branch b) {
    const Momentum mu = costate_jump_inverse({x[0], x[1], x[2]}, b, params);
    State out(4);
    out << mu.mu_x, mu.mu_y, mu.mu_theta, wrap_angle(x[3] - params.jump().theta);
    return out;
  };
  sys.max_guard_jump = std::numbers::pi;
  return sys;
}

HybridSystemDef extremal_system(const PlantParams & params)
{
  HybridSystemDef sys;
  sys.dimension = 7;
  sys.field     = [params](double, const State & x, std::size_t) {
    const Momentum mu       = {x[3], x[4], x[5]};
    const Controls ctl      = optimal_controls(mu);
    const Eigen::Vector3d g = plant_field(chart_point(x), ctl.u, ctl.omega, params);
    const Eigen::Vector4d m = reduced_field({mu, {x[2]}});
    State out(7);
    out << g, m.head<3>(), 0.5 * (ctl.u * ctl.u + ctl.omega * ctl.omega);
    return out;
  };
  sys.guard          = [params](const State & x) { return params.guard(x[2]); };
  sys.backward_guard = [params](const State & x) { return signed_gap(x[2], params.landing_angle()); };
  sys.branch_tags    = {Branch::plus, Branch::minus};
  sys.reset          = [params](const State & x, Branch b) {
    const GroupElement g = mul(chart_point(x), params.reset_element());
    const Momentum mu    = costate_jump({x[3], x[4], x[5]}, b, params);
    State out(7);
    out << g.x(), g.y(), g.theta(), mu.mu_x, mu.mu_y, mu.mu_theta, x[6];
    return out;
  };
  sys.inverse_reset = [params](const State & x, Branch b) {
    const GroupElement g = mul(chart_point(x), inv(params.reset_element()));
    const Momentum mu    = costate_jump_inverse({x[3], x[4], x[5]}, b, params);
    State out(7);
    out << g.x(), g.y(), g.theta(), mu.mu_x, mu.mu_y, mu.mu_theta, x[6];
    return out;
  };
  sys.max_guard_jump = std::numbers::pi;
  return sys;
}

HybridSystemDef reconstructed_system(double C, double D, const PlantParams & params)
{
  HybridSystemDef sys;
  sys.dimension = 5;
  sys.field     = [C, D](double, const State & x, std::size_t) {
    const Eigen::Vector4d d = reconstructed_field({x[0], x[1], x[2], x[3]}, C, D);
    const double u          = -C * std::cos(D + x[2]);
    State out(5);
    out << d, 0.5 * (u * u + x[3] * x[3]);
    return out;
  };
  sys.guard          = [params](const State & x) { return params.guard(x[2]); };
  sys.backward_guard = [params](const State & x) { return signed_gap(x[2], params.landing_angle()); };
  sys.branch_tags    = {Branch::plus, Branch::minus};
  auto jump          = [C, D, params](const State & x, Branch b, const GroupElement & h) {
    const GroupElement g = mul(chart_point(x), h);
    const double c_old   = C * std::cos(D + x[2]);
    const double c_new   = C * std::cos(D + g.theta());
    State out(5);
    out << g.x(), g.y(), g.theta(), energy_matched(x[3], c_old * c_old, c_new * c_new, b), x[4];
    return out;
  };
  sys.reset         = [jump, params](const State & x, Branch b) { return jump(x, b, params.reset_element()); };
  sys.inverse_reset = [jump, params](const State & x, Branch b) { return jump(x, b, inv(params.reset_element())); };
  sys.max_guard_jump = std::numbers::pi;
  return sys;
}

}  // namespace hlp
