#include "hlp/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "hlp/errors.hpp"

namespace hlp {

namespace {

constexpr int kMaxBisections = 128;

double sign_of(double v) { return (v > 0.0) - (v < 0.0); }

bool all_finite(const State & x) { return x.allFinite(); }

struct Leg
{
  Arc arc;
  std::optional<EventLocation> hit;
};

/**
 * Integrate from (t_start, x) towards t_end (either direction) until the guard
 * is crossed. Crossings whose localized time is not past `armed_from` (in the
 * direction of integration) are ignored.
 */
Leg flow_leg(
  const VectorField & field,
  const GuardFunction & guard,
  double max_guard_jump,
  const State & x_start,
  double t_start,
  double t_end,
  double armed_from,
  const ExecConfig & config)
{
  Leg leg;
  leg.arc.t_start = t_start;
  leg.arc.t_end   = t_start;
  leg.arc.times.push_back(t_start);
  leg.arc.states.push_back(x_start);
  if (t_end == t_start) { return leg; }

  const double dir  = t_end > t_start ? 1.0 : -1.0;
  const double span = std::abs(t_end - t_start);
  const auto n_full = static_cast<std::size_t>(std::floor(span / config.step + 1e-9));
  const double land_tol = 1e-12 * std::max(1.0, std::abs(t_end));

  double t_prev  = t_start;
  State x_prev   = x_start;
  double g_prev  = guard(x_prev);

  auto advance_to = [&](double t_next) -> bool {
    State x_next = rk4_step(field, t_prev, x_prev, t_next - t_prev);
    const double g_next = guard(x_next);
    const bool armed    = dir * (t_next - armed_from) > 0.0;
    const bool crossed  = g_prev != 0.0 && sign_of(g_prev) != sign_of(g_next)
                        && std::abs(g_next - g_prev) <= max_guard_jump;
    if (armed && crossed) {
      EventLocation loc;
      if (g_next == 0.0) {
        loc = {t_next, x_next};
      } else {
        loc = locate_event(field, guard, t_prev, x_prev, t_next, x_next, config);
      }
      if (dir * (loc.time - armed_from) >= 0.0) {
        if (loc.time == leg.arc.times.back()) {
          leg.arc.states.back() = loc.state;
        } else {
          leg.arc.times.push_back(loc.time);
          leg.arc.states.push_back(loc.state);
        }
        leg.arc.t_end = loc.time;
        leg.hit       = std::move(loc);
        return false;
      }
    }
    leg.arc.times.push_back(t_next);
    leg.arc.states.push_back(x_next);
    leg.arc.t_end = t_next;
    t_prev        = t_next;
    x_prev        = std::move(x_next);
    g_prev        = g_next;
    return true;
  };

  for (std::size_t k = 1; k <= n_full; ++k) {
    double t_k = t_start + dir * static_cast<double>(k) * config.step;
    if (k == n_full && std::abs(t_end - t_k) <= land_tol) { t_k = t_end; }
    if (!advance_to(t_k)) { return leg; }
  }
  if (t_prev != t_end) { advance_to(t_end); }
  return leg;
}

struct Cursor
{
  HybridTrajectory traj;
  State x;
  double t{0.0};
  double armed_from{0.0};
};

void grow_tree(
  const HybridSystemDef & system,
  Cursor cursor,
  double tf,
  const ExecConfig & config,
  std::size_t depth,
  const BranchPolicy & tail,
  std::vector<HybridTrajectory> & leaves)
{
  for (;;) {
    const std::size_t segment = cursor.traj.events.size();
    const VectorField field   = [&system, segment](double t, const State & x) { return system.field(t, x, segment); };
    Leg leg = flow_leg(
      field, system.guard, system.max_guard_jump, cursor.x, cursor.t, tf, cursor.armed_from, config);
    cursor.traj.arcs.push_back(std::move(leg.arc));
    if (!leg.hit) {
      leaves.push_back(std::move(cursor.traj));
      return;
    }
    if (cursor.traj.events.size() >= config.max_events) {
      std::ostringstream msg;
      msg << "more than " << config.max_events << " events before t = " << leg.hit->time;
      throw MaxEventsExceeded(msg.str());
    }

    const std::size_t index = cursor.traj.events.size();
    std::vector<Branch> choices;
    if (index < depth) {
      choices = system.branch_tags;
    } else {
      choices = {tail(index, leg.hit->state)};
    }

    for (std::size_t c = 0; c < choices.size(); ++c) {
      const Branch b = choices[c];
      if (std::find(system.branch_tags.begin(), system.branch_tags.end(), b) == system.branch_tags.end()) {
        throw PreconditionError("branch policy chose a tag the system does not admit");
      }
      State post = system.reset(leg.hit->state, b);
      if (!all_finite(post)) { throw NumericalBlowup("reset produced a non-finite state", leg.hit->time); }

      Cursor next     = (c + 1 == choices.size()) ? std::move(cursor) : cursor;
      next.traj.events.push_back({leg.hit->time, leg.hit->state, post, b});
      next.x          = std::move(post);
      next.t          = leg.hit->time;
      next.armed_from = leg.hit->time + config.min_dwell;
      if (c + 1 == choices.size()) {
        cursor = std::move(next);
      } else {
        grow_tree(system, std::move(next), tf, config, depth, tail, leaves);
      }
    }
  }
}

}  // namespace

char branch_symbol(Branch b) { return b == Branch::plus ? '+' : '-'; }

void ExecConfig::validate() const
{
  if (!(step > 0.0) || !std::isfinite(step)) { throw PreconditionError("exec.step must be positive"); }
  if (!(event_tol > 0.0)) { throw PreconditionError("exec.event_tol must be positive"); }
  if (!(event_tol < step)) { throw PreconditionError("exec.event_tol must be smaller than exec.step"); }
  if (max_events == 0) { throw PreconditionError("exec.max_events must be positive"); }
  if (!(min_dwell >= 2.0 * event_tol)) { throw PreconditionError("exec.min_dwell must be at least 2 * event_tol"); }
}

std::string HybridTrajectory::branch_path() const
{
  std::string path;
  for (const auto & e : events) { path.push_back(branch_symbol(e.branch)); }
  return path;
}

State HybridTrajectory::sample(double t, std::size_t segment) const
{
  const Arc & arc = arcs.at(std::min(segment, arcs.size() - 1));
  if (arc.times.size() == 1 || t <= arc.times.front()) { return arc.states.front(); }
  if (t >= arc.times.back()) { return arc.states.back(); }
  const auto it = std::upper_bound(arc.times.begin(), arc.times.end(), t);
  const auto i  = static_cast<std::size_t>(it - arc.times.begin());
  const double w = (t - arc.times[i - 1]) / (arc.times[i] - arc.times[i - 1]);
  return (1.0 - w) * arc.states[i - 1] + w * arc.states[i];
}

BranchPolicy always_plus()
{
  return [](std::size_t, const State &) { return Branch::plus; };
}

BranchPolicy always_minus()
{
  return [](std::size_t, const State &) { return Branch::minus; };
}

BranchPolicy branch_sequence(std::vector<Branch> choices, Branch fallback)
{
  return [choices = std::move(choices), fallback](std::size_t i, const State &) {
    return i < choices.size() ? choices[i] : fallback;
  };
}

State rk4_step(const VectorField & field, double t, const State & x, double h)
{
  const State k1 = field(t, x);
  const State k2 = field(t + 0.5 * h, x + 0.5 * h * k1);
  const State k3 = field(t + 0.5 * h, x + 0.5 * h * k2);
  const State k4 = field(t + h, x + h * k3);
  State out      = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!all_finite(out)) {
    std::ostringstream msg;
    msg << "non-finite state after RK4 step from t = " << t << " (h = " << h << "), x = [" << x.transpose() << "]";
    throw NumericalBlowup(msg.str(), t);
  }
  return out;
}

Arc integrate_arc(const VectorField & field, const State & x0, double t0, double t1, const ExecConfig & config)
{
  const GuardFunction never = [](const State &) { return 1.0; };
  return flow_leg(field, never, 0.0, x0, t0, t1, t0, config).arc;
}

EventLocation locate_event(
  const VectorField & field,
  const GuardFunction & guard,
  double t_lo,
  const State & x_lo,
  double t_hi,
  const State & x_hi,
  const ExecConfig & config)
{
  const double g_lo = guard(x_lo);
  const double g_hi = guard(x_hi);
  if (!(g_lo * g_hi < 0.0)) { throw PreconditionError("locate_event: guard does not change sign over the bracket"); }
  if (std::abs(t_hi - t_lo) > config.step * (1.0 + 1e-9)) {
    throw PreconditionError("locate_event: bracket is wider than one integration step");
  }

  double a = t_lo, b = t_hi;
  State x_a = x_lo;
  int halvings = 0;
  while (std::abs(b - a) >= config.event_tol) {
    if (++halvings > kMaxBisections) {
      std::ostringstream msg;
      msg << "bisection did not shrink the bracket [" << a << ", " << b << "] below " << config.event_tol;
      throw MaxBisectionDepth(msg.str());
    }
    const double mid = a + 0.5 * (b - a);
    if (mid == a || mid == b) { continue; }
    State x_mid        = rk4_step(field, t_lo, x_lo, mid - t_lo);
    const double g_mid = guard(x_mid);
    if (g_mid == 0.0) { return {mid, std::move(x_mid)}; }
    if (sign_of(g_mid) == sign_of(g_lo)) {
      a   = mid;
      x_a = std::move(x_mid);
    } else {
      b = mid;
    }
  }
  return {a, std::move(x_a)};
}

HybridTrajectory execute(
  const HybridSystemDef & system,
  const State & x0,
  double t0,
  double tf,
  const ExecConfig & config,
  const BranchPolicy & policy)
{
  auto leaves = execute_tree(system, x0, t0, tf, config, 0, policy);
  return std::move(leaves.front());
}

std::vector<HybridTrajectory> execute_tree(
  const HybridSystemDef & system,
  const State & x0,
  double t0,
  double tf,
  const ExecConfig & config,
  std::size_t depth,
  const BranchPolicy & tail)
{
  config.validate();
  if (static_cast<std::size_t>(x0.size()) != system.dimension) {
    throw PreconditionError("initial state has the wrong dimension");
  }
  if (tf < t0) { throw PreconditionError("execute: tf must not precede t0"); }
  if (system.guard(x0) == 0.0) { throw PreconditionError("execute: initial state lies on the guard"); }

  std::vector<HybridTrajectory> leaves;
  Cursor start{{}, x0, t0, t0};
  grow_tree(system, std::move(start), tf, config, std::min(depth, config.max_events), tail, leaves);
  return leaves;
}

HybridTrajectory execute_backward(
  const HybridSystemDef & system,
  const State & x_T,
  double tf,
  double t0,
  const ExecConfig & config,
  const BranchPolicy & policy)
{
  config.validate();
  if (!system.inverse_reset) { throw InverseResetUnavailable("system has no inverse reset"); }
  if (static_cast<std::size_t>(x_T.size()) != system.dimension) {
    throw PreconditionError("terminal state has the wrong dimension");
  }
  if (t0 > tf) { throw PreconditionError("execute_backward: t0 must not follow tf"); }
  const GuardFunction & guard = system.backward_guard ? system.backward_guard : system.guard;
  if (guard(x_T) == 0.0) { throw PreconditionError("execute_backward: terminal state lies on the guard"); }

  HybridTrajectory reversed;
  State x           = x_T;
  double t          = tf;
  double armed_from = tf;
  for (;;) {
    const std::size_t undone = reversed.events.size();
    const VectorField field  = [&system, undone](double s, const State & y) { return system.field(s, y, undone); };
    Leg leg = flow_leg(field, guard, system.max_guard_jump, x, t, t0, armed_from, config);
    reversed.arcs.push_back(std::move(leg.arc));
    if (!leg.hit) { break; }
    if (reversed.events.size() >= config.max_events) {
      std::ostringstream msg;
      msg << "more than " << config.max_events << " events in reverse time after t = " << leg.hit->time;
      throw MaxEventsExceeded(msg.str());
    }
    const Branch b = policy(reversed.events.size(), leg.hit->state);
    State pre      = system.inverse_reset(leg.hit->state, b);
    if (!all_finite(pre)) { throw NumericalBlowup("inverse reset produced a non-finite state", leg.hit->time); }
    reversed.events.push_back({leg.hit->time, pre, leg.hit->state, b});
    x          = std::move(pre);
    t          = leg.hit->time;
    armed_from = t - config.min_dwell;
  }

  HybridTrajectory out;
  out.arcs.reserve(reversed.arcs.size());
  for (auto it = reversed.arcs.rbegin(); it != reversed.arcs.rend(); ++it) {
    Arc arc = std::move(*it);
    std::reverse(arc.times.begin(), arc.times.end());
    std::reverse(arc.states.begin(), arc.states.end());
    std::swap(arc.t_start, arc.t_end);
    out.arcs.push_back(std::move(arc));
  }
  out.events.assign(
    std::make_move_iterator(reversed.events.rbegin()), std::make_move_iterator(reversed.events.rend()));
  return out;
}

}  // namespace hlp
