#pragma once

#include <stdexcept>
#include <string>

namespace hlp {

/// A caller broke an operation's documented precondition.
class PreconditionError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Integration produced a non-finite state.
class NumericalBlowup : public std::runtime_error
{
public:
  NumericalBlowup(const std::string & what, double t) : std::runtime_error(what), time_(t) {}
  double time() const noexcept { return time_; }

private:
  double time_;
};

/// Event bisection failed to shrink its bracket.
class MaxBisectionDepth : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// More resets than ExecConfig::max_events (Zeno suspicion).
class MaxEventsExceeded : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class InverseResetUnavailable : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

/// The Casimir chart angle is undefined at mu_x = mu_y = 0.
class OriginMomentum : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// Energy matching across a reset has no real solution.
class NoRealRoot : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

}  // namespace hlp
