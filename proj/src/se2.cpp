#include "hlp/se2.hpp"

#include <cmath>

namespace hlp {

double wrap_angle(double a)
{
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) { r += kTwoPi; }
  // fmod of a tiny negative number can round back up to 2pi
  if (r >= kTwoPi) { r = 0.0; }
  return r;
}

double signed_gap(double a, double b)
{
  double d = wrap_angle(a - b);
  if (d > std::numbers::pi) { d -= kTwoPi; }
  return d;
}

Eigen::Matrix3d AlgebraVector::matrix() const
{
  Eigen::Matrix3d m;
  m << 0.0, omega, u, -omega, 0.0, v, 0.0, 0.0, 0.0;
  return m;
}

AlgebraVector AlgebraVector::from_matrix(const Eigen::Matrix3d & m)
{
  return {m(0, 2), m(1, 2), m(0, 1)};
}

AlgebraVector AlgebraVector::basis(int i)
{
  switch (i) {
  case 0: return {1.0, 0.0, 0.0};
  case 1: return {0.0, 1.0, 0.0};
  default: return {0.0, 0.0, 1.0};
  }
}

GroupElement::GroupElement(double x, double y, double theta) : x_(x), y_(y), theta_(wrap_angle(theta)) {}

GroupElement GroupElement::from_matrix(const Eigen::Matrix3d & m)
{
  return {m(0, 2), m(1, 2), std::atan2(m(0, 1), m(0, 0))};
}

Eigen::Matrix3d GroupElement::matrix() const
{
  const double c = std::cos(theta_), s = std::sin(theta_);
  Eigen::Matrix3d m;
  m << c, s, x_, -s, c, y_, 0.0, 0.0, 1.0;
  return m;
}

GroupElement mul(const GroupElement & a, const GroupElement & b)
{
  const double c = std::cos(a.theta()), s = std::sin(a.theta());
  return {a.x() + c * b.x() + s * b.y(), a.y() - s * b.x() + c * b.y(), a.theta() + b.theta()};
}

GroupElement inv(const GroupElement & g)
{
  const double c = std::cos(g.theta()), s = std::sin(g.theta());
  // R^T (-t) with R = [[c, s], [-s, c]]
  return {-(c * g.x() - s * g.y()), -(s * g.x() + c * g.y()), -g.theta()};
}

GroupElement exp(const AlgebraVector & xi, double t)
{
  const double phi = xi.omega * t;
  const double u = xi.u * t, v = xi.v * t;
  if (std::abs(phi) < 1e-10) {
    // second-order Taylor limit of sin(phi)/phi and (1 - cos(phi))/phi
    return {u + 0.5 * phi * v, v - 0.5 * phi * u, phi};
  }
  const double a = std::sin(phi) / phi;
  const double b = (1.0 - std::cos(phi)) / phi;
  return {a * u + b * v, -b * u + a * v, phi};
}

double pair(const Momentum & mu, const AlgebraVector & xi)
{
  return mu.mu_x * xi.u + mu.mu_y * xi.v + mu.mu_theta * xi.omega;
}

Momentum left_trivialize(const GroupElement & g, const ChartCovector & p)
{
  const double c = std::cos(g.theta()), s = std::sin(g.theta());
  return {p.px * c - p.py * s, p.px * s + p.py * c, p.ptheta};
}

ChartCovector right_untrivialize(const GroupElement & g, const Momentum & mu)
{
  const double c = std::cos(g.theta()), s = std::sin(g.theta());
  return {mu.mu_x * c + mu.mu_y * s, -mu.mu_x * s + mu.mu_y * c, mu.mu_theta};
}

AlgebraVector adjoint(const GroupElement & h, const AlgebraVector & xi)
{
  // h xi h^-1 = [R Omega R^T, R t - Omega b]; the rotation block commutes with Omega.
  const double c = std::cos(h.theta()), s = std::sin(h.theta());
  return {
    c * xi.u + s * xi.v - xi.omega * h.y(),
    -s * xi.u + c * xi.v + xi.omega * h.x(),
    xi.omega,
  };
}

Momentum coadjoint(const GroupElement & h, const Momentum & mu)
{
  // transpose of adjoint() in the dual bases
  const double c = std::cos(h.theta()), s = std::sin(h.theta());
  return {
    c * mu.mu_x - s * mu.mu_y,
    s * mu.mu_x + c * mu.mu_y,
    mu.mu_theta - h.y() * mu.mu_x + h.x() * mu.mu_y,
  };
}

CosetPoint coset_project(const GroupElement & g) { return {g.theta()}; }

}  // namespace hlp
