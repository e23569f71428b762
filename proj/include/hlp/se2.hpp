#pragma once

/**
 * @file SE(2), its Lie algebra se(2) and coalgebra se(2)*.
 *
 * Group matrix form (note the transposed rotation block)
 * ------------------------------------------------------
 * [  cos(theta)  sin(theta)  x ]
 * [ -sin(theta)  cos(theta)  y ]
 * [      0           0       1 ]
 *
 * Algebra matrix form
 * -------------------
 * [   0    omega  u ]
 * [ -omega   0    v ]
 * [   0      0    0 ]
 *
 * Pairing: <(mu_x, mu_y, mu_theta), (u, v, omega)> = mu_x u + mu_y v + mu_theta omega.
 *
 * The translation subgroup K is normal and the coset space K\G is the circle of
 * headings, so the coset projection of g is simply g.theta().
 */

#include <Eigen/Core>

#include <numbers>

namespace hlp {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wrap an angle to [0, 2pi).
double wrap_angle(double a);

/// Minimal signed angular difference a - b, in (-pi, pi].
double signed_gap(double a, double b);

struct AlgebraVector
{
  double u{0.0};
  double v{0.0};
  double omega{0.0};

  Eigen::Matrix3d matrix() const;
  Eigen::Vector3d coeffs() const { return {u, v, omega}; }

  static AlgebraVector from_matrix(const Eigen::Matrix3d & m);
  static AlgebraVector basis(int i);

  friend AlgebraVector operator*(double s, const AlgebraVector & a) { return {s * a.u, s * a.v, s * a.omega}; }
  friend AlgebraVector operator+(const AlgebraVector & a, const AlgebraVector & b)
  {
    return {a.u + b.u, a.v + b.v, a.omega + b.omega};
  }
  bool operator==(const AlgebraVector &) const = default;
};

struct Momentum
{
  double mu_x{0.0};
  double mu_y{0.0};
  double mu_theta{0.0};

  Eigen::Vector3d coeffs() const { return {mu_x, mu_y, mu_theta}; }
  static Momentum from_coeffs(const Eigen::Vector3d & c) { return {c.x(), c.y(), c.z()}; }

  friend Momentum operator*(double s, const Momentum & m) { return {s * m.mu_x, s * m.mu_y, s * m.mu_theta}; }
  friend Momentum operator+(const Momentum & a, const Momentum & b)
  {
    return {a.mu_x + b.mu_x, a.mu_y + b.mu_y, a.mu_theta + b.mu_theta};
  }
  bool operator==(const Momentum &) const = default;
};

/// Covector in the (x, y, theta) chart, i.e. the canonical momentum of T*SE(2).
struct ChartCovector
{
  double px{0.0};
  double py{0.0};
  double ptheta{0.0};

  bool operator==(const ChartCovector &) const = default;
};

/// Element of K\G, the class of g modulo planar translations.
struct CosetPoint
{
  double q{0.0};  ///< heading in [0, 2pi)
};

/// Point of SE(2). The chart is the canonical storage; theta is kept in [0, 2pi).
class GroupElement
{
public:
  GroupElement() = default;
  GroupElement(double x, double y, double theta);

  static GroupElement identity() { return {}; }
  static GroupElement translation(double x, double y) { return {x, y, 0.0}; }
  static GroupElement from_matrix(const Eigen::Matrix3d & m);

  double x() const { return x_; }
  double y() const { return y_; }
  double theta() const { return theta_; }

  Eigen::Matrix3d matrix() const;

  bool operator==(const GroupElement &) const = default;

private:
  double x_{0.0};
  double y_{0.0};
  double theta_{0.0};
};

GroupElement mul(const GroupElement & a, const GroupElement & b);
GroupElement inv(const GroupElement & g);

/// exp(t xi), closed form; a Taylor branch handles |omega t| < 1e-10.
GroupElement exp(const AlgebraVector & xi, double t = 1.0);

double pair(const Momentum & mu, const AlgebraVector & xi);

/**
 * Left trivialization (l_g)^* p of a chart covector at g.
 *
 * Defined by <mu, xi> = <p, d/dt|0 g exp(t xi)> for all xi.
 */
Momentum left_trivialize(const GroupElement & g, const ChartCovector & p);

/// Inverse of left_trivialize at g.
ChartCovector right_untrivialize(const GroupElement & g, const Momentum & mu);

/// Ad_h xi = h xi h^-1.
AlgebraVector adjoint(const GroupElement & h, const AlgebraVector & xi);

/**
 * Coadjoint action Ad*_h mu, defined by <Ad*_h mu, xi> = <mu, h xi h^-1>.
 *
 * With this definition Ad*_{h1} Ad*_{h2} = Ad*_{h2 h1}.
 */
Momentum coadjoint(const GroupElement & h, const Momentum & mu);

CosetPoint coset_project(const GroupElement & g);

}  // namespace hlp
