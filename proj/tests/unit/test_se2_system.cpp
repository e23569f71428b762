#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hlp/errors.hpp"
#include "hlp/se2_system.hpp"
#include "hlp/solver.hpp"
#include "oracles.hpp"

using namespace hlp;
using std::numbers::pi;

namespace {

const PlantParams standard = PlantParams::standard();

Momentum random_momentum() { return {oracle::uniform(-2, 2), oracle::uniform(-2, 2), oracle::uniform(-2, 2)}; }

void expect_momentum(const Momentum & a, const Momentum & b, double tol)
{
  EXPECT_NEAR(a.mu_x, b.mu_x, tol);
  EXPECT_NEAR(a.mu_y, b.mu_y, tol);
  EXPECT_NEAR(a.mu_theta, b.mu_theta, tol);
}

/// h(Ad*_{h0} mu + eps e3) - h(mu), the energy condition of the co-state jump.
std::function<double(double)> jump_energy(const Momentum & mu, const PlantParams & params)
{
  const Eigen::Vector3d rotated = oracle::coadjoint_by_conjugation(params.reset_element().matrix(), mu.coeffs());
  return [rotated, mu](double eps) {
    const double mx = rotated[0], mt = rotated[2] + eps;
    return -0.5 * (mx * mx + mt * mt) + 0.5 * (mu.mu_x * mu.mu_x + mu.mu_theta * mu.mu_theta);
  };
}

}  // namespace

TEST(PlantParams, RejectsTranslationOnlyReset)
{
  EXPECT_THROW(PlantParams(pi / 2, JumpOffset{1, 0, 0}), PreconditionError);
  EXPECT_THROW(PlantParams(pi / 2, JumpOffset{1, 0, 2 * pi}), PreconditionError);
  EXPECT_NO_THROW(PlantParams(pi / 2, JumpOffset{1, 0, 0.5}));
  EXPECT_NEAR(standard.landing_angle(), 3 * pi / 2, 1e-15);
}

TEST(PlantField, Examples)
{
  EXPECT_TRUE(plant_field({0, 0, 0}, 1, 0, standard).isApprox(Eigen::Vector3d(1, 0, 0)));
  const Eigen::Vector3d d = plant_field({0, 0, pi / 2}, 1, 0, standard);
  EXPECT_NEAR(d[0], 0.0, 1e-15);
  EXPECT_NEAR(d[1], -1.0, 1e-15);
  const PlantParams full(pi / 2, JumpOffset{}, Actuation::full);
  EXPECT_TRUE(plant_field({0, 0, 0}, 0, 0, full, 1.0).isApprox(Eigen::Vector3d(0, 1, 0)));
  // v is ignored when under-actuated
  EXPECT_TRUE(plant_field({0, 0, 0}, 0, 0, standard, 1.0).isZero());
}

TEST(PlantReset, Examples)
{
  const GroupElement g = plant_reset({0, 0, pi / 2}, standard);
  EXPECT_NEAR(g.x(), 0.0, 1e-15);
  EXPECT_NEAR(g.y(), -1.0, 1e-15);
  EXPECT_NEAR(g.theta(), 3 * pi / 2, 1e-15);
  EXPECT_THROW(plant_reset({0, 0, 0.3}, standard), PreconditionError);
  for (int i = 0; i < 100; ++i) {
    const GroupElement a{oracle::uniform(-3, 3), oracle::uniform(-3, 3), pi / 2};
    const Eigen::Vector3d want = oracle::chart(a.matrix() * standard.reset_element().matrix());
    const GroupElement got     = plant_reset(a, standard);
    EXPECT_NEAR(got.x(), want[0], 1e-12);
    EXPECT_NEAR(got.y(), want[1], 1e-12);
    EXPECT_NEAR(got.y(), a.y() - 1.0, 1e-12);
    const GroupElement k = GroupElement::translation(oracle::uniform(-3, 3), oracle::uniform(-3, 3));
    EXPECT_LT(group_distance(plant_reset(mul(k, a), standard), mul(k, plant_reset(a, standard))), 1e-12);
  }
}

TEST(RestrictedHamiltonian, Examples)
{
  EXPECT_DOUBLE_EQ(restricted_hamiltonian({}), 0.0);
  EXPECT_DOUBLE_EQ(restricted_hamiltonian({1, 5, 2}), -2.5);
}

TEST(RestrictedHamiltonian, EqualsGridMinimum)
{
  for (int i = 0; i < 10; ++i) {
    const Momentum mu = random_momentum();
    const double want = oracle::grid_minimum(
      [&mu](double u, double w) { return mu.mu_x * u + mu.mu_theta * w + 0.5 * (u * u + w * w); }, 5.0);
    EXPECT_NEAR(restricted_hamiltonian(mu), want, 1e-6);
  }
}

TEST(OptimalControls, Examples)
{
  const Controls z = optimal_controls({0, 3, 0});
  EXPECT_EQ(z.u, 0.0);
  EXPECT_EQ(z.omega, 0.0);
  const Controls c = optimal_controls({1, 7, -2});
  EXPECT_DOUBLE_EQ(c.u, -1.0);
  EXPECT_DOUBLE_EQ(c.omega, 2.0);
  const Momentum mu{0.4, 2, -1.3};
  const Controls o = optimal_controls(mu);
  EXPECT_DOUBLE_EQ(mu.mu_x * o.u + mu.mu_theta * o.omega + 0.5 * (o.u * o.u + o.omega * o.omega),
                   restricted_hamiltonian(mu));
}

TEST(ReducedField, LiePoissonFlow)
{
  EXPECT_TRUE(reduced_field({{0, 0, 0}, {1.0}}).isZero());
  // mu_dot = (mu_y mu_theta, -mu_x mu_theta, -mu_x mu_y), q_dot = -mu_theta
  const Eigen::Vector4d d = reduced_field({{1, 2, 3}, {0.4}});
  EXPECT_TRUE(d.isApprox(Eigen::Vector4d(6, -3, -2, -3)));
  for (int i = 0; i < 20; ++i) {
    const Momentum mu = random_momentum();
    const Eigen::Vector4d f = reduced_field({mu, {0}});
    EXPECT_NEAR(mu.mu_x * f[0] + mu.mu_y * f[1], 0.0, 1e-14);           // Casimir
    EXPECT_NEAR(-mu.mu_x * f[0] - mu.mu_theta * f[2], 0.0, 1e-14);      // energy
  }
}

TEST(ReducedField, MatchesFullPmpAtAPoint)
{
  // d/dt left_trivialize(g, p) along the canonical flow equals the reduced field.
  for (int i = 0; i < 20; ++i) {
    PmpState s;
    s << oracle::uniform(-1, 1), oracle::uniform(-1, 1), oracle::uniform(0, 2 * pi), oracle::uniform(-1, 1),
      oracle::uniform(-1, 1), oracle::uniform(-1, 1);
    const PmpState d = full_pmp_field(s);
    const double h   = 1e-6;
    const PmpState a = s + h * d, b = s - h * d;
    const Momentum ma = left_trivialize({a[0], a[1], a[2]}, {a[3], a[4], a[5]});
    const Momentum mb = left_trivialize({b[0], b[1], b[2]}, {b[3], b[4], b[5]});
    const Eigen::Vector3d fd = (ma.coeffs() - mb.coeffs()) / (2 * h);
    const Momentum mu        = left_trivialize({s[0], s[1], s[2]}, {s[3], s[4], s[5]});
    EXPECT_LT((fd - reduced_field({mu, {s[2]}}).head<3>()).norm(), 1e-8);
  }
}

TEST(CostateJump, DefaultJumpValues)
{
  expect_momentum(costate_jump({1, 2, 3}, Branch::plus), {-1, -2, 3}, 1e-15);
  expect_momentum(costate_jump({1, 2, 3}, Branch::minus), {-1, -2, -3}, 1e-15);
  expect_momentum(costate_jump_inverse({-1, -2, 3}, Branch::plus), {1, 2, 3}, 1e-15);
}

TEST(CostateJump, RoundTripAndEnergy)
{
  for (int i = 0; i < 100; ++i) {
    const Momentum mu = random_momentum();
    for (Branch b : {Branch::plus, Branch::minus}) {
      const Momentum j = costate_jump(mu, b);
      expect_momentum(costate_jump(costate_jump_inverse(mu, b), b), mu, 1e-14);
      EXPECT_NEAR(restricted_hamiltonian(j), restricted_hamiltonian(mu), 1e-14);
      EXPECT_NEAR(restricted_hamiltonian(costate_jump_inverse(mu, b)), restricted_hamiltonian(mu), 1e-14);
      EXPECT_NEAR(casimir(j), casimir(mu), 1e-14);
    }
  }
}

TEST(CostateJump, RootScanOracle)
{
  for (int i = 0; i < 30; ++i) {
    Momentum mu = random_momentum();
    if (std::abs(mu.mu_theta) < 1e-3) { mu.mu_theta = 0.5; }
    const auto roots = oracle::scan_roots(jump_energy(mu, standard), -10, 10, 4000);
    ASSERT_EQ(roots.size(), 2u);
    const Eigen::Vector3d rotated = oracle::coadjoint_by_conjugation(standard.reset_element().matrix(), mu.coeffs());
    for (Branch b : {Branch::plus, Branch::minus}) {
      const double eps = costate_jump(mu, b).mu_theta - rotated[2];
      EXPECT_LT(std::min(std::abs(eps - roots[0]), std::abs(eps - roots[1])), 1e-8);
    }
  }
  const auto single = oracle::scan_roots(jump_energy({0.7, -0.4, 0.0}, standard), -10, 10, 4000);
  EXPECT_EQ(single.size(), 1u);
  expect_momentum(costate_jump({0.7, -0.4, 0.0}, Branch::plus), costate_jump({0.7, -0.4, 0.0}, Branch::minus), 0);
}

TEST(CostateJump, GeneralResetOffsets)
{
  const PlantParams odd(0.3, JumpOffset{0.5, -0.2, 0.9});
  for (int i = 0; i < 20; ++i) {
    const Momentum mu = {oracle::uniform(-0.5, 0.5), oracle::uniform(-0.5, 0.5), oracle::uniform(1, 2)};
    const Momentum j  = costate_jump(mu, Branch::plus, odd);
    EXPECT_NEAR(restricted_hamiltonian(j), restricted_hamiltonian(mu), 1e-13);
    expect_momentum(costate_jump_inverse(j, Branch::plus, odd), mu, 1e-12);
  }
  // energy matching can fail once the rotated mu_x grows too much
  const PlantParams quarter(0.3, JumpOffset{0, 0, pi / 2});
  EXPECT_THROW(costate_jump({0.0, 2.0, 0.1}, Branch::plus, quarter), NoRealRoot);
}

TEST(Casimir, ChartExamples)
{
  EXPECT_DOUBLE_EQ(casimir({3, 4, 9}), 5.0);
  const CasimirState cs = casimir_chart({1, 0, 0.2}, 0.0);
  EXPECT_DOUBLE_EQ(cs.alpha, 0.0);
  EXPECT_DOUBLE_EQ(cs.D, 0.0);
  EXPECT_THROW(casimir_chart({0, 0, 1}, 0.0), OriginMomentum);
  for (int i = 0; i < 50; ++i) {
    const Momentum mu = random_momentum();
    expect_momentum(momentum_from_chart(casimir_chart(mu, oracle::uniform(0, 6))), mu, 1e-12);
  }
}

TEST(Casimir, ReducedFieldExamples)
{
  EXPECT_TRUE(casimir_reduced_field({1, 0, 0, 0, 0}).isZero());
  // alpha_dot = -mu_theta under the Lie-Poisson flow
  const Eigen::Vector3d d = casimir_reduced_field({1, pi / 4, 0, 0, -1});
  EXPECT_NEAR(d[0], 1.0, 1e-15);
  EXPECT_NEAR(d[1], -0.5, 1e-15);
  EXPECT_NEAR(d[2], 1.0, 1e-15);
}

TEST(Casimir, ReducedFieldIsChartPushforward)
{
  for (int i = 0; i < 30; ++i) {
    const Momentum mu    = random_momentum();
    const double theta   = oracle::uniform(0, 2 * pi);
    const Eigen::Vector4d f = reduced_field({mu, {theta}});
    const double h       = 1e-6;
    auto chart_at        = [&](double s) {
      return casimir_chart(Momentum::from_coeffs(mu.coeffs() + s * f.head<3>()), theta + s * f[3]);
    };
    const CasimirState a = chart_at(h), b = chart_at(-h);
    const CasimirState c = casimir_chart(mu, theta);
    const Eigen::Vector3d want = casimir_reduced_field(c);
    EXPECT_NEAR(signed_gap(a.alpha, b.alpha) / (2 * h), want[0], 1e-6);
    EXPECT_NEAR((a.mu_theta - b.mu_theta) / (2 * h), want[1], 1e-6);
    EXPECT_NEAR((a.theta - b.theta) / (2 * h), want[2], 1e-6);
    EXPECT_NEAR(signed_gap(a.D, b.D), 0.0, 1e-12);  // D is a constant of the flow
  }
}

TEST(Casimir, ResetExamplesAndInvariance)
{
  const CasimirState out = casimir_reduced_reset({1, 0, 0, pi / 2, 1}, Branch::plus);
  EXPECT_NEAR(out.alpha, pi, 1e-15);
  EXPECT_NEAR(out.mu_theta, 1.0, 1e-15);
  EXPECT_NEAR(out.theta, 3 * pi / 2, 1e-15);
  EXPECT_THROW(casimir_reduced_reset({1, 0, 0, 0.2, 1}, Branch::plus), PreconditionError);
  for (int i = 0; i < 50; ++i) {
    const Momentum mu    = random_momentum();
    const CasimirState c = casimir_chart(mu, pi / 2);
    for (Branch b : {Branch::plus, Branch::minus}) {
      const CasimirState r = casimir_reduced_reset(c, b);
      EXPECT_NEAR(signed_gap(r.D, c.D), 0.0, 1e-12);
      EXPECT_NEAR(r.C, c.C, 0);
      expect_momentum(momentum_from_chart(r), costate_jump(mu, b), 1e-12);
    }
  }
}

TEST(PlanarHamiltonian, Examples)
{
  EXPECT_NEAR(planar_hamiltonian(0.4, 0.0, 2.0, -0.4), -1.0, 1e-15);  // 2D + 2theta = 0 -> -C^2/4
  EXPECT_NEAR(planar_hamiltonian(0.0, -1.0, 1.0, 1.0), -0.5 - 0.25 * std::cos(2.0), 1e-15);
  EXPECT_NEAR(planar_hamiltonian(0.0, -1.0, 1.0, 1.0), -0.3960, 1e-4);
  for (int i = 0; i < 30; ++i) {
    const Momentum mu  = random_momentum();
    const double theta = oracle::uniform(0, 2 * pi);
    const CasimirState c = casimir_chart(mu, theta);
    EXPECT_NEAR(planar_hamiltonian(theta, mu.mu_theta, c.C, c.D), restricted_hamiltonian(mu) + 0.25 * c.C * c.C, 1e-12);
  }
}

TEST(ReconstructedField, Examples)
{
  const Eigen::Vector4d z = reconstructed_field({0, 0, 1.0, 0.7}, 0.0, 0.3);
  EXPECT_TRUE(z.isApprox(Eigen::Vector4d(0, 0, -0.7, 0)));
  const Eigen::Vector4d d = reconstructed_field({0, 0, 0, -1}, 1.0, 1.0);
  EXPECT_NEAR(d[0], -std::cos(1.0), 1e-15);
  EXPECT_NEAR(d[1], 0.0, 1e-15);
  EXPECT_NEAR(d[2], 1.0, 1e-15);
  EXPECT_NEAR(d[3], -std::sin(1.0) * std::cos(1.0), 1e-15);
}

TEST(ReconstructedField, MatchesPlantUnderOptimalControls)
{
  for (int i = 0; i < 30; ++i) {
    const double C = oracle::uniform(0, 2), D = oracle::uniform(0, 2 * pi), theta = oracle::uniform(0, 2 * pi);
    const double mt = oracle::uniform(-2, 2);
    const Momentum mu = momentum_from_chart({C, wrap_angle(D + theta), D, theta, mt});
    const Controls u  = optimal_controls(mu);
    const Eigen::Vector3d plant = plant_field({0, 0, theta}, u.u, u.omega, standard);
    const Eigen::Vector4d rec   = reconstructed_field({0, 0, theta, mt}, C, D);
    EXPECT_LT((rec.head<3>() - plant).norm(), 1e-12);
    EXPECT_NEAR(rec[3], reduced_field({mu, {theta}})[2], 1e-12);
  }
}

TEST(ReconstructedReset, Examples)
{
  const ReconstructedState p = reconstructed_reset({0, 0, pi / 2, -1}, Branch::plus, 1.0, 1.0);
  EXPECT_NEAR(p.x, 0, 1e-15);
  EXPECT_NEAR(p.y, -1, 1e-15);
  EXPECT_NEAR(p.theta, 3 * pi / 2, 1e-15);
  EXPECT_NEAR(p.mu_theta, -1, 1e-15);
  const ReconstructedState m = reconstructed_reset({0, 0, pi / 2, -1}, Branch::minus, 1.0, 1.0);
  EXPECT_NEAR(m.mu_theta, 1, 1e-15);
  for (int i = 0; i < 20; ++i) {
    const ReconstructedState s{oracle::uniform(-3, 3), oracle::uniform(-3, 3), pi / 2, oracle::uniform(-2, 2)};
    EXPECT_NEAR(reconstructed_reset(s, Branch::plus, 1.3, 0.2).y, s.y - 1.0, 1e-12);
  }
}

TEST(FullPmp, FieldProperties)
{
  PmpState zero = PmpState::Zero();
  zero[2]       = 0.4;
  EXPECT_TRUE(full_pmp_field(zero).isZero());
  for (int i = 0; i < 20; ++i) {
    PmpState s;
    s << 0, 0, oracle::uniform(0, 6), oracle::uniform(-1, 1), oracle::uniform(-1, 1), oracle::uniform(-1, 1);
    const PmpState d = full_pmp_field(s);
    const double u   = -(s[3] * std::cos(s[2]) - s[4] * std::sin(s[2]));
    EXPECT_LT((d.head<3>() - plant_field({0, 0, s[2]}, u, -s[5], standard)).norm(), 1e-14);
    // Hamilton's equations: dH/dtheta by finite differences
    PmpState a = s, b = s;
    a[2] += 1e-6;
    b[2] -= 1e-6;
    EXPECT_NEAR(d[5], -(full_hamiltonian(a) - full_hamiltonian(b)) / 2e-6, 1e-8);
  }
}

TEST(FullPmp, JumpCommutesWithReduction)
{
  for (int i = 0; i < 50; ++i) {
    PmpState s;
    s << oracle::uniform(-2, 2), oracle::uniform(-2, 2), pi / 2, oracle::uniform(-1, 1), oracle::uniform(-1, 1),
      oracle::uniform(-1, 1);
    for (Branch b : {Branch::plus, Branch::minus}) {
      const PmpState j = full_pmp_jump(s, b);
      EXPECT_NEAR(full_hamiltonian(j), full_hamiltonian(s), 1e-12);
      EXPECT_NEAR(j[1], s[1] - 1.0, 1e-12);
      const Momentum lhs = left_trivialize({j[0], j[1], j[2]}, {j[3], j[4], j[5]});
      const Momentum rhs = costate_jump(left_trivialize({s[0], s[1], s[2]}, {s[3], s[4], s[5]}), b);
      expect_momentum(lhs, rhs, 1e-9);
    }
  }
}

TEST(TerminalMomentum, Examples)
{
  expect_momentum(terminal_momentum({0.3, 1, 2}, [](const GroupElement &) { return 4.0; }), {}, 1e-12);
  auto x_coord = [](const GroupElement & g) { return g.x(); };
  expect_momentum(terminal_momentum(GroupElement::identity(), x_coord), {1, 0, 0}, 1e-9);
  expect_momentum(terminal_momentum({0, 0, pi / 2}, x_coord), {0, 1, 0}, 1e-9);
  expect_momentum(terminal_momentum({0, 0, pi / 2}, x_coord), left_trivialize({0, 0, pi / 2}, {1, 0, 0}), 1e-9);
}

TEST(TerminalMomentum, QuadraticCostAnalytic)
{
  for (int i = 0; i < 30; ++i) {
    const QuadraticTerminalCost phi{oracle::uniform(-1, 1), oracle::uniform(-1, 1), oracle::uniform(0, 6),
                                    oracle::uniform(0.5, 2)};
    const GroupElement g{oracle::uniform(-2, 2), oracle::uniform(-2, 2), oracle::uniform(0, 6)};
    expect_momentum(terminal_momentum(g, phi), phi.momentum(g), 1e-8);
  }
}
