#include <gtest/gtest.h>

#include <cmath>

#include "boltz/velocity_grid.hpp"
#include "support.hpp"

using boltz::VelocityGrid;

TEST(VelocityGrid, NodeSpacingAndDualLattice) {
  VelocityGrid g(16, 8.0);
  EXPECT_DOUBLE_EQ(g.dv(), 1.0);
  EXPECT_DOUBLE_EQ(g.dzeta(), M_PI / 8.0);
  EXPECT_DOUBLE_EQ(g.node(0), -8.0);
  EXPECT_DOUBLE_EQ(g.node(8), 0.0);
  EXPECT_DOUBLE_EQ(g.node(15), 7.0);
  EXPECT_DOUBLE_EQ(g.fourier_node(8), 0.0);
  // dv * dzeta * N = 2 pi for every lattice.
  for (int n : {4, 8, 10, 32}) {
    VelocityGrid h(n, 3.7);
    EXPECT_NEAR(h.dv() * h.dzeta() * n, 2.0 * M_PI, 1e-13);
  }
}

TEST(VelocityGrid, RejectsOddOrTinyN) {
  EXPECT_THROW(VelocityGrid(7, 1.0), std::invalid_argument);
  EXPECT_THROW(VelocityGrid(2, 1.0), std::invalid_argument);
  EXPECT_THROW(VelocityGrid(8, 0.0), std::invalid_argument);
  EXPECT_THROW(boltz::choose_domain(-1.0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(boltz::choose_domain(2.5), 5.0);
}

TEST(VelocityGrid, FlatIndexRoundTrip) {
  VelocityGrid g(6, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto k = g.unflat(i);
    EXPECT_EQ(g.flat(k[0], k[1], k[2]), i);
  }
  EXPECT_EQ(g.flat(1, 2, 3), static_cast<std::size_t>((1 * 6 + 2) * 6 + 3));
}

TEST(VelocityGrid, TrapezoidWeightsIntegratePolynomials) {
  // The trapezoid rule on [-L, L - dv] integrates constants exactly.
  VelocityGrid g(8, 2.0);
  double total = 0.0;
  for (double w : g.quad_weights()) total += w;
  const double side = 2.0 * g.half_width() - g.dv();
  EXPECT_NEAR(total, side * side * side, 1e-12);
  EXPECT_DOUBLE_EQ(g.quad_weight_1d(0), 0.5 * g.dv());
  EXPECT_DOUBLE_EQ(g.quad_weight_1d(7), 0.5 * g.dv());
  EXPECT_DOUBLE_EQ(g.quad_weight_1d(3), g.dv());
}

TEST(VelocityGrid, GaussianMassToTruncationAccuracy) {
  VelocityGrid g(32, 8.0);
  double mass = 0.0;
  const auto w = g.quad_weights();
  for (std::size_t i = 0; i < g.size(); ++i) {
    mass += w[i] * testing_support::gaussian(g.velocity(i), {0, 0, 0}, {1, 1, 1});
  }
  EXPECT_NEAR(mass, 1.0, 1e-12);
}

TEST(VelocityGrid, BoundaryMassFraction) {
  VelocityGrid g(4, 1.0);
  std::vector<double> f(g.size(), 0.0);
  f[g.flat(1, 1, 1)] = 1.0;
  EXPECT_DOUBLE_EQ(g.boundary_mass_fraction(f), 0.0);
  f[g.flat(0, 1, 1)] = 2.0;  // weight is half the interior weight
  EXPECT_NEAR(g.boundary_mass_fraction(f), 0.5, 1e-15);
}

TEST(VelocityGrid, Equality) {
  EXPECT_EQ(VelocityGrid(8, 2.0), VelocityGrid(8, 2.0));
  EXPECT_FALSE(VelocityGrid(8, 2.0) == VelocityGrid(8, 2.5));
}
