#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "boltz/collision.hpp"
#include "boltz/oracle.hpp"
#include "support.hpp"

using namespace boltz;
using testing_support::gaussian;

namespace {

std::vector<double> sample(const VelocityGrid& grid, const Vec3& centre, const Vec3& temps,
                           double scale = 1.0) {
  std::vector<double> f(grid.size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = scale * gaussian(grid.velocity(j), centre, temps);
  return f;
}

std::vector<double> random_values(std::size_t m, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> f(m);
  for (auto& x : f) x = u(rng);
  return f;
}

}  // namespace

TEST(Transform, MatchesDirectSum) {
  for (int n : {4, 6, 8}) {
    VelocityGrid grid(n, 2.5);
    const auto f = random_values(grid.size(), 11 + n);
    const auto fast = forward_transform(f, grid);
    const auto slow = oracle::direct_transform(f, grid);
    double scale = 0.0, err = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      scale = std::max(scale, std::abs(slow[k]));
      err = std::max(err, std::abs(fast[k] - slow[k]));
    }
    EXPECT_LE(err, 1e-12 * scale) << "N=" << n;
  }
}

TEST(Transform, PointMassIsFlat) {
  VelocityGrid grid(8, 3.0);
  std::vector<double> f(grid.size(), 0.0);
  const double dv = grid.dv();
  f[grid.flat(4, 4, 4)] = 1.0 / (dv * dv * dv);
  const auto fhat = forward_transform(f, grid);
  const double expected = 1.0 / std::pow(2.0 * std::numbers::pi, 1.5);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    ASSERT_NEAR(fhat[k].real(), expected, 1e-14);
    ASSERT_NEAR(fhat[k].imag(), 0.0, 1e-14);
  }
}

TEST(Transform, GaussianMatchesAnalyticTransform) {
  VelocityGrid grid(32, 8.0);
  const auto f = sample(grid, {0, 0, 0}, {1, 1, 1}, std::pow(2.0 * std::numbers::pi, 1.5));
  const auto fhat = forward_transform(f, grid);
  double err = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec3 z = grid.frequency(k);
    const double exact = std::exp(-0.5 * (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]));
    err = std::max(err, std::abs(fhat[k] - exact));
  }
  EXPECT_LE(err, 1e-8);
}

TEST(Transform, RealInputIsConjugateSymmetric) {
  VelocityGrid grid(8, 2.0);
  const auto f = random_values(grid.size(), 3);
  const auto fhat = forward_transform(f, grid);
  const int n = grid.n();
  for (int a = 1; a < n; ++a) {
    for (int b = 1; b < n; ++b) {
      for (int c = 1; c < n; ++c) {
        const auto p = fhat[grid.flat(a, b, c)];
        const auto q = fhat[grid.flat(n - a, n - b, n - c)];
        ASSERT_NEAR(std::abs(p - std::conj(q)), 0.0, 1e-14);
      }
    }
  }
}

TEST(Transform, RoundTrip) {
  VelocityGrid grid(12, 3.0);
  const auto f = random_values(grid.size(), 8);
  const auto back = inverse_transform(forward_transform(f, grid), grid);
  EXPECT_LE(testing_support::rel_l2(back, f), 1e-13);
}

TEST(Transform, InverseRejectsNonHermitianInput) {
  VelocityGrid grid(4, 2.0);
  std::vector<std::complex<double>> v(grid.size(), 0.0);
  v[grid.flat(1, 2, 3)] = {0.0, 1.0};
  EXPECT_THROW(inverse_transform(SpectralDistribution(grid, v), grid), std::runtime_error);
  EXPECT_THROW(inverse_transform(SpectralDistribution(VelocityGrid(4, 3.0), v), grid),
               std::invalid_argument);
  EXPECT_THROW(forward_transform(std::vector<double>(10), grid), std::invalid_argument);
}

TEST(Collision, MassMomentVanishes) {
  // The Riemann sum of the inverse transform picks out Qhat(0), and every
  // weight in the zeta = 0 row is zero.
  VelocityGrid grid(8, 4.0);
  const auto table = precompute_table(grid, {1.0, 1.0});
  const auto f = sample(grid, {0.4, -0.2, 0.0}, {0.8, 1.2, 1.0});
  const auto q = collide(f, grid, table);
  double sum = 0.0, size = 0.0;
  for (double x : q) {
    sum += x;
    size += std::abs(x);
  }
  EXPECT_LE(std::abs(sum), 1e-12 * size);
}

TEST(Collision, QuadraticInDistribution) {
  VelocityGrid grid(8, 4.0);
  const auto table = precompute_table(grid, {0.0, 1.0});
  const auto f = sample(grid, {0.5, 0.0, 0.0}, {0.7, 1.0, 1.3});
  auto f2 = f;
  for (auto& x : f2) x *= 2.0;
  const auto q1 = collide(f, grid, table);
  auto q2 = collide(f2, grid, table);
  for (auto& x : q2) x /= 4.0;
  EXPECT_LE(testing_support::rel_l2(q2, q1), 1e-12);
}

TEST(Collision, MaxwellianResidualShrinksWithResolution) {
  double previous = 1.0;
  for (int n : {8, 16}) {
    VelocityGrid grid(n, 6.0);
    const auto table = precompute_table(grid, {1.0, 1.0});
    const auto m = sample(grid, {0, 0, 0}, {1, 1, 1});
    const auto q = collide(m, grid, table);
    double qn = 0.0, mn = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) {
      qn += q[j] * q[j];
      mn += m[j] * m[j];
    }
    const double ratio = std::sqrt(qn / mn);
    EXPECT_LT(ratio, previous) << "N=" << n;
    previous = ratio;
  }
  EXPECT_LE(previous, 1e-3);
}

TEST(Collision, PoolSizeDoesNotChangeResult) {
  VelocityGrid grid(8, 3.0);
  const auto table = precompute_table(grid, {0.5, 1.0});
  const auto f = sample(grid, {0.3, 0.1, -0.2}, {1.0, 0.6, 1.1});
  const TaskPool one(1), three(3);
  const auto a = collide(f, grid, table, &one);
  const auto b = collide(f, grid, table, &three);
  for (std::size_t j = 0; j < a.size(); ++j) ASSERT_EQ(a[j], b[j]);
}

TEST(Collision, ReducedTableGivesSameOperator) {
  VelocityGrid grid(8, 3.0);
  TableOptions dense, reduced;
  dense.storage = TableStorage::dense;
  reduced.storage = TableStorage::reduced;
  const auto f = sample(grid, {0.3, 0.1, -0.2}, {1.0, 0.6, 1.1});
  const auto a = collide(f, grid, precompute_table(grid, {1.0, 1.0}, dense));
  const auto b = collide(f, grid, precompute_table(grid, {1.0, 1.0}, reduced));
  EXPECT_LE(testing_support::rel_l2(b, a), 1e-13);
}

TEST(Collision, OutputIsConjugateSymmetricWithEmptyNyquistPlanes) {
  VelocityGrid grid(8, 3.0);
  const auto table = precompute_table(grid, {1.0, 1.0});
  const auto f = random_values(grid.size(), 21);
  const auto q = collide_fourier(forward_transform(f, grid), table);
  const int n = grid.n();
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        const auto p = q[grid.flat(a, b, c)];
        if (a == 0 || b == 0 || c == 0) {
          ASSERT_EQ(std::abs(p), 0.0);
          continue;
        }
        ASSERT_EQ(p, std::conj(q[grid.flat(n - a, n - b, n - c)]));
      }
    }
  }
}

TEST(Collision, RejectsTableForAnotherGrid) {
  VelocityGrid grid(4, 2.0);
  const auto table = precompute_table(VelocityGrid(4, 3.0), {0.0, 1.0});
  const std::vector<double> f(grid.size(), 1.0);
  EXPECT_THROW(collide(f, grid, table), std::invalid_argument);
}
