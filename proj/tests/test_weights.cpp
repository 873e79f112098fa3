#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "boltz/oracle.hpp"
#include "boltz/weights.hpp"

using namespace boltz;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("boltz_test_" + name);
}

Vec3 rotate(const Vec3& v, const std::array<std::array<double, 3>, 3>& r) {
  return {r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
          r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
          r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2]};
}

}  // namespace

TEST(CollisionKernel, Validation) {
  EXPECT_NO_THROW((CollisionKernel{0.0, 1.0}.validate()));
  EXPECT_NO_THROW((CollisionKernel{1.0, 1.0}.validate()));
  EXPECT_THROW((CollisionKernel{1.5, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((CollisionKernel{-0.1, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((CollisionKernel{0.5, 0.8}.validate()), std::invalid_argument);
  EXPECT_NEAR(4.0 * M_PI * CollisionKernel::b_norm, 1.0, 1e-15);
}

TEST(GhatEntry, VanishesAtZeroZeta) {
  for (double lambda : {0.0, 0.3, 1.0}) {
    EXPECT_EQ(std::abs(ghat_entry({0.7, -1.2, 0.4}, {0, 0, 0}, {lambda, 1.0}, 4.0)), 0.0);
    EXPECT_EQ(std::abs(ghat_entry({0, 0, 0}, {0, 0, 0}, {lambda, 1.0}, 4.0)), 0.0);
  }
}

TEST(GhatEntry, ElementaryAntiderivativeCase) {
  // lambda = 0, xi = 0, |zeta| = 1, r0 = 2: the integrand is
  // 2 (1 - cos r) - r^2, so the integral is 4 - 2 sin 2 - 8/3.
  const double expected = std::sqrt(2.0 / M_PI) * (4.0 - 2.0 * std::sin(2.0) - 8.0 / 3.0);
  EXPECT_NEAR(ghat_entry({0, 0, 0}, {0, 0, 1}, {0.0, 1.0}, 2.0).real(), expected, 1e-12);
  EXPECT_NEAR(ghat_closed_form({0, 0, 0}, {0, 0, 1}, {0.0, 1.0}, 2.0), expected, 1e-12);
}

TEST(GhatEntry, MatchesHighPrecisionReferenceValues) {
  // Reference values from a 40-digit adaptive quadrature.
  struct Case {
    Vec3 xi, zeta;
    double lambda, r0, value;
  };
  const Case cases[] = {
      {{0.5, 0.25, 0.0}, {0.75, -0.5, 0.25}, 0.0, 4.0, -2.3197420518445960884},
      {{1.0, -0.5, 0.5}, {0.5, 0.5, -1.0}, 1.0, 4.0, 3.1967341345777526034},
      {{0.3, 0.2, -0.1}, {0.4, 0.0, 0.9}, 0.5, 6.0, -54.845150719841954456},
      {{2.0, 1.0, 0.0}, {-1.0, 0.5, 1.5}, 0.25, 3.0, 0.49643167897825737177},
  };
  for (const auto& c : cases) {
    const auto g = ghat_entry(c.xi, c.zeta, {c.lambda, 1.0}, c.r0);
    EXPECT_NEAR(g.real(), c.value, 1e-10 * std::max(1.0, std::abs(c.value)));
    EXPECT_EQ(g.imag(), 0.0);
    if (c.lambda == 0.0 || c.lambda == 1.0) {
      EXPECT_NEAR(ghat_closed_form(c.xi, c.zeta, {c.lambda, 1.0}, c.r0), c.value, 1e-10);
    }
  }
}

TEST(GhatEntry, ClosedFormAgreesWithQuadratureOnRandomPairs) {
  VelocityGrid grid(16, 6.0);
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  for (double lambda : {0.0, 1.0}) {
    for (int s = 0; s < 100; ++s) {
      const auto xi = grid.frequency(pick(rng));
      const auto zeta = grid.frequency(pick(rng));
      const CollisionKernel k{lambda, 1.0};
      const double closed = ghat_closed_form(xi, zeta, k, grid.half_width());
      const double quad = ghat_entry(xi, zeta, k, grid.half_width()).real();
      ASSERT_NEAR(closed, quad, 1e-10) << "lambda=" << lambda << " sample " << s;
    }
  }
}

TEST(GhatEntry, MatchesSimpsonOracleForHardSpheres) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int s = 0; s < 5; ++s) {
    const Vec3 xi{u(rng), u(rng), u(rng)}, zeta{u(rng), u(rng), u(rng)};
    const double simpson = oracle::simpson_ghat(xi, zeta, 1.0, 4.0, 1000000);
    EXPECT_NEAR(ghat_entry(xi, zeta, {1.0, 1.0}, 4.0).real(), simpson, 1e-9);
  }
}

TEST(GhatEntry, RotationInvariant) {
  const double c = std::cos(0.7), s = std::sin(0.7);
  const std::array<std::array<double, 3>, 3> rz{{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
  const std::array<std::array<double, 3>, 3> rx{{{1, 0, 0}, {0, c, -s}, {0, s, c}}};
  const Vec3 xi{0.9, -0.4, 1.3}, zeta{-0.5, 1.1, 0.6};
  for (double lambda : {0.0, 0.6, 1.0}) {
    const CollisionKernel k{lambda, 1.0};
    const double ref = ghat_entry(xi, zeta, k, 5.0).real();
    EXPECT_NEAR(ghat_entry(rotate(xi, rz), rotate(zeta, rz), k, 5.0).real(), ref, 1e-10);
    EXPECT_NEAR(ghat_entry(rotate(xi, rx), rotate(zeta, rx), k, 5.0).real(), ref, 1e-10);
  }
  // Lattice symmetries of a table: axis permutations and sign flips.
  VelocityGrid grid(8, 2.0);
  const auto table = precompute_table(grid, {1.0, 1.0});
  const int h = grid.n() / 2;
  auto idx = [&](int a, int b, int c2) { return grid.flat(a + h, b + h, c2 + h); };
  EXPECT_NEAR(std::abs(table.at(idx(1, 2, -1), idx(-2, 0, 3)) - table.at(idx(2, -1, 1), idx(0, 3, -2))),
              0.0, 1e-10);
  EXPECT_NEAR(std::abs(table.at(idx(1, 2, -1), idx(-2, 0, 3)) - table.at(idx(-1, -2, 1), idx(2, 0, -3))),
              0.0, 1e-10);
}

TEST(GhatEntry, BoundedByCrudeEstimate) {
  VelocityGrid grid(8, 3.0);
  const auto table = precompute_table(grid, {1.0, 1.0});
  const double bound = kWeightPrefactor * 2.0 * std::pow(grid.half_width(), 4.0) / 4.0;
  for (std::size_t k = 0; k < grid.size(); k += 7) {
    for (std::size_t j = 0; j < grid.size(); ++j) ASSERT_LE(std::abs(table.at(k, j)), bound);
  }
}

TEST(WeightTable, ZeroZetaRowVanishes) {
  VelocityGrid grid(16, 6.0);
  const auto table = precompute_table(grid, {1.0, 1.0});
  const std::size_t origin = grid.flat(8, 8, 8);
  for (std::size_t j = 0; j < grid.size(); ++j) ASSERT_LE(std::abs(table.at(origin, j)), 1e-10);
}

TEST(WeightTable, SmallTableShapeAndSpotChecks) {
  VelocityGrid g4(4, 1.5);
  const auto t4 = precompute_table(g4, {0.0, 1.0});
  EXPECT_EQ(t4.entry_count(), 4096u);

  VelocityGrid grid(8, 2.5);
  const auto table = precompute_table(grid, {0.0, 1.0});
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  for (int s = 0; s < 10; ++s) {
    const std::size_t k = pick(rng), j = pick(rng);
    const auto ref = ghat_entry(grid.frequency(j), grid.frequency(k), {0.0, 1.0}, grid.half_width());
    EXPECT_NEAR(std::abs(table.at(k, j) - ref), 0.0, 1e-10);
  }
  const auto hard = precompute_table(grid, {1.0, 1.0});
  double diff = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    diff = std::max(diff, std::abs(hard.at(3, j) - table.at(3, j)));
  }
  EXPECT_GT(diff, 0.0);
}

TEST(WeightTable, ReducedStorageMatchesDense) {
  VelocityGrid grid(8, 2.0);
  TableOptions dense_opt, reduced_opt;
  dense_opt.storage = TableStorage::dense;
  reduced_opt.storage = TableStorage::reduced;
  const auto dense = precompute_table(grid, {0.5, 1.0}, dense_opt);
  const auto reduced = precompute_table(grid, {0.5, 1.0}, reduced_opt);
  EXPECT_TRUE(dense.is_dense());
  EXPECT_FALSE(reduced.is_dense());
  EXPECT_LT(reduced.memory_bytes(), dense.memory_bytes());
  for (std::size_t k = 0; k < grid.size(); k += 3) {
    for (std::size_t j = 0; j < grid.size(); ++j) ASSERT_EQ(dense.at(k, j), reduced.at(k, j));
  }
}

TEST(WeightTable, DeterministicAcrossRuns) {
  VelocityGrid grid(8, 2.0);
  const auto a = precompute_table(grid, {0.3, 1.0});
  const auto b = precompute_table(grid, {0.3, 1.0});
  EXPECT_EQ(a.checksum(), b.checksum());
}

TEST(WeightTable, MemoryBudgetGuard) {
  VelocityGrid grid(8, 2.0);
  TableOptions opt;
  opt.storage = TableStorage::dense;
  opt.memory_budget_bytes = 1024;
  EXPECT_THROW(precompute_table(grid, {0.0, 1.0}, opt), MemoryBudgetError);
  opt.storage = TableStorage::automatic;
  EXPECT_FALSE(precompute_table(grid, {0.0, 1.0}, opt).is_dense());
  EXPECT_EQ(dense_table_bytes(24), 24ull * 24 * 24 * 24 * 24 * 24 * 16);
}

TEST(WeightFile, RoundTripIsBitExact) {
  VelocityGrid grid(4, 1.5);
  const auto table = precompute_table(grid, {1.0, 1.0});
  const auto path = temp_file("roundtrip.bin");
  save_table(table, path);
  EXPECT_EQ(std::filesystem::file_size(path), kBinaryHeaderBytes + 4096u * 16u);
  const auto loaded = load_table(path, grid, {1.0, 1.0});
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t j = 0; j < grid.size(); ++j) ASSERT_EQ(loaded.at(k, j), table.at(k, j));
  }
  EXPECT_EQ(loaded.checksum(), table.checksum());
  std::filesystem::remove(path);
}

TEST(WeightFile, ReducedTableSavesInDenseLayout) {
  VelocityGrid grid(4, 1.5);
  TableOptions opt;
  opt.storage = TableStorage::reduced;
  const auto table = precompute_table(grid, {0.0, 1.0}, opt);
  const auto path = temp_file("reduced.bin");
  save_table(table, path);
  const auto loaded = load_table(path);
  EXPECT_TRUE(loaded.is_dense());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t j = 0; j < grid.size(); ++j) ASSERT_EQ(loaded.at(k, j), table.at(k, j));
  }
  std::filesystem::remove(path);
}

TEST(WeightFile, DistinctErrors) {
  VelocityGrid grid(4, 1.5);
  const auto table = precompute_table(grid, {0.0, 1.0});
  const auto path = temp_file("neg.bin");
  save_table(table, path);

  // Metadata mismatch: N=4 table for an N=8 run, or a different lambda.
  EXPECT_THROW(load_table(path, VelocityGrid(8, 1.5), {0.0, 1.0}), WeightMetadataError);
  EXPECT_THROW(load_table(path, grid, {1.0, 1.0}), WeightMetadataError);

  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
  };

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  write(bad_magic);
  EXPECT_THROW(load_table(path), WeightFormatError);

  std::string bad_version = bytes;
  bad_version[8] = 2;
  write(bad_version);
  EXPECT_THROW(load_table(path), WeightFormatError);

  write(bytes.substr(0, bytes.size() - 100));
  EXPECT_THROW(load_table(path), WeightTruncatedError);
  write(bytes.substr(0, 20));
  EXPECT_THROW(load_table(path), WeightTruncatedError);

  std::string bad_count = bytes;
  bad_count[44] ^= 1;
  write(bad_count);
  EXPECT_THROW(load_table(path), WeightFormatError);

  std::filesystem::remove(path);
  EXPECT_THROW(load_table(path), WeightFileError);
}
