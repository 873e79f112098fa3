#include <gtest/gtest.h>

#include <random>

#include "boltz/parallel_runtime.hpp"

using namespace boltz;

namespace {

// Strong-scaling step times on n nodes of 12 cores (1 to 64 nodes).
const std::vector<TimingSample> kClusterTimes{{1, 203.0},  {2, 235.3},  {4, 120.8}, {8, 61.4},
                                              {16, 30.9},  {32, 15.2},  {64, 7.7}};

DistributionState random_state(std::shared_ptr<const VelocityGrid> grid, const SpatialMesh& mesh,
                               unsigned seed) {
  DistributionState s(grid, mesh);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (std::size_t j = 0; j < s.cells(); ++j) {
    const auto m = discrete_maxwellian(*grid, u(rng), {0.2 * (u(rng) - 1.0), 0, 0}, u(rng));
    std::copy(m.begin(), m.end(), s.cell(j).begin());
  }
  return s;
}

}  // namespace

TEST(Partition, BalancedContiguousRanges) {
  const auto p = partition_cells(10, 3);
  ASSERT_EQ(p.workers(), 3u);
  EXPECT_EQ(p.ranges[0], (CellRange{0, 4}));
  EXPECT_EQ(p.ranges[1], (CellRange{4, 7}));
  EXPECT_EQ(p.ranges[2], (CellRange{7, 10}));
  EXPECT_EQ(p.owner(0), 0u);
  EXPECT_EQ(p.owner(4), 1u);
  EXPECT_EQ(p.owner(9), 2u);
  const auto even = partition_cells(64, 4);
  for (const auto& r : even.ranges) EXPECT_EQ(r.size(), 16u);
  EXPECT_EQ(Partition::kGhostDepth, 2);
  EXPECT_THROW(partition_cells(3, 4), std::invalid_argument);
  EXPECT_THROW(partition_cells(3, 0), std::invalid_argument);
}

TEST(Halo, GhostsAreNeighbourEdgeCells) {
  auto grid = std::make_shared<const VelocityGrid>(4, 2.0);
  const auto mesh = SpatialMesh({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
  const auto state = random_state(grid, mesh, 1);
  for (bool periodic : {true, false}) {
    const Transport transport = periodic ? Transport(PeriodicBC{}, PeriodicBC{})
                                         : Transport(WallBC{1.5}, NoFluxBC{});
    ParallelRuntime runtime(partition_cells(mesh.size(), 3), transport, mesh, grid);
    runtime.scatter(state);
    auto workers = runtime.workers();
    halo_exchange(runtime.partition(), workers, transport, *grid, mesh.widths());

    // Reference ghosts from the single-domain fill.
    PaddedBlock whole(mesh.size(), grid->size());
    std::copy(state.data().begin(), state.data().end(), whole.owned_data().begin());
    transport.fill_ghosts(whole, *grid, mesh.widths());
    for (const auto& w : workers) {
      const int n = static_cast<int>(w.range.size());
      for (int g : {-2, -1, n, n + 1}) {
        const int global = static_cast<int>(w.range.begin) + g;
        const auto got = w.block.cell(g);
        const auto want = whole.cell(global);
        for (std::size_t k = 0; k < got.size(); ++k) ASSERT_EQ(got[k], want[k]) << "ghost " << global;
        EXPECT_EQ(w.block.width(g), whole.width(global));
      }
    }
  }
}

TEST(Halo, StaleNeighbourIsRejected) {
  auto grid = std::make_shared<const VelocityGrid>(4, 2.0);
  const auto mesh = SpatialMesh::uniform(6, 0.1);
  const Transport transport(PeriodicBC{}, PeriodicBC{});
  ParallelRuntime runtime(partition_cells(6, 2), transport, mesh, grid);
  runtime.scatter(random_state(grid, mesh, 2));
  auto workers = runtime.workers();
  ++workers[1].version;
  EXPECT_THROW(halo_exchange(runtime.partition(), workers, transport, *grid, mesh.widths()),
               StaleHaloError);
}

TEST(Runtime, TransportMatchesSingleDomainBitwise) {
  auto grid = std::make_shared<const VelocityGrid>(8, 4.0);
  const auto mesh = SpatialMesh({0.05, 0.05, 0.1, 0.1, 0.2, 0.2, 0.2, 0.4, 0.4});
  const Transport transport(WallBC{2.0}, WallBC{1.0});
  auto reference = random_state(grid, mesh, 3);
  const double dt = transport_dt_limit(mesh, *grid);
  auto state = reference;
  for (int s = 0; s < 3; ++s) transport.step(reference, dt);
  for (std::size_t workers : {1u, 2u, 4u}) {
    ParallelRuntime runtime(partition_cells(mesh.size(), workers), transport, mesh, grid);
    runtime.scatter(state);
    for (int s = 0; s < 3; ++s) runtime.transport_step(dt);
    auto out = state;
    runtime.gather(out);
    for (std::size_t i = 0; i < out.data().size(); ++i) {
      ASSERT_EQ(out.data()[i], reference.data()[i]) << workers << " workers";
    }
  }
}

TEST(Runtime, StrangStepIndependentOfWorkersAndCores) {
  auto grid = std::make_shared<const VelocityGrid>(8, 4.0);
  auto table = std::make_shared<const WeightTable>(precompute_table(*grid, {1.0, 1.0}));
  CollisionStepper stepper(grid, table, 1.0);
  const auto mesh = SpatialMesh::uniform(8, 0.25);
  const Transport transport(WallBC{2.0}, WallBC{1.0});
  const auto init = random_state(grid, mesh, 4);
  const double dt = cfl_dt(mesh, *grid, 0.9);

  auto serial = init;
  for (int s = 0; s < 2; ++s) strang_step(serial, dt, transport, stepper);
  for (auto [workers, cores] : {std::pair{1, 1}, {2, 1}, {4, 1}, {2, 2}}) {
    ParallelRuntime runtime(partition_cells(mesh.size(), workers), transport, mesh, grid, cores);
    auto state = init;
    for (int s = 0; s < 2; ++s) runtime.strang_step(state, stepper, dt);
    for (std::size_t i = 0; i < state.data().size(); ++i) {
      ASSERT_EQ(state.data()[i], serial.data()[i]) << workers << "x" << cores;
    }
  }
}

TEST(SpeedupModel, MemoryFreeModelScalesPerfectly) {
  SpeedupModel m;
  m.t_mem = 0.0;
  m.c = 3.7;
  for (double n : {1.0, 3.0, 8.0, 64.0}) {
    for (double p : {1.0, 12.0}) EXPECT_EQ(predict_speedup(m, n, p, 64, 24), n * p);
  }
  EXPECT_THROW(predict_speedup(m, 0.0, 1.0, 64, 24), std::invalid_argument);
}

TEST(SpeedupModel, SpeedupRisesThenFalls) {
  SpeedupModel m;
  m.t_mem = 1e-6;
  m.c = 1.0;
  // Optimum at n* = sqrt(C Nx N^3 T_flop / (4 p T_mem)).
  const double nx = 64, N = 16, p = 4;
  const double n_star = std::sqrt(nx * std::pow(N, 3) * 1e-9 / (4.0 * p * 1e-6));
  double previous = 0.0;
  for (double n = 1; n <= n_star; n += 1) {
    const double s = predict_speedup(m, n, p, nx, N);
    EXPECT_GT(s, previous);
    previous = s;
  }
  EXPECT_LT(predict_speedup(m, 4 * n_star, p, nx, N), predict_speedup(m, n_star, p, nx, N));
  EXPECT_NEAR(predict_step_time(m, 1, 1, nx, N) / predict_step_time(m, 1, p, nx, N),
              predict_speedup(m, 1, p, nx, N) / predict_speedup(m, 1, 1, nx, N), 1e-12);
}

TEST(SpeedupModel, FitRecoversSyntheticParameters) {
  SpeedupModel truth;
  truth.t_mem = 2e-7;
  truth.c = 5.0;
  std::vector<TimingSample> samples;
  for (double n : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    samples.push_back({n, predict_step_time(truth, n, 12, 64, 24)});
  }
  const auto fit = fit_speedup_model(samples, 12, 64, 24);
  EXPECT_NEAR(fit.t_mem, truth.t_mem, 1e-12 * 1e-7);
  EXPECT_NEAR(fit.c, truth.c, 1e-9);
}

TEST(SpeedupModel, FitReproducesClusterHalvingTrend) {
  // The single-node run has no inter-node traffic, so it sits outside the
  // multi-node model and is left out of the fit.
  const std::vector<TimingSample> multi(kClusterTimes.begin() + 1, kClusterTimes.end());
  const auto fit = fit_speedup_model(multi, 12, 64, 24);
  EXPECT_GE(fit.t_mem, 0.0);
  EXPECT_GT(fit.c, 0.0);
  for (std::size_t i = 3; i + 1 < kClusterTimes.size(); ++i) {
    const double measured = kClusterTimes[i].seconds / kClusterTimes[i + 1].seconds;
    const double model = predict_step_time(fit, kClusterTimes[i].nodes, 12, 64, 24) /
                         predict_step_time(fit, kClusterTimes[i + 1].nodes, 12, 64, 24);
    EXPECT_LE(std::abs(model - measured) / measured, 0.15)
        << kClusterTimes[i].nodes << " -> " << kClusterTimes[i + 1].nodes << " nodes";
  }
}
