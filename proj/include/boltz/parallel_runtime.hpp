#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "boltz/solver.hpp"
#include "boltz/task_pool.hpp"
#include "boltz/transport.hpp"

namespace boltz {

struct CellRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const CellRange&) const = default;
};

struct Partition {
  static constexpr int kGhostDepth = PaddedBlock::kGhost;
  std::size_t n_cells = 0;
  std::vector<CellRange> ranges;

  std::size_t workers() const { return ranges.size(); }
  /// Worker owning global cell `cell`.
  std::size_t owner(std::size_t cell) const;
};

/// Contiguous ranges whose sizes differ by at most one; the larger ranges come first.
Partition partition_cells(std::size_t n_cells, std::size_t n_workers);

class StaleHaloError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cells owned by one worker plus its ghosts. `version` counts completed
/// updates of the owned data.
struct WorkerBlock {
  CellRange range;
  PaddedBlock block;
  std::uint64_t version = 0;
};

/// Fills every worker's ghost cells: neighbour edge cells are copied from the
/// owning worker, domain ends come from the boundary operators (or the
/// opposite end when periodic). All workers must be at the same version.
void halo_exchange(const Partition& partition, std::vector<WorkerBlock>& workers,
                   const Transport& transport, const VelocityGrid& grid,
                   std::span<const double> widths);

/// Collision step in every cell of `cells` (cell-major, N^3 values each).
void parallel_collide(std::span<double> cells, const CollisionStepper& stepper, double dt,
                      const TaskPool* pool);

/// Worker groups owning contiguous cell ranges. Each group has its own pool
/// of cores for the convolution; groups exchange only ghost copies.
class ParallelRuntime {
 public:
  ParallelRuntime(Partition partition, Transport transport, SpatialMesh mesh,
                  std::shared_ptr<const VelocityGrid> grid, int cores_per_worker = 1);

  const Partition& partition() const { return partition_; }
  const std::vector<WorkerBlock>& workers() const { return workers_; }

  void scatter(const DistributionState& state);
  void gather(DistributionState& state) const;

  /// One SSP-RK2 transport step; ghosts are exchanged before each stage.
  void transport_step(double dt);
  void collide_step(const CollisionStepper& stepper, double dt);
  /// transport(dt/2), collide(dt), transport(dt/2) on the scattered state.
  void strang_step(const CollisionStepper& stepper, double dt);
  /// scatter, strang_step, gather.
  void strang_step(DistributionState& state, const CollisionStepper& stepper, double dt);

 private:
  template <class Body>
  void for_each_worker(Body&& body);

  Partition partition_;
  Transport transport_;
  SpatialMesh mesh_;
  std::shared_ptr<const VelocityGrid> grid_;
  std::vector<WorkerBlock> workers_;
  TaskPool outer_;
  std::vector<std::unique_ptr<TaskPool>> inner_;
};

/// Leading-order cost model for one time step on n nodes with p cores each:
///   T(n) = 4 n N^3 T_mem + C Nx N^6 T_flop / (n p).
struct SpeedupModel {
  double t_mem = 0.0;
  double t_flop = 1e-9;
  double c = 1.0;
};

/// C Nx N^6 T_flop / (4 n N^3 T_mem + C Nx N^6 T_flop / (n p)).
double predict_speedup(const SpeedupModel& model, double n, double p, double nx, double N);
double predict_step_time(const SpeedupModel& model, double n, double p, double nx, double N);

struct TimingSample {
  double nodes = 0.0;
  double seconds = 0.0;
};

/// Nonnegative least-squares fit of T_mem and C (at the given T_flop) to
/// measured step times.
SpeedupModel fit_speedup_model(std::span<const TimingSample> samples, double p, double nx,
                               double N, double t_flop = 1e-9);

}  // namespace boltz
