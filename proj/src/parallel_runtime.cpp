#include "boltz/parallel_runtime.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace boltz {

std::size_t Partition::owner(std::size_t cell) const {
  auto it = std::upper_bound(ranges.begin(), ranges.end(), cell,
                             [](std::size_t c, const CellRange& r) { return c < r.end; });
  if (it == ranges.end() || cell < it->begin) {
    throw std::out_of_range("cell " + std::to_string(cell) + " is not owned by any worker");
  }
  return static_cast<std::size_t>(it - ranges.begin());
}

Partition partition_cells(std::size_t n_cells, std::size_t n_workers) {
  if (n_workers == 0) throw std::invalid_argument("need at least one worker");
  if (n_workers > n_cells) {
    throw std::invalid_argument("cannot give " + std::to_string(n_workers) + " workers only " +
                                std::to_string(n_cells) + " cells");
  }
  Partition p;
  p.n_cells = n_cells;
  const std::size_t base = n_cells / n_workers;
  const std::size_t extra = n_cells % n_workers;
  std::size_t begin = 0;
  for (std::size_t w = 0; w < n_workers; ++w) {
    const std::size_t size = base + (w < extra ? 1 : 0);
    p.ranges.push_back({begin, begin + size});
    begin += size;
  }
  return p;
}

void halo_exchange(const Partition& partition, std::vector<WorkerBlock>& workers,
                   const Transport& transport, const VelocityGrid& grid,
                   std::span<const double> widths) {
  if (workers.size() != partition.workers()) {
    throw std::invalid_argument("halo_exchange: worker count does not match the partition");
  }
  const auto n = static_cast<long>(partition.n_cells);
  const std::uint64_t version = workers.front().version;
  for (std::size_t w = 0; w < workers.size(); ++w) {
    if (workers[w].version != version) {
      std::ostringstream msg;
      msg << "worker " << w << " is at version " << workers[w].version << " but worker 0 is at "
          << version;
      throw StaleHaloError(msg.str());
    }
  }

  auto copy_cell = [&](WorkerBlock& dst, int ghost, long global) {
    const auto src_worker = partition.owner(static_cast<std::size_t>(global));
    const WorkerBlock& src = workers[src_worker];
    const auto local = static_cast<int>(static_cast<std::size_t>(global) - src.range.begin);
    const auto from = src.block.cell(local);
    std::copy(from.begin(), from.end(), dst.block.cell(ghost).begin());
    dst.block.width(ghost) = widths[static_cast<std::size_t>(global)];
  };

  for (auto& worker : workers) {
    const auto begin = static_cast<long>(worker.range.begin);
    const auto end = static_cast<long>(worker.range.end);
    const int owned = static_cast<int>(worker.range.size());
    for (int g = 1; g <= PaddedBlock::kGhost; ++g) {
      long left = begin - g;
      if (left >= 0 || transport.periodic()) copy_cell(worker, -g, (left + n) % n);
      long right = end - 1 + g;
      if (right < n || transport.periodic()) copy_cell(worker, owned - 1 + g, right % n);
    }
    if (!transport.periodic()) {
      if (begin == 0) fill_physical_ghosts(worker.block, transport.left(), Side::left, grid);
      if (end == n) fill_physical_ghosts(worker.block, transport.right(), Side::right, grid);
    }
  }
}

void parallel_collide(std::span<double> cells, const CollisionStepper& stepper, double dt,
                      const TaskPool* pool) {
  const std::size_t m = stepper.grid().size();
  if (cells.size() % m != 0) throw std::invalid_argument("parallel_collide: ragged cell data");
  for (std::size_t off = 0; off < cells.size(); off += m) {
    stepper.step(cells.subspan(off, m), dt, pool);
  }
}

ParallelRuntime::ParallelRuntime(Partition partition, Transport transport, SpatialMesh mesh,
                                 std::shared_ptr<const VelocityGrid> grid, int cores_per_worker)
    : partition_(std::move(partition)), transport_(std::move(transport)), mesh_(std::move(mesh)),
      grid_(std::move(grid)), outer_(static_cast<int>(partition_.workers())) {
  if (partition_.n_cells != mesh_.size()) {
    throw std::invalid_argument("partition does not cover the mesh");
  }
  for (const auto& r : partition_.ranges) {
    WorkerBlock wb{r, PaddedBlock(r.size(), grid_->size()), 0};
    for (std::size_t j = r.begin; j < r.end; ++j) {
      wb.block.width(static_cast<int>(j - r.begin)) = mesh_.width(j);
    }
    workers_.push_back(std::move(wb));
    inner_.push_back(std::make_unique<TaskPool>(cores_per_worker));
  }
}

template <class Body>
void ParallelRuntime::for_each_worker(Body&& body) {
  outer_.parallel_for(0, workers_.size(), body);
}

void ParallelRuntime::scatter(const DistributionState& state) {
  if (state.cells() != partition_.n_cells || state.cell_size() != grid_->size()) {
    throw std::invalid_argument("scatter: state does not match the runtime layout");
  }
  for (auto& w : workers_) {
    const auto src = state.data().subspan(w.range.begin * grid_->size(),
                                          w.range.size() * grid_->size());
    std::copy(src.begin(), src.end(), w.block.owned_data().begin());
    w.version = 0;
  }
}

void ParallelRuntime::gather(DistributionState& state) const {
  for (const auto& w : workers_) {
    const auto src = w.block.owned_data();
    std::copy(src.begin(), src.end(), state.data().begin() + w.range.begin * grid_->size());
  }
}

void ParallelRuntime::transport_step(double dt) {
  const double limit = transport_dt_limit(mesh_, *grid_);
  if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "transport step dt=" << dt << " violates the CFL limit " << limit;
    throw std::invalid_argument(msg.str());
  }
  std::vector<std::vector<double>> saved(workers_.size());
  std::vector<std::vector<double>> rhs(workers_.size());

  halo_exchange(partition_, workers_, transport_, *grid_, mesh_.widths());
  for_each_worker([&](std::size_t w) {
    auto& wb = workers_[w];
    auto owned = wb.block.owned_data();
    saved[w].assign(owned.begin(), owned.end());
    rhs[w].resize(owned.size());
    transport_rhs(wb.block, *grid_, rhs[w]);
    for (std::size_t i = 0; i < owned.size(); ++i) owned[i] = saved[w][i] + dt * rhs[w][i];
    ++wb.version;
  });

  halo_exchange(partition_, workers_, transport_, *grid_, mesh_.widths());
  for_each_worker([&](std::size_t w) {
    auto& wb = workers_[w];
    auto owned = wb.block.owned_data();
    transport_rhs(wb.block, *grid_, rhs[w]);
    for (std::size_t i = 0; i < owned.size(); ++i) {
      owned[i] = 0.5 * (saved[w][i] + owned[i] + dt * rhs[w][i]);
    }
    ++wb.version;
  });
}

void ParallelRuntime::collide_step(const CollisionStepper& stepper, double dt) {
  for_each_worker([&](std::size_t w) {
    parallel_collide(workers_[w].block.owned_data(), stepper, dt, inner_[w].get());
    ++workers_[w].version;
  });
}

void ParallelRuntime::strang_step(const CollisionStepper& stepper, double dt) {
  transport_step(0.5 * dt);
  collide_step(stepper, dt);
  transport_step(0.5 * dt);
}

void ParallelRuntime::strang_step(DistributionState& state, const CollisionStepper& stepper,
                                  double dt) {
  scatter(state);
  strang_step(stepper, dt);
  gather(state);
}

double predict_step_time(const SpeedupModel& model, double n, double p, double nx, double N) {
  const double work = model.c * nx * std::pow(N, 6) * model.t_flop;
  return 4.0 * n * std::pow(N, 3) * model.t_mem + work / (n * p);
}

double predict_speedup(const SpeedupModel& model, double n, double p, double nx, double N) {
  if (!(n > 0.0 && p > 0.0 && nx > 0.0 && N > 0.0)) {
    throw std::invalid_argument("predict_speedup needs positive arguments");
  }
  // n p / (1 + memory share); exactly n p when the memory term vanishes.
  const double work = model.c * nx * std::pow(N, 6) * model.t_flop;
  const double memory = 4.0 * n * n * p * std::pow(N, 3) * model.t_mem;
  return n * p / (1.0 + memory / work);
}

SpeedupModel fit_speedup_model(std::span<const TimingSample> samples, double p, double nx,
                               double N, double t_flop) {
  if (samples.size() < 2) throw std::invalid_argument("need at least two timing samples");
  // T(n) = a n + b / n with a, b >= 0.
  double snn = 0.0, sinv = 0.0, s1 = 0.0, snt = 0.0, stn = 0.0;
  for (const auto& s : samples) {
    snn += s.nodes * s.nodes;
    sinv += 1.0 / (s.nodes * s.nodes);
    s1 += 1.0;
    snt += s.nodes * s.seconds;
    stn += s.seconds / s.nodes;
  }
  auto residual = [&](double a, double b) {
    double r = 0.0;
    for (const auto& s : samples) {
      const double d = a * s.nodes + b / s.nodes - s.seconds;
      r += d * d;
    }
    return r;
  };
  const double det = snn * sinv - s1 * s1;
  double a = (snt * sinv - s1 * stn) / det;
  double b = (snn * stn - s1 * snt) / det;
  if (!(a >= 0.0 && b >= 0.0)) {
    const double b_only = std::max(0.0, stn / sinv);
    const double a_only = std::max(0.0, snt / snn);
    if (residual(0.0, b_only) <= residual(a_only, 0.0)) {
      a = 0.0;
      b = b_only;
    } else {
      a = a_only;
      b = 0.0;
    }
  }
  SpeedupModel m;
  m.t_flop = t_flop;
  m.t_mem = a / (4.0 * std::pow(N, 3));
  m.c = b * p / (nx * std::pow(N, 6) * t_flop);
  return m;
}

}  // namespace boltz
