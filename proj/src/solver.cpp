#include "boltz/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include <spdlog/spdlog.h>

#include "boltz/parallel_runtime.hpp"

namespace boltz {

namespace {

bool same_bc(const BoundaryCondition& a, const BoundaryCondition& b) {
  if (a.index() != b.index()) return false;
  if (const auto* wa = std::get_if<WallBC>(&a)) {
    const auto& wb = std::get<WallBC>(b);
    return wa->temperature == wb.temperature && wa->velocity == wb.velocity &&
           wa->gas_constant == wb.gas_constant;
  }
  return true;
}

bool has_wall(const SolverConfig& c) {
  return std::holds_alternative<WallBC>(c.left) || std::holds_alternative<WallBC>(c.right);
}

// A single cell without walls has no spatial flux at all.
bool homogeneous(const SpatialMesh& mesh, const Transport& transport) {
  return mesh.size() == 1 && !std::holds_alternative<WallBC>(transport.left()) &&
         !std::holds_alternative<WallBC>(transport.right());
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void SolverConfig::validate() const {
  kernel.validate();
  require(epsilon > 0.0, "epsilon must be positive");
  require(n >= 4 && n % 2 == 0, "grid.N must be even and at least 4");
  require(support_radius > 0.0, "grid.R must be positive");
  require(!cells.empty(), "space.cells is empty");
  for (double w : cells) require(w > 0.0 && std::isfinite(w), "cell widths must be positive");
  require(cfl > 0.0 && cfl <= 1.0, "time.cfl must lie in (0, 1]");
  require(!dt || *dt > 0.0, "time.dt must be positive");
  require(t_final > 0.0, "time.t_final must be positive");
  require(output.every > 0.0, "output.every must be positive");
  require(std::holds_alternative<PeriodicBC>(left) == std::holds_alternative<PeriodicBC>(right),
          "periodic boundaries must be set on both sides");
  if (const auto* w = std::get_if<WallBC>(&left)) w->validate();
  if (const auto* w = std::get_if<WallBC>(&right)) w->validate();
  require(init.rho > 0.0, "init.rho must be positive");
  require(init.temperature > 0.0 && init.temperature2 > 0.0, "init temperatures must be positive");
  require(init.fraction >= 0.0 && init.fraction <= 1.0, "init.fraction must lie in [0, 1]");
  require(init.kind != InitialKind::bkw || (init.bkw_k >= 0.6 && init.bkw_k < 1.0),
          "init.bkw_k must lie in [0.6, 1)");
}

bool operator==(const SolverConfig& a, const SolverConfig& b) {
  return a.kernel.lambda == b.kernel.lambda && a.kernel.beta == b.kernel.beta &&
         a.epsilon == b.epsilon && a.n == b.n && a.support_radius == b.support_radius &&
         a.cells == b.cells && a.x0 == b.x0 && a.cfl == b.cfl && a.dt == b.dt &&
         a.t_final == b.t_final && same_bc(a.left, b.left) && same_bc(a.right, b.right) &&
         a.init == b.init && a.output == b.output && a.weights_cache == b.weights_cache;
}

Moments cell_moments(std::span<const double> f, const VelocityGrid& grid, double time) {
  const auto w = grid.quad_weights();
  double rho = 0.0;
  Vec3 mom{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Vec3 v = grid.velocity(k);
    const double m = w[k] * f[k];
    rho += m;
    for (int i = 0; i < 3; ++i) mom[i] += v[i] * m;
  }
  if (!(rho > 0.0)) {
    std::ostringstream msg;
    msg << "nonpositive density " << rho << " at t=" << time;
    throw NonPhysicalStateError(msg.str());
  }
  Moments out;
  out.time = time;
  out.rho = rho;
  for (int i = 0; i < 3; ++i) out.velocity[i] = mom[i] / rho;
  double e = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Vec3 v = grid.velocity(k);
    const double d0 = v[0] - out.velocity[0], d1 = v[1] - out.velocity[1],
                 d2 = v[2] - out.velocity[2];
    e += (d0 * d0 + d1 * d1 + d2 * d2) * w[k] * f[k];
  }
  out.temperature = e / (3.0 * rho);
  return out;
}

std::vector<Moments> compute_moments(const DistributionState& state) {
  std::vector<Moments> out;
  out.reserve(state.cells());
  for (std::size_t j = 0; j < state.cells(); ++j) {
    try {
      out.push_back(cell_moments(state.cell(j), state.grid(), state.time));
    } catch (const NonPhysicalStateError& e) {
      throw NonPhysicalStateError("cell " + std::to_string(j) + ": " + e.what());
    }
  }
  return out;
}

std::array<double, 5> domain_invariants(const DistributionState& state) {
  const auto& grid = state.grid();
  const auto w = grid.quad_weights();
  std::array<double, 5> total{};
  for (std::size_t j = 0; j < state.cells(); ++j) {
    const auto f = state.cell(j);
    std::array<double, 5> cell{};
    for (std::size_t k = 0; k < f.size(); ++k) {
      const Vec3 v = grid.velocity(k);
      const double m = w[k] * f[k];
      cell[0] += m;
      cell[1] += v[0] * m;
      cell[2] += v[1] * m;
      cell[3] += v[2] * m;
      cell[4] += (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * m;
    }
    for (int i = 0; i < 5; ++i) total[i] += state.mesh().width(j) * cell[i];
  }
  return total;
}

std::vector<double> marginal(std::span<const double> f, const VelocityGrid& grid) {
  const int n = grid.n();
  std::vector<double> g(static_cast<std::size_t>(n), 0.0);
  for (int k1 = 0; k1 < n; ++k1) {
    double s = 0.0;
    for (int k2 = 0; k2 < n; ++k2) {
      const double w2 = grid.quad_weight_1d(k2);
      for (int k3 = 0; k3 < n; ++k3) {
        s += f[grid.flat(k1, k2, k3)] * w2 * grid.quad_weight_1d(k3);
      }
    }
    g[static_cast<std::size_t>(k1)] = s;
  }
  return g;
}

double entropy(std::span<const double> f, const VelocityGrid& grid) {
  const auto w = grid.quad_weights();
  double h = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f[k] > 0.0) h += f[k] * std::log(f[k]) * w[k];
  }
  return h;
}

double cfl_dt(const SpatialMesh& mesh, const VelocityGrid& grid, double cfl) {
  const double dt = cfl * transport_dt_limit(mesh, grid);
  spdlog::debug("time step {} (cfl {}, min dx {})", dt, cfl, mesh.min_width());
  return dt;
}

std::vector<double> bkw_profile(const VelocityGrid& grid, double k) {
  if (!(k >= 0.6 && k < 1.0)) throw std::invalid_argument("BKW parameter K must lie in [0.6, 1)");
  const double norm = std::pow(2.0 * std::numbers::pi * k, -1.5);
  const double a = (5.0 * k - 3.0) / (2.0 * k);
  const double b = (1.0 - k) / (2.0 * k * k);
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3 v = grid.velocity(i);
    const double v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    out[i] = norm * std::exp(-v2 / (2.0 * k)) * (a + b * v2);
  }
  return out;
}

double bkw_k_at(double t, double epsilon) { return 1.0 - std::exp(-t / (6.0 * epsilon)); }

double bkw_time_of(double k, double epsilon) { return -6.0 * epsilon * std::log(1.0 - k); }

std::vector<double> initial_distribution(const VelocityGrid& grid, const InitialCondition& ic) {
  switch (ic.kind) {
    case InitialKind::maxwellian:
      return discrete_maxwellian(grid, ic.rho, ic.velocity, ic.temperature);
    case InitialKind::two_temperature: {
      auto a = discrete_maxwellian(grid, ic.rho, ic.velocity, ic.temperature);
      const auto b = discrete_maxwellian(grid, ic.rho, ic.velocity, ic.temperature2);
      for (std::size_t k = 0; k < a.size(); ++k) {
        a[k] = ic.fraction * a[k] + (1.0 - ic.fraction) * b[k];
      }
      return a;
    }
    case InitialKind::two_maxwellians: {
      Vec3 plus = ic.velocity, minus = ic.velocity;
      plus[0] += ic.shift;
      minus[0] -= ic.shift;
      auto a = discrete_maxwellian(grid, ic.rho, plus, ic.temperature);
      const auto b = discrete_maxwellian(grid, ic.rho, minus, ic.temperature);
      for (std::size_t k = 0; k < a.size(); ++k) a[k] = 0.5 * (a[k] + b[k]);
      return a;
    }
    case InitialKind::bkw:
      return bkw_profile(grid, ic.bkw_k);
  }
  throw std::invalid_argument("unknown initial condition");
}

void initialize(DistributionState& state, const InitialCondition& ic) {
  const auto f = initial_distribution(state.grid(), ic);
  for (std::size_t j = 0; j < state.cells(); ++j) {
    std::copy(f.begin(), f.end(), state.cell(j).begin());
  }
}

CollisionStepper::CollisionStepper(std::shared_ptr<const VelocityGrid> grid,
                                   std::shared_ptr<const WeightTable> table, double epsilon)
    : grid_(std::move(grid)), table_(std::move(table)), projector_(*grid_), epsilon_(epsilon) {
  if (!(epsilon_ > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (table_->metadata().n != grid_->n() || table_->metadata().half_width != grid_->half_width()) {
    throw WeightMetadataError("weight table was built for a different velocity grid");
  }
}

void CollisionStepper::rate(std::span<const double> f, std::span<double> out,
                            const TaskPool* pool) const {
  const auto q = collide(f, *grid_, *table_, pool);
  projector_.project(q, out);
  const double inv = 1.0 / epsilon_;
  for (double& x : out) x *= inv;
}

void CollisionStepper::step(std::span<double> f, double dt, const TaskPool* pool) const {
  const std::size_t m = f.size();
  std::vector<double> k(m), stage(m);
  rate(f, k, pool);
  for (std::size_t i = 0; i < m; ++i) stage[i] = f[i] + dt * k[i];
  rate(stage, k, pool);
  for (std::size_t i = 0; i < m; ++i) f[i] = 0.5 * (f[i] + stage[i] + dt * k[i]);
}

void check_finite(const DistributionState& state) {
  for (std::size_t j = 0; j < state.cells(); ++j) {
    const auto f = state.cell(j);
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (!std::isfinite(f[k])) {
        std::ostringstream msg;
        msg << "non-finite value " << f[k] << " in cell " << j << " (x=" << state.mesh().center(j)
            << ") at velocity node " << k << ", t=" << state.time;
        throw InstabilityError(msg.str());
      }
    }
  }
}

void strang_step(DistributionState& state, double dt, const Transport& transport,
                 const CollisionStepper& collision, const TaskPool* pool) {
  const bool flux_free = homogeneous(state.mesh(), transport);
  if (!flux_free) transport.step(state, 0.5 * dt);
  for (std::size_t j = 0; j < state.cells(); ++j) collision.step(state.cell(j), dt, pool);
  if (!flux_free) transport.step(state, 0.5 * dt);
  state.time += dt;
  check_finite(state);
}

std::shared_ptr<const WeightTable> prepare_table(const SolverConfig& config,
                                                 const VelocityGrid& grid, const TaskPool* pool) {
  if (!config.weights_cache.empty() && std::filesystem::exists(config.weights_cache)) {
    spdlog::info("loading weight table {}", config.weights_cache);
    return std::make_shared<const WeightTable>(load_table(config.weights_cache, grid, config.kernel));
  }
  auto table = std::make_shared<const WeightTable>(
      precompute_table(grid, config.kernel, TableOptions{}, pool));
  if (!config.weights_cache.empty()) {
    save_table(*table, config.weights_cache);
    spdlog::info("saved weight table {}", config.weights_cache);
  }
  return table;
}

RunSummary run(const SolverConfig& config, const RunOptions& options,
               const OutputObserver& observer) {
  using clock = std::chrono::steady_clock;
  config.validate();
  const auto start = clock::now();
  RunSummary summary;

  auto grid = std::make_shared<const VelocityGrid>(config.n, choose_domain(config.support_radius));
  TaskPool setup_pool(std::max(1, options.workers * options.cores_per_worker));
  auto table = prepare_table(config, *grid, &setup_pool);
  summary.table_seconds = std::chrono::duration<double>(clock::now() - start).count();
  summary.table_checksum = table->checksum();

  SpatialMesh mesh(config.cells, config.x0);
  Transport transport(config.left, config.right);
  CollisionStepper stepper(grid, table, config.epsilon);
  DistributionState state(grid, mesh);
  initialize(state, config.init);

  const bool flux_free = homogeneous(mesh, transport);
  const double limit = cfl_dt(mesh, *grid, config.cfl);
  summary.dt = config.dt.value_or(limit);
  if (!flux_free && summary.dt > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "time.dt=" << summary.dt << " exceeds the CFL step " << limit;
    throw std::invalid_argument(msg.str());
  }
  spdlog::info("N={} L={} cells={} dt={} t_final={} workers={}x{}", grid->n(),
               grid->half_width(), mesh.size(), summary.dt, config.t_final, options.workers,
               options.cores_per_worker);

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.workers)), mesh.size());
  ParallelRuntime runtime(partition_cells(mesh.size(), workers), transport, mesh, grid,
                          options.cores_per_worker);

  auto observe = [&] {
    summary.min_f = std::min(summary.min_f, state.min_value());
    for (std::size_t j = 0; j < state.cells(); ++j) {
      summary.max_shell_fraction =
          std::max(summary.max_shell_fraction, grid->boundary_mass_fraction(state.cell(j)));
    }
    if (observer) observer(state);
  };
  summary.min_f = state.min_value();
  observe();

  const bool walls = has_wall(config);
  auto before = domain_invariants(state);
  std::size_t next_output = 1;
  while (state.time < config.t_final * (1.0 - 1e-14)) {
    const double target =
        std::min(config.t_final, static_cast<double>(next_output) * config.output.every);
    double h = std::min(summary.dt, target - state.time);
    // Avoid a sliver step just before an output time.
    if (target - state.time - h < 1e-9 * summary.dt) h = target - state.time;
    if (flux_free) {
      strang_step(state, h, transport, stepper, &setup_pool);
    } else {
      runtime.strang_step(state, stepper, h);
      state.time += h;
      check_finite(state);
    }
    ++summary.steps;

    const auto after = domain_invariants(state);
    const double mom_scale = std::sqrt(std::abs(before[0] * before[4]));
    StepDrift d;
    d.mass = std::abs(after[0] - before[0]) / std::abs(before[0]);
    for (int i = 1; i <= 3; ++i) {
      d.momentum = std::max(d.momentum, std::abs(after[i] - before[i]) / mom_scale);
    }
    d.energy = std::abs(after[4] - before[4]) / std::abs(before[4]);
    summary.max_drift.mass = std::max(summary.max_drift.mass, d.mass);
    summary.max_drift.momentum = std::max(summary.max_drift.momentum, d.momentum);
    summary.max_drift.energy = std::max(summary.max_drift.energy, d.energy);
    before = after;

    if (state.time >= target * (1.0 - 1e-14)) {
      state.time = target;
      spdlog::info("t={:.6g} step {} min f={:.3e} mass drift={:.2e}", state.time, summary.steps,
                   state.min_value(), summary.max_drift.mass);
      observe();
      if (target < config.t_final) ++next_output;
    }
  }

  constexpr double kDriftTolerance = 1e-10;
  summary.conservation_ok = summary.max_drift.mass <= kDriftTolerance;
  if (!walls) {
    summary.conservation_ok = summary.conservation_ok &&
                              summary.max_drift.momentum <= kDriftTolerance &&
                              summary.max_drift.energy <= kDriftTolerance;
  }
  if (summary.min_f < 0.0) spdlog::warn("negative f values reached {:.3e}", summary.min_f);
  if (summary.max_shell_fraction > 1e-6) {
    spdlog::warn("up to {:.2e} of a cell's mass sits on the outer velocity shell; increase R",
                 summary.max_shell_fraction);
  }
  summary.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
  return summary;
}

}  // namespace boltz
