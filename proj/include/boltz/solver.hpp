#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "boltz/collision.hpp"
#include "boltz/conservation.hpp"
#include "boltz/task_pool.hpp"
#include "boltz/transport.hpp"
#include "boltz/weights.hpp"

namespace boltz {

enum class InitialKind { maxwellian, two_temperature, two_maxwellians, bkw };

/// Spatially uniform initial data.
///   maxwellian:      M(rho, velocity, temperature)
///   two_temperature: fraction M(rho, V, T) + (1 - fraction) M(rho, V, temperature2)
///   two_maxwellians: (M(rho, V + shift e1, T) + M(rho, V - shift e1, T)) / 2
///   bkw:             BKW profile with parameter bkw_k (unit density and temperature)
struct InitialCondition {
  InitialKind kind = InitialKind::maxwellian;
  double rho = 1.0;
  Vec3 velocity{0.0, 0.0, 0.0};
  double temperature = 1.0;
  double temperature2 = 2.0;
  double fraction = 0.5;
  double shift = 1.0;
  double bkw_k = 0.65;

  bool operator==(const InitialCondition&) const = default;
};

struct OutputSpec {
  double every = 0.0;  // simulation time between outputs
  std::string dir;
  bool marginals = true;
  bool snapshots = false;

  bool operator==(const OutputSpec&) const = default;
};

struct SolverConfig {
  CollisionKernel kernel;
  double epsilon = 1.0;
  int n = 0;
  double support_radius = 0.0;  // R; the velocity box half-width is 2R
  std::vector<double> cells;    // widths, left to right
  double x0 = 0.0;
  double cfl = 0.9;
  std::optional<double> dt;
  double t_final = 0.0;
  BoundaryCondition left = NoFluxBC{};
  BoundaryCondition right = NoFluxBC{};
  InitialCondition init;
  OutputSpec output;
  std::string weights_cache;  // empty: precompute in memory

  void validate() const;
};

bool operator==(const SolverConfig& a, const SolverConfig& b);

struct Moments {
  double time = 0.0;
  double rho = 0.0;
  Vec3 velocity{0.0, 0.0, 0.0};
  double temperature = 0.0;
};

class NonPhysicalStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Density, bulk velocity and temperature from trapezoid quadrature. Throws
/// NonPhysicalStateError when rho <= 0.
Moments cell_moments(std::span<const double> f, const VelocityGrid& grid, double time = 0.0);
std::vector<Moments> compute_moments(const DistributionState& state);

/// Domain totals sum_j dx_j sum_k w_k phi_k f_jk for phi = 1, v1, v2, v3, |v|^2.
std::array<double, 5> domain_invariants(const DistributionState& state);

/// g(v1_k) = sum_{k2,k3} f w2 w3 for one cell.
std::vector<double> marginal(std::span<const double> f, const VelocityGrid& grid);

/// H-functional sum f log f w over nodes with f > 0.
double entropy(std::span<const double> f, const VelocityGrid& grid);

/// cfl * min dx / L.
double cfl_dt(const SpatialMesh& mesh, const VelocityGrid& grid, double cfl);

/// Closed-form BKW solution for Maxwell molecules with isotropic scattering,
/// unit density and temperature, at shape parameter K in [3/5, 1) (nonnegative there).
std::vector<double> bkw_profile(const VelocityGrid& grid, double k);
/// K(t) = 1 - exp(-t / (6 eps)) and its inverse.
double bkw_k_at(double t, double epsilon = 1.0);
double bkw_time_of(double k, double epsilon = 1.0);

std::vector<double> initial_distribution(const VelocityGrid& grid, const InitialCondition& ic);
void initialize(DistributionState& state, const InitialCondition& ic);

/// Advances df/dt = P(Q(f, f)) / eps in one cell with Heun's method; the
/// projection is applied to each collision evaluation.
class CollisionStepper {
 public:
  CollisionStepper(std::shared_ptr<const VelocityGrid> grid, std::shared_ptr<const WeightTable> table,
                   double epsilon);

  const VelocityGrid& grid() const { return *grid_; }
  const WeightTable& table() const { return *table_; }
  const ConservationProjector& projector() const { return projector_; }
  double epsilon() const { return epsilon_; }

  /// P(Q(f, f)) / eps.
  void rate(std::span<const double> f, std::span<double> out, const TaskPool* pool = nullptr) const;
  void step(std::span<double> f, double dt, const TaskPool* pool = nullptr) const;

 private:
  std::shared_ptr<const VelocityGrid> grid_;
  std::shared_ptr<const WeightTable> table_;
  ConservationProjector projector_;
  double epsilon_;
};

/// Throws InstabilityError naming the first cell holding a NaN or Inf.
void check_finite(const DistributionState& state);

/// transport(dt/2), collision(dt) in every cell, transport(dt/2).
void strang_step(DistributionState& state, double dt, const Transport& transport,
                 const CollisionStepper& collision, const TaskPool* pool = nullptr);

/// Largest relative change of the domain invariants between two steps.
struct StepDrift {
  double mass = 0.0;
  double momentum = 0.0;
  double energy = 0.0;
};

struct RunOptions {
  int workers = 1;
  int cores_per_worker = 1;
};

struct RunSummary {
  std::size_t steps = 0;
  double dt = 0.0;
  double wall_seconds = 0.0;
  double table_seconds = 0.0;
  StepDrift max_drift;
  double min_f = 0.0;
  double max_shell_fraction = 0.0;
  std::uint32_t table_checksum = 0;
  /// Mass drift always; momentum and energy only when no wall is present.
  bool conservation_ok = true;
};

/// Called at t = 0, every output.every, and t_final.
using OutputObserver = std::function<void(const DistributionState&)>;

/// Loads or precomputes the weight table named by the config.
std::shared_ptr<const WeightTable> prepare_table(const SolverConfig& config,
                                                 const VelocityGrid& grid,
                                                 const TaskPool* pool = nullptr);

RunSummary run(const SolverConfig& config, const RunOptions& options,
               const OutputObserver& observer = {});

}  // namespace boltz
