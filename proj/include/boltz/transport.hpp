#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "boltz/velocity_grid.hpp"

namespace boltz {

/// One-dimensional cell mesh; cells are contiguous and may be nonuniform.
class SpatialMesh {
 public:
  SpatialMesh(std::vector<double> widths, double x0 = 0.0);
  static SpatialMesh uniform(std::size_t count, double width, double x0 = 0.0);

  std::size_t size() const { return widths_.size(); }
  double width(std::size_t j) const { return widths_[j]; }
  double center(std::size_t j) const { return centers_[j]; }
  std::span<const double> widths() const { return widths_; }
  std::span<const double> centers() const { return centers_; }
  double min_width() const;
  double left() const { return x0_; }
  double right() const;

 private:
  double x0_;
  std::vector<double> widths_;
  std::vector<double> centers_;
};

/// Diffusive Maxwell wall. The wall velocity must be tangential (no normal
/// component), so the wall does not move.
struct WallBC {
  double temperature = 1.0;
  Vec3 velocity{0.0, 0.0, 0.0};
  double gas_constant = 1.0;

  void validate() const;
};
/// Zero-gradient: ghost cells copy the boundary cell.
struct NoFluxBC {};
struct PeriodicBC {};
using BoundaryCondition = std::variant<WallBC, NoFluxBC, PeriodicBC>;

enum class Side { left, right };

/// f(x_j, v_k) for every cell, stored cell-major (N^3 values per cell).
class DistributionState {
 public:
  DistributionState(std::shared_ptr<const VelocityGrid> grid, SpatialMesh mesh,
                    double time = 0.0);

  const VelocityGrid& grid() const { return *grid_; }
  const std::shared_ptr<const VelocityGrid>& grid_ptr() const { return grid_; }
  const SpatialMesh& mesh() const { return mesh_; }
  std::size_t cells() const { return mesh_.size(); }
  std::size_t cell_size() const { return grid_->size(); }

  std::span<double> cell(std::size_t j) {
    return {data_.data() + j * cell_size(), cell_size()};
  }
  std::span<const double> cell(std::size_t j) const {
    return {data_.data() + j * cell_size(), cell_size()};
  }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double time = 0.0;

  /// sum_j dx_j sum_k w_k f(x_j, v_k).
  double total_mass() const;
  /// Minimum value over all cells and nodes (spectral negatives show up here).
  double min_value() const;
  bool all_finite() const;

 private:
  std::shared_ptr<const VelocityGrid> grid_;
  SpatialMesh mesh_;
  std::vector<double> data_;
};

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

/// Limited slope of cell j from its neighbours, using centre-to-centre distances.
inline double cell_slope(double f_left, double f, double f_right, double dx_left, double dx,
                         double dx_right) {
  return minmod((f - f_left) / (0.5 * (dx_left + dx)), (f_right - f) / (0.5 * (dx + dx_right)));
}

/// Second-order upwind flux through the face between cells j and j+1.
inline double upwind_flux(double f_j, double slope_j, double f_next, double slope_next, double v1,
                          double dx_j, double dx_next) {
  return v1 >= 0.0 ? v1 * (f_j + 0.5 * dx_j * slope_j)
                   : v1 * (f_next - 0.5 * dx_next * slope_next);
}

/// Cells [-2, n + 2) of a contiguous range: the owned cells plus two ghost
/// cells per side. Ghost widths are part of the block.
class PaddedBlock {
 public:
  static constexpr int kGhost = 2;

  PaddedBlock(std::size_t owned, std::size_t cell_size);

  std::size_t owned() const { return owned_; }
  std::size_t cell_size() const { return cell_size_; }
  std::span<double> cell(int j) {
    return {data_.data() + static_cast<std::size_t>(j + kGhost) * cell_size_, cell_size_};
  }
  std::span<const double> cell(int j) const {
    return {data_.data() + static_cast<std::size_t>(j + kGhost) * cell_size_, cell_size_};
  }
  double& width(int j) { return widths_[static_cast<std::size_t>(j + kGhost)]; }
  double width(int j) const { return widths_[static_cast<std::size_t>(j + kGhost)]; }
  /// Owned cells only, contiguous.
  std::span<double> owned_data() {
    return {data_.data() + kGhost * cell_size_, owned_ * cell_size_};
  }
  std::span<const double> owned_data() const {
    return {data_.data() + kGhost * cell_size_, owned_ * cell_size_};
  }

 private:
  std::size_t owned_;
  std::size_t cell_size_;
  std::vector<double> data_;
  std::vector<double> widths_;
};

/// Fills both ghost cells on `side` of a wall: nodes moving away from the
/// wall get sigma_w times the wall Maxwellian, the rest copy the boundary
/// cell. sigma_w balances the discrete mass flux through the wall exactly.
/// Returns sigma_w; throws std::runtime_error when the wall Maxwellian is not
/// resolved by the lattice.
double apply_wall_bc(PaddedBlock& block, const WallBC& wall, Side side, const VelocityGrid& grid);

/// Ghost cells for a non-periodic physical boundary (wall or zero-gradient).
/// Returns sigma_w for walls and 0 otherwise.
double fill_physical_ghosts(PaddedBlock& block, const BoundaryCondition& bc, Side side,
                            const VelocityGrid& grid);

/// -(F_{j+1/2} - F_{j-1/2}) / dx_j for every owned cell; ghosts must be filled.
void transport_rhs(const PaddedBlock& block, const VelocityGrid& grid, std::span<double> rhs);

/// Largest transport step allowed at unit Courant number.
double transport_dt_limit(const SpatialMesh& mesh, const VelocityGrid& grid);

/// Single-domain second-order finite-volume advection along x.
class Transport {
 public:
  Transport(BoundaryCondition left, BoundaryCondition right);

  const BoundaryCondition& left() const { return left_; }
  const BoundaryCondition& right() const { return right_; }
  bool periodic() const;

  /// One SSP-RK2 step of size dt. Throws std::invalid_argument if dt exceeds
  /// the unit-Courant limit.
  void step(DistributionState& state, double dt) const;

  /// Copies `state` into a padded block and fills all ghost cells.
  void fill_ghosts(PaddedBlock& block, const VelocityGrid& grid,
                   std::span<const double> widths) const;

 private:
  BoundaryCondition left_;
  BoundaryCondition right_;
};

/// Sum over v of w(v) v1 f(v): the discrete mass flux density of one cell.
double mass_flux(std::span<const double> f, const VelocityGrid& grid);

/// Discrete Maxwellian rho (2 pi R T)^{-3/2} exp(-|v - V|^2 / (2 R T)) on the lattice.
std::vector<double> discrete_maxwellian(const VelocityGrid& grid, double rho, const Vec3& bulk,
                                        double temperature, double gas_constant = 1.0);

}  // namespace boltz
