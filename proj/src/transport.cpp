#include "boltz/transport.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace boltz {

SpatialMesh::SpatialMesh(std::vector<double> widths, double x0)
    : x0_(x0), widths_(std::move(widths)) {
  if (widths_.empty()) throw std::invalid_argument("spatial mesh needs at least one cell");
  centers_.resize(widths_.size());
  double left = x0_;
  for (std::size_t j = 0; j < widths_.size(); ++j) {
    if (!(widths_[j] > 0.0) || !std::isfinite(widths_[j])) {
      throw std::invalid_argument("cell " + std::to_string(j) + " has nonpositive width");
    }
    centers_[j] = left + 0.5 * widths_[j];
    left += widths_[j];
  }
}

SpatialMesh SpatialMesh::uniform(std::size_t count, double width, double x0) {
  return SpatialMesh(std::vector<double>(count, width), x0);
}

double SpatialMesh::min_width() const { return *std::min_element(widths_.begin(), widths_.end()); }

double SpatialMesh::right() const { return centers_.back() + 0.5 * widths_.back(); }

void WallBC::validate() const {
  if (!(temperature > 0.0)) throw std::invalid_argument("wall temperature must be positive");
  if (!(gas_constant > 0.0)) throw std::invalid_argument("gas constant must be positive");
  if (velocity[0] != 0.0) {
    throw std::invalid_argument("wall velocity must be tangential (zero x-component)");
  }
}

DistributionState::DistributionState(std::shared_ptr<const VelocityGrid> grid, SpatialMesh mesh,
                                     double t)
    : time(t), grid_(std::move(grid)), mesh_(std::move(mesh)),
      data_(mesh_.size() * grid_->size(), 0.0) {}

double DistributionState::total_mass() const {
  const auto w = grid_->quad_weights();
  double total = 0.0;
  for (std::size_t j = 0; j < cells(); ++j) {
    const auto f = cell(j);
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) s += w[k] * f[k];
    total += mesh_.width(j) * s;
  }
  return total;
}

double DistributionState::min_value() const {
  return *std::min_element(data_.begin(), data_.end());
}

bool DistributionState::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

PaddedBlock::PaddedBlock(std::size_t owned, std::size_t cell_size)
    : owned_(owned), cell_size_(cell_size),
      data_((owned + 2 * kGhost) * cell_size, 0.0), widths_(owned + 2 * kGhost, 0.0) {}

std::vector<double> discrete_maxwellian(const VelocityGrid& grid, double rho, const Vec3& bulk,
                                        double temperature, double gas_constant) {
  const double rt = gas_constant * temperature;
  const double norm = rho / std::pow(2.0 * std::numbers::pi * rt, 1.5);
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Vec3 v = grid.velocity(k);
    const double d0 = v[0] - bulk[0], d1 = v[1] - bulk[1], d2 = v[2] - bulk[2];
    out[k] = norm * std::exp(-(d0 * d0 + d1 * d1 + d2 * d2) / (2.0 * rt));
  }
  return out;
}

double mass_flux(std::span<const double> f, const VelocityGrid& grid) {
  const auto w = grid.quad_weights();
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += w[k] * grid.velocity(k)[0] * f[k];
  return s;
}

double apply_wall_bc(PaddedBlock& block, const WallBC& wall, Side side, const VelocityGrid& grid) {
  wall.validate();
  const double normal = side == Side::left ? 1.0 : -1.0;
  const int boundary = side == Side::left ? 0 : static_cast<int>(block.owned()) - 1;
  const int ghost_a = side == Side::left ? -1 : boundary + 1;
  const int ghost_b = side == Side::left ? -2 : boundary + 2;
  const auto interior = block.cell(boundary);
  const auto w = grid.quad_weights();
  const auto wall_max =
      discrete_maxwellian(grid, 1.0, wall.velocity, wall.temperature, wall.gas_constant);

  double incoming = 0.0;
  double outgoing = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double vn = grid.velocity(k)[0] * normal;
    if (vn < 0.0) {
      incoming += vn * interior[k] * w[k];
    } else if (vn > 0.0) {
      outgoing += vn * wall_max[k] * w[k];
    }
  }
  if (!(outgoing > 0.0)) {
    std::ostringstream msg;
    msg << "wall Maxwellian at T=" << wall.temperature
        << " carries no outgoing flux on this lattice; refine the velocity grid (dv="
        << grid.dv() << ") or raise the wall temperature";
    throw std::runtime_error(msg.str());
  }
  const double sigma = -incoming / outgoing;

  auto ga = block.cell(ghost_a);
  auto gb = block.cell(ghost_b);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double vn = grid.velocity(k)[0] * normal;
    const double value = vn > 0.0 ? sigma * wall_max[k] : interior[k];
    ga[k] = value;
    gb[k] = value;
  }
  block.width(ghost_a) = block.width(boundary);
  block.width(ghost_b) = block.width(boundary);
  return sigma;
}

double fill_physical_ghosts(PaddedBlock& block, const BoundaryCondition& bc, Side side,
                            const VelocityGrid& grid) {
  if (const auto* wall = std::get_if<WallBC>(&bc)) {
    return apply_wall_bc(block, *wall, side, grid);
  }
  if (std::holds_alternative<PeriodicBC>(bc)) {
    throw std::logic_error("periodic ghosts come from the opposite end, not a boundary operator");
  }
  const int boundary = side == Side::left ? 0 : static_cast<int>(block.owned()) - 1;
  const int ga = side == Side::left ? -1 : boundary + 1;
  const int gb = side == Side::left ? -2 : boundary + 2;
  const auto interior = block.cell(boundary);
  std::copy(interior.begin(), interior.end(), block.cell(ga).begin());
  std::copy(interior.begin(), interior.end(), block.cell(gb).begin());
  block.width(ga) = block.width(boundary);
  block.width(gb) = block.width(boundary);
  return 0.0;
}

void transport_rhs(const PaddedBlock& block, const VelocityGrid& grid, std::span<double> rhs) {
  const int n_owned = static_cast<int>(block.owned());
  const std::size_t m = grid.size();
  if (rhs.size() != block.owned() * m) {
    throw std::invalid_argument("transport_rhs: output has the wrong size");
  }
  const int nv = grid.n();
  const std::size_t plane = static_cast<std::size_t>(nv) * nv;

  // Slopes for cells -1 .. n, fluxes for faces -1/2 .. n-1/2.
  std::vector<double> slopes(static_cast<std::size_t>(n_owned + 2) * m);
  for (int j = -1; j <= n_owned; ++j) {
    const auto fl = block.cell(j - 1);
    const auto fc = block.cell(j);
    const auto fr = block.cell(j + 1);
    const double dl = block.width(j - 1), dc = block.width(j), dr = block.width(j + 1);
    double* s = slopes.data() + static_cast<std::size_t>(j + 1) * m;
    for (std::size_t k = 0; k < m; ++k) s[k] = cell_slope(fl[k], fc[k], fr[k], dl, dc, dr);
  }
  std::vector<double> flux(static_cast<std::size_t>(n_owned + 1) * m);
  for (int j = -1; j < n_owned; ++j) {
    const auto fc = block.cell(j);
    const auto fn = block.cell(j + 1);
    const double* sc = slopes.data() + static_cast<std::size_t>(j + 1) * m;
    const double* sn = slopes.data() + static_cast<std::size_t>(j + 2) * m;
    const double dc = block.width(j), dn = block.width(j + 1);
    double* out = flux.data() + static_cast<std::size_t>(j + 1) * m;
    for (int k1 = 0; k1 < nv; ++k1) {
      const double v1 = grid.node(k1);
      const std::size_t base = static_cast<std::size_t>(k1) * plane;
      for (std::size_t k = base; k < base + plane; ++k) {
        out[k] = upwind_flux(fc[k], sc[k], fn[k], sn[k], v1, dc, dn);
      }
    }
  }
  for (int j = 0; j < n_owned; ++j) {
    const double inv_dx = 1.0 / block.width(j);
    const double* fl = flux.data() + static_cast<std::size_t>(j) * m;
    const double* fr = flux.data() + static_cast<std::size_t>(j + 1) * m;
    double* out = rhs.data() + static_cast<std::size_t>(j) * m;
    for (std::size_t k = 0; k < m; ++k) out[k] = -(fr[k] - fl[k]) * inv_dx;
  }
}

double transport_dt_limit(const SpatialMesh& mesh, const VelocityGrid& grid) {
  return mesh.min_width() / grid.half_width();
}

Transport::Transport(BoundaryCondition left, BoundaryCondition right)
    : left_(std::move(left)), right_(std::move(right)) {
  if (std::holds_alternative<PeriodicBC>(left_) != std::holds_alternative<PeriodicBC>(right_)) {
    throw std::invalid_argument("periodic boundaries must be set on both sides");
  }
  if (const auto* w = std::get_if<WallBC>(&left_)) w->validate();
  if (const auto* w = std::get_if<WallBC>(&right_)) w->validate();
}

bool Transport::periodic() const { return std::holds_alternative<PeriodicBC>(left_); }

void Transport::fill_ghosts(PaddedBlock& block, const VelocityGrid& grid,
                            std::span<const double> widths) const {
  const int n = static_cast<int>(block.owned());
  for (int j = 0; j < n; ++j) block.width(j) = widths[static_cast<std::size_t>(j)];
  if (periodic()) {
    for (int g = 1; g <= PaddedBlock::kGhost; ++g) {
      // Left ghosts -g take cell n-g; right ghosts n-1+g take cell g-1.
      const int src_left = ((n - g) % n + n) % n;
      const int src_right = (g - 1) % n;
      auto a = block.cell(src_left);
      std::copy(a.begin(), a.end(), block.cell(-g).begin());
      block.width(-g) = block.width(src_left);
      auto b = block.cell(src_right);
      std::copy(b.begin(), b.end(), block.cell(n - 1 + g).begin());
      block.width(n - 1 + g) = block.width(src_right);
    }
    return;
  }
  fill_physical_ghosts(block, left_, Side::left, grid);
  fill_physical_ghosts(block, right_, Side::right, grid);
}

void Transport::step(DistributionState& state, double dt) const {
  const auto& grid = state.grid();
  const double limit = transport_dt_limit(state.mesh(), grid);
  if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "transport step dt=" << dt << " violates the CFL limit " << limit;
    throw std::invalid_argument(msg.str());
  }
  const std::size_t n = state.cells();
  const std::size_t m = grid.size();
  PaddedBlock block(n, m);
  auto owned = block.owned_data();
  const auto f0 = state.data();
  std::copy(f0.begin(), f0.end(), owned.begin());
  std::vector<double> rhs(n * m);

  fill_ghosts(block, grid, state.mesh().widths());
  transport_rhs(block, grid, rhs);
  for (std::size_t i = 0; i < owned.size(); ++i) owned[i] = f0[i] + dt * rhs[i];

  fill_ghosts(block, grid, state.mesh().widths());
  transport_rhs(block, grid, rhs);
  auto out = state.data();
  for (std::size_t i = 0; i < owned.size(); ++i) {
    out[i] = 0.5 * (out[i] + owned[i] + dt * rhs[i]);
  }
}

}  // namespace boltz
