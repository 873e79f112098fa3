#include "boltz/velocity_grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace boltz {

double choose_domain(double support_radius) {
  if (!(support_radius > 0.0) || !std::isfinite(support_radius)) {
    throw std::invalid_argument("support radius must be positive, got " +
                                std::to_string(support_radius));
  }
  return 2.0 * support_radius;
}

VelocityGrid::VelocityGrid(int n, double half_width)
    : n_(n), half_width_(half_width) {
  if (n < 4 || n % 2 != 0) {
    throw std::invalid_argument("velocity grid needs an even N >= 4, got " +
                                std::to_string(n));
  }
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw std::invalid_argument("velocity half-width must be positive");
  }
  dv_ = 2.0 * half_width / n;
  dzeta_ = std::numbers::pi / half_width;
  size_ = static_cast<std::size_t>(n) * n * n;

  weights_.resize(size_);
  for (int i = 0; i < n; ++i) {
    const double wi = quad_weight_1d(i);
    for (int j = 0; j < n; ++j) {
      const double wij = wi * quad_weight_1d(j);
      for (int k = 0; k < n; ++k) {
        weights_[flat(i, j, k)] = wij * quad_weight_1d(k);
      }
    }
  }
}

std::array<int, 3> VelocityGrid::unflat(std::size_t index) const {
  const auto n = static_cast<std::size_t>(n_);
  return {static_cast<int>(index / (n * n)), static_cast<int>((index / n) % n),
          static_cast<int>(index % n)};
}

Vec3 VelocityGrid::velocity(std::size_t index) const {
  const auto k = unflat(index);
  return {node(k[0]), node(k[1]), node(k[2])};
}

Vec3 VelocityGrid::frequency(std::size_t index) const {
  const auto k = unflat(index);
  return {fourier_node(k[0]), fourier_node(k[1]), fourier_node(k[2])};
}

double VelocityGrid::quad_weight_1d(int k) const {
  return (k == 0 || k == n_ - 1) ? 0.5 * dv_ : dv_;
}

double VelocityGrid::boundary_mass_fraction(std::span<const double> f) const {
  double total = 0.0;
  double shell = 0.0;
  for (std::size_t idx = 0; idx < size_; ++idx) {
    const double m = std::abs(f[idx]) * weights_[idx];
    total += m;
    const auto k = unflat(idx);
    for (int c : k) {
      if (c == 0 || c == n_ - 1) {
        shell += m;
        break;
      }
    }
  }
  return total > 0.0 ? shell / total : 0.0;
}

}  // namespace boltz
