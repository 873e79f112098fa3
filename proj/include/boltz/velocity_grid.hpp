#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace boltz {

using Vec3 = std::array<double, 3>;

/// Half-width of the computational velocity cube for a distribution whose
/// support lies in the ball of radius `support_radius`. Relative velocities
/// then stay inside a ball of twice that radius, which is also the radial
/// cutoff of the weight integrals.
double choose_domain(double support_radius);

/// Uniform cubic velocity lattice on [-L, L)^3 together with its Fourier dual.
///
/// Node k (0 <= k < N per dimension) sits at v = dv (k - N/2) and
/// zeta = dzeta (k - N/2), so index N/2 is exactly the origin in both spaces.
/// Flat indices are row-major with the third component fastest.
class VelocityGrid {
 public:
  VelocityGrid(int n, double half_width);

  int n() const { return n_; }
  double half_width() const { return half_width_; }
  double dv() const { return dv_; }
  double dzeta() const { return dzeta_; }
  std::size_t size() const { return size_; }

  double node(int k) const { return dv_ * (k - n_ / 2); }
  double fourier_node(int k) const { return dzeta_ * (k - n_ / 2); }

  std::size_t flat(int k1, int k2, int k3) const {
    return (static_cast<std::size_t>(k1) * n_ + k2) * n_ + k3;
  }
  std::array<int, 3> unflat(std::size_t index) const;

  Vec3 velocity(std::size_t index) const;
  Vec3 frequency(std::size_t index) const;

  /// One-dimensional trapezoid weight: dv inside, dv/2 at k = 0 and k = N-1.
  double quad_weight_1d(int k) const;
  /// Tensor-product trapezoid weights, one per lattice node.
  std::span<const double> quad_weights() const { return weights_; }

  /// Fraction of the weighted sum of `f` that sits on the outermost layer of
  /// nodes (any index equal to 0 or N-1).
  double boundary_mass_fraction(std::span<const double> f) const;

  friend bool operator==(const VelocityGrid& a, const VelocityGrid& b) {
    return a.n_ == b.n_ && a.half_width_ == b.half_width_;
  }

 private:
  int n_;
  double half_width_;
  double dv_;
  double dzeta_;
  std::size_t size_;
  std::vector<double> weights_;
};

}  // namespace boltz
