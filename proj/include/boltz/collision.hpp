#pragma once

#include <complex>
#include <span>
#include <vector>

#include "boltz/task_pool.hpp"
#include "boltz/velocity_grid.hpp"
#include "boltz/weights.hpp"

namespace boltz {

/// Values of the Fourier transform on the zeta lattice (N^3 entries, same
/// flat ordering as the velocity lattice).
class SpectralDistribution {
 public:
  SpectralDistribution(const VelocityGrid& grid, std::vector<std::complex<double>> values);
  SpectralDistribution(int n, double half_width, std::vector<std::complex<double>> values);

  int n() const { return n_; }
  double half_width() const { return half_width_; }
  std::span<const std::complex<double>> values() const { return values_; }
  std::span<std::complex<double>> values() { return values_; }
  const std::complex<double>& operator[](std::size_t i) const { return values_[i]; }

  bool same_grid(const VelocityGrid& grid) const {
    return n_ == grid.n() && half_width_ == grid.half_width();
  }

 private:
  int n_;
  double half_width_;
  std::vector<std::complex<double>> values_;
};

/// fhat(zeta_k) = dv^3 / (2 pi)^{3/2} sum_j f(v_j) exp(-i zeta_k . v_j), via FFT.
SpectralDistribution forward_transform(std::span<const double> f, const VelocityGrid& grid);

/// Inverse of forward_transform. Throws std::runtime_error when the result has
/// an imaginary part above 1e-10 of its real part, which means the input was
/// not the transform of a real function.
std::vector<double> inverse_transform(const SpectralDistribution& fhat, const VelocityGrid& grid);

/// Weighted convolution Qhat(zeta_k) = sum_m Ghat(xi_m, zeta_k) fhat(xi_m)
/// fhat(zeta_k - xi_m) w_m with trapezoid weights w_m.
///
/// The sum runs over the sign-symmetric part of the lattice (offsets
/// -N/2+1 .. N/2-1); the unpaired Nyquist planes are left at zero and any
/// difference node outside that set contributes nothing, so the output keeps
/// the conjugate symmetry of a real function exactly. Only the half-lattice is
/// evaluated; the other half is its conjugate mirror.
SpectralDistribution collide_fourier(const SpectralDistribution& fhat, const WeightTable& table,
                                     const TaskPool* pool = nullptr);

/// inverse_transform(collide_fourier(forward_transform(f))).
std::vector<double> collide(std::span<const double> f, const VelocityGrid& grid,
                            const WeightTable& table, const TaskPool* pool = nullptr);

}  // namespace boltz
