#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "boltz/velocity_grid.hpp"
#include "boltz/weights.hpp"

// Brute-force reference computations. They share no code path with the fast
// solvers and are only practical at small N.
namespace boltz::oracle {

/// Direct O(N^6) sum dv^3 (2 pi)^{-3/2} sum_j f_j exp(-i zeta_k . v_j).
std::vector<std::complex<double>> direct_transform(std::span<const double> f,
                                                   const VelocityGrid& grid);

/// Composite Simpson rule on [0, r0] for the weight integral with `panels`
/// subintervals (even).
double simpson_ghat(const Vec3& xi, const Vec3& zeta, double lambda, double r0, int panels);

using VelocityFunction = std::function<double(const Vec3&)>;

struct DirectCollisionOptions {
  int polar_nodes = 24;    // Gauss-Legendre nodes in cos(theta)
  int azimuth_nodes = 48;  // trapezoid nodes in phi
  /// Relative speeds above this are dropped (<= 0 keeps all).
  double relative_speed_cutoff = 0.0;
};

/// Q(f, f)(v_k) at every lattice node by quadrature of the collision integral
/// with B = |u|^lambda / (4 pi): trapezoid in v_* over the lattice, product
/// rule on the sphere, f evaluated exactly at post-collision velocities.
std::vector<double> direct_collision(const VelocityFunction& f, const VelocityGrid& grid,
                                     double lambda, const DirectCollisionOptions& options = {});

/// Least-squares projection by solving the dense KKT system
/// [I C^T; C 0] [x; mu] = [q; 0].
std::vector<double> kkt_projection(std::span<const double> q,
                                   std::span<const std::vector<double>> constraint_rows);

}  // namespace boltz::oracle
