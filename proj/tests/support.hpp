#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "boltz/velocity_grid.hpp"

namespace testing_support {

inline double gaussian(const boltz::Vec3& v, const boltz::Vec3& centre, const boltz::Vec3& temps) {
  double e = 0.0, norm = 1.0;
  for (int i = 0; i < 3; ++i) {
    e += (v[i] - centre[i]) * (v[i] - centre[i]) / (2.0 * temps[i]);
    norm *= std::sqrt(2.0 * std::numbers::pi * temps[i]);
  }
  return std::exp(-e) / norm;
}

inline double rel_l2(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace testing_support
