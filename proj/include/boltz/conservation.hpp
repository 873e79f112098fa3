#pragma once

#include <array>
#include <span>
#include <vector>

#include "boltz/velocity_grid.hpp"

namespace boltz {

/// Least-squares projection onto vectors with zero discrete mass, momentum
/// and energy moments.
///
/// C is the 5 x M matrix with rows w_j, v1_j w_j, v2_j w_j, v3_j w_j and
/// |v_j|^2 w_j. project(q) = q - C^T (C C^T)^{-1} C q is the closest vector to
/// q (Euclidean norm) in the kernel of C.
class ConservationProjector {
 public:
  static constexpr int kConstraints = 5;

  explicit ConservationProjector(const VelocityGrid& grid);

  std::size_t size() const { return size_; }
  /// Row i of C (length M).
  std::span<const double> row(int i) const { return rows_[i]; }
  /// C x.
  std::array<double, kConstraints> apply(std::span<const double> x) const;

  void project(std::span<const double> in, std::span<double> out) const;
  std::vector<double> project(std::span<const double> in) const;

  /// 2-norm condition number of C C^T.
  double normal_condition() const { return condition_; }

 private:
  std::size_t size_;
  std::array<std::vector<double>, kConstraints> rows_;
  // Columns of C^T (C C^T)^{-1}, one length-M vector per constraint.
  std::array<std::vector<double>, kConstraints> correction_;
  double condition_ = 0.0;
};

}  // namespace boltz
