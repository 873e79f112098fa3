#include "boltz/conservation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace boltz {

ConservationProjector::ConservationProjector(const VelocityGrid& grid) : size_(grid.size()) {
  const auto w = grid.quad_weights();
  for (auto& r : rows_) r.resize(size_);
  for (std::size_t j = 0; j < size_; ++j) {
    const Vec3 v = grid.velocity(j);
    rows_[0][j] = w[j];
    rows_[1][j] = v[0] * w[j];
    rows_[2][j] = v[1] * w[j];
    rows_[3][j] = v[2] * w[j];
    rows_[4][j] = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * w[j];
  }

  Eigen::Matrix<double, kConstraints, kConstraints> normal;
  for (int a = 0; a < kConstraints; ++a) {
    for (int b = a; b < kConstraints; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < size_; ++j) s += rows_[a][j] * rows_[b][j];
      normal(a, b) = s;
      normal(b, a) = s;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kConstraints, kConstraints>> eig(normal);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) {
    throw std::runtime_error("constraint normal matrix C C^T is singular");
  }
  condition_ = hi / lo;

  Eigen::LLT<Eigen::Matrix<double, kConstraints, kConstraints>> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("constraint normal matrix C C^T is not positive definite");
  }
  const Eigen::Matrix<double, kConstraints, kConstraints> inverse =
      llt.solve(Eigen::Matrix<double, kConstraints, kConstraints>::Identity());
  for (int a = 0; a < kConstraints; ++a) {
    correction_[a].assign(size_, 0.0);
    for (std::size_t j = 0; j < size_; ++j) {
      double s = 0.0;
      for (int b = 0; b < kConstraints; ++b) s += rows_[b][j] * inverse(b, a);
      correction_[a][j] = s;
    }
  }
}

std::array<double, ConservationProjector::kConstraints> ConservationProjector::apply(
    std::span<const double> x) const {
  if (x.size() != size_) {
    throw std::invalid_argument("constraint apply: expected " + std::to_string(size_) +
                                " values");
  }
  std::array<double, kConstraints> out{};
  for (int a = 0; a < kConstraints; ++a) {
    double s = 0.0;
    for (std::size_t j = 0; j < size_; ++j) s += rows_[a][j] * x[j];
    out[a] = s;
  }
  return out;
}

void ConservationProjector::project(std::span<const double> in, std::span<double> out) const {
  if (in.size() != size_ || out.size() != size_) {
    throw std::invalid_argument("project: expected " + std::to_string(size_) + " values");
  }
  if (out.data() != in.data()) std::copy(in.begin(), in.end(), out.begin());
  // A second pass removes the rounding left by the first.
  for (int pass = 0; pass < 2; ++pass) {
    const auto moments = apply(out);
    for (std::size_t j = 0; j < size_; ++j) {
      double s = 0.0;
      for (int a = 0; a < kConstraints; ++a) s += correction_[a][j] * moments[a];
      out[j] -= s;
    }
  }
}

std::vector<double> ConservationProjector::project(std::span<const double> in) const {
  std::vector<double> out(in.size());
  project(in, out);
  return out;
}

}  // namespace boltz
