#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "boltz/task_pool.hpp"
#include "boltz/velocity_grid.hpp"

namespace boltz {

/// Variable-hard-potential kernel B = |u|^lambda b with isotropic b = 1/(4 pi).
struct CollisionKernel {
  double lambda = 0.0;
  double beta = 1.0;
  static constexpr double b_norm = 1.0 / (4.0 * std::numbers::pi);

  void validate() const;
};

enum class QuadratureRule : std::uint32_t {
  closed_form = 0,             // elementary antiderivatives, lambda in {0, 1}
  adaptive_gauss_kronrod = 1,  // 61-point Gauss-Kronrod with bisection
};

enum class TableStorage { automatic, dense, reduced };

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MemoryBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WeightFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// Bad magic, unsupported version or inconsistent header.
class WeightFormatError : public WeightFileError {
 public:
  using WeightFileError::WeightFileError;
};
class WeightTruncatedError : public WeightFileError {
 public:
  using WeightFileError::WeightFileError;
};
/// File is well formed but was built for a different grid or kernel.
class WeightMetadataError : public WeightFileError {
 public:
  using WeightFileError::WeightFileError;
};

/// Prefactor 4 pi / (2 pi)^{3/2} of the isotropic weight integral.
inline constexpr double kWeightPrefactor = std::numbers::sqrt2 * std::numbers::inv_sqrtpi;

/// Convolution weight for Fourier nodes xi and zeta, integrating the radial
/// form up to r0 with adaptive quadrature. Throws QuadratureError when the
/// requested accuracy is not reached.
std::complex<double> ghat_entry(const Vec3& xi, const Vec3& zeta,
                                const CollisionKernel& kernel, double r0);

/// Same weight from elementary antiderivatives; only lambda = 0 or 1.
double ghat_closed_form(const Vec3& xi, const Vec3& zeta,
                        const CollisionKernel& kernel, double r0);

namespace detail {

double sinc(double x);

/// Integral over [0, r0] of r^{lambda+2} sinc(kappa r).
double radial_single(double kappa, double lambda, double r0, QuadratureRule rule);
/// Integral over [0, r0] of r^{lambda+2} sinc(alpha r) sinc(gamma r).
double radial_pair(double alpha, double gamma, double lambda, double r0,
                   QuadratureRule rule);

}  // namespace detail

/// Weights indexed by integer invariants. With xi = dzeta a and
/// zeta = dzeta b for integer vectors a and b, the isotropic weight depends
/// only on s = |b|^2, t = |2a - b|^2 and u = |a|^2:
///   Ghat = pair(s, t) - single(u),  and Ghat = 0 when s = 0.
struct ReducedWeights {
  int max_s = 0;
  int max_t = 0;
  std::vector<double> pair;    // (max_s + 1) x (max_t + 1), row-major in s
  std::vector<double> single;  // max_s + 1 entries (|a|^2 shares the range of |b|^2)

  const double* pair_row(int s) const {
    return pair.data() + static_cast<std::size_t>(s) * (max_t + 1);
  }
  double value(int s, int t, int u) const {
    return s == 0 ? 0.0 : pair_row(s)[t] - single[u];
  }
};

struct TableOptions {
  TableStorage storage = TableStorage::automatic;
  std::size_t memory_budget_bytes = std::size_t{1} << 30;
  /// Force adaptive quadrature even when closed forms exist.
  bool force_quadrature = false;
};

/// Precomputed convolution weights Ghat(xi_m, zeta_k) for one grid and kernel.
///
/// Dense storage keeps all N^6 complex entries in k-major order (row k holds
/// every xi for one zeta). Reduced storage keeps the invariant tables and
/// reconstructs entries on demand.
class WeightTable {
 public:
  struct Metadata {
    int n = 0;
    double half_width = 0.0;
    double lambda = 0.0;
    double beta = 1.0;
    QuadratureRule rule = QuadratureRule::closed_form;
  };

  WeightTable(Metadata meta, std::vector<std::complex<double>> dense);
  WeightTable(Metadata meta, ReducedWeights reduced);

  const Metadata& metadata() const { return meta_; }
  std::uint64_t entry_count() const;
  bool is_dense() const { return std::holds_alternative<Dense>(storage_); }
  std::size_t memory_bytes() const;

  /// Entry for flat lattice indices of zeta (row) and xi (column).
  std::complex<double> at(std::size_t zeta_index, std::size_t xi_index) const;

  /// Row of N^3 entries for one zeta; dense storage only.
  std::span<const std::complex<double>> dense_row(std::size_t zeta_index) const;
  /// Invariant tables; reduced storage only.
  const ReducedWeights& reduced() const;

  bool matches(const VelocityGrid& grid, const CollisionKernel& kernel) const;
  /// Throws WeightMetadataError describing the first mismatching field.
  void require_match(const VelocityGrid& grid, const CollisionKernel& kernel) const;

  /// CRC-32 of the stored arrays (entries for dense, invariant tables for reduced).
  std::uint32_t checksum() const;

 private:
  struct Dense {
    std::vector<std::complex<double>> entries;
  };

  Metadata meta_;
  std::variant<Dense, ReducedWeights> storage_;
};

/// Bytes needed by the full N^6 complex table.
std::uint64_t dense_table_bytes(int n);

WeightTable precompute_table(const VelocityGrid& grid, const CollisionKernel& kernel,
                             const TableOptions& options = {},
                             const TaskPool* pool = nullptr);

/// Binary cache, little-endian: "BLTZGHAT", u32 version, u32 N, f64 L,
/// f64 lambda, f64 beta, u32 rule, u64 count, then count (re, im) f64 pairs.
void save_table(const WeightTable& table, const std::filesystem::path& path);
WeightTable load_table(const std::filesystem::path& path);
WeightTable load_table(const std::filesystem::path& path, const VelocityGrid& grid,
                       const CollisionKernel& kernel);

/// Header fields shared by the weight cache and distribution snapshots.
struct BinaryHeader {
  char magic[8];
  std::uint32_t version = 1;
  std::uint32_t n = 0;
  double half_width = 0.0;
  double lambda = 0.0;
  double beta = 1.0;
  std::uint32_t rule = 0;
  std::uint64_t count = 0;
};
inline constexpr std::size_t kBinaryHeaderBytes = 52;

void write_binary_header(std::ostream& out, const BinaryHeader& header);
/// Reads and validates the fixed-size header; `expected_magic` is 8 chars.
BinaryHeader read_binary_header(std::istream& in, std::string_view expected_magic);

}  // namespace boltz
