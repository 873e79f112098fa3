#include "boltz/weights.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <zlib.h>

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace boltz {

void CollisionKernel::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("kernel lambda must lie in [0, 1], got " +
                                std::to_string(lambda));
  }
  if (beta != 1.0) {
    throw std::invalid_argument("only elastic collisions (beta = 1) are supported");
  }
}

namespace detail {

double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

namespace {

bool is_integer_lambda(double lambda) { return lambda == 0.0 || lambda == 1.0; }

// Below this value of |k r0| the closed forms lose digits to cancellation and
// the Taylor series is used instead.
constexpr double kSeriesCutoff = 2.0;

// sum_n (-1)^n x^{2n} / ((2n + shift)! (2n + p)) where shift selects sin/cos.
double alternating_series(double x, int factorial_shift, double p) {
  const double x2 = x * x;
  double term_fact = 1.0;  // x^{2n} / (2n + shift)!
  for (int j = 2; j <= factorial_shift; ++j) term_fact /= j;
  double sum = 0.0;
  for (int n = 0; n < 60; ++n) {
    const double term = term_fact / (2 * n + p);
    sum += (n % 2 == 0) ? term : -term;
    if (std::abs(term) < 1e-19 * std::abs(sum)) break;
    const int a = 2 * n + factorial_shift + 1;
    term_fact *= x2 / (static_cast<double>(a) * (a + 1));
  }
  return sum;
}

// Integral over [0, r0] of r^lambda cos(k r).
double cosine_moment(double k, double lambda, double r0) {
  k = std::abs(k);
  const double y = k * r0;
  if (y < kSeriesCutoff) {
    return std::pow(r0, lambda + 1.0) * alternating_series(y, 0, lambda + 1.0);
  }
  if (lambda == 0.0) return std::sin(y) / k;
  return (std::cos(y) + y * std::sin(y) - 1.0) / (k * k);
}

double closed_single(double kappa, double lambda, double r0) {
  kappa = std::abs(kappa);
  const double x = kappa * r0;
  if (x < kSeriesCutoff) {
    return std::pow(r0, lambda + 3.0) * alternating_series(x, 1, lambda + 3.0);
  }
  const double s = std::sin(x);
  const double c = std::cos(x);
  if (lambda == 0.0) return (s - x * c) / (kappa * kappa * kappa);
  const double k2 = kappa * kappa;
  return (2.0 * x * s - (x * x - 2.0) * c - 2.0) / (k2 * k2);
}

double closed_pair(double alpha, double gamma, double lambda, double r0) {
  alpha = std::abs(alpha);
  gamma = std::abs(gamma);
  if (alpha == 0.0) return closed_single(gamma, lambda, r0);
  if (gamma == 0.0) return closed_single(alpha, lambda, r0);
  return (cosine_moment(alpha - gamma, lambda, r0) -
          cosine_moment(alpha + gamma, lambda, r0)) /
         (2.0 * alpha * gamma);
}

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

// Integrates f over [0, r0], splitting into panels of at most half a period
// of the fastest oscillation `omega`.
template <class F>
QuadResult integrate_radial(F&& f, double r0, double omega) {
  using boost::math::quadrature::gauss_kronrod;
  const int panels = std::max(1, static_cast<int>(std::ceil(omega * r0 / std::numbers::pi)));
  const double h = r0 / panels;
  QuadResult out;
  for (int p = 0; p < panels; ++p) {
    double err = 0.0;
    double l1 = 0.0;
    const double a = p * h;
    const double b = (p + 1 == panels) ? r0 : (p + 1) * h;
    out.value += gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-13, &err, &l1);
    out.error += err;
    out.l1 += l1;
  }
  return out;
}

// The Kronrod error estimate is dominated by rounding once a panel is
// resolved, so the bar sits a little above the requested tolerance.
constexpr double kQuadratureTolerance = 1e-11;

void require_converged(const QuadResult& r, const std::string& what) {
  if (!(r.error <= kQuadratureTolerance * std::max(1.0, r.l1)) || !std::isfinite(r.value)) {
    std::ostringstream msg;
    msg << "radial quadrature did not converge for " << what << " (error estimate "
        << r.error << ", integrand L1 " << r.l1 << ")";
    throw QuadratureError(msg.str());
  }
}

}  // namespace

double radial_single(double kappa, double lambda, double r0, QuadratureRule rule) {
  if (rule == QuadratureRule::closed_form) {
    if (!is_integer_lambda(lambda)) {
      throw std::invalid_argument("closed-form weights need lambda 0 or 1");
    }
    return closed_single(kappa, lambda, r0);
  }
  const auto f = [&](double r) { return std::pow(r, lambda + 2.0) * sinc(kappa * r); };
  const auto res = integrate_radial(f, r0, std::abs(kappa));
  std::ostringstream what;
  what << "single(kappa=" << kappa << ")";
  require_converged(res, what.str());
  return res.value;
}

double radial_pair(double alpha, double gamma, double lambda, double r0,
                   QuadratureRule rule) {
  if (rule == QuadratureRule::closed_form) {
    if (!is_integer_lambda(lambda)) {
      throw std::invalid_argument("closed-form weights need lambda 0 or 1");
    }
    return closed_pair(alpha, gamma, lambda, r0);
  }
  const auto f = [&](double r) {
    return std::pow(r, lambda + 2.0) * sinc(alpha * r) * sinc(gamma * r);
  };
  const auto res = integrate_radial(f, r0, std::abs(alpha) + std::abs(gamma));
  std::ostringstream what;
  what << "pair(alpha=" << alpha << ", gamma=" << gamma << ")";
  require_converged(res, what.str());
  return res.value;
}

}  // namespace detail

namespace {

double norm(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

struct WeightArguments {
  double zeta_half;  // beta |zeta| / 2
  double shifted;    // |xi - beta zeta / 2|
  double xi;         // |xi|
};

WeightArguments weight_arguments(const Vec3& xi, const Vec3& zeta, double beta) {
  const Vec3 d{xi[0] - 0.5 * beta * zeta[0], xi[1] - 0.5 * beta * zeta[1],
               xi[2] - 0.5 * beta * zeta[2]};
  return {0.5 * beta * norm(zeta), norm(d), norm(xi)};
}

}  // namespace

std::complex<double> ghat_entry(const Vec3& xi, const Vec3& zeta,
                                const CollisionKernel& kernel, double r0) {
  kernel.validate();
  const auto args = weight_arguments(xi, zeta, kernel.beta);
  if (args.zeta_half == 0.0) return {0.0, 0.0};
  const double lambda = kernel.lambda;
  const auto f = [&](double r) {
    return std::pow(r, lambda + 2.0) *
           (detail::sinc(args.zeta_half * r) * detail::sinc(args.shifted * r) -
            detail::sinc(args.xi * r));
  };
  const auto res =
      detail::integrate_radial(f, r0, args.zeta_half + args.shifted + args.xi);
  std::ostringstream what;
  what << "xi=(" << xi[0] << "," << xi[1] << "," << xi[2] << "), zeta=(" << zeta[0] << ","
       << zeta[1] << "," << zeta[2] << ")";
  detail::require_converged(res, what.str());
  return {kWeightPrefactor * res.value, 0.0};
}

double ghat_closed_form(const Vec3& xi, const Vec3& zeta, const CollisionKernel& kernel,
                        double r0) {
  kernel.validate();
  if (!detail::is_integer_lambda(kernel.lambda)) {
    throw std::invalid_argument("closed-form weights need lambda 0 or 1");
  }
  const auto args = weight_arguments(xi, zeta, kernel.beta);
  if (args.zeta_half == 0.0) return 0.0;
  return kWeightPrefactor *
         (detail::closed_pair(args.zeta_half, args.shifted, kernel.lambda, r0) -
          detail::closed_single(args.xi, kernel.lambda, r0));
}

// ---------------------------------------------------------------------------
// WeightTable

WeightTable::WeightTable(Metadata meta, std::vector<std::complex<double>> dense)
    : meta_(meta), storage_(Dense{std::move(dense)}) {
  if (std::get<Dense>(storage_).entries.size() != entry_count()) {
    throw std::invalid_argument("dense weight table has the wrong number of entries");
  }
}

WeightTable::WeightTable(Metadata meta, ReducedWeights reduced)
    : meta_(meta), storage_(std::move(reduced)) {}

std::uint64_t WeightTable::entry_count() const {
  const auto m = static_cast<std::uint64_t>(meta_.n) * meta_.n * meta_.n;
  return m * m;
}

std::size_t WeightTable::memory_bytes() const {
  if (const auto* d = std::get_if<Dense>(&storage_)) {
    return d->entries.size() * sizeof(std::complex<double>);
  }
  const auto& r = std::get<ReducedWeights>(storage_);
  return (r.pair.size() + r.single.size()) * sizeof(double);
}

std::complex<double> WeightTable::at(std::size_t zeta_index, std::size_t xi_index) const {
  const auto m = static_cast<std::size_t>(meta_.n) * meta_.n * meta_.n;
  if (const auto* d = std::get_if<Dense>(&storage_)) {
    return d->entries[zeta_index * m + xi_index];
  }
  const int n = meta_.n;
  const int h = n / 2;
  const auto split = [n](std::size_t idx) {
    const auto nn = static_cast<std::size_t>(n);
    return std::array<int, 3>{static_cast<int>(idx / (nn * nn)),
                              static_cast<int>((idx / nn) % nn),
                              static_cast<int>(idx % nn)};
  };
  const auto kb = split(zeta_index);
  const auto ka = split(xi_index);
  int s = 0;
  int t = 0;
  int u = 0;
  for (int d = 0; d < 3; ++d) {
    const int b = kb[d] - h;
    const int a = ka[d] - h;
    s += b * b;
    t += (2 * a - b) * (2 * a - b);
    u += a * a;
  }
  return {std::get<ReducedWeights>(storage_).value(s, t, u), 0.0};
}

std::span<const std::complex<double>> WeightTable::dense_row(std::size_t zeta_index) const {
  const auto& d = std::get<Dense>(storage_);
  const auto m = static_cast<std::size_t>(meta_.n) * meta_.n * meta_.n;
  return {d.entries.data() + zeta_index * m, m};
}

const ReducedWeights& WeightTable::reduced() const { return std::get<ReducedWeights>(storage_); }

bool WeightTable::matches(const VelocityGrid& grid, const CollisionKernel& kernel) const {
  return meta_.n == grid.n() && meta_.half_width == grid.half_width() &&
         meta_.lambda == kernel.lambda && meta_.beta == kernel.beta;
}

namespace {

void require_metadata_match(const WeightTable::Metadata& meta, const VelocityGrid& grid,
                            const CollisionKernel& kernel) {
  std::ostringstream msg;
  if (meta.n != grid.n()) {
    msg << "weight table built for N=" << meta.n << " but the grid has N=" << grid.n();
  } else if (meta.half_width != grid.half_width()) {
    msg << "weight table built for L=" << meta.half_width
        << " but the grid has L=" << grid.half_width();
  } else if (meta.lambda != kernel.lambda) {
    msg << "weight table built for lambda=" << meta.lambda
        << " but the kernel has lambda=" << kernel.lambda;
  } else if (meta.beta != kernel.beta) {
    msg << "weight table built for beta=" << meta.beta
        << " but the kernel has beta=" << kernel.beta;
  } else {
    return;
  }
  throw WeightMetadataError(msg.str());
}

}  // namespace

void WeightTable::require_match(const VelocityGrid& grid,
                                const CollisionKernel& kernel) const {
  require_metadata_match(meta_, grid, kernel);
}

std::uint32_t WeightTable::checksum() const {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto feed = [&crc](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const Bytef*>(data);
    while (bytes > 0) {
      const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes, 1u << 30));
      crc = crc32(crc, p, chunk);
      p += chunk;
      bytes -= chunk;
    }
  };
  if (const auto* d = std::get_if<Dense>(&storage_)) {
    feed(d->entries.data(), d->entries.size() * sizeof(std::complex<double>));
  } else {
    const auto& r = std::get<ReducedWeights>(storage_);
    feed(r.pair.data(), r.pair.size() * sizeof(double));
    feed(r.single.data(), r.single.size() * sizeof(double));
  }
  return static_cast<std::uint32_t>(crc);
}

std::uint64_t dense_table_bytes(int n) {
  const auto m = static_cast<std::uint64_t>(n) * n * n;
  return m * m * sizeof(std::complex<double>);
}

namespace {

ReducedWeights compute_reduced(const VelocityGrid& grid, const CollisionKernel& kernel,
                               QuadratureRule rule, const TaskPool* pool) {
  const int n = grid.n();
  const int h = n / 2;
  const int cmax = 3 * h - 1;  // largest |2a - b| component
  ReducedWeights red;
  red.max_s = 3 * h * h;
  red.max_t = 3 * cmax * cmax;

  // Which integers are sums of three squares with bounded components.
  const auto representable = [](int bound, int max_value) {
    std::vector<char> out(static_cast<std::size_t>(max_value) + 1, 0);
    for (int i = 0; i <= bound; ++i)
      for (int j = i; j <= bound; ++j)
        for (int k = j; k <= bound; ++k) out[i * i + j * j + k * k] = 1;
    return out;
  };
  const auto s_ok = representable(h, red.max_s);
  const auto t_ok = representable(cmax, red.max_t);

  const double r0 = grid.half_width();
  const double dz = grid.dzeta();
  const double lambda = kernel.lambda;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  red.single.assign(static_cast<std::size_t>(red.max_s) + 1, nan);
  for (int u = 0; u <= red.max_s; ++u) {
    if (s_ok[u]) {
      red.single[u] = kWeightPrefactor *
                      detail::radial_single(dz * std::sqrt(static_cast<double>(u)), lambda, r0, rule);
    }
  }

  red.pair.assign(static_cast<std::size_t>(red.max_s + 1) * (red.max_t + 1), nan);
  const auto fill_row = [&](std::size_t s_index) {
    const int s = static_cast<int>(s_index);
    if (!s_ok[s]) return;
    double* row = red.pair.data() + s_index * (red.max_t + 1);
    const double alpha = 0.5 * kernel.beta * dz * std::sqrt(static_cast<double>(s));
    for (int t = s % 4; t <= red.max_t; t += 4) {
      if (!t_ok[t]) continue;
      const double gamma = 0.5 * dz * std::sqrt(static_cast<double>(t));
      row[t] = kWeightPrefactor * detail::radial_pair(alpha, gamma, lambda, r0, rule);
    }
  };
  if (pool != nullptr) {
    pool->parallel_for(0, static_cast<std::size_t>(red.max_s) + 1, fill_row);
  } else {
    for (int s = 0; s <= red.max_s; ++s) fill_row(static_cast<std::size_t>(s));
  }
  return red;
}

}  // namespace

WeightTable precompute_table(const VelocityGrid& grid, const CollisionKernel& kernel,
                             const TableOptions& options, const TaskPool* pool) {
  kernel.validate();
  const bool closed = (kernel.lambda == 0.0 || kernel.lambda == 1.0) && !options.force_quadrature;
  const QuadratureRule rule =
      closed ? QuadratureRule::closed_form : QuadratureRule::adaptive_gauss_kronrod;
  WeightTable::Metadata meta{grid.n(), grid.half_width(), kernel.lambda, kernel.beta, rule};

  const std::uint64_t dense_bytes = dense_table_bytes(grid.n());
  bool dense = false;
  switch (options.storage) {
    case TableStorage::dense:
      if (dense_bytes > options.memory_budget_bytes) {
        std::ostringstream msg;
        msg << "dense weight table for N=" << grid.n() << " needs " << dense_bytes
            << " bytes, above the memory budget of " << options.memory_budget_bytes
            << " bytes; use reduced storage or raise the budget";
        throw MemoryBudgetError(msg.str());
      }
      dense = true;
      break;
    case TableStorage::automatic:
      dense = dense_bytes <= options.memory_budget_bytes;
      break;
    case TableStorage::reduced:
      dense = false;
      break;
  }

  ReducedWeights red = compute_reduced(grid, kernel, rule, pool);
  if (!dense) return WeightTable(meta, std::move(red));

  const int n = grid.n();
  const int h = n / 2;
  const std::size_t m = grid.size();
  std::vector<std::complex<double>> entries(m * m);
  const auto fill = [&](std::size_t k) {
    const auto kb = grid.unflat(k);
    const int b1 = kb[0] - h, b2 = kb[1] - h, b3 = kb[2] - h;
    const int s = b1 * b1 + b2 * b2 + b3 * b3;
    std::complex<double>* row = entries.data() + k * m;
    std::size_t idx = 0;
    for (int a1 = -h; a1 < h; ++a1) {
      for (int a2 = -h; a2 < h; ++a2) {
        const int t12 = (2 * a1 - b1) * (2 * a1 - b1) + (2 * a2 - b2) * (2 * a2 - b2);
        const int u12 = a1 * a1 + a2 * a2;
        for (int a3 = -h; a3 < h; ++a3, ++idx) {
          row[idx] = {red.value(s, t12 + (2 * a3 - b3) * (2 * a3 - b3), u12 + a3 * a3), 0.0};
        }
      }
    }
  };
  if (pool != nullptr) {
    pool->parallel_for(0, m, fill);
  } else {
    for (std::size_t k = 0; k < m; ++k) fill(k);
  }
  return WeightTable(meta, std::move(entries));
}

// ---------------------------------------------------------------------------
// Binary I/O

namespace {

template <class T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

}  // namespace

void write_binary_header(std::ostream& out, const BinaryHeader& header) {
  out.write(header.magic, 8);
  put(out, header.version);
  put(out, header.n);
  put(out, header.half_width);
  put(out, header.lambda);
  put(out, header.beta);
  put(out, header.rule);
  put(out, header.count);
}

BinaryHeader read_binary_header(std::istream& in, std::string_view expected_magic) {
  char buf[kBinaryHeaderBytes];
  in.read(buf, kBinaryHeaderBytes);
  if (in.gcount() < 8) {
    throw WeightTruncatedError("file too short to hold a header");
  }
  if (std::string_view(buf, 8) != expected_magic) {
    throw WeightFormatError("bad magic: expected '" + std::string(expected_magic) + "'");
  }
  if (in.gcount() != static_cast<std::streamsize>(kBinaryHeaderBytes)) {
    throw WeightTruncatedError("file truncated inside the header");
  }
  BinaryHeader h;
  std::memcpy(h.magic, buf, 8);
  h.version = get<std::uint32_t>(buf + 8);
  h.n = get<std::uint32_t>(buf + 12);
  h.half_width = get<double>(buf + 16);
  h.lambda = get<double>(buf + 24);
  h.beta = get<double>(buf + 32);
  h.rule = get<std::uint32_t>(buf + 40);
  h.count = get<std::uint64_t>(buf + 44);
  if (h.version != 1) {
    throw WeightFormatError("unsupported format version " + std::to_string(h.version));
  }
  return h;
}

void save_table(const WeightTable& table, const std::filesystem::path& path) {
  const auto& meta = table.metadata();
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    BinaryHeader h;
    std::memcpy(h.magic, "BLTZGHAT", 8);
    h.n = static_cast<std::uint32_t>(meta.n);
    h.half_width = meta.half_width;
    h.lambda = meta.lambda;
    h.beta = meta.beta;
    h.rule = static_cast<std::uint32_t>(meta.rule);
    h.count = table.entry_count();
    write_binary_header(out, h);

    const auto m = static_cast<std::size_t>(meta.n) * meta.n * meta.n;
    if (table.is_dense()) {
      for (std::size_t k = 0; k < m; ++k) {
        const auto row = table.dense_row(k);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size_bytes()));
      }
    } else {
      std::vector<std::complex<double>> row(m);
      for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t j = 0; j < m; ++j) row[j] = table.at(k, j);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(m * sizeof(std::complex<double>)));
      }
    }
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

WeightTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFileError("cannot open weight cache " + path.string());
  const BinaryHeader h = read_binary_header(in, "BLTZGHAT");
  if (h.n < 4 || h.n % 2 != 0 || h.n > 256) {
    throw WeightFormatError("implausible grid size N=" + std::to_string(h.n));
  }
  const auto m = static_cast<std::uint64_t>(h.n) * h.n * h.n;
  if (h.count != m * m) {
    throw WeightFormatError("entry count " + std::to_string(h.count) + " does not equal N^6");
  }
  if (h.rule > 1) throw WeightFormatError("unknown quadrature rule id " + std::to_string(h.rule));

  std::vector<std::complex<double>> entries(h.count);
  const auto bytes = static_cast<std::streamsize>(h.count * sizeof(std::complex<double>));
  in.read(reinterpret_cast<char*>(entries.data()), bytes);
  if (in.gcount() != bytes) {
    throw WeightTruncatedError("weight cache truncated: expected " + std::to_string(bytes) +
                               " entry bytes, found " + std::to_string(in.gcount()));
  }
  WeightTable::Metadata meta{static_cast<int>(h.n), h.half_width, h.lambda, h.beta,
                             static_cast<QuadratureRule>(h.rule)};
  return WeightTable(meta, std::move(entries));
}

WeightTable load_table(const std::filesystem::path& path, const VelocityGrid& grid,
                       const CollisionKernel& kernel) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFileError("cannot open weight cache " + path.string());
  // Check metadata before reading N^6 entries.
  const BinaryHeader h = read_binary_header(in, "BLTZGHAT");
  WeightTable::Metadata meta{static_cast<int>(h.n), h.half_width, h.lambda, h.beta,
                             QuadratureRule::closed_form};
  require_metadata_match(meta, grid, kernel);
  in.close();
  return load_table(path);
}

}  // namespace boltz
