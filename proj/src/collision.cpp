#include "boltz/collision.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fftw3.h>

namespace boltz {

SpectralDistribution::SpectralDistribution(const VelocityGrid& grid,
                                           std::vector<std::complex<double>> values)
    : SpectralDistribution(grid.n(), grid.half_width(), std::move(values)) {}

SpectralDistribution::SpectralDistribution(int n, double half_width,
                                           std::vector<std::complex<double>> values)
    : n_(n), half_width_(half_width), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(n) * n * n) {
    throw std::invalid_argument("spectral distribution needs N^3 values");
  }
}

namespace {

const double kTwoPiPow32 = std::pow(2.0 * std::numbers::pi, 1.5);

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (data == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

// In-place 3D plans, created once per size. Executing a plan on other
// fftw_malloc'd arrays is thread-safe; creating one is not.
struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~Plans() {
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
};

const Plans& plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<Plans>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    FftwBuffer scratch(static_cast<std::size_t>(n) * n * n);
    slot = std::make_unique<Plans>();
    slot->forward = fftw_plan_dft_3d(n, n, n, scratch.data, scratch.data, FFTW_FORWARD,
                                     FFTW_ESTIMATE);
    slot->backward = fftw_plan_dft_3d(n, n, n, scratch.data, scratch.data, FFTW_BACKWARD,
                                      FFTW_ESTIMATE);
  }
  return *slot;
}

// Centring turns exp(-i zeta_k . v_j) into (-1)^{|j|} (-1)^{|k|} (-1)^{3N/2}
// times the plain DFT kernel. The constant factor goes on the output side only.
double centring_sign(const std::array<int, 3>& k, int n, bool with_constant) {
  const int parity = k[0] + k[1] + k[2] + (with_constant ? 3 * (n / 2) : 0);
  return (parity % 2 == 0) ? 1.0 : -1.0;
}

}  // namespace

SpectralDistribution forward_transform(std::span<const double> f, const VelocityGrid& grid) {
  const std::size_t m = grid.size();
  if (f.size() != m) {
    throw std::invalid_argument("forward_transform: expected " + std::to_string(m) +
                                " values, got " + std::to_string(f.size()));
  }
  const int n = grid.n();
  FftwBuffer buf(m);
  for (std::size_t j = 0; j < m; ++j) {
    buf.data[j][0] = centring_sign(grid.unflat(j), n, false) * f[j];
    buf.data[j][1] = 0.0;
  }
  fftw_execute_dft(plans_for(n).forward, buf.data, buf.data);
  const double dv = grid.dv();
  const double scale = dv * dv * dv / kTwoPiPow32;
  std::vector<std::complex<double>> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double s = scale * centring_sign(grid.unflat(k), n, true);
    out[k] = {s * buf.data[k][0], s * buf.data[k][1]};
  }
  return SpectralDistribution(grid, std::move(out));
}

std::vector<double> inverse_transform(const SpectralDistribution& fhat, const VelocityGrid& grid) {
  if (!fhat.same_grid(grid)) {
    throw std::invalid_argument("inverse_transform: spectral data belongs to another grid");
  }
  const int n = grid.n();
  const std::size_t m = grid.size();
  FftwBuffer buf(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double s = centring_sign(grid.unflat(k), n, false);
    buf.data[k][0] = s * fhat[k].real();
    buf.data[k][1] = s * fhat[k].imag();
  }
  fftw_execute_dft(plans_for(n).backward, buf.data, buf.data);
  const double dz = grid.dzeta();
  const double scale = dz * dz * dz / kTwoPiPow32;
  std::vector<double> out(m);
  double max_re = 0.0;
  double max_im = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double s = scale * centring_sign(grid.unflat(j), n, true);
    out[j] = s * buf.data[j][0];
    max_re = std::max(max_re, std::abs(out[j]));
    max_im = std::max(max_im, std::abs(s * buf.data[j][1]));
  }
  if (max_im > 1e-10 * max_re && max_im > 0.0) {
    std::ostringstream msg;
    msg << "inverse_transform: imaginary residue " << max_im << " exceeds 1e-10 of max |Re| "
        << max_re << "; the spectral data is not conjugate-symmetric";
    throw std::runtime_error(msg.str());
  }
  return out;
}

namespace {

// Compact storage over the sign-symmetric offsets [-h, h]^3, h = N/2 - 1.
struct SymmetricBlock {
  int h;
  int width;
  std::vector<double> re;
  std::vector<double> im;

  explicit SymmetricBlock(int half)
      : h(half), width(2 * half + 1),
        re(static_cast<std::size_t>(width) * width * width),
        im(static_cast<std::size_t>(width) * width * width) {}

  std::size_t index(int o1, int o2, int o3) const {
    return (static_cast<std::size_t>(o1 + h) * width + (o2 + h)) * width + (o3 + h);
  }
};

template <bool Dense>
void convolve_one(const SymmetricBlock& weighted, const SymmetricBlock& reversed,
                  const WeightTable& table, int n, int b1, int b2, int b3, double& out_re,
                  double& out_im) {
  const int h = weighted.h;
  const int half_n = n / 2;
  const std::size_t nn = static_cast<std::size_t>(n);

  const double* pair_row = nullptr;
  const double* single = nullptr;
  const std::complex<double>* dense_row = nullptr;
  if constexpr (Dense) {
    const std::size_t k = ((static_cast<std::size_t>(b1 + half_n) * nn) + (b2 + half_n)) * nn +
                          (b3 + half_n);
    dense_row = table.dense_row(k).data();
  } else {
    const auto& red = table.reduced();
    pair_row = red.pair_row(b1 * b1 + b2 * b2 + b3 * b3);
    single = red.single.data();
  }

  const int lo1 = std::max(-h, b1 - h), hi1 = std::min(h, b1 + h);
  const int lo2 = std::max(-h, b2 - h), hi2 = std::min(h, b2 + h);
  const int lo3 = std::max(-h, b3 - h), hi3 = std::min(h, b3 + h);
  const int len = hi3 - lo3 + 1;

  double sr = 0.0;
  double si = 0.0;
  for (int a1 = lo1; a1 <= hi1; ++a1) {
    for (int a2 = lo2; a2 <= hi2; ++a2) {
      const std::size_t wi = weighted.index(a1, a2, lo3);
      const std::size_t ri = reversed.index(a1 - b1, a2 - b2, lo3 - b3);
      const double* wr = weighted.re.data() + wi;
      const double* wim = weighted.im.data() + wi;
      const double* rr = reversed.re.data() + ri;
      const double* rim = reversed.im.data() + ri;
      double lr = 0.0;
      double li = 0.0;
      if constexpr (Dense) {
        const std::complex<double>* g =
            dense_row + ((static_cast<std::size_t>(a1 + half_n) * nn) + (a2 + half_n)) * nn +
            (lo3 + half_n);
        for (int j = 0; j < len; ++j) {
          const double pr = wr[j] * rr[j] - wim[j] * rim[j];
          const double pi = wr[j] * rim[j] + wim[j] * rr[j];
          lr += g[j].real() * pr - g[j].imag() * pi;
          li += g[j].real() * pi + g[j].imag() * pr;
        }
      } else {
        const int c1 = 2 * a1 - b1;
        const int c2 = 2 * a2 - b2;
        const int t12 = c1 * c1 + c2 * c2;
        const int u12 = a1 * a1 + a2 * a2;
        for (int j = 0; j < len; ++j) {
          const int a3 = lo3 + j;
          const int c3 = 2 * a3 - b3;
          const double g = pair_row[t12 + c3 * c3] - single[u12 + a3 * a3];
          const double pr = wr[j] * rr[j] - wim[j] * rim[j];
          const double pi = wr[j] * rim[j] + wim[j] * rr[j];
          lr += g * pr;
          li += g * pi;
        }
      }
      sr += lr;
      si += li;
    }
  }
  out_re = sr;
  out_im = si;
}

}  // namespace

SpectralDistribution collide_fourier(const SpectralDistribution& fhat, const WeightTable& table,
                                     const TaskPool* pool) {
  const auto& meta = table.metadata();
  if (meta.n != fhat.n() || meta.half_width != fhat.half_width()) {
    std::ostringstream msg;
    msg << "collide_fourier: weight table (N=" << meta.n << ", L=" << meta.half_width
        << ") does not match the distribution grid (N=" << fhat.n()
        << ", L=" << fhat.half_width() << ")";
    throw std::invalid_argument(msg.str());
  }
  const int n = fhat.n();
  const int half_n = n / 2;
  const int h = half_n - 1;
  const std::size_t nn = static_cast<std::size_t>(n);
  const double dz = std::numbers::pi / fhat.half_width();
  const auto w1 = [&](int o) { return (o == -h || o == h) ? 0.5 * dz : dz; };
  const auto lattice = [&](int o1, int o2, int o3) {
    return ((static_cast<std::size_t>(o1 + half_n) * nn) + (o2 + half_n)) * nn + (o3 + half_n);
  };

  SymmetricBlock weighted(h);
  SymmetricBlock reversed(h);
  for (int o1 = -h; o1 <= h; ++o1) {
    for (int o2 = -h; o2 <= h; ++o2) {
      const double w12 = w1(o1) * w1(o2);
      for (int o3 = -h; o3 <= h; ++o3) {
        const std::size_t c = weighted.index(o1, o2, o3);
        const auto v = fhat[lattice(o1, o2, o3)];
        const double w = w12 * w1(o3);
        weighted.re[c] = w * v.real();
        weighted.im[c] = w * v.imag();
        const auto r = fhat[lattice(-o1, -o2, -o3)];
        reversed.re[c] = r.real();
        reversed.im[c] = r.imag();
      }
    }
  }

  // Half-lattice of outputs: b > 0 in lexicographic order.
  std::vector<std::array<int, 3>> targets;
  targets.reserve(weighted.re.size() / 2);
  for (int b1 = 0; b1 <= h; ++b1) {
    for (int b2 = (b1 == 0 ? 0 : -h); b2 <= h; ++b2) {
      for (int b3 = (b1 == 0 && b2 == 0 ? 1 : -h); b3 <= h; ++b3) {
        targets.push_back({b1, b2, b3});
      }
    }
  }

  std::vector<std::complex<double>> out(nn * nn * nn, {0.0, 0.0});
  const bool dense = table.is_dense();
  const auto body = [&](std::size_t i) {
    const auto& b = targets[i];
    double re = 0.0;
    double im = 0.0;
    if (dense) {
      convolve_one<true>(weighted, reversed, table, n, b[0], b[1], b[2], re, im);
    } else {
      convolve_one<false>(weighted, reversed, table, n, b[0], b[1], b[2], re, im);
    }
    out[lattice(b[0], b[1], b[2])] = {re, im};
    out[lattice(-b[0], -b[1], -b[2])] = {re, -im};
  };
  if (pool != nullptr) {
    pool->parallel_for(0, targets.size(), body);
  } else {
    for (std::size_t i = 0; i < targets.size(); ++i) body(i);
  }
  return SpectralDistribution(n, fhat.half_width(), std::move(out));
}

std::vector<double> collide(std::span<const double> f, const VelocityGrid& grid,
                            const WeightTable& table, const TaskPool* pool) {
  return inverse_transform(collide_fourier(forward_transform(f, grid), table, pool), grid);
}

}  // namespace boltz
