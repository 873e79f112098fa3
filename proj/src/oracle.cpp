#include "boltz/oracle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace boltz::oracle {

namespace {

double norm3(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

double plain_sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

}  // namespace

std::vector<std::complex<double>> direct_transform(std::span<const double> f,
                                                   const VelocityGrid& grid) {
  const double dv = grid.dv();
  const double scale = dv * dv * dv / std::pow(2.0 * std::numbers::pi, 1.5);
  // zeta_k . v_j = 2 pi (k - N/2) . (j - N/2) / N; reduce the integer part
  // exactly so large phases keep full precision.
  const int n = grid.n();
  const int h = n / 2;
  std::vector<std::complex<double>> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto kk = grid.unflat(k);
    std::complex<double> s = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const auto jj = grid.unflat(j);
      long p = 0;
      for (int d = 0; d < 3; ++d) p += static_cast<long>(kk[d] - h) * (jj[d] - h);
      p = ((p % n) + n) % n;
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(p) / n;
      s += f[j] * std::complex<double>(std::cos(phase), -std::sin(phase));
    }
    out[k] = scale * s;
  }
  return out;
}

double simpson_ghat(const Vec3& xi, const Vec3& zeta, double lambda, double r0, int panels) {
  if (panels < 2 || panels % 2 != 0) throw std::invalid_argument("Simpson needs an even panel count");
  const double zn = norm3(zeta);
  const Vec3 shifted{xi[0] - 0.5 * zeta[0], xi[1] - 0.5 * zeta[1], xi[2] - 0.5 * zeta[2]};
  const double sn = norm3(shifted);
  const double xn = norm3(xi);
  auto g = [&](double r) {
    return std::pow(r, lambda + 2.0) *
           (plain_sinc(0.5 * r * zn) * plain_sinc(r * sn) - plain_sinc(r * xn));
  };
  const double h = r0 / panels;
  double s = g(0.0) + g(r0);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * g(i * h);
  const double prefactor = 4.0 * std::numbers::pi / std::pow(2.0 * std::numbers::pi, 1.5);
  return prefactor * s * h / 3.0;
}

std::vector<double> direct_collision(const VelocityFunction& f, const VelocityGrid& grid,
                                     double lambda, const DirectCollisionOptions& options) {
  const int np = options.polar_nodes;
  const int na = options.azimuth_nodes;
  std::vector<double> mu(np), mu_w(np);
  {
    // Gauss-Legendre nodes by Newton iteration on P_n.
    for (int i = 0; i < np; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (np + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= np; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = np * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) {
          mu[i] = x;
          mu_w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
          break;
        }
      }
    }
  }
  std::vector<Vec3> sigma;
  std::vector<double> sigma_w;
  for (int i = 0; i < np; ++i) {
    const double st = std::sqrt(std::max(0.0, 1.0 - mu[i] * mu[i]));
    for (int a = 0; a < na; ++a) {
      const double phi = 2.0 * std::numbers::pi * a / na;
      sigma.push_back({st * std::cos(phi), st * std::sin(phi), mu[i]});
      sigma_w.push_back(mu_w[i] * 2.0 * std::numbers::pi / na / (4.0 * std::numbers::pi));
    }
  }

  const std::size_t m = grid.size();
  const auto w = grid.quad_weights();
  std::vector<double> fv(m);
  for (std::size_t j = 0; j < m; ++j) fv[j] = f(grid.velocity(j));

  std::vector<double> q(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    const Vec3 v = grid.velocity(k);
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const Vec3 vs = grid.velocity(j);
      const Vec3 u{v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]};
      const double un = norm3(u);
      if (un == 0.0) continue;
      if (options.relative_speed_cutoff > 0.0 && un > options.relative_speed_cutoff) continue;
      const double kin = std::pow(un, lambda);
      const Vec3 c{0.5 * (v[0] + vs[0]), 0.5 * (v[1] + vs[1]), 0.5 * (v[2] + vs[2])};
      double gain = 0.0;
      for (std::size_t s = 0; s < sigma.size(); ++s) {
        const Vec3 h{0.5 * un * sigma[s][0], 0.5 * un * sigma[s][1], 0.5 * un * sigma[s][2]};
        gain += sigma_w[s] * f({c[0] + h[0], c[1] + h[1], c[2] + h[2]}) *
                f({c[0] - h[0], c[1] - h[1], c[2] - h[2]});
      }
      total += w[j] * kin * (gain - fv[k] * fv[j]);
    }
    q[k] = total;
  }
  return q;
}

std::vector<double> kkt_projection(std::span<const double> q,
                                   std::span<const std::vector<double>> constraint_rows) {
  const auto m = static_cast<Eigen::Index>(q.size());
  const auto c = static_cast<Eigen::Index>(constraint_rows.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + c, m + c);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + c);
  kkt.topLeftCorner(m, m).setIdentity();
  for (Eigen::Index a = 0; a < c; ++a) {
    for (Eigen::Index j = 0; j < m; ++j) {
      kkt(m + a, j) = constraint_rows[a][j];
      kkt(j, m + a) = constraint_rows[a][j];
    }
  }
  for (Eigen::Index j = 0; j < m; ++j) rhs(j) = q[j];
  const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
  return std::vector<double>(sol.data(), sol.data() + m);
}

}  // namespace boltz::oracle
