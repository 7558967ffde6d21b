#pragma once

// Independent reference computations for the test suite. Nothing here calls
// the library routine it is compared against.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ircloud/core.hpp"
#include "ircloud/fockspace.hpp"
#include "ircloud/kernels.hpp"

namespace oracle {

using ircloud::cplx;
using ircloud::kPi;
using ircloud::Vec3;

/// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(eng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(eng_); }
  Vec3 direction() {
    const double u = uniform(-1.0, 1.0), phi = uniform(0.0, 2.0 * kPi);
    const double s = std::sqrt(1.0 - u * u);
    return Vec3(s * std::cos(phi), s * std::sin(phi), u);
  }
  /// Uniform in the ball of radius r.
  Vec3 in_ball(double r) { return r * std::cbrt(uniform(0.0, 1.0)) * direction(); }
  cplx complex_in_disc(double r) { return std::polar(r * std::sqrt(uniform(0.0, 1.0)), uniform(0.0, 2.0 * kPi)); }

 private:
  std::mt19937_64 eng_;
};

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 4000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// Cutoff written out from its definition: ramp, plateau, smooth step to 0 on (1/2, 1).
inline double kappa(double x, double sigma) {
  if (x >= 1.0) return 0.0;
  if (x > 0.5) {
    const double a = std::exp(-1.0 / (1.0 - x));
    const double b = std::exp(-1.0 / (x - 0.5));
    return a / (a + b);
  }
  return x < sigma ? x / sigma : 1.0;
}

/// Integral over S^2 of |P_perp v|^2 / (1 - n.v)^2, reduced to cos(theta).
inline double angular_constant(double v) {
  if (v == 0.0) return 0.0;
  return simpson([v](double u) { return 2.0 * kPi * v * v * (1.0 - u * u) / ((1.0 - v * u) * (1.0 - v * u)); },
                 -1.0, 1.0, 20000);
}

/// integral_{rho}^{1} kappa_sigma(r)^2 / r dr, Simpson in log r on each smooth piece.
inline double radial_log_integral(double sigma, double rho) {
  // The ramp contributes (r / sigma)^2 / 2 below r, negligible under 1e-8 sigma.
  std::vector<double> pts{std::max(rho, 1e-8 * sigma)};
  for (double b : {sigma, 0.5})
    if (b > pts.front() && b < 1.0) pts.push_back(b);
  pts.push_back(1.0);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] <= pts[i]) continue;
    total += simpson([&](double t) {
      const double r = std::exp(t);
      const double k = kappa(r, sigma);
      return k * k;
    }, std::log(pts[i]), std::log(pts[i + 1]), 4000);
  }
  return total;
}

/// 8 pi integral_0^1 r kappa^2 dr.
inline double vacuum_field_energy(double sigma) {
  auto f = [sigma](double r) {
    const double k = kappa(r, sigma);
    return r * k * k;
  };
  double s = 0.0;
  if (sigma > 0.0) s += simpson(f, 0.0, sigma, 2000);
  if (sigma < 0.5) s += simpson(f, sigma, 0.5, 2000);
  s += simpson(f, 0.5, 1.0, 20000);
  return 8.0 * kPi * s;
}

/// Sum over helicities of |v(k)|^2 integrated over rho <= |k| <= 1 by brute-force
/// quadrature of the pointwise kernel: Simpson in log r, Gauss-Legendre in cos(theta),
/// trapezoid in phi.
inline double kernel_norm_3d(const ircloud::KernelParams& params, double rho, int n_r = 600, int n_u = 64,
                             int n_phi = 64) {
  const auto [x, w] = ircloud::quad::gauss_legendre(n_u);
  auto shell = [&](double t) {
    const double r = std::exp(t);
    double s = 0.0;
    for (int i = 0; i < n_u; ++i) {
      const double st = std::sqrt(1.0 - x[i] * x[i]);
      for (int l = 0; l < n_phi; ++l) {
        const double phi = 2.0 * kPi * l / n_phi;
        const Vec3 k = r * Vec3(st * std::cos(phi), st * std::sin(phi), x[i]);
        double v2 = 0.0;
        for (auto h : {ircloud::Helicity::plus, ircloud::Helicity::minus}) {
          const double v = ircloud::coherent_kernel(params, k, h);
          v2 += v * v;
        }
        s += w[i] * v2 * 2.0 * kPi / n_phi;
      }
    }
    return r * r * r * s;  // r^2 dr = r^3 d(log r)
  };
  std::vector<double> pts{rho};
  for (double b : {params.sigma, 0.5})
    if (b > rho) pts.push_back(b);
  pts.push_back(1.0);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total += simpson(shell, std::log(pts[i]), std::log(pts[i + 1]), n_r);
  return total;
}

/// Occupation tuples with n_j <= n_max and total <= n_cap, in no particular order.
inline std::vector<std::vector<int>> configurations(std::size_t modes, int n_max, int n_cap) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(modes, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t j, int left) {
    if (j == modes) {
      out.push_back(cur);
      return;
    }
    for (int n = 0; n <= std::min(n_max, left); ++n) {
      cur[j] = n;
      rec(j + 1, left - n);
    }
    cur[j] = 0;
  };
  rec(0, n_cap);
  return out;
}

/// Dense fiber Hamiltonian 1/2 (p - P_f - sqrt(alpha) A)^2 + sqrt(alpha) tau.B + H_f built on a
/// truncation two photons larger than `basis` and compressed onto it, in the basis order of `basis`.
inline Eigen::MatrixXcd galerkin_hamiltonian(const ircloud::FockBasis& basis, double sigma, double alpha,
                                             const Vec3& p) {
  const auto& grid = basis.grid();
  const std::size_t m = grid.size();
  const auto big = configurations(m, basis.n_max() + 2, basis.n_cap() + 2);
  const Eigen::Index nb = static_cast<Eigen::Index>(big.size());
  auto find_big = [&](const std::vector<int>& occ) -> Eigen::Index {
    for (Eigen::Index i = 0; i < nb; ++i)
      if (big[i] == occ) return i;
    return -1;
  };
  std::vector<Eigen::MatrixXcd> a(m, Eigen::MatrixXcd::Zero(nb, nb));
  for (std::size_t j = 0; j < m; ++j)
    for (Eigen::Index c = 0; c < nb; ++c) {
      if (big[c][j] == 0) continue;
      auto lower = big[c];
      --lower[j];
      a[j](find_big(lower), c) = std::sqrt(static_cast<double>(big[c][j]));
    }
  std::vector<double> g(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double r = grid[j].k.norm();
    g[j] = std::sqrt(grid[j].weight) * kappa(r, sigma) / std::sqrt(r);
  }
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(nb, nb);
  Eigen::Matrix2cd tau[3];
  tau[0] << 0, 1, 1, 0;
  tau[1] << 0, cplx(0, 1), cplx(0, -1), 0;
  tau[2] << 1, 0, 0, -1;
  auto kron = [](const Eigen::MatrixXcd& ph, const Eigen::Matrix2cd& s) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(2 * ph.rows(), 2 * ph.cols());
    for (Eigen::Index i = 0; i < ph.rows(); ++i)
      for (Eigen::Index k = 0; k < ph.cols(); ++k)
        if (ph(i, k) != cplx(0.0)) out.block<2, 2>(2 * i, 2 * k) = ph(i, k) * s;
    return out;
  };
  Eigen::MatrixXcd hf = Eigen::MatrixXcd::Zero(nb, nb);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2 * nb, 2 * nb);
  for (Eigen::Index c = 0; c < nb; ++c)
    for (std::size_t j = 0; j < m; ++j) hf(c, c) += big[c][j] * grid[j].k.norm();
  Eigen::MatrixXcd kinetic = Eigen::MatrixXcd::Zero(nb, nb);
  for (int comp = 0; comp < 3; ++comp) {
    Eigen::MatrixXcd pf = Eigen::MatrixXcd::Zero(nb, nb), ac = pf, bc = pf;
    for (Eigen::Index c = 0; c < nb; ++c)
      for (std::size_t j = 0; j < m; ++j) pf(c, c) += big[c][j] * grid[j].k[comp];
    for (std::size_t j = 0; j < m; ++j) {
      const Vec3& eps = grid[j].polarization;
      const Vec3 curl = grid[j].k.cross(eps);
      ac += g[j] * eps[comp] * (a[j] + a[j].adjoint());
      const cplx lo = cplx(0.0, -1.0) * g[j] * curl[comp];
      bc += lo * a[j] + std::conj(lo) * a[j].adjoint();
    }
    const Eigen::MatrixXcd d = p[comp] * id - pf - std::sqrt(alpha) * ac;
    kinetic += 0.5 * d * d;
    h += std::sqrt(alpha) * kron(bc, tau[comp]);
  }
  h += kron(kinetic + hf, Eigen::Matrix2cd::Identity());

  const Eigen::Index ns = static_cast<Eigen::Index>(basis.dimension());
  std::vector<Eigen::Index> map(basis.photon_dimension());
  for (std::size_t c = 0; c < basis.photon_dimension(); ++c) {
    const auto occ = basis.occupation(c);
    map[c] = find_big(std::vector<int>(occ.begin(), occ.end()));
  }
  Eigen::MatrixXcd out(ns, ns);
  for (std::size_t c = 0; c < map.size(); ++c)
    for (std::size_t d = 0; d < map.size(); ++d)
      out.block<2, 2>(2 * c, 2 * d) = h.block<2, 2>(2 * map[c], 2 * map[d]);
  return out;
}

/// Second-order Rayleigh-Schrodinger ground energy from dense matrices:
/// H0 = H(alpha = 0) (diagonal), V = H(alpha) - H0, unperturbed state vacuum (x) spin-up.
inline double rayleigh_schrodinger(const Eigen::MatrixXcd& h_alpha, const Eigen::MatrixXcd& h0) {
  const Eigen::MatrixXcd v = h_alpha - h0;
  const double e0 = h0(0, 0).real();
  double e = e0 + v(0, 0).real();
  for (Eigen::Index n = 2; n < h0.rows(); ++n) e -= std::norm(v(n, 0)) / (h0(n, n).real() - e0);
  return e;
}

}  // namespace oracle
