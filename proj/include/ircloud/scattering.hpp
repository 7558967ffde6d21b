#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ircloud/core.hpp"
#include "ircloud/fockspace.hpp"
#include "ircloud/kernels.hpp"
#include "ircloud/quadrature.hpp"

/// Cell decompositions of the momentum ball, the cutoff schedule and overlaps
/// of per-cell dressing clouds in the coherent approximation.
namespace ircloud {

using MomentumProfile = std::function<double(const Vec3&)>;
using VelocityModel = std::function<Vec3(const Vec3&)>;

/// L^2-normalized bump exp(1 - 1 / (1 - |p - c|^2 / w^2)), supported in |p - c| < w.
class BumpProfile {
 public:
  explicit BumpProfile(Vec3 center = Vec3(0.0, 0.0, 0.15), double width = 0.1) : center_(center), width_(width) {
    if (!(width > 0.0)) throw DomainError("BumpProfile: width must be positive");
    if (!(center.norm() + width <= kMaxMomentum)) throw DomainError("BumpProfile: support must lie inside |p| < 1/3");
    const double radial = quad::integrate(
        [](double s) {
          const double b = shape(s * s);
          return s * s * b * b;
        },
        0.0, 1.0);
    norm_ = 1.0 / std::sqrt(4.0 * kPi * width * width * width * radial);
  }

  double operator()(const Vec3& p) const { return norm_ * shape((p - center_).squaredNorm() / (width_ * width_)); }

 private:
  static double shape(double x2) { return x2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x2)) : 0.0; }
  Vec3 center_;
  double width_;
  double norm_ = 1.0;
};

/// Free approximation of the velocity field, grad E(p) ~ p.
inline Vec3 free_velocity(const Vec3& p) { return p; }

struct Cell {
  std::array<std::uint32_t, 3> index{};
  Vec3 center = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double amplitude = 0.0;
};

struct CellDecomposition {
  double t = 1.0;
  /// Resolution exponent epsilon = 1 / inverse_epsilon.
  int inverse_epsilon = 1;
  int level = 0;
  std::uint64_t per_axis = 1;
  /// (2^n)^3, before intersecting with the ball.
  std::uint64_t total_cells = 1;
  double side = 2.0 * kMaxMomentum;
  /// Cells meeting |p| < 1/3.
  std::vector<Cell> cells;

  double cell_volume() const { return side * side * side; }
};

/// n with T_n <= t < T_{n+1}, T_n = 2^{n m}, m = 1/epsilon; integer arithmetic only.
inline int decomposition_level(double t, int inverse_epsilon) {
  if (!(t >= 1.0) || !std::isfinite(t)) throw DomainError("decomposition_level: need finite t >= 1");
  if (inverse_epsilon < 2) throw DomainError("decomposition_level: epsilon = 1/m needs an integer m >= 2");
  return std::ilogb(t) / inverse_epsilon;
}

/// Splits the cube circumscribing |p| < 1/3 into 2^n cells per axis and keeps
/// those meeting the ball; amplitudes and velocities are sampled at centres.
inline CellDecomposition decompose(double t, int inverse_epsilon, const MomentumProfile& profile,
                                   const VelocityModel& velocity = free_velocity) {
  CellDecomposition d;
  d.t = t;
  d.inverse_epsilon = inverse_epsilon;
  d.level = decomposition_level(t, inverse_epsilon);
  if (d.level > 20) throw ResourceError("decompose: level above 20");
  d.per_axis = std::uint64_t{1} << d.level;
  d.total_cells = d.per_axis * d.per_axis * d.per_axis;
  d.side = 2.0 * kMaxMomentum / static_cast<double>(d.per_axis);
  for (std::uint32_t i = 0; i < d.per_axis; ++i)
    for (std::uint32_t j = 0; j < d.per_axis; ++j)
      for (std::uint32_t k = 0; k < d.per_axis; ++k) {
        const std::array<std::uint32_t, 3> idx{i, j, k};
        Vec3 lo, center, nearest;
        for (int a = 0; a < 3; ++a) {
          lo[a] = -kMaxMomentum + idx[a] * d.side;
          center[a] = lo[a] + 0.5 * d.side;
          nearest[a] = std::clamp(0.0, lo[a], lo[a] + d.side);
        }
        if (!(nearest.norm() < kMaxMomentum)) continue;
        Cell c;
        c.index = idx;
        c.center = center;
        c.velocity = velocity(center);
        c.amplitude = profile(center);
        d.cells.push_back(c);
      }
  return d;
}

/// sigma_t = min(t^{-beta}, 1/2), beta > 1.
inline double schedule(double t, double beta) {
  if (!(beta > 1.0)) throw DomainError("schedule: beta must exceed 1");
  if (!(t >= 1.0)) throw DomainError("schedule: need t >= 1");
  return std::min(std::pow(t, -beta), 0.5);
}

using CloudKernel = std::function<cplx(const Vec3&, Helicity)>;

/// k -> exp(-i |k| t) v(k): conjugation of the Weyl operator by the free field evolution.
inline CloudKernel evolve_cloud(CloudKernel v, double t) {
  return [v = std::move(v), t](const Vec3& k, Helicity h) { return std::polar(1.0, -k.norm() * t) * v(k, h); };
}

/// Grid version acting on per-mode amplitudes.
inline std::vector<cplx> evolve_cloud(const ModeGrid& grid, std::span<const cplx> amplitudes, double t) {
  if (amplitudes.size() != grid.size()) throw DomainError("evolve_cloud: one amplitude per mode required");
  std::vector<cplx> out(amplitudes.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::polar(1.0, -grid[j].energy() * t) * amplitudes[j];
  return out;
}

/// integral over S^2 of |P_perp V / (1 - n.V) - P_perp W / (1 - n.W)|^2 by a
/// product Gauss-Legendre (cos theta) times uniform (phi) rule.
inline double angular_difference(const Vec3& v, const Vec3& w, int n_theta = 48, int n_phi = 96) {
  if (!(v.norm() < 1.0) || !(w.norm() < 1.0)) throw DomainError("angular_difference: velocities must be below 1");
  const auto [x, wt] = quad::gauss_legendre(n_theta);
  double total = 0.0;
  for (int i = 0; i < n_theta; ++i) {
    const double st = std::sqrt(1.0 - x[i] * x[i]);
    double ring = 0.0;
    for (int l = 0; l < n_phi; ++l) {
      const double phi = 2.0 * kPi * l / n_phi;
      const Vec3 n(st * std::cos(phi), st * std::sin(phi), x[i]);
      const Vec3 a = (v - n * n.dot(v)) / (1.0 - n.dot(v));
      const Vec3 b = (w - n * n.dot(w)) / (1.0 - n.dot(w));
      ring += (a - b).squaredNorm();
    }
    total += wt[i] * ring * 2.0 * kPi / n_phi;
  }
  return total;
}

/// |<coh(v_{V,sigma}), coh(v_{W,sigma})>| = exp(-alpha R(sigma, 0) Ang(V, W) / 2); phases set to 0.
inline double cloud_overlap(const Vec3& v, const Vec3& w, double alpha, double sigma) {
  if (v == w || alpha == 0.0) return 1.0;
  return std::exp(-0.5 * alpha * radial_log_integral(sigma, 0.0) * angular_difference(v, w));
}

struct OverlapReport {
  Eigen::MatrixXcd matrix;
  double sigma_t = 0.0;
  /// max_{i != j} |M_ij|.
  double c = 0.0;
  /// c(t) N(t)^2 with N(t) = 8^n.
  double statistic = 0.0;
  /// sum_j |h_j|^2 times the cell volume.
  double diagonal_sum = 0.0;
};

/// M_ij = h_i h_j <coh(v_{V_i, sigma_t}), coh(v_{V_j, sigma_t})> for all kept cells.
inline OverlapReport overlap_matrix(const CellDecomposition& cells, double alpha, double beta) {
  OverlapReport rep;
  rep.sigma_t = schedule(cells.t, beta);
  const std::size_t n = cells.cells.size();
  rep.matrix = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const Cell& ci = cells.cells[i];
    rep.matrix(i, i) = ci.amplitude * ci.amplitude;
    rep.diagonal_sum += ci.amplitude * ci.amplitude * cells.cell_volume();
    if (ci.amplitude == 0.0) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      const Cell& cj = cells.cells[j];
      if (cj.amplitude == 0.0) continue;
      const double m = ci.amplitude * cj.amplitude * cloud_overlap(ci.velocity, cj.velocity, alpha, rep.sigma_t);
      rep.matrix(i, j) = m;
      rep.matrix(j, i) = m;
      rep.c = std::max(rep.c, std::abs(m));
    }
  }
  const double big_n = static_cast<double>(cells.total_cells);
  rep.statistic = rep.c * big_n * big_n;
  return rep;
}

}  // namespace ircloud
