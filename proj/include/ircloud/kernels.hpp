#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>

#include "ircloud/core.hpp"
#include "ircloud/quadrature.hpp"

/// Cutoff function, photon polarizations, the soft-photon cloud kernel and the
/// scalar infrared integrals built from it.
///
/// Units hbar = c = 1. The infrared parameter sigma lives in (0, 1/2]; inside
/// this module sigma == 0 denotes the removed regularization (the sigma -> 0
/// limit of the cutoff), which is only meaningful for integrals with a
/// positive infrared floor.
namespace ircloud {

namespace detail {

inline double smooth_seed(double y) { return y > 0.0 ? std::exp(-1.0 / y) : 0.0; }
inline double smooth_seed_derivative(double y) { return y > 0.0 ? std::exp(-1.0 / y) / (y * y) : 0.0; }

/// Smooth transition from 1 at x = 1/2 to 0 at x = 1.
inline double uv_bump(double x) {
  const double a = smooth_seed(1.0 - x);
  const double b = smooth_seed(x - 0.5);
  return a / (a + b);
}

inline double uv_bump_derivative(double x) {
  const double a = smooth_seed(1.0 - x);
  const double b = smooth_seed(x - 0.5);
  const double da = -smooth_seed_derivative(1.0 - x);
  const double db = smooth_seed_derivative(x - 0.5);
  const double s = a + b;
  return (da * b - a * db) / (s * s);
}

inline void check_sigma(double sigma, bool allow_removed) {
  const bool ok = allow_removed ? (sigma >= 0.0 && sigma <= 0.5) : (sigma > 0.0 && sigma <= 0.5);
  if (!ok)
    throw DomainError("infrared parameter sigma = " + std::to_string(sigma) +
                      (allow_removed ? " outside [0, 1/2]" : " outside (0, 1/2]"));
}

/// Cutoff profile without argument checks; sigma == 0 is the removed regularization.
inline double cutoff_profile(double x, double sigma) {
  if (x > 1.0) return 0.0;
  if (x > 0.5) return uv_bump(x);
  if (x >= sigma) return 1.0;
  return x / sigma;
}

inline double cutoff_profile_derivative(double x, double sigma) {
  if (x >= 1.0) return 0.0;
  if (x > 0.5) return uv_bump_derivative(x);
  if (x >= sigma) return 0.0;
  return 1.0 / sigma;
}

}  // namespace detail

/// Infrared regularization and ultraviolet cutoff kappa_sigma(x).
///
/// x / sigma on [0, sigma], 1 on [sigma, 1/2], a C-infinity decreasing bump on
/// (1/2, 1) and 0 above 1.
inline double cutoff(double x, double sigma) {
  detail::check_sigma(sigma, false);
  if (!(x >= 0.0)) throw DomainError("cutoff: argument must be non-negative");
  return detail::cutoff_profile(x, sigma);
}

inline double cutoff_derivative(double x, double sigma) {
  detail::check_sigma(sigma, false);
  if (!(x >= 0.0)) throw DomainError("cutoff_derivative: argument must be non-negative");
  return detail::cutoff_profile_derivative(x, sigma);
}

/// Reference axes for the transverse polarization basis.
struct PolarizationConvention {
  Vec3 reference_axis = Vec3::UnitZ();
  Vec3 fallback_axis = Vec3::UnitX();
};

struct PolarizationPair {
  Vec3 plus;
  Vec3 minus;
  const Vec3& operator[](Helicity h) const { return h == Helicity::plus ? plus : minus; }
};

/// eps_+ = (k x ref) / |k x ref|, eps_- = khat x eps_+; the fallback axis replaces
/// the reference when k is (numerically) parallel to it.
inline PolarizationPair polarization_pair(const Vec3& k, const PolarizationConvention& conv = {}) {
  const double kn = k.norm();
  if (!(kn > 0.0)) throw DomainError("polarization_pair: k must be non-zero");
  Vec3 c = k.cross(conv.reference_axis);
  if (c.norm() < 1e-12 * kn) {
    c = k.cross(conv.fallback_axis);
    if (c.norm() < 1e-12 * kn)
      throw DomainError("polarization_pair: fallback axis is parallel to k");
  }
  PolarizationPair pair;
  pair.plus = c.normalized();
  pair.minus = (k / kn).cross(pair.plus);
  pair.minus.normalize();
  return pair;
}

/// Parameters of the cloud kernel v_{p,sigma,lambda}.
struct KernelParams {
  Vec3 p = Vec3::Zero();
  Vec3 grad_e = Vec3::Zero();
  double alpha = 0.0;
  double sigma = 0.01;
  double alpha_max = kDefaultAlphaMax;

  /// Throws DomainError on a violated invariant. sigma == 0 (removed
  /// regularization) is accepted.
  void validate() const {
    if (!(p.norm() < kMaxMomentum)) throw DomainError("kernel: |p| must be below 1/3");
    if (!(grad_e.norm() < 1.0)) throw DomainError("kernel: |grad E| must be below 1");
    if (!(alpha >= 0.0)) throw DomainError("kernel: alpha must be non-negative");
    if (alpha > alpha_max) throw DomainError("kernel: alpha exceeds the configured alpha_max");
    detail::check_sigma(sigma, true);
  }
};

/// v(k, lambda) = -sqrt(alpha) (eps_lambda . gradE) kappa(|k|) |k|^{-1/2} / (|k| - k . gradE).
inline double coherent_kernel(const KernelParams& params, const Vec3& k, Helicity lambda,
                              const PolarizationConvention& conv = {}) {
  const double r = k.norm();
  if (!(r > 0.0)) throw DomainError("coherent_kernel: k must be non-zero");
  const double kappa = detail::cutoff_profile(r, params.sigma);
  if (kappa == 0.0) return 0.0;
  const Vec3 eps = polarization_pair(k, conv)[lambda];
  return -std::sqrt(params.alpha) * eps.dot(params.grad_e) * kappa / std::sqrt(r) /
         (r - k.dot(params.grad_e));
}

/// Sum_lambda v_lambda(k) eps_lambda(k): the kernel as a transverse vector
/// field. Independent of the polarization convention.
inline Vec3 transverse_kernel(const KernelParams& params, const Vec3& k) {
  const double r = k.norm();
  if (!(r > 0.0)) throw DomainError("transverse_kernel: k must be non-zero");
  const double kappa = detail::cutoff_profile(r, params.sigma);
  if (kappa == 0.0) return Vec3::Zero();
  const Vec3& v = params.grad_e;
  const Vec3 transverse = v - k * (k.dot(v) / (r * r));
  return -std::sqrt(params.alpha) * kappa / std::sqrt(r) / (r - k.dot(v)) * transverse;
}

/// Jacobian J(i, j) = d transverse_kernel_i / d k_j, in closed form.
inline Eigen::Matrix3d transverse_kernel_jacobian(const KernelParams& params, const Vec3& k) {
  const double r = k.norm();
  if (!(r > 0.0)) throw DomainError("transverse_kernel_jacobian: k must be non-zero");
  const Vec3& v = params.grad_e;
  const double kappa = detail::cutoff_profile(r, params.sigma);
  const double dkappa = detail::cutoff_profile_derivative(r, params.sigma);
  if (kappa == 0.0 && dkappa == 0.0) return Eigen::Matrix3d::Zero();

  const double sa = std::sqrt(params.alpha);
  const double kv = k.dot(v);
  const double denom = r - kv;
  const Vec3 khat = k / r;
  // Scalar prefactor F = -sqrt(alpha) kappa r^{-1/2} / denom and its gradient.
  const double f = -sa * kappa / std::sqrt(r) / denom;
  const Vec3 grad_f = -sa * (dkappa * khat / std::sqrt(r) / denom -
                             0.5 * kappa * khat / std::pow(r, 1.5) / denom -
                             kappa / std::sqrt(r) * (khat - v) / (denom * denom));
  const Vec3 transverse = v - k * (kv / (r * r));
  // d/dk_j of (v_i - k_i (k.v) / r^2)
  Eigen::Matrix3d dtrans = -(kv / (r * r)) * Eigen::Matrix3d::Identity() - k * v.transpose() / (r * r) +
                           2.0 * kv / (r * r * r * r) * (k * k.transpose());
  return transverse * grad_f.transpose() + f * dtrans;
}

/// R(sigma, rho) = integral over r >= rho of kappa_sigma(r)^2 / r dr.
///
/// Ramp and plateau pieces are exact; the bump piece on (1/2, 1) uses adaptive
/// Gauss-Kronrod. Throws DivergenceError for sigma == 0 and rho == 0.
inline double radial_log_integral(double sigma, double rho) {
  detail::check_sigma(sigma, true);
  if (!(rho >= 0.0)) throw DomainError("radial_log_integral: rho must be non-negative");
  if (rho >= 1.0) return 0.0;
  if (sigma == 0.0 && rho == 0.0)
    throw DivergenceError("radial_log_integral: infrared divergence at sigma = 0, rho = 0");
  double total = 0.0;
  if (rho < sigma) total += (sigma * sigma - rho * rho) / (2.0 * sigma * sigma);
  const double plateau_lo = std::max(rho, sigma);
  if (plateau_lo < 0.5) total += std::log(0.5 / plateau_lo);
  const double bump_lo = std::max(rho, 0.5);
  total += quad::integrate(
      [](double r) {
        const double k = detail::uv_bump(r);
        return k * k / r;
      },
      bump_lo, 1.0, {}, {1e-13, 12});
  return total;
}

/// A(v) = 2 pi v^2 integral_{-1}^{1} (1 - u^2) / (1 - v u)^2 du
///      = 4 pi (2 artanh(v) / v - 2) = 8 pi sum_{m>=1} v^{2m} / (2m + 1).
inline double angular_constant(double v_mag) {
  if (!(v_mag >= 0.0) || !(v_mag < 1.0)) throw DomainError("angular_constant: need 0 <= v < 1");
  if (v_mag == 0.0) return 0.0;
  if (v_mag < 0.25) {
    const double v2 = v_mag * v_mag;
    double term = v2, sum = 0.0;
    for (int m = 1; m < 60; ++m) {
      const double add = term / (2.0 * m + 1.0);
      sum += add;
      if (add < 1e-18 * sum) break;
      term *= v2;
    }
    return 8.0 * kPi * sum;
  }
  return 4.0 * kPi * (2.0 * std::atanh(v_mag) / v_mag - 2.0);
}

/// Sum_lambda of the squared kernel over |k| >= rho: alpha R(sigma, rho) A(|gradE|).
inline double kernel_l2_norm_sq(const KernelParams& params, double ir_floor) {
  params.validate();
  if (!(ir_floor >= 0.0)) throw DomainError("kernel_l2_norm_sq: infrared floor must be non-negative");
  const double v = params.grad_e.norm();
  if (v == 0.0 || params.alpha == 0.0) return 0.0;
  return params.alpha * radial_log_integral(params.sigma, ir_floor) * angular_constant(v);
}

/// <Omega, A_sigma^2 Omega> = 8 pi integral_0^inf r kappa_sigma(r)^2 dr.
inline double vacuum_field_energy(double sigma) {
  detail::check_sigma(sigma, true);
  const double ramp = sigma * sigma / 4.0;
  const double plateau = (0.25 - sigma * sigma) / 2.0;
  const double bump = quad::integrate(
      [](double r) {
        const double k = detail::uv_bump(r);
        return r * k * k;
      },
      0.5, 1.0, {}, {1e-13, 12});
  return 8.0 * kPi * (ramp + plateau + bump);
}

}  // namespace ircloud
