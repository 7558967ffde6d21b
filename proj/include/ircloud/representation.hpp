#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ircloud/core.hpp"
#include "ircloud/fockspace.hpp"
#include "ircloud/hamiltonian.hpp"
#include "ircloud/kernels.hpp"
#include "ircloud/quadrature.hpp"

/// Kernel-level diagnostics of the Fock versus coherent representation.
namespace ircloud {

enum class Verdict { fock_equivalent, inequivalent_coherent };

inline const char* to_string(Verdict v) {
  return v == Verdict::fock_equivalent ? "fock_equivalent" : "inequivalent_coherent";
}

inline constexpr double kDefaultSlopeThreshold = 1e-3;

struct EquivalenceVerdict {
  Vec3 p = Vec3::Zero();
  Vec3 grad_e = Vec3::Zero();
  double alpha = 0.0;
  std::vector<double> sigmas;
  std::vector<double> norm_sq;
  /// ||v_sigma||^2 = intercept + slope log(1/sigma).
  quad::LinearFit fit;
  /// alpha A(|grad E|).
  double predicted_slope = 0.0;
  Verdict verdict = Verdict::fock_equivalent;
  /// Relative threshold: fock_equivalent iff |slope| <= threshold * alpha.
  double threshold = kDefaultSlopeThreshold;
};

/// Fits ||v_sigma||^2 against log(1/sigma); p, grad_e and alpha come from `base`.
inline EquivalenceVerdict equivalence_diagnostic(const KernelParams& base, std::span<const double> sigmas,
                                                 double threshold = kDefaultSlopeThreshold) {
  if (sigmas.size() < 3) throw InsufficientDataError("equivalence_diagnostic: need at least 3 sigma values");
  const auto [lo, hi] = std::minmax_element(sigmas.begin(), sigmas.end());
  if (!(*lo > 0.0) || std::log10(*hi / *lo) < 3.0 - 1e-12)
    throw DomainError("equivalence_diagnostic: sigma values must span at least 3 decades");
  EquivalenceVerdict out;
  out.p = base.p;
  out.grad_e = base.grad_e;
  out.alpha = base.alpha;
  out.threshold = threshold;
  std::vector<double> x;
  for (double s : sigmas) {
    KernelParams kp = base;
    kp.sigma = s;
    if (!(s > 0.0)) throw DomainError("equivalence_diagnostic: sigma must be positive");
    out.sigmas.push_back(s);
    out.norm_sq.push_back(kernel_l2_norm_sq(kp, 0.0));
    x.push_back(std::log(1.0 / s));
  }
  out.fit = quad::fit_line(x, out.norm_sq);
  out.predicted_slope = base.alpha * angular_constant(base.grad_e.norm());
  out.verdict = std::abs(out.fit.slope) <= threshold * base.alpha ? Verdict::fock_equivalent
                                                                   : Verdict::inequivalent_coherent;
  return out;
}

struct TwoPointResult {
  double deviation = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
};

namespace detail {

inline TwoPointResult two_point_ratio(double deviation, double alpha, double kappa, double r, double c) {
  TwoPointResult out;
  out.deviation = deviation;
  out.bound = c * alpha * kappa * kappa / std::pow(r, 2.5);
  out.ratio = out.bound > 0.0 ? deviation / out.bound : 0.0;
  return out;
}

}  // namespace detail

/// |omega(a^+ a) - |omega(a)|^2| per unit mode weight in the ground state, against c alpha kappa^2 / |k|^{5/2}.
inline TwoPointResult two_point_deviation(const FiberHamiltonian& h, const GroundState& gs, std::size_t j,
                                          double c = 1.0) {
  const FockBasis& basis = h.basis();
  if (j >= basis.num_modes()) throw DomainError("two_point_deviation: mode index out of range");
  const Mode& md = basis.grid()[j];
  const StateVector apsi = annihilator(basis, j) * gs.psi;
  const double occupation = apsi.squaredNorm();
  const double mean_sq = std::norm(gs.psi.dot(apsi));
  const double dev = std::abs(occupation - mean_sq) / md.weight;
  return detail::two_point_ratio(dev, h.alpha(), detail::cutoff_profile(md.energy(), h.sigma()), md.energy(), c);
}

/// Same quantity in the coherent model, where omega(a) = v(k) and omega(a^+ a) = |v(k)|^2.
inline TwoPointResult two_point_deviation_coherent(const KernelParams& params, const Vec3& k, Helicity lambda,
                                                   double c = 1.0) {
  const double v = coherent_kernel(params, k, lambda);
  const double occupation = v * v;
  const double mean = std::abs(v);
  const double dev = std::abs(occupation - mean * mean);
  return detail::two_point_ratio(dev, params.alpha, detail::cutoff_profile(k.norm(), params.sigma), k.norm(), c);
}

/// <N_rho> in the coherent model: the kernel norm restricted to |k| >= rho.
/// sigma == 0 in `params` is the removed regularization.
inline double local_number(const KernelParams& params, double rho) {
  if (!(rho >= 0.0)) throw DomainError("local_number: rho must be non-negative");
  return kernel_l2_norm_sq(params, rho);
}

/// sum_lambda integral_{|k| >= rho} (|grad_k v|^2 + |k|^2 |v|^2) dk.
///
/// Evaluated on the transverse vector kernel (sum_lambda v_lambda eps_lambda),
/// whose Jacobian norm does not depend on the polarization convention. The
/// integrand is axially symmetric about grad E, leaving a 2-D integral in
/// (|k|, cos theta).
inline double c_rho_expectation(const KernelParams& params, double rho, double tolerance = 1e-10) {
  params.validate();
  if (!(rho > 0.0)) throw DomainError("c_rho_expectation: rho must be positive");
  const Vec3& v = params.grad_e;
  if (v.norm() == 0.0 || params.alpha == 0.0 || rho >= 1.0) return 0.0;
  const Vec3 axis = v.normalized();
  const Vec3 ref = std::abs(axis.x()) < 0.9 ? Vec3(Vec3::UnitX()) : Vec3(Vec3::UnitY());
  const Vec3 perp = (ref - axis * axis.dot(ref)).normalized();

  auto density = [&](double r, double u) {
    const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
    const Vec3 k = r * (u * axis + s * perp);
    const Vec3 kv = transverse_kernel(params, k);
    const Eigen::Matrix3d jac = transverse_kernel_jacobian(params, k);
    return jac.squaredNorm() + r * r * kv.squaredNorm();
  };
  auto radial = [&](double r) {
    const double inner = quad::integrate([&](double u) { return density(r, u); }, -1.0, 1.0, {},
                                         {tolerance, 12});
    return 2.0 * kPi * r * r * inner;
  };
  const std::vector<double> breaks{params.sigma, 0.5};
  return quad::integrate(radial, rho, 1.0, breaks, {tolerance, 12});
}

/// |<coh(v_sigma), coh(v_sigma')>| = exp(-||v_sigma - v_sigma'||^2 / 2) in closed form.
///
/// ||v_sigma - v_sigma'||^2 = alpha A(|grad E|) integral (kappa_sigma - kappa_sigma')^2 / r dr,
/// with the radial integral elementary on [0, sigma] (the profiles agree above sigma).
inline double sigma_pair_overlap(const KernelParams& params, double sigma_prime) {
  params.validate();
  const double s = params.sigma, t = sigma_prime;
  if (!(t > 0.0) || t > s) throw DomainError("sigma_pair_overlap: need 0 < sigma' <= sigma");
  const double vnorm = params.grad_e.norm();
  if (t == s || vnorm == 0.0 || params.alpha == 0.0) return 1.0;
  const double d = 1.0 / s - 1.0 / t;
  const double radial = 0.5 * t * t * d * d + (s * s - t * t) / (2.0 * s * s) - 2.0 * (s - t) / s + std::log(s / t);
  return std::exp(-0.5 * params.alpha * angular_constant(vnorm) * radial);
}

}  // namespace ircloud
