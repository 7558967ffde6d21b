#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ircloud/core.hpp"
#include "ircloud/eigensolver.hpp"
#include "ircloud/fockspace.hpp"
#include "ircloud/hamiltonian.hpp"
#include "ircloud/kernels.hpp"
#include "ircloud/parallel.hpp"
#include "ircloud/quadrature.hpp"

namespace ircloud {

struct SpectralOptions {
  /// Finite-difference step; differences use h and 2h followed by one Richardson step.
  double h = 1e-3;
  Vec3 u = Vec3::UnitZ();
  SolverOptions solver;
  bool variational = true;
};

struct SpectralReport {
  Vec3 p = Vec3::Zero();
  double sigma = 0.0;
  double alpha = 0.0;
  double energy = 0.0;
  /// Finite-difference gradient (Richardson extrapolated).
  Vec3 grad_e = Vec3::Zero();
  /// <psi, (p - X) psi> at p; equals the gradient for an exact eigenvector.
  Vec3 grad_e_expectation = Vec3::Zero();
  /// Second derivative along p / |p| (along z at p = 0).
  double d2e = 0.0;
  double d2e_variational = std::nan("");
  double m_ren = 0.0;
  double photon_number = 0.0;
  double residual = 0.0;
  double h = 0.0;
  int richardson_order = 4;
  /// (alpha / 2) sum_j g_j^2 and (alpha / 2) <Omega, A^2 Omega> of the continuum.
  double vacuum_shift_discrete = 0.0;
  double vacuum_shift_continuum = 0.0;
  /// E - p^2/2 - vacuum shift, for both versions of the shift.
  double energy_shift_discrete = 0.0;
  double energy_shift_continuum = 0.0;
  double grad_deviation = 0.0;
  /// d2E <= 0: the discretization failed.
  bool d2e_violation = false;
  /// d2E < 1, i.e. m_ren > 1.
  bool mass_increased = false;
  double cross_check_tolerance = 0.0;
  bool cross_check_ok = true;
};

namespace detail {

/// Unit vectors: the radial direction (z at p = 0) and two transverse ones.
inline std::array<Vec3, 3> difference_frame(const Vec3& p) {
  const Vec3 e0 = p.norm() > 0.0 ? Vec3(p.normalized()) : Vec3(Vec3::UnitZ());
  const Vec3 ref = std::abs(e0.x()) < 0.9 ? Vec3(Vec3::UnitX()) : Vec3(Vec3::UnitY());
  const Vec3 e1 = (ref - e0 * e0.dot(ref)).normalized();
  const Vec3 e2 = e0.cross(e1);
  return {e0, e1, e2};
}

inline Vec3 velocity_expectation(const FiberHamiltonian& h, const StateVector& psi) {
  Vec3 v;
  for (int c = 0; c < 3; ++c) v[c] = std::real(psi.dot(h.velocity(c, psi)));
  return v;
}

}  // namespace detail

/// Gradient, radial second derivative and renormalized mass of E(p, sigma).
///
/// 13 ground-state solves (p, p +- h e, p +- 2h e for the radial and two
/// transverse directions). The variational cross-check evaluates
/// 1 - 2 <b, (H - E)^{-1} b>, b = Q (e.(p - X)) psi, with Q removing the doublet.
inline SpectralReport gradient_and_mass(const FiberHamiltonian& h0, const SpectralOptions& opt = {}) {
  const Vec3 p = h0.p();
  if (!(opt.h > 0.0)) throw DomainError("gradient_and_mass: step must be positive");
  if (!(p.norm() + 2.0 * opt.h < kMaxMomentum)) throw DomainError("gradient_and_mass: need |p| + 2h < 1/3");
  SpectralReport rep;
  rep.p = p;
  rep.sigma = h0.sigma();
  rep.alpha = h0.alpha();
  rep.h = opt.h;

  const GroundState center = ground_state(h0, opt.u, opt.solver);
  rep.energy = center.energy;
  rep.residual = center.residual;
  rep.grad_e_expectation = detail::velocity_expectation(h0, center.psi);
  rep.photon_number = expectation(number_operator(h0.basis()), center.psi);

  const auto frame = detail::difference_frame(p);
  auto energy_at = [&](const Vec3& q) {
    const GroundState g = ground_state(h0.at(q), opt.u, opt.solver);
    rep.residual = std::max(rep.residual, g.residual);
    return g.energy;
  };
  const double hh = opt.h;
  for (int d = 0; d < 3; ++d) {
    const Vec3& e = frame[d];
    const double ep1 = energy_at(p + hh * e), em1 = energy_at(p - hh * e);
    const double ep2 = energy_at(p + 2 * hh * e), em2 = energy_at(p - 2 * hh * e);
    const double d1h = (ep1 - em1) / (2 * hh), d1h2 = (ep2 - em2) / (4 * hh);
    const double d1 = (4 * d1h - d1h2) / 3.0;
    rep.grad_e += d1 * e;
    if (d == 0) {
      const double d2h = (ep1 - 2 * rep.energy + em1) / (hh * hh);
      const double d2h2 = (ep2 - 2 * rep.energy + em2) / (4 * hh * hh);
      rep.d2e = (4 * d2h - d2h2) / 3.0;
    }
  }
  rep.m_ren = 1.0 / rep.d2e;
  rep.d2e_violation = !(rep.d2e > 0.0);
  rep.mass_increased = rep.d2e < 1.0;

  double g2 = 0.0;
  for (double g : h0.fields().coupling) g2 += g * g;
  rep.vacuum_shift_discrete = 0.5 * rep.alpha * g2;
  rep.vacuum_shift_continuum = 0.5 * rep.alpha * vacuum_field_energy(rep.sigma);
  rep.energy_shift_discrete = rep.energy - 0.5 * p.squaredNorm() - rep.vacuum_shift_discrete;
  rep.energy_shift_continuum = rep.energy - 0.5 * p.squaredNorm() - rep.vacuum_shift_continuum;
  rep.grad_deviation = (rep.grad_e - p).norm();

  if (opt.variational) {
    const Vec3& e = frame[0];
    StateVector b = StateVector::Zero(center.psi.size());
    for (int c = 0; c < 3; ++c)
      if (e[c] != 0.0) b += e[c] * h0.velocity(c, center.psi);
    double correction = 0.0;
    if (rep.alpha > 0.0) {
      const auto sol = eigen::projected_cg(h0.matrix(), center.energy, center.doublet, b);
      StateVector bq = b;
      bq -= center.doublet * (center.doublet.adjoint() * bq);
      correction = std::real(bq.dot(sol.x));
    }
    rep.d2e_variational = 1.0 - 2.0 * correction;
    rep.cross_check_tolerance = 5.0 * (hh * hh + rep.residual);
    rep.cross_check_ok = std::abs(rep.d2e_variational - rep.d2e) <= rep.cross_check_tolerance;
  }
  return rep;
}

/// Second-order Rayleigh-Schroedinger energy of the discrete model, summed in
/// closed form over one- and two-photon intermediate states allowed by the
/// truncation (no matrix assembly).
inline double perturbative_energy(const Vec3& p, double sigma, double alpha, const ModeGrid& grid, int n_max = 2,
                                  int n_cap = 2) {
  if (!(alpha >= 0.0)) throw DomainError("perturbative_energy: alpha must be non-negative");
  const std::vector<double> g = mode_couplings(grid, sigma);
  const std::size_t m = grid.size();
  const double e0 = 0.5 * p.squaredNorm();
  double c_number = 0.0;
  for (double gj : g) c_number += gj * gj;
  double e = e0 + 0.5 * alpha * c_number;
  if (alpha == 0.0) return e;

  auto excitation = [&](const Vec3& ktot, double energy) { return 0.5 * (p - ktot).squaredNorm() + energy - e0; };
  if (n_cap >= 1 && n_max >= 1) {
    for (std::size_t j = 0; j < m; ++j) {
      const Mode& md = grid[j];
      const double ep = md.polarization.dot(p);
      const double amp2 = alpha * g[j] * g[j] * (ep * ep + md.k.squaredNorm());
      e -= amp2 / excitation(md.k, md.energy());
    }
  }
  if (n_cap >= 2) {
    for (std::size_t i = 0; i < m; ++i) {
      const Mode& mi = grid[i];
      if (n_max >= 2) {
        const double amp = alpha * g[i] * g[i] / std::sqrt(2.0);
        e -= amp * amp / excitation(2.0 * mi.k, 2.0 * mi.energy());
      }
      for (std::size_t j = i + 1; j < m; ++j) {
        const Mode& mj = grid[j];
        const double amp = alpha * g[i] * g[j] * mi.polarization.dot(mj.polarization);
        if (amp == 0.0) continue;
        e -= amp * amp / excitation(mi.k + mj.k, mi.energy() + mj.energy());
      }
    }
  }
  return e;
}

/// Grid refinement for sigma scans: floor at the first point of a fixed log
/// lattice (nodes_per_decade per decade) at or below floor_ratio * sigma, so
/// grids for different sigma are nested.
struct ScanPolicy {
  int nodes_per_decade = 2;
  double floor_ratio = 0.25;
  int n_angular = 6;
  int n_max = 2;
  int n_cap = 2;
  std::size_t max_dimension = kDefaultMaxDimension;
};

struct ScanGrid {
  double ir_floor = 0.0;
  int n_radial = 0;
};

inline ScanGrid scan_grid(double sigma, const ScanPolicy& policy) {
  detail::check_sigma(sigma, false);
  if (policy.nodes_per_decade < 1) throw DomainError("scan_grid: nodes_per_decade must be >= 1");
  if (!(policy.floor_ratio > 0.0 && policy.floor_ratio <= 1.0)) throw DomainError("scan_grid: floor_ratio in (0, 1]");
  const int n = static_cast<int>(std::ceil(policy.nodes_per_decade * std::log10(1.0 / (policy.floor_ratio * sigma)) - 1e-9));
  return {std::pow(10.0, -static_cast<double>(n) / policy.nodes_per_decade), std::max(n, 1)};
}

struct ScanRow {
  double sigma = 0.0;
  double ir_floor = 0.0;
  int n_radial = 0;
  std::size_t modes = 0;
  std::size_t dimension = 0;
  double energy = 0.0;
  double photon_number = 0.0;
  Vec3 grad_e = Vec3::Zero();
  double residual = 0.0;
  bool converged = false;
  std::string note;
};

struct ScanResult {
  Vec3 p = Vec3::Zero();
  double alpha = 0.0;
  std::vector<ScanRow> rows;
  /// <N_f> = a + b log(1/sigma) over converged rows.
  std::optional<quad::LinearFit> fit;
  /// alpha A(|grad E|) with grad E = <psi, (p - X) psi> at the smallest converged sigma.
  double predicted_slope = 0.0;
  int excluded = 0;
};

inline ScanRow photon_number_point(const Vec3& p, double alpha, double sigma, const ScanPolicy& policy,
                                   const Vec3& u, const SolverOptions& solver) {
  ScanRow row;
  row.sigma = sigma;
  const ScanGrid sg = scan_grid(sigma, policy);
  row.ir_floor = sg.ir_floor;
  row.n_radial = sg.n_radial;
  auto basis = std::make_shared<const FockBasis>(build_mode_grid(sigma, sg.ir_floor, sg.n_radial, policy.n_angular),
                                                 policy.n_max, policy.n_cap, policy.max_dimension);
  row.modes = basis->num_modes();
  row.dimension = basis->dimension();
  const FiberHamiltonian h = assemble(p, sigma, alpha, basis);
  try {
    const GroundState gs = ground_state(h, u, solver);
    row.energy = gs.energy;
    row.residual = gs.residual;
    row.photon_number = expectation(number_operator(*basis), gs.psi);
    row.grad_e = detail::velocity_expectation(h, gs.psi);
    row.converged = true;
  } catch (const SolverError& e) {
    row.note = e.what();
    row.residual = e.residual_history().empty() ? 0.0 : e.residual_history().back();
  }
  return row;
}

/// <N_f>(sigma) along a decreasing sigma list and its fit against log(1/sigma).
inline ScanResult photon_number_scan(const Vec3& p, double alpha, std::span<const double> sigmas,
                                     const ScanPolicy& policy = {}, const Vec3& u = Vec3::UnitZ(),
                                     const SolverOptions& solver = {}, unsigned workers = worker_count()) {
  if (sigmas.empty()) throw InsufficientDataError("photon_number_scan: empty sigma list");
  for (std::size_t i = 1; i < sigmas.size(); ++i)
    if (!(sigmas[i] < sigmas[i - 1])) throw DomainError("photon_number_scan: sigma list must be decreasing");
  ScanResult res;
  res.p = p;
  res.alpha = alpha;
  const std::vector<double> list(sigmas.begin(), sigmas.end());
  res.rows = parallel_map(
      list, [&](double s) { return photon_number_point(p, alpha, s, policy, u, solver); }, workers);
  std::vector<double> x, y;
  for (const auto& r : res.rows) {
    if (!r.converged) {
      ++res.excluded;
      continue;
    }
    x.push_back(std::log(1.0 / r.sigma));
    y.push_back(r.photon_number);
  }
  if (x.size() >= 2) res.fit = quad::fit_line(x, y);
  for (auto it = res.rows.rbegin(); it != res.rows.rend(); ++it)
    if (it->converged) {
      const double v = it->grad_e.norm();
      res.predicted_slope = v < 1.0 ? alpha * angular_constant(v) : std::nan("");
      break;
    }
  return res;
}

}  // namespace ircloud
