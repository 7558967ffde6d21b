#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "ircloud/core.hpp"
#include "ircloud/eigensolver.hpp"
#include "ircloud/fockspace.hpp"
#include "ircloud/kernels.hpp"

/// Discretized fiber Hamiltonian
///   H(p) = 1/2 (p - P_f - sqrt(alpha) A)^2 + sqrt(alpha) tau.B + H_f
/// on C^2 (x) F, its ground-state doublet and the identities checked on it.
namespace ircloud {

/// Pauli matrices tau_1 = [[0,1],[1,0]], tau_2 = [[0,i],[-i,0]], tau_3 = diag(1,-1).
inline Eigen::Matrix2cd pauli(int c) {
  const cplx i(0.0, 1.0);
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  switch (c) {
    case 0: m << 0.0, 1.0, 1.0, 0.0; break;
    case 1: m << 0.0, i, -i, 0.0; break;
    case 2: m << 1.0, 0.0, 0.0, -1.0; break;
    default: throw DomainError("pauli: component must be 0, 1 or 2");
  }
  return m;
}

inline Eigen::Matrix2cd pauli_dot(const Eigen::Vector3cd& v) {
  return v[0] * pauli(0) + v[1] * pauli(1) + v[2] * pauli(2);
}

/// Applies a 2x2 spin matrix to every photon configuration of psi.
inline StateVector apply_spin(const Eigen::Matrix2cd& s, const StateVector& psi) {
  StateVector out(psi.size());
  Eigen::Map<const Eigen::MatrixXcd> in(psi.data(), 2, psi.size() / 2);
  Eigen::Map<Eigen::MatrixXcd> res(out.data(), 2, psi.size() / 2);
  res.noalias() = s * in;
  return out;
}

/// <psi, tau psi> (real 3-vector).
inline Vec3 spin_expectation(const StateVector& psi) {
  Vec3 u;
  for (int c = 0; c < 3; ++c) u[c] = std::real(psi.dot(apply_spin(pauli(c), psi)));
  return u;
}

/// Coupling sqrt(w_j) kappa_sigma(|k_j|) / sqrt(|k_j|) of each grid mode.
inline std::vector<double> mode_couplings(const ModeGrid& grid, double sigma) {
  detail::check_sigma(sigma, false);
  std::vector<double> g(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double r = grid[j].energy();
    g[j] = std::sqrt(grid[j].weight) * detail::cutoff_profile(r, sigma) / std::sqrt(r);
  }
  return g;
}

/// p-independent operators of the discrete model.
struct FieldOperators {
  std::shared_ptr<const FockBasis> basis;
  double sigma = 0.0;
  double alpha = 0.0;
  std::vector<double> coupling;
  /// P_f,c and H_f as diagonals over the full space.
  std::array<Eigen::VectorXd, 3> pf;
  Eigen::VectorXd hf;
  /// A_c and B_c, identity on spin.
  std::array<SparseOperator, 3> a;
  std::array<SparseOperator, 3> b;
  /// X_c = P_f,c + sqrt(alpha) A_c.
  std::array<SparseOperator, 3> x;
  /// H(p) - p^2/2 + p.X, i.e. the part of H that does not depend on p.
  SparseOperator rest;
};

namespace detail {

using Triplet = Eigen::Triplet<cplx, std::ptrdiff_t>;

/// Photon-space lowering part sum_j coef_j a_j.
inline SparseOperator photon_lowering(const FockBasis& basis, const std::vector<cplx>& coef) {
  std::vector<Triplet> trip;
  for (std::size_t c = 0; c < basis.photon_dimension(); ++c) {
    const auto occ = basis.occupation(c);
    for (std::size_t j = 0; j < occ.size(); ++j) {
      if (occ[j] == 0 || coef[j] == 0.0) continue;
      const auto t = basis.shifted(c, j, -1);
      trip.emplace_back(static_cast<std::ptrdiff_t>(*t), static_cast<std::ptrdiff_t>(c),
                        coef[j] * std::sqrt(static_cast<double>(occ[j])));
    }
  }
  const auto d = static_cast<std::ptrdiff_t>(basis.photon_dimension());
  SparseOperator l(d, d);
  l.setFromTriplets(trip.begin(), trip.end());
  return l;
}

/// spin (x) photon with the interleaved index 2 * configuration + spin.
inline SparseOperator lift(const SparseOperator& photon, const Eigen::Matrix2cd& spin) {
  std::vector<Triplet> trip;
  trip.reserve(photon.nonZeros() * 4);
  for (std::ptrdiff_t col = 0; col < photon.outerSize(); ++col)
    for (SparseOperator::InnerIterator it(photon, col); it; ++it)
      for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t)
          if (spin(t, s) != 0.0) trip.emplace_back(2 * it.row() + t, 2 * col + s, spin(t, s) * it.value());
  SparseOperator out(2 * photon.rows(), 2 * photon.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

inline SparseOperator diagonal(const Eigen::VectorXd& d) {
  SparseOperator m(d.size(), d.size());
  m.reserve(Eigen::VectorXi::Constant(d.size(), 1));
  for (Eigen::Index i = 0; i < d.size(); ++i) m.insert(i, i) = d[i];
  m.makeCompressed();
  return m;
}

inline SparseOperator identity(Eigen::Index n) { return diagonal(Eigen::VectorXd::Ones(n)); }

inline SparseOperator hermitian_part(const SparseOperator& m) {
  SparseOperator adj = m.adjoint();
  SparseOperator out = 0.5 * (m + adj);
  out.prune(cplx(0.0));
  return out;
}

}  // namespace detail

/// Builds the field operators as exact Galerkin projections onto the basis.
///
/// A^2 is written in normal order plus its c-number, sum_c (L_c L_c + L_c^+ L_c^+
/// + 2 L_c^+ L_c) + sum_j g_j^2, where L_c is the lowering part of A_c; each
/// product only passes through states inside the basis.
inline std::shared_ptr<const FieldOperators> build_field_operators(std::shared_ptr<const FockBasis> basis,
                                                                   double sigma, double alpha) {
  if (!basis) throw DomainError("build_field_operators: null basis");
  if (!(alpha >= 0.0)) throw DomainError("build_field_operators: alpha must be non-negative");
  auto ops = std::make_shared<FieldOperators>();
  ops->basis = basis;
  ops->sigma = sigma;
  ops->alpha = alpha;
  const ModeGrid& grid = basis->grid();
  ops->coupling = mode_couplings(grid, sigma);
  const std::size_t m = grid.size();
  const std::size_t dp = basis->photon_dimension();
  const double sa = std::sqrt(alpha);

  std::array<Eigen::VectorXd, 3> pf_photon;
  Eigen::VectorXd hf_photon = Eigen::VectorXd::Zero(dp);
  for (int c = 0; c < 3; ++c) pf_photon[c] = Eigen::VectorXd::Zero(dp);
  for (std::size_t cfg = 0; cfg < dp; ++cfg) {
    const auto occ = basis->occupation(cfg);
    for (std::size_t j = 0; j < m; ++j) {
      if (!occ[j]) continue;
      for (int c = 0; c < 3; ++c) pf_photon[c][cfg] += occ[j] * grid[j].k[c];
      hf_photon[cfg] += occ[j] * grid[j].energy();
    }
  }

  const Eigen::Matrix2cd id2 = Eigen::Matrix2cd::Identity();
  SparseOperator rest_photon(dp, dp);
  SparseOperator a_squared(dp, dp);
  SparseOperator spin_part(2 * dp, 2 * dp);
  double c_number = 0.0;
  for (double g : ops->coupling) c_number += g * g;

  for (int c = 0; c < 3; ++c) {
    std::vector<cplx> ca(m), cb(m);
    for (std::size_t j = 0; j < m; ++j) {
      const Mode& md = grid[j];
      ca[j] = ops->coupling[j] * md.polarization[c];
      // Lowering coefficient of B: (-i k) ^ eps.
      cb[j] = cplx(0.0, -1.0) * ops->coupling[j] * md.k.cross(md.polarization)[c];
    }
    const SparseOperator la = detail::photon_lowering(*basis, ca);
    const SparseOperator lb = detail::photon_lowering(*basis, cb);
    const SparseOperator la_adj = la.adjoint();
    const SparseOperator lb_adj = lb.adjoint();
    const SparseOperator a_photon = la + la_adj;
    const SparseOperator b_photon = lb + lb_adj;
    const SparseOperator ll = la * la;
    const SparseOperator ll_adj = ll.adjoint();
    const SparseOperator la_adj_la = la_adj * la;
    a_squared += ll + ll_adj + 2.0 * la_adj_la;

    const SparseOperator pf_diag = detail::diagonal(pf_photon[c]);
    const SparseOperator pf_a = pf_diag * a_photon;
    const SparseOperator a_pf = a_photon * pf_diag;
    rest_photon += 0.5 * sa * (pf_a + a_pf);

    ops->a[c] = detail::lift(a_photon, id2);
    ops->b[c] = detail::lift(b_photon, id2);
    spin_part += sa * detail::lift(b_photon, pauli(c));
    ops->pf[c] = Eigen::VectorXd(2 * dp);
    for (std::size_t cfg = 0; cfg < dp; ++cfg) ops->pf[c][2 * cfg] = ops->pf[c][2 * cfg + 1] = pf_photon[c][cfg];
    ops->x[c] = detail::diagonal(ops->pf[c]) + sa * ops->a[c];
  }
  ops->hf = Eigen::VectorXd(2 * dp);
  for (std::size_t cfg = 0; cfg < dp; ++cfg) ops->hf[2 * cfg] = ops->hf[2 * cfg + 1] = hf_photon[cfg];

  Eigen::VectorXd diag_photon = hf_photon + 0.5 * (alpha * c_number) * Eigen::VectorXd::Ones(dp);
  for (int c = 0; c < 3; ++c) diag_photon += 0.5 * pf_photon[c].cwiseProduct(pf_photon[c]);
  rest_photon += 0.5 * alpha * a_squared;
  rest_photon += detail::diagonal(diag_photon);
  ops->rest = detail::lift(rest_photon, id2) + spin_part;
  return ops;
}

/// H(p, sigma) assembled from shared field operators; `at(p')` reuses them.
class FiberHamiltonian {
 public:
  FiberHamiltonian(std::shared_ptr<const FieldOperators> fields, const Vec3& p) : fields_(std::move(fields)), p_(p) {
    const Eigen::Index n = fields_->rest.rows();
    SparseOperator h = fields_->rest + (0.5 * p.squaredNorm()) * detail::identity(n);
    for (int c = 0; c < 3; ++c)
      if (p[c] != 0.0) h -= p[c] * fields_->x[c];
    h_ = detail::hermitian_part(h);
  }

  /// Same field operators at another total momentum.
  FiberHamiltonian at(const Vec3& p) const { return FiberHamiltonian(fields_, p); }

  const SparseOperator& matrix() const { return h_; }
  const Vec3& p() const { return p_; }
  double sigma() const { return fields_->sigma; }
  double alpha() const { return fields_->alpha; }
  const FockBasis& basis() const { return *fields_->basis; }
  const FieldOperators& fields() const { return *fields_; }
  std::shared_ptr<const FieldOperators> shared_fields() const { return fields_; }
  std::size_t dimension() const { return static_cast<std::size_t>(h_.rows()); }

  /// |p| >= 1/3: outside the admissible ball; the operator is still built.
  bool outside_momentum_ball() const { return !(p_.norm() < kMaxMomentum); }

  /// Component c of grad_p H = p - P_f - sqrt(alpha) A applied to psi.
  StateVector velocity(int c, const StateVector& psi) const {
    StateVector out = p_[c] * psi - fields_->x[c] * psi;
    return out;
  }

  /// Max |H_ij - conj(H_ji)|.
  double hermiticity_defect() const {
    const SparseOperator adj = h_.adjoint();
    const SparseOperator diff = h_ - adj;
    double m = 0.0;
    for (std::ptrdiff_t col = 0; col < diff.outerSize(); ++col)
      for (SparseOperator::InnerIterator it(diff, col); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
  }

 private:
  std::shared_ptr<const FieldOperators> fields_;
  Vec3 p_;
  SparseOperator h_;
};

inline FiberHamiltonian assemble(const Vec3& p, double sigma, double alpha, std::shared_ptr<const FockBasis> basis) {
  return FiberHamiltonian(build_field_operators(std::move(basis), sigma, alpha), p);
}

struct SolverOptions {
  double tolerance = 1e-8;
  int max_iterations = 10000;
  int max_subspace = 48;
  /// Use dense diagonalization instead of Davidson (cross-checks only).
  bool dense = false;
};

struct GroundState {
  double energy = 0.0;
  StateVector psi;
  /// Measured <psi, tau psi>.
  Vec3 spin_direction = Vec3::Zero();
  Vec3 requested_direction = Vec3::UnitZ();
  /// ||H psi - E psi||.
  double residual = 0.0;
  double norm_estimate = 0.0;
  /// Orthonormal basis of the lowest two-dimensional invariant subspace.
  Eigen::MatrixXcd doublet;
  /// lambda_2 - lambda_1.
  double splitting = 0.0;
  /// lambda_3 - lambda_1.
  double gap = 0.0;
  std::vector<double> residual_history;
  int iterations = 0;
};

/// Fixed start block: vacuum (x) up/down and the normalized one-photon sum (x) up/down.
inline Eigen::MatrixXcd start_block(const FockBasis& basis) {
  const Eigen::Index n = static_cast<Eigen::Index>(basis.dimension());
  std::vector<StateVector> cols{vacuum_state(basis, 0), vacuum_state(basis, 1)};
  std::size_t one_photon = 0;
  for (std::size_t c = 0; c < basis.photon_dimension() && basis.total_photons(c) <= 1; ++c)
    if (basis.total_photons(c) == 1) ++one_photon;
  if (one_photon > 0) {
    for (int s = 0; s < 2; ++s) {
      StateVector v = StateVector::Zero(n);
      for (std::size_t c = 1; c <= one_photon; ++c) v[FockBasis::index(c, s)] = 1.0;
      cols.push_back(v / std::sqrt(static_cast<double>(one_photon)));
    }
  }
  Eigen::MatrixXcd block(n, cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) block.col(i) = cols[i];
  return block;
}

/// Lowest doublet of H, then the vector in it that maximizes <tau.u>.
inline GroundState ground_state(const FiberHamiltonian& h, const Vec3& u = Vec3::UnitZ(),
                                const SolverOptions& opt = {}) {
  if (!(u.norm() > 0.0)) throw DomainError("ground_state: spin direction must be non-zero");
  const Vec3 uhat = u.normalized();
  eigen::Result er;
  if (opt.dense) {
    er = eigen::dense_lowest(h.matrix(), 3);
  } else {
    eigen::Options eo;
    eo.nev = 2;
    eo.extra = 1;
    eo.tolerance = opt.tolerance;
    eo.max_iterations = opt.max_iterations;
    eo.max_subspace = opt.max_subspace;
    er = eigen::davidson(h.matrix(), start_block(h.basis()), eo);
  }
  GroundState gs;
  gs.requested_direction = uhat;
  gs.norm_estimate = er.norm_estimate;
  gs.residual_history = er.history;
  gs.iterations = er.iterations;
  gs.doublet = er.vectors.leftCols(2);
  gs.splitting = er.values[1] - er.values[0];
  gs.gap = er.values.size() > 2 ? er.values[2] - er.values[0] : std::numeric_limits<double>::infinity();

  const Eigen::Matrix2cd tu = pauli_dot(uhat.cast<cplx>());
  Eigen::Matrix2cd t;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) t(a, b) = gs.doublet.col(a).dot(apply_spin(tu, gs.doublet.col(b)));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(0.5 * (t + t.adjoint()));
  gs.psi = gs.doublet * es.eigenvectors().col(1);
  gs.psi.normalize();
  // Fix the global phase: largest component real positive.
  Eigen::Index imax = 0;
  gs.psi.cwiseAbs().maxCoeff(&imax);
  gs.psi *= std::conj(gs.psi[imax]) / std::abs(gs.psi[imax]);

  const StateVector hpsi = h.matrix() * gs.psi;
  gs.energy = std::real(gs.psi.dot(hpsi));
  gs.residual = (hpsi - gs.energy * gs.psi).norm();
  gs.spin_direction = spin_expectation(gs.psi);
  return gs;
}

/// Squared weight of psi on the occupation-cap edge: configurations from which
/// one application of H can leave the basis (total >= N_cap - 1 or some
/// n_j >= n_max - 1). The truncated pull-through identity is exact when it vanishes.
inline double edge_mass(const FockBasis& basis, const StateVector& psi) {
  double m = 0.0;
  for (std::size_t c = 0; c < basis.photon_dimension(); ++c) {
    bool edge = basis.total_photons(c) >= basis.n_cap() - 1;
    for (auto n : basis.occupation(c))
      if (n >= basis.n_max() - 1) edge = true;
    if (edge) m += std::norm(psi[FockBasis::index(c, 0)]) + std::norm(psi[FockBasis::index(c, 1)]);
  }
  return m;
}

struct PullThroughResult {
  double residual = 0.0;
  double edge_mass = 0.0;
};

/// Residual of the discrete pull-through identity for mode j:
///   [H(p - k_j) + |k_j| - E] a_j psi - sqrt(alpha) g_j (eps_j.(p - X) psi - tau.(i k_j ^ eps_j) psi).
inline PullThroughResult pull_through_residual(const FiberHamiltonian& h, const GroundState& gs, std::size_t j) {
  const FockBasis& basis = h.basis();
  if (j >= basis.num_modes()) throw DomainError("pull_through_residual: mode index out of range");
  const Mode& md = basis.grid()[j];
  const double g = h.fields().coupling[j];
  const double sa = std::sqrt(h.alpha());

  const SparseOperator aj = annihilator(basis, j);
  const StateVector apsi = aj * gs.psi;
  const FiberHamiltonian shifted = h.at(h.p() - md.k);
  StateVector r = shifted.matrix() * apsi + (md.energy() - gs.energy) * apsi;
  if (sa * g != 0.0) {
    StateVector eps_grad = StateVector::Zero(gs.psi.size());
    for (int c = 0; c < 3; ++c)
      if (md.polarization[c] != 0.0) eps_grad += md.polarization[c] * h.velocity(c, gs.psi);
    const Eigen::Vector3cd ikeps = cplx(0.0, 1.0) * md.k.cross(md.polarization).cast<cplx>();
    r -= sa * g * (eps_grad - apply_spin(pauli_dot(ikeps), gs.psi));
  }
  return {r.norm(), edge_mass(basis, gs.psi)};
}

struct PhiDecomposition {
  double phi1 = 0.0;
  double phi2_norm = 0.0;
  /// phi2_norm / (sqrt(w_j) sqrt(alpha) kappa(|k_j|) / |k_j|).
  double bound_ratio = 0.0;
};

/// Splits a_j psi into the coherent part phi1 psi and the remainder.
///
/// phi1 = -sqrt(w_j) v(k_j, lambda_j) with v the cloud kernel at the measured
/// gradient; the sign makes phi1 the leading term of <psi, a_j psi>.
inline PhiDecomposition phi_decomposition(const FiberHamiltonian& h, const GroundState& gs, std::size_t j,
                                          const Vec3& grad_e) {
  const FockBasis& basis = h.basis();
  if (j >= basis.num_modes()) throw DomainError("phi_decomposition: mode index out of range");
  const Mode& md = basis.grid()[j];
  PhiDecomposition out;
  if (h.alpha() == 0.0) return out;
  const double r = md.energy();
  const double kappa = detail::cutoff_profile(r, h.sigma());
  // Kernel value with the mode's own polarization vector.
  const double v = -std::sqrt(h.alpha()) * md.polarization.dot(grad_e) * kappa / std::sqrt(r) / (r - md.k.dot(grad_e));
  out.phi1 = -std::sqrt(md.weight) * v;
  const StateVector apsi = annihilator(basis, j) * gs.psi;
  out.phi2_norm = (apsi - out.phi1 * gs.psi).norm();
  const double scale = std::sqrt(md.weight) * std::sqrt(h.alpha()) * kappa / r;
  out.bound_ratio = scale > 0.0 ? out.phi2_norm / scale : 0.0;
  return out;
}

/// ||a_j psi|| / [sqrt(w_j) sqrt(alpha) kappa(|k_j|) |k_j|^{-3/2} (sqrt(p^2 + c' alpha) + |k_j|)].
inline double apriori_bound_check(const FiberHamiltonian& h, const GroundState& gs, std::size_t j,
                                  double c_prime = 1.0) {
  const FockBasis& basis = h.basis();
  if (j >= basis.num_modes()) throw DomainError("apriori_bound_check: mode index out of range");
  if (h.alpha() == 0.0) return 0.0;
  const Mode& md = basis.grid()[j];
  const double r = md.energy();
  const double kappa = detail::cutoff_profile(r, h.sigma());
  const double bound = std::sqrt(md.weight) * std::sqrt(h.alpha()) * kappa / std::pow(r, 1.5) *
                       (std::sqrt(h.p().squaredNorm() + c_prime * h.alpha()) + r);
  const double num = (annihilator(basis, j) * gs.psi).norm();
  if (bound == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / bound;
}

}  // namespace ircloud
