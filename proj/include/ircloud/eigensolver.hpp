#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ircloud/core.hpp"

/// Extremal eigenpairs of sparse Hermitian operators and shifted linear solves.
namespace ircloud::eigen {

struct Options {
  /// Number of eigenpairs that must meet the tolerance.
  int nev = 2;
  /// Additional Ritz pairs tracked (the first of them estimates the gap).
  int extra = 1;
  /// Relative residual tolerance, scaled by the 1-norm of the operator.
  double tolerance = 1e-8;
  int max_iterations = 10000;
  int max_subspace = 48;
};

struct Result {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;
  /// Largest relative residual over the wanted pairs, per iteration.
  std::vector<double> history;
  std::vector<double> residuals;
  int iterations = 0;
  double norm_estimate = 0.0;
};

/// Max absolute column sum.
inline double one_norm(const SparseOperator& h) {
  double m = 0.0;
  for (std::ptrdiff_t c = 0; c < h.outerSize(); ++c) {
    double s = 0.0;
    for (SparseOperator::InnerIterator it(h, c); it; ++it) s += std::abs(it.value());
    m = std::max(m, s);
  }
  return m;
}

namespace detail {

/// Orthogonalizes v against the first `cols` columns of basis (two passes); returns the remaining norm.
inline double orthogonalize(const Eigen::MatrixXcd& basis, Eigen::Index cols, Eigen::VectorXcd& v) {
  for (int pass = 0; pass < 2; ++pass)
    if (cols > 0) v -= basis.leftCols(cols) * (basis.leftCols(cols).adjoint() * v);
  return v.norm();
}

}  // namespace detail

/// Lowest eigenpairs by block Davidson with a diagonal preconditioner.
///
/// Converged pairs are soft-locked (no further corrections); the search space
/// restarts from the current Ritz vectors when it exceeds max_subspace. The
/// start block is used as given (after orthonormalization), so runs are
/// deterministic. Throws SolverError with the residual history on failure.
inline Result davidson(const SparseOperator& h, const Eigen::MatrixXcd& start, const Options& opt = {}) {
  const Eigen::Index n = h.rows();
  if (h.cols() != n) throw DomainError("davidson: operator must be square");
  const int track = std::min<int>(opt.nev + opt.extra, static_cast<int>(n));
  if (opt.nev < 1 || opt.nev > n) throw DomainError("davidson: invalid nev");
  const int max_sub = std::max(opt.max_subspace, 3 * track);

  Result res;
  res.norm_estimate = one_norm(h);
  const double scale = res.norm_estimate > 0.0 ? res.norm_estimate : 1.0;
  const Eigen::VectorXd diag = h.diagonal().real();

  Eigen::MatrixXcd v(n, max_sub + track);
  Eigen::MatrixXcd w(n, max_sub + track);
  Eigen::Index m = 0;
  auto append = [&](Eigen::VectorXcd x) {
    const double before = x.norm();
    if (before == 0.0) return false;
    const double after = detail::orthogonalize(v, m, x);
    if (after <= 1e-10 * before) return false;
    v.col(m) = x / after;
    w.col(m) = h * v.col(m);
    ++m;
    return true;
  };
  for (Eigen::Index c = 0; c < start.cols() && m < max_sub; ++c) append(start.col(c));
  for (Eigen::Index c = 0; m < track && c < n; ++c) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
    e[c] = 1.0;
    append(e);
  }

  for (int it = 1; it <= opt.max_iterations; ++it) {
    res.iterations = it;
    Eigen::MatrixXcd g = v.leftCols(m).adjoint() * w.leftCols(m);
    g = 0.5 * (g + g.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> small(g);
    const int k = std::min<int>(track, static_cast<int>(m));
    const Eigen::MatrixXcd y = small.eigenvectors().leftCols(k);
    const Eigen::VectorXd theta = small.eigenvalues().head(k);
    Eigen::MatrixXcd x = v.leftCols(m) * y;
    Eigen::MatrixXcd hx = w.leftCols(m) * y;
    Eigen::MatrixXcd r = hx - x * theta.asDiagonal();

    std::vector<double> rel(k);
    double worst = 0.0;
    for (int i = 0; i < k; ++i) {
      rel[i] = r.col(i).norm() / scale;
      if (i < opt.nev) worst = std::max(worst, rel[i]);
    }
    res.history.push_back(worst);
    if (worst <= opt.tolerance || m == n) {
      res.values = theta;
      res.vectors = x;
      res.residuals = rel;
      return res;
    }

    if (m + k > max_sub) {
      // Restart on the tracked Ritz vectors plus the next few.
      const int keep = std::min<int>(static_cast<int>(m), track + 2);
      const Eigen::MatrixXcd yk = small.eigenvectors().leftCols(keep);
      Eigen::MatrixXcd nv = v.leftCols(m) * yk;
      Eigen::MatrixXcd nw = w.leftCols(m) * yk;
      // Re-orthonormalize to remove accumulated drift.
      Eigen::HouseholderQR<Eigen::MatrixXcd> qr(nv);
      Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, keep);
      Eigen::MatrixXcd rr = q.adjoint() * nv;
      v.leftCols(keep) = q;
      w.leftCols(keep) = nw * rr.triangularView<Eigen::Upper>().solve(Eigen::MatrixXcd::Identity(keep, keep));
      m = keep;
      continue;
    }

    int added = 0;
    for (int i = 0; i < k; ++i) {
      if (rel[i] <= opt.tolerance) continue;
      Eigen::VectorXcd t(n);
      for (Eigen::Index q = 0; q < n; ++q) {
        double d = diag[q] - theta[i];
        if (std::abs(d) < 1e-8 * scale) d = d < 0 ? -1e-8 * scale : 1e-8 * scale;
        t[q] = r(q, i) / d;
      }
      if (append(t)) ++added;
    }
    if (added == 0) {
      // Stagnation: fall back to the raw residuals.
      for (int i = 0; i < k; ++i)
        if (rel[i] > opt.tolerance && append(r.col(i))) ++added;
    }
    if (added == 0) break;
  }
  throw SolverError("davidson: no convergence after " + std::to_string(res.iterations) +
                        " iterations (residual " + std::to_string(res.history.empty() ? 0.0 : res.history.back()) + ")",
                    res.history);
}

/// Full dense diagonalization; cross-check for small problems.
inline Result dense_lowest(const SparseOperator& h, int count) {
  const Eigen::MatrixXcd dense = Eigen::MatrixXcd(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (dense + dense.adjoint()));
  Result res;
  const int k = std::min<int>(count, static_cast<int>(h.rows()));
  res.values = es.eigenvalues().head(k);
  res.vectors = es.eigenvectors().leftCols(k);
  res.norm_estimate = one_norm(h);
  res.iterations = 1;
  res.residuals.assign(k, 0.0);
  return res;
}

struct SolveResult {
  Eigen::VectorXcd x;
  double relative_residual = 0.0;
  int iterations = 0;
};

/// Solves (H - shift) x = b on the orthogonal complement of span(deflate) by
/// preconditioned conjugate gradients. b is projected first; H - shift must be
/// positive on the complement.
inline SolveResult projected_cg(const SparseOperator& h, double shift, const Eigen::MatrixXcd& deflate,
                                const Eigen::VectorXcd& rhs, double tolerance = 1e-12, int max_iterations = 20000) {
  const Eigen::Index n = h.rows();
  auto project = [&](Eigen::VectorXcd& y) {
    for (int pass = 0; pass < 2; ++pass) y -= deflate * (deflate.adjoint() * y);
  };
  auto apply = [&](const Eigen::VectorXcd& y) {
    Eigen::VectorXcd out = h * y - shift * y;
    project(out);
    return out;
  };
  Eigen::VectorXd pre = (h.diagonal().real().array() - shift).matrix();
  const double floor = std::max(1e-6, 1e-3 * pre.cwiseAbs().maxCoeff());
  for (Eigen::Index q = 0; q < n; ++q) pre[q] = std::max(pre[q], floor);

  Eigen::VectorXcd b = rhs;
  project(b);
  SolveResult out;
  out.x = Eigen::VectorXcd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) return out;
  Eigen::VectorXcd r = b;
  Eigen::VectorXcd z = (r.array() / pre.array()).matrix();
  project(z);
  Eigen::VectorXcd p = z;
  cplx rz = r.dot(z);
  for (int it = 1; it <= max_iterations; ++it) {
    out.iterations = it;
    const Eigen::VectorXcd ap = apply(p);
    const cplx alpha = rz / p.dot(ap);
    out.x += alpha * p;
    r -= alpha * ap;
    out.relative_residual = r.norm() / bnorm;
    if (out.relative_residual <= tolerance) return out;
    z = (r.array() / pre.array()).matrix();
    project(z);
    const cplx rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  std::vector<double> hist{out.relative_residual};
  throw SolverError("projected_cg: no convergence", hist);
}

}  // namespace ircloud::eigen
