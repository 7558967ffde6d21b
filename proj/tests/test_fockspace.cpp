#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "ircloud/fockspace.hpp"
#include "oracles.hpp"

using namespace ircloud;

namespace {

ModeGrid toy_grid(std::size_t spatial) {
  std::vector<Mode> modes;
  const Vec3 dirs[] = {Vec3(0.3, 0, 0), Vec3(0, 0.2, 0.1), Vec3(-0.1, 0.15, 0.25), Vec3(0.05, -0.4, 0.1)};
  for (std::size_t i = 0; i < spatial; ++i)
    for (Helicity h : {Helicity::plus, Helicity::minus}) modes.push_back(make_mode(dirs[i], h, 0.01 * (i + 1)));
  return ModeGrid::from_modes(modes);
}

Eigen::MatrixXcd dense(const SparseOperator& m) { return Eigen::MatrixXcd(m); }

}  // namespace

TEST(AngularRule, IntegratesLowOrderPolynomials) {
  for (int n : {6, 14, 26, 8, 18, 32}) {
    const auto rule = angular_rule(n);
    ASSERT_EQ(static_cast<int>(rule.size()), n);
    double w = 0, x2 = 0, x4 = 0, x2y2 = 0, x = 0;
    for (const auto& [d, wt] : rule) {
      w += wt;
      x += wt * d.x();
      x2 += wt * d.x() * d.x();
      x4 += wt * std::pow(d.z(), 4);
      x2y2 += wt * d.x() * d.x() * d.y() * d.y();
      EXPECT_NEAR(d.norm(), 1.0, 1e-15);
    }
    EXPECT_NEAR(w, 4 * kPi, 1e-13);
    EXPECT_NEAR(x, 0.0, 1e-13);
    EXPECT_NEAR(x2, 4 * kPi / 3, 1e-13) << n;
    if (n == 14 || n == 26 || n == 18 || n == 32) {
      EXPECT_NEAR(x4, 4 * kPi / 5, 1e-13) << n;
      EXPECT_NEAR(x2y2, 4 * kPi / 15, 1e-13) << n;
    }
  }
  EXPECT_THROW(angular_rule(7), DomainError);
}

TEST(ModeGrid, CountsAndDeterminism) {
  const ModeGrid one = build_mode_grid(0.1, 0.1, 1, 1);
  EXPECT_EQ(one.size(), 2u);
  const ModeGrid a = build_mode_grid(0.05, 0.05, 3, 6);
  const ModeGrid b = build_mode_grid(0.05, 0.05, 3, 6);
  const ModeGrid c = build_mode_grid(0.05, 0.05, 6, 6);
  EXPECT_EQ(a.size(), 36u);
  EXPECT_EQ(c.size(), 2 * a.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    EXPECT_EQ(a[j].k, b[j].k);
    EXPECT_EQ(a[j].weight, b[j].weight);
    EXPECT_EQ(a[j].polarization, b[j].polarization);
  }
}

TEST(ModeGrid, SpatialWeightsApproximateShellVolume) {
  for (double rho : {0.3, 0.1, 0.01})
    for (int nr : {1, 2, 4, 8}) {
      const ModeGrid g = build_mode_grid(0.1, rho, nr, 6);
      const double exact = 4.0 * kPi / 3.0 * (1.0 - rho * rho * rho);
      const double rel = std::abs(g.spatial_weight_sum() - exact) / exact;
      EXPECT_LE(rel, g.declared_tolerance + 1e-14) << rho << " " << nr;
    }
}

TEST(FockBasis, DimensionMatchesBruteForceCount) {
  oracle::Gen gen(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int nm = gen.integer(1, 4), nc = gen.integer(0, 5);
    const std::size_t spatial = static_cast<std::size_t>(gen.integer(1, 3));
    const FockBasis basis(toy_grid(spatial), nm, nc);
    const auto ref = oracle::configurations(2 * spatial, nm, nc);
    EXPECT_EQ(basis.photon_dimension(), ref.size());
    EXPECT_EQ(FockBasis::count_configurations(2 * spatial, nm, nc), static_cast<double>(ref.size()));
    EXPECT_EQ(basis.dimension(), 2 * ref.size());
  }
}

TEST(FockBasis, OrderAndLookup) {
  const FockBasis basis(toy_grid(2), 2, 3);
  EXPECT_EQ(basis.total_photons(0), 0);
  for (std::size_t c = 1; c < basis.photon_dimension(); ++c) {
    const auto prev = basis.occupation(c - 1), cur = basis.occupation(c);
    const bool ordered =
        basis.total_photons(c - 1) < basis.total_photons(c) ||
        (basis.total_photons(c - 1) == basis.total_photons(c) &&
         std::lexicographical_compare(prev.begin(), prev.end(), cur.begin(), cur.end()));
    EXPECT_TRUE(ordered) << c;
    EXPECT_EQ(basis.find(cur), std::optional<std::size_t>(c));
  }
  EXPECT_THROW(FockBasis(toy_grid(4), 4, 8, 100), ResourceError);
}

TEST(Ladder, MatrixElements) {
  const FockBasis basis(toy_grid(1), 3, 3);
  const StateVector vac = vacuum_state(basis);
  const auto l = ladder(basis, 0);
  EXPECT_EQ((l.lower * vac).norm(), 0.0);
  const StateVector one = l.raise * vac;
  EXPECT_NEAR(one.norm(), 1.0, 1e-15);
  const StateVector two = l.raise * one;
  EXPECT_NEAR(two.norm(), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::abs(one.dot(l.lower * two)), 2.0, 1e-15);
  EXPECT_EQ((dense(l.raise) - dense(l.lower).adjoint()).norm(), 0.0);
}

TEST(Ccr, ExactOnSafeSubspaceAgainstDenseCommutator) {
  const FockBasis basis(toy_grid(2), 3, 3);
  const std::size_t m = basis.num_modes();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const CcrDefect d = ccr_defect(basis, i, j);
      EXPECT_EQ(d.safe, 0.0);
      const Eigen::MatrixXcd ai = dense(annihilator(basis, i)), aj = dense(annihilator(basis, j));
      Eigen::MatrixXcd comm = ai * aj.adjoint() - aj.adjoint() * ai;
      if (i == j) comm -= Eigen::MatrixXcd::Identity(comm.rows(), comm.cols());
      double safe = 0.0, full = 0.0;
      for (Eigen::Index col = 0; col < comm.cols(); ++col) {
        const double colmax = comm.col(col).cwiseAbs().maxCoeff();
        full = std::max(full, colmax);
        if (basis.is_safe(FockBasis::configuration_of(col))) safe = std::max(safe, colmax);
      }
      EXPECT_LE(safe, 1e-15);
      EXPECT_NEAR(d.full, full, 1e-12);
      EXPECT_EQ(annihilator_commutator_defect(basis, i, j), 0.0);
    }
}

TEST(Coherent, VacuumMeanAndOverlap) {
  const ModeGrid one = ModeGrid::from_modes({make_mode(Vec3(0.2, 0, 0), Helicity::plus, 0.01)});
  const FockBasis basis(one, 12, 12);
  std::vector<cplx> zero{0.0};
  EXPECT_EQ((coherent_state(basis, zero).vector - vacuum_state(basis)).norm(), 0.0);
  std::vector<cplx> f{0.5};
  const CoherentState cs = coherent_state(basis, f);
  EXPECT_NEAR(expectation(number_operator(basis), cs.vector), 0.25, 1e-10);
  EXPECT_NEAR(std::abs(vacuum_state(basis).dot(cs.vector)), std::exp(-0.125), 1e-10);
}

TEST(Coherent, FockOverlapMatchesClosedFormProperty) {
  const ModeGrid one = ModeGrid::from_modes({make_mode(Vec3(0.2, 0, 0), Helicity::plus, 0.01)});
  const FockBasis basis(one, 12, 12);
  oracle::Gen gen(22);
  for (int i = 0; i < 100; ++i) {
    std::vector<cplx> f{gen.complex_in_disc(0.5)}, g{gen.complex_in_disc(0.5)};
    const cplx fock = coherent_state(basis, f).vector.dot(coherent_state(basis, g).vector);
    const cplx closed = std::exp(-0.5 * std::norm(f[0]) - 0.5 * std::norm(g[0]) + std::conj(f[0]) * g[0]);
    EXPECT_LE(std::abs(fock - closed), 1e-8);
    EXPECT_LE(std::abs(coherent_overlap_analytic(f, g) - closed), 1e-15);
    EXPECT_NEAR(std::abs(closed), std::exp(-0.5 * std::norm(f[0] - g[0])), 1e-15);
  }
  std::vector<cplx> f{0.3}, z{0.0};
  EXPECT_NEAR(std::abs(coherent_overlap_analytic(f, f)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(coherent_overlap_analytic(z, f)), std::exp(-0.045), 1e-15);
}

TEST(Coherent, MultiModeOverlapWithinTruncation) {
  const FockBasis basis(ModeGrid::from_modes({make_mode(Vec3(0.2, 0, 0), Helicity::plus, 0.01),
                                              make_mode(Vec3(0.2, 0, 0), Helicity::minus, 0.01),
                                              make_mode(Vec3(0, 0.3, 0), Helicity::plus, 0.01),
                                              make_mode(Vec3(0, 0.3, 0), Helicity::minus, 0.01)}),
                        4, 8);
  oracle::Gen gen(23);
  CoherentOptions opt;
  opt.mode_tolerance = 1e-3;
  opt.max_mass_defect = 1e-3;
  for (int i = 0; i < 20; ++i) {
    std::vector<cplx> f(4), g(4);
    for (auto& x : f) x = gen.complex_in_disc(0.15);
    for (auto& x : g) x = gen.complex_in_disc(0.15);
    const CoherentState a = coherent_state(basis, f, opt), b = coherent_state(basis, g, opt);
    const cplx fock = a.vector.dot(b.vector);
    EXPECT_LE(std::abs(fock - coherent_overlap_analytic(f, g)), 1e-8 + 2.0 * (a.truncation_defect + b.truncation_defect));
  }
}

TEST(Coherent, RejectsAmplitudesBeyondTruncation) {
  const ModeGrid one = ModeGrid::from_modes({make_mode(Vec3(0.2, 0, 0), Helicity::plus, 0.01)});
  const FockBasis basis(one, 3, 3);
  std::vector<cplx> f{1.5};
  EXPECT_THROW(coherent_state(basis, f), TruncationError);
}

TEST(NumberOperator, LocalCountsOnCoherentStates) {
  const ModeGrid g = ModeGrid::from_modes({make_mode(Vec3(0.05, 0, 0), Helicity::plus, 0.01),
                                           make_mode(Vec3(0.3, 0, 0), Helicity::plus, 0.01),
                                           make_mode(Vec3(0, 0.7, 0), Helicity::minus, 0.01)});
  const FockBasis basis(g, 8, 10);
  std::vector<cplx> f{cplx(0.1, 0.05), cplx(-0.2, 0.0), cplx(0.0, 0.15)};
  const StateVector psi = coherent_state(basis, f).vector;
  EXPECT_EQ(expectation(number_operator(basis), vacuum_state(basis)), 0.0);
  EXPECT_NEAR(expectation(number_operator(basis, 0.1), psi), std::norm(f[1]) + std::norm(f[2]), 1e-10);
  EXPECT_NEAR(expectation(number_operator(basis), psi), std::norm(f[0]) + std::norm(f[1]) + std::norm(f[2]), 1e-10);
  EXPECT_EQ(number_operator(basis, 1.5).nonZeros(), 0);
}
