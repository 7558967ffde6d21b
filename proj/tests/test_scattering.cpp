#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ircloud/scattering.hpp"
#include "oracles.hpp"

using namespace ircloud;

TEST(Decomposition, LevelArithmetic) {
  const int m = 20;
  EXPECT_EQ(decomposition_level(std::nextafter(std::ldexp(1.0, m), 0.0), m), 0);
  EXPECT_EQ(decomposition_level(std::ldexp(1.0, m), m), 1);
  EXPECT_EQ(decomposition_level(std::ldexp(1.0, 3 * m), m), 3);
  EXPECT_EQ(decomposition_level(1.0, m), 0);
  EXPECT_THROW(decomposition_level(0.5, m), DomainError);
  EXPECT_THROW(decomposition_level(10.0, 1), DomainError);
}

TEST(Decomposition, CellCountsAndSides) {
  const BumpProfile h;
  const int m = 20;
  const CellDecomposition zero = decompose(std::nextafter(std::ldexp(1.0, m), 0.0), m, h);
  EXPECT_EQ(zero.total_cells, 1u);
  EXPECT_EQ(zero.cells.size(), 1u);
  double side = zero.side;
  for (int n = 1; n <= 3; ++n) {
    const CellDecomposition d = decompose(std::ldexp(1.0, n * m), m, h);
    EXPECT_EQ(d.total_cells, static_cast<std::uint64_t>(std::pow(8, n)));
    EXPECT_EQ(d.per_axis, 1u << n);
    EXPECT_EQ(d.side, side / 2.0);
    side = d.side;
    EXPECT_LE(d.cells.size(), d.total_cells);
  }
  EXPECT_EQ(decompose(std::ldexp(1.0, 3 * m), m, h).cells.size(), 408u);
}

TEST(Decomposition, KeptCellsMeetTheBallProperty) {
  const BumpProfile h;
  const CellDecomposition d = decompose(std::ldexp(1.0, 3 * 20), 20, h);
  oracle::Gen gen(51);
  // Every point of the ball lies in a kept cell.
  for (int i = 0; i < 2000; ++i) {
    const Vec3 p = gen.in_ball(kMaxMomentum * (1 - 1e-12));
    bool found = false;
    for (const auto& c : d.cells)
      if (((p - c.center).cwiseAbs().array() <= 0.5 * d.side + 1e-15).all()) found = true;
    EXPECT_TRUE(found);
  }
}

TEST(Bump, NormalizedAndSupported) {
  const BumpProfile h;
  const double total = oracle::simpson(
      [&](double r) {
        const double v = h(Vec3(0, 0, 0.15) + r * Vec3(1, 0, 0));
        return 4 * kPi * r * r * v * v;
      },
      0.0, 0.1, 4000);
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_EQ(h(Vec3(0, 0, -0.1)), 0.0);
  EXPECT_THROW(BumpProfile(Vec3(0, 0, 0.3), 0.1), DomainError);
}

TEST(Schedule, ValuesAndMonotonicity) {
  EXPECT_EQ(schedule(1.0, 2.0), 0.5);
  EXPECT_NEAR(schedule(10.0, 2.0), 0.01, 1e-17);
  double prev = schedule(2.0, 1.5);
  for (double t = 3.0; t < 1e6; t *= 1.7) {
    const double s = schedule(t, 1.5);
    EXPECT_LT(s, prev);
    prev = s;
  }
  EXPECT_THROW(schedule(10.0, 1.0), DomainError);
}

TEST(EvolveCloud, PreservesModuliAndEqualTimeOverlaps) {
  const ModeGrid grid = build_mode_grid(0.1, 0.05, 3, 14);
  oracle::Gen gen(52);
  std::vector<cplx> v(grid.size()), w(grid.size());
  for (auto& x : v) x = gen.complex_in_disc(0.3);
  for (auto& x : w) x = gen.complex_in_disc(0.3);
  const auto v0 = evolve_cloud(grid, v, 0.0);
  for (std::size_t j = 0; j < v.size(); ++j) EXPECT_EQ(v0[j], v[j]);
  for (double t : {0.5, 17.0, 1e4}) {
    const auto vt = evolve_cloud(grid, v, t), wt = evolve_cloud(grid, w, t);
    double nv = 0, nt = 0;
    cplx o0 = 0, ot = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      EXPECT_NEAR(std::abs(vt[j]), std::abs(v[j]), 1e-15);
      nv += std::norm(v[j]);
      nt += std::norm(vt[j]);
      o0 += std::conj(v[j]) * w[j];
      ot += std::conj(vt[j]) * wt[j];
    }
    EXPECT_NEAR(nt, nv, 1e-14);
    EXPECT_NEAR(std::abs(ot - o0), 0.0, 1e-14);
  }
  KernelParams kp;
  kp.alpha = 1e-3;
  kp.grad_e = Vec3(0.1, 0, 0);
  const CloudKernel base = [&](const Vec3& k, Helicity h) { return cplx(coherent_kernel(kp, k, h)); };
  const CloudKernel ev = evolve_cloud(base, 3.0);
  const Vec3 k(0.2, 0.1, 0.0);
  EXPECT_NEAR(std::abs(ev(k, Helicity::plus)), std::abs(base(k, Helicity::plus)), 1e-16);
}

TEST(AngularDifference, MatchesAxialOracleAndVanishesOnDiagonal) {
  EXPECT_EQ(angular_difference(Vec3(0.1, 0, 0), Vec3(0.1, 0, 0)), 0.0);
  // With W = 0 the integrand reduces to the angular constant.
  for (double v : {0.05, 0.2, 0.3})
    EXPECT_NEAR(angular_difference(Vec3(0, 0, v), Vec3::Zero()), oracle::angular_constant(v), 1e-10);
  EXPECT_NEAR(angular_difference(Vec3(0.1, 0.05, 0), Vec3(0, 0.1, 0.1)),
              angular_difference(Vec3(0, 0.1, 0.1), Vec3(0.1, 0.05, 0)), 1e-14);
}

TEST(OverlapMatrix, SingleCellAndForcedEqualVelocities) {
  const BumpProfile h;
  const CellDecomposition one = decompose(2.0, 20, h);
  ASSERT_EQ(one.cells.size(), 1u);
  const OverlapReport r1 = overlap_matrix(one, 0.01, 2.0);
  EXPECT_EQ(r1.c, 0.0);
  EXPECT_EQ(r1.statistic, 0.0);

  const CellDecomposition same = decompose(std::ldexp(1.0, 60), 20, h, [](const Vec3&) { return Vec3(0.1, 0, 0); });
  const OverlapReport rs = overlap_matrix(same, 0.01, 2.0);
  for (std::size_t i = 0; i < same.cells.size(); ++i)
    for (std::size_t j = 0; j < same.cells.size(); ++j)
      EXPECT_NEAR(std::abs(rs.matrix(i, j)), same.cells[i].amplitude * same.cells[j].amplitude, 1e-12);
}

TEST(OverlapMatrix, HermitianAndBounded) {
  const BumpProfile h;
  const CellDecomposition d = decompose(std::ldexp(1.0, 60), 20, h);
  const OverlapReport r = overlap_matrix(d, 0.01, 2.0);
  EXPECT_EQ((r.matrix - r.matrix.adjoint()).norm(), 0.0);
  for (std::size_t i = 0; i < d.cells.size(); ++i)
    for (std::size_t j = 0; j < d.cells.size(); ++j)
      EXPECT_LE(std::abs(r.matrix(i, j)), std::abs(d.cells[i].amplitude * d.cells[j].amplitude) * (1 + 1e-15));
  EXPECT_NEAR(r.diagonal_sum, 1.0, 0.2);
}
