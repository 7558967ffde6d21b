#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "ircloud/core.hpp"

namespace ircloud::quad {

struct Tolerance {
  double relative = 1e-12;
  unsigned max_depth = 12;
};

/// Adaptive Gauss-Kronrod integration over [a, b], split at the given breakpoints.
///
/// Breakpoints outside (a, b) are ignored. Each panel is refined independently
/// until its error estimate falls below tol.relative times its L1 norm.
template <class F>
double integrate(F&& f, double a, double b, std::span<const double> breaks = {},
                 Tolerance tol = {}) {
  if (!(b > a)) return 0.0;
  std::vector<double> edges{a};
  for (double x : breaks)
    if (x > a && x < b) edges.push_back(x);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double err = 0.0;
    const double part = GK::integrate(f, edges[i], edges[i + 1], tol.max_depth, tol.relative, &err);
    total += part;
  }
  return total;
}

/// Same as integrate(), with the initial panels log-spaced between each pair of
/// consecutive breakpoints so that 1/x-type weights are resolved from the start.
template <class F>
double integrate_log_panels(F&& f, double a, double b, std::span<const double> anchors,
                            int panels_per_decade = 4, Tolerance tol = {}) {
  if (!(b > a)) return 0.0;
  std::vector<double> edges{a, b};
  for (double x : anchors)
    if (x > a && x < b) edges.push_back(x);
  std::sort(edges.begin(), edges.end());
  std::vector<double> all;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double lo = edges[i], hi = edges[i + 1];
    all.push_back(lo);
    if (lo > 0.0) {
      const int n = std::max(1, static_cast<int>(std::ceil(panels_per_decade * std::log10(hi / lo))));
      for (int k = 1; k < n; ++k) all.push_back(lo * std::pow(hi / lo, double(k) / n));
    }
  }
  return integrate(std::forward<F>(f), a, b, all, tol);
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: n must be positive");
  std::vector<double> x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  return {x, w};
}

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
  double slope_stderr = 0.0;
  double max_abs_residual = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InsufficientDataError("fit_line: need at least two paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InsufficientDataError("fit_line: abscissae are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ssr += r * r;
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
  }
  fit.r_squared = syy > 0 ? 1.0 - ssr / syy : 1.0;
  fit.slope_stderr = x.size() > 2 ? std::sqrt(ssr / (n - 2) / sxx) : 0.0;
  return fit;
}

}  // namespace ircloud::quad
