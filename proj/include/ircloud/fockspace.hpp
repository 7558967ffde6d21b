#pragma once

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ircloud/core.hpp"
#include "ircloud/kernels.hpp"
#include "ircloud/quadrature.hpp"

/// Finite-mode photon grids and the occupation-truncated Fock space C^2 (x) F.
namespace ircloud {

struct Mode {
  Vec3 k;
  Helicity helicity = Helicity::plus;
  /// Quadrature weight of the spatial node (each polarization carries the full weight).
  double weight = 0.0;
  Vec3 polarization;
  int shell = 0;
  int direction = 0;

  double energy() const { return k.norm(); }
};

/// Builds a mode at momentum k with the polarization vector fixed by `conv`.
inline Mode make_mode(const Vec3& k, Helicity h, double weight, const PolarizationConvention& conv = {}) {
  if (!(weight > 0.0)) throw DomainError("make_mode: weight must be positive");
  Mode m;
  m.k = k;
  m.helicity = h;
  m.weight = weight;
  m.polarization = polarization_pair(k, conv)[h];
  return m;
}

struct GridSpec {
  PolarizationConvention polarization;
};

struct ModeGrid {
  std::vector<Mode> modes;
  double ir_floor = 0.0;
  double uv_ceiling = 0.0;
  int n_radial = 0;
  int n_angular = 0;
  /// Relative accuracy of the radial rule for the shell volume.
  double declared_tolerance = 0.0;

  std::size_t size() const { return modes.size(); }
  const Mode& operator[](std::size_t j) const { return modes[j]; }

  /// Sum of spatial weights (one per spatial node), which approximates the
  /// volume of the shell ir_floor <= |k| <= 1.
  double spatial_weight_sum() const {
    double s = 0.0;
    for (const auto& m : modes)
      if (m.helicity == Helicity::plus) s += m.weight;
    return s;
  }

  /// Wraps an explicit list of modes (used for toy problems).
  static ModeGrid from_modes(std::vector<Mode> list) {
    if (list.empty()) throw DomainError("ModeGrid: empty mode list");
    ModeGrid g;
    g.ir_floor = std::numeric_limits<double>::infinity();
    for (const auto& m : list) {
      if (!(m.k.norm() > 0.0) || !(m.weight > 0.0)) throw DomainError("ModeGrid: invalid mode");
      g.ir_floor = std::min(g.ir_floor, m.k.norm());
      g.uv_ceiling = std::max(g.uv_ceiling, m.k.norm());
    }
    g.modes = std::move(list);
    g.n_radial = 0;
    g.n_angular = 0;
    return g;
  }
};

/// Directions and weights (summing to 4 pi) of the supported rules on S^2.
///
/// 1: the single direction +x; 6: octahedron vertices; 14 and 26: Lebedev
/// rules of degree 5 and 7; 2 m^2 (m >= 2): m-point Gauss-Legendre in cos(theta)
/// times 2m equally spaced azimuths.
inline std::vector<std::pair<Vec3, double>> angular_rule(int n) {
  std::vector<std::pair<Vec3, double>> rule;
  const double four_pi = 4.0 * kPi;
  auto add_octahedron = [&](double w) {
    for (int a = 0; a < 3; ++a)
      for (int s : {1, -1}) {
        Vec3 v = Vec3::Zero();
        v[a] = s;
        rule.emplace_back(v, w);
      }
  };
  auto add_cube = [&](double w) {
    const double c = 1.0 / std::sqrt(3.0);
    for (int sx : {1, -1})
      for (int sy : {1, -1})
        for (int sz : {1, -1}) rule.emplace_back(Vec3(sx * c, sy * c, sz * c), w);
  };
  auto add_edges = [&](double w) {
    const double c = 1.0 / std::sqrt(2.0);
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b)
        for (int sa : {1, -1})
          for (int sb : {1, -1}) {
            Vec3 v = Vec3::Zero();
            v[a] = sa * c;
            v[b] = sb * c;
            rule.emplace_back(v, w);
          }
  };
  if (n == 1) {
    rule.emplace_back(Vec3::UnitX(), four_pi);
  } else if (n == 6) {
    add_octahedron(four_pi / 6.0);
  } else if (n == 14) {
    add_octahedron(four_pi / 15.0);
    add_cube(four_pi * 3.0 / 40.0);
  } else if (n == 26) {
    add_octahedron(four_pi / 21.0);
    add_edges(four_pi * 4.0 / 105.0);
    add_cube(four_pi * 9.0 / 280.0);
  } else {
    const int m = static_cast<int>(std::lround(std::sqrt(n / 2.0)));
    if (m < 2 || 2 * m * m != n)
      throw DomainError("angular_rule: unsupported node count " + std::to_string(n) +
                        " (use 1, 6, 14, 26 or 2 m^2 with m >= 2)");
    const auto [x, w] = quad::gauss_legendre(m);
    for (int i = 0; i < m; ++i) {
      const double st = std::sqrt(1.0 - x[i] * x[i]);
      for (int l = 0; l < 2 * m; ++l) {
        const double phi = kPi * l / m;
        rule.emplace_back(Vec3(st * std::cos(phi), st * std::sin(phi), x[i]), w[i] * kPi / m);
      }
    }
  }
  return rule;
}

/// Log-spaced radial midpoints on [rho_floor, 1] times a fixed angular rule,
/// two polarizations per spatial node.
///
/// Shell i sits at r_i = rho exp((i + 1/2) D), D = ln(1/rho) / n_radial, with
/// weight r_i^3 D times the angular weight. `sigma` only has to be a valid
/// infrared parameter; the floor may lie on either side of it.
inline ModeGrid build_mode_grid(double sigma, double rho_floor, int n_radial, int n_angular,
                                const GridSpec& spec = {}) {
  detail::check_sigma(sigma, false);
  if (n_radial < 1 || n_angular < 1) throw DomainError("build_mode_grid: node counts must be >= 1");
  if (!(rho_floor > 0.0)) throw DomainError("build_mode_grid: rho_floor must be positive");
  if (!(rho_floor < 1.0)) throw DomainError("build_mode_grid: empty grid (rho_floor >= 1)");
  const auto rule = angular_rule(n_angular);
  const double delta = std::log(1.0 / rho_floor) / n_radial;

  ModeGrid g;
  g.n_radial = n_radial;
  g.n_angular = n_angular;
  const double x = 1.5 * delta;
  g.declared_tolerance = 1.0 - x / std::sinh(x);
  g.ir_floor = std::numeric_limits<double>::infinity();
  g.modes.reserve(2 * n_radial * rule.size());
  for (int i = 0; i < n_radial; ++i) {
    const double r = rho_floor * std::exp((i + 0.5) * delta);
    for (std::size_t d = 0; d < rule.size(); ++d) {
      const Vec3 k = r * rule[d].first;
      const double w = r * r * r * delta * rule[d].second;
      for (Helicity h : {Helicity::plus, Helicity::minus}) {
        Mode m = make_mode(k, h, w, spec.polarization);
        m.shell = i;
        m.direction = static_cast<int>(d);
        g.modes.push_back(m);
      }
    }
    g.ir_floor = std::min(g.ir_floor, r);
    g.uv_ceiling = std::max(g.uv_ceiling, r);
  }
  return g;
}

inline constexpr std::size_t kDefaultMaxDimension = 400000;

/// Occupation-number basis {(n_1..n_M; s) : n_j <= n_max, sum n_j <= N_cap}, s in {up, down}.
///
/// Photon configurations are ordered by total photon number, then
/// lexicographically by occupation tuple; the full index is 2 * configuration + spin.
class FockBasis {
 public:
  static constexpr int spin_dim = 2;

  FockBasis(ModeGrid grid, int n_max, int n_cap, std::size_t max_dimension = kDefaultMaxDimension)
      : grid_(std::move(grid)), n_max_(n_max), n_cap_(n_cap) {
    if (grid_.modes.empty()) throw DomainError("FockBasis: empty mode grid");
    if (n_max < 0 || n_cap < 0) throw DomainError("FockBasis: negative truncation");
    if (n_max > 255) throw DomainError("FockBasis: n_max above 255");
    const double count = count_configurations(grid_.size(), n_max, n_cap);
    if (spin_dim * count > static_cast<double>(max_dimension))
      throw ResourceError("FockBasis: dimension " + std::to_string(spin_dim * count) +
                          " exceeds the cap " + std::to_string(max_dimension));
    enumerate();
  }

  const ModeGrid& grid() const { return grid_; }
  int n_max() const { return n_max_; }
  int n_cap() const { return n_cap_; }
  std::size_t num_modes() const { return grid_.size(); }
  std::size_t photon_dimension() const { return totals_.size(); }
  std::size_t dimension() const { return spin_dim * photon_dimension(); }

  static std::size_t index(std::size_t configuration, int spin) { return spin_dim * configuration + spin; }
  static std::size_t configuration_of(std::size_t index) { return index / spin_dim; }
  static int spin_of(std::size_t index) { return static_cast<int>(index % spin_dim); }
  std::size_t vacuum(int spin) const { return index(0, spin); }

  std::span<const std::uint8_t> occupation(std::size_t configuration) const {
    return {occ_.data() + configuration * num_modes(), num_modes()};
  }
  int total_photons(std::size_t configuration) const { return totals_[configuration]; }

  std::optional<std::size_t> find(std::span<const std::uint8_t> occupation) const {
    const auto it = lookup_.find(key(occupation));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  /// Configuration after n_j -> n_j + delta, if it stays in the basis.
  std::optional<std::size_t> shifted(std::size_t configuration, std::size_t j, int delta) const {
    const int n = occ_[configuration * num_modes() + j] + delta;
    if (n < 0 || n > n_max_ || totals_[configuration] + delta > n_cap_) return std::nullopt;
    scratch_.assign(occupation(configuration).begin(), occupation(configuration).end());
    scratch_[j] = static_cast<std::uint8_t>(n);
    return find(scratch_);
  }

  /// All occupations <= n_max - 1 and total < N_cap: every single creation stays inside.
  bool is_safe(std::size_t configuration) const {
    if (totals_[configuration] >= n_cap_) return false;
    for (auto n : occupation(configuration))
      if (n >= n_max_) return false;
    return true;
  }

  static double count_configurations(std::size_t modes, int n_max, int n_cap) {
    std::vector<double> ways(n_cap + 1, 0.0);
    ways[0] = 1.0;
    for (std::size_t m = 0; m < modes; ++m) {
      std::vector<double> next(n_cap + 1, 0.0);
      for (int s = 0; s <= n_cap; ++s)
        for (int n = 0; n <= n_max && s + n <= n_cap; ++n) next[s + n] += ways[s];
      ways = std::move(next);
    }
    double total = 0.0;
    for (double w : ways) total += w;
    return total;
  }

 private:
  static std::string key(std::span<const std::uint8_t> occupation) {
    return std::string(reinterpret_cast<const char*>(occupation.data()), occupation.size());
  }

  void enumerate() {
    const std::size_t m = num_modes();
    std::vector<std::uint8_t> current(m, 0);
    for (int total = 0; total <= n_cap_; ++total) {
      if (static_cast<double>(total) > static_cast<double>(n_max_) * m) break;
      fill(current, 0, total, total);
    }
    lookup_.reserve(totals_.size());
    for (std::size_t c = 0; c < totals_.size(); ++c) lookup_.emplace(key(occupation(c)), c);
  }

  void fill(std::vector<std::uint8_t>& current, std::size_t j, int remaining, int total) {
    const std::size_t m = num_modes();
    if (j + 1 == m) {
      if (remaining > n_max_) return;
      current[j] = static_cast<std::uint8_t>(remaining);
      occ_.insert(occ_.end(), current.begin(), current.end());
      totals_.push_back(total);
      return;
    }
    const double capacity_after = static_cast<double>(n_max_) * (m - j - 1);
    for (int n = 0; n <= std::min(n_max_, remaining); ++n) {
      if (remaining - n > capacity_after) continue;
      current[j] = static_cast<std::uint8_t>(n);
      fill(current, j + 1, remaining - n, total);
    }
    current[j] = 0;
  }

  ModeGrid grid_;
  int n_max_;
  int n_cap_;
  std::vector<std::uint8_t> occ_;
  std::vector<int> totals_;
  std::unordered_map<std::string, std::size_t> lookup_;
  mutable std::vector<std::uint8_t> scratch_;
};

inline StateVector vacuum_state(const FockBasis& basis, int spin = 0) {
  StateVector v = StateVector::Zero(basis.dimension());
  v[basis.vacuum(spin)] = 1.0;
  return v;
}

/// Annihilator a_j on C^2 (x) F with sqrt(n_j) matrix elements.
inline SparseOperator annihilator(const FockBasis& basis, std::size_t j) {
  if (j >= basis.num_modes()) throw DomainError("annihilator: mode index out of range");
  std::vector<Eigen::Triplet<cplx, std::ptrdiff_t>> trip;
  for (std::size_t c = 0; c < basis.photon_dimension(); ++c) {
    const int n = basis.occupation(c)[j];
    if (n == 0) continue;
    const auto target = basis.shifted(c, j, -1);
    const double amp = std::sqrt(static_cast<double>(n));
    for (int s = 0; s < FockBasis::spin_dim; ++s)
      trip.emplace_back(FockBasis::index(*target, s), FockBasis::index(c, s), amp);
  }
  SparseOperator a(basis.dimension(), basis.dimension());
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

struct Ladder {
  SparseOperator lower;
  SparseOperator raise;
};

/// (a_j, a_j^dagger), the latter the exact conjugate transpose of the former.
inline Ladder ladder(const FockBasis& basis, std::size_t j) {
  Ladder l;
  l.lower = annihilator(basis, j);
  l.raise = l.lower.adjoint();
  return l;
}

struct CcrDefect {
  /// Max deviation of [a_i, a_j^dagger] - delta_ij on the safe subspace.
  double safe = 0.0;
  /// Same over the whole truncated space (nonzero at the occupation cap).
  double full = 0.0;
};

/// Defect of [a_i, a_j^dagger] = delta_ij for the truncated matrices.
///
/// Every matrix element is sqrt of an integer product, so the comparison is
/// done on the integers and the safe-subspace result is exactly 0.
inline CcrDefect ccr_defect(const FockBasis& basis, std::size_t i, std::size_t j) {
  if (i >= basis.num_modes() || j >= basis.num_modes()) throw DomainError("ccr_defect: mode index out of range");
  CcrDefect d;
  for (std::size_t c = 0; c < basis.photon_dimension(); ++c) {
    const auto occ = basis.occupation(c);
    double defect = 0.0;
    if (i == j) {
      const long n = occ[i];
      // a a^dagger |n> = (n+1)|n> if n+1 is kept; a^dagger a |n> = n |n>.
      const long aad = basis.shifted(c, i, +1) ? n + 1 : 0;
      defect = static_cast<double>(std::labs(aad - n - 1));
    } else {
      const long ni = occ[i], nj = occ[j];
      // a_i a_j^dagger |s>: needs s + e_j in basis; a_j^dagger a_i |s>: needs s - e_i + e_j in basis.
      const bool up_first = ni > 0 && basis.shifted(c, j, +1).has_value();
      bool down_first = false;
      if (ni > 0) {
        const auto lowered = basis.shifted(c, i, -1);
        down_first = basis.shifted(*lowered, j, +1).has_value();
      }
      const long product = ni * (nj + 1);
      const long lhs = up_first ? product : 0;
      const long rhs = down_first ? product : 0;
      if (lhs != rhs) defect = std::sqrt(static_cast<double>(product));
    }
    d.full = std::max(d.full, defect);
    if (basis.is_safe(c)) d.safe = std::max(d.safe, defect);
  }
  return d;
}

/// Max entry of [a_i, a_j] over the full truncated space (annihilators never leave the basis).
inline double annihilator_commutator_defect(const FockBasis& basis, std::size_t i, std::size_t j) {
  const SparseOperator ai = annihilator(basis, i), aj = annihilator(basis, j);
  const SparseOperator comm = ai * aj - aj * ai;
  double m = 0.0;
  for (std::ptrdiff_t col = 0; col < comm.outerSize(); ++col)
    for (SparseOperator::InnerIterator it(comm, col); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

struct CoherentOptions {
  /// Bound on max_j |f_j|^{n_max+1} / sqrt((n_max+1)!).
  double mode_tolerance = 1e-6;
  /// Bound on the norm lost to the joint truncation before renormalization.
  double max_mass_defect = 1e-6;
  int spin = 0;
};

struct CoherentState {
  StateVector vector;
  /// 1 - (squared norm kept by the truncated basis).
  double truncation_defect = 0.0;
};

/// Product coherent vector with per-mode coefficients exp(-|f|^2/2) f^n / sqrt(n!),
/// renormalized after truncation.
inline CoherentState coherent_state(const FockBasis& basis, std::span<const cplx> amplitudes,
                                    const CoherentOptions& opt = {}) {
  if (amplitudes.size() != basis.num_modes())
    throw DomainError("coherent_state: one amplitude per mode required");
  if (opt.spin < 0 || opt.spin >= FockBasis::spin_dim) throw DomainError("coherent_state: bad spin index");
  const int nm = basis.n_max();
  double worst = 0.0;
  for (const cplx& f : amplitudes)
    worst = std::max(worst, std::pow(std::abs(f), nm + 1) / std::sqrt(std::tgamma(nm + 2.0)));
  if (worst > opt.mode_tolerance)
    throw TruncationError("coherent_state: amplitude too large for n_max = " + std::to_string(nm), worst);

  // Per-mode factor table f^n / sqrt(n!) times the global Gaussian weight.
  const std::size_t m = basis.num_modes();
  std::vector<cplx> table(m * (nm + 1));
  double norm_sq = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    norm_sq += std::norm(amplitudes[j]);
    cplx t = 1.0;
    for (int n = 0; n <= nm; ++n) {
      table[j * (nm + 1) + n] = t;
      t *= amplitudes[j] / std::sqrt(static_cast<double>(n + 1));
    }
  }
  const double gauss = std::exp(-0.5 * norm_sq);
  CoherentState out;
  out.vector = StateVector::Zero(basis.dimension());
  for (std::size_t c = 0; c < basis.photon_dimension(); ++c) {
    const auto occ = basis.occupation(c);
    cplx coef = gauss;
    for (std::size_t j = 0; j < m; ++j)
      if (occ[j]) coef *= table[j * (nm + 1) + occ[j]];
    out.vector[FockBasis::index(c, opt.spin)] = coef;
  }
  const double kept = out.vector.squaredNorm();
  out.truncation_defect = std::max(0.0, 1.0 - kept);
  if (out.truncation_defect > opt.max_mass_defect)
    throw TruncationError("coherent_state: truncation loses too much norm", out.truncation_defect);
  out.vector /= std::sqrt(kept);
  return out;
}

/// <coh(f), coh(g)> = exp(-|f|^2/2 - |g|^2/2 + <f, g>).
inline cplx coherent_overlap_analytic(std::span<const cplx> f, std::span<const cplx> g) {
  if (f.size() != g.size()) throw DomainError("coherent_overlap_analytic: size mismatch");
  double nf = 0.0, ng = 0.0;
  cplx fg = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    nf += std::norm(f[j]);
    ng += std::norm(g[j]);
    fg += std::conj(f[j]) * g[j];
  }
  return std::exp(-0.5 * nf - 0.5 * ng + fg);
}

/// N_rho = sum over modes with |k_j| >= rho of a_j^dagger a_j (diagonal).
inline SparseOperator number_operator(const FockBasis& basis, double rho = 0.0) {
  if (!(rho >= 0.0)) throw DomainError("number_operator: rho must be non-negative");
  std::vector<char> counted(basis.num_modes());
  for (std::size_t j = 0; j < basis.num_modes(); ++j) counted[j] = basis.grid()[j].energy() >= rho;
  std::vector<Eigen::Triplet<cplx, std::ptrdiff_t>> trip;
  for (std::size_t c = 0; c < basis.photon_dimension(); ++c) {
    const auto occ = basis.occupation(c);
    int n = 0;
    for (std::size_t j = 0; j < occ.size(); ++j)
      if (counted[j]) n += occ[j];
    if (n == 0) continue;
    for (int s = 0; s < FockBasis::spin_dim; ++s)
      trip.emplace_back(FockBasis::index(c, s), FockBasis::index(c, s), static_cast<double>(n));
  }
  SparseOperator op(basis.dimension(), basis.dimension());
  op.setFromTriplets(trip.begin(), trip.end());
  return op;
}

inline double expectation(const SparseOperator& op, const StateVector& psi) {
  return std::real(psi.dot(op * psi));
}

}  // namespace ircloud
