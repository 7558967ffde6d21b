#pragma once

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ircloud/config.hpp"
#include "ircloud/core.hpp"
#include "ircloud/fockspace.hpp"
#include "ircloud/hamiltonian.hpp"
#include "ircloud/io.hpp"
#include "ircloud/kernels.hpp"
#include "ircloud/parallel.hpp"
#include "ircloud/representation.hpp"
#include "ircloud/scattering.hpp"
#include "ircloud/spectral.hpp"

/// Batch driver behind the `ircloud` executable.
namespace ircloud::cli {

enum ExitCode : int { ok = 0, failure = 1, config_error = 2, solver_error = 3, divergence = 4 };

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"spectrum",          "photon-number-scan", "kernel-norm",
                                              "equivalence",       "pull-through-check", "scattering-cells"};
  return names;
}

struct Outcome {
  std::vector<std::filesystem::path> files;
  std::string summary;
};

namespace detail {

inline std::string num(double v) { return io::number(v); }

inline std::shared_ptr<const FockBasis> configured_basis(const RunConfig& cfg) {
  return std::make_shared<const FockBasis>(build_mode_grid(cfg.sigma, cfg.ir_floor, cfg.n_radial, cfg.n_angular),
                                           cfg.n_max, cfg.n_cap, cfg.max_dimension);
}

inline std::vector<double> sigma_points(const RunConfig& cfg) {
  return cfg.sigma_list.empty() ? std::vector<double>{cfg.sigma} : cfg.sigma_list;
}

/// grad E(p) for the kernel commands: p itself, or <psi, (p - X) psi> on the configured grid.
inline Vec3 velocity_for(const RunConfig& cfg, const Vec3& p, const std::shared_ptr<const FockBasis>& basis) {
  if (cfg.velocity == "free" || cfg.alpha == 0.0) return p;
  const FiberHamiltonian h = assemble(p, cfg.sigma, cfg.alpha, basis);
  const GroundState gs = ground_state(h, cfg.u, cfg.solver_options());
  return ircloud::detail::velocity_expectation(h, gs.psi);
}

inline std::filesystem::path output_path(const RunConfig& cfg, const std::string& suffix) {
  return std::filesystem::path(cfg.dir) / (cfg.stem + suffix);
}

inline Outcome run_spectrum(const RunConfig& cfg, unsigned workers) {
  const auto basis = configured_basis(cfg);
  SpectralOptions opt;
  opt.h = cfg.fd_step;
  opt.u = cfg.u;
  opt.solver = cfg.solver_options();
  const auto reports = parallel_map(
      cfg.p_list,
      [&](const Vec3& p) { return gradient_and_mass(assemble(p, cfg.sigma, cfg.alpha, basis), opt); }, workers);
  io::CsvTable csv(cfg.digest, {"px", "py", "pz", "sigma", "alpha", "E", "gEx", "gEy", "gEz", "d2E", "m_ren", "residual"});
  std::ostringstream s;
  s << "spectrum: " << reports.size() << " point(s), " << basis->num_modes() << " modes, dimension "
    << basis->dimension() << "\n";
  for (const auto& r : reports) {
    csv.add_row({num(r.p.x()), num(r.p.y()), num(r.p.z()), num(r.sigma), num(r.alpha), num(r.energy),
                 num(r.grad_e.x()), num(r.grad_e.y()), num(r.grad_e.z()), num(r.d2e), num(r.m_ren), num(r.residual)});
    s << "  p=(" << num(r.p.x()) << "," << num(r.p.y()) << "," << num(r.p.z()) << ")  E=" << num(r.energy)
      << "  d2E=" << num(r.d2e) << "  m_ren=" << num(r.m_ren) << "  <N_f>=" << num(r.photon_number)
      << (r.cross_check_ok ? "" : "  [gradient cross-check failed]") << "\n";
  }
  Outcome out;
  out.files.push_back(output_path(cfg, ".csv"));
  io::write_atomic(out.files.back(), csv.str());
  out.summary = s.str();
  return out;
}

inline Outcome run_scan(const RunConfig& cfg, unsigned workers) {
  if (cfg.sigma_list.size() < 2) throw ConfigError("physics.sigma_list", "photon-number-scan needs at least 2 values");
  const Vec3 p = cfg.p_list.front();
  const ScanResult res = photon_number_scan(p, cfg.alpha, cfg.sigma_list, cfg.scan_policy(), cfg.u,
                                            cfg.solver_options(), workers);
  io::CsvTable csv(cfg.digest, {"sigma", "ir_floor", "n_radial", "modes", "dimension", "E", "N_f", "gEx", "gEy",
                                "gEz", "residual", "converged"});
  for (const auto& r : res.rows)
    csv.add_row({num(r.sigma), num(r.ir_floor), std::to_string(r.n_radial), std::to_string(r.modes),
                 std::to_string(r.dimension), num(r.energy), num(r.photon_number), num(r.grad_e.x()),
                 num(r.grad_e.y()), num(r.grad_e.z()), num(r.residual), r.converged ? "1" : "0"});
  auto doc = io::json_document(cfg.digest);
  doc["p"] = {p.x(), p.y(), p.z()};
  doc["alpha"] = cfg.alpha;
  doc["converged_points"] = res.rows.size() - static_cast<std::size_t>(res.excluded);
  doc["excluded_points"] = res.excluded;
  if (res.fit) {
    doc["fit"] = {{"intercept", res.fit->intercept}, {"slope", res.fit->slope}, {"r_squared", res.fit->r_squared}};
  } else {
    doc["fit"] = nullptr;
  }
  doc["predicted_slope"] = res.predicted_slope;
  Outcome out;
  out.files.push_back(output_path(cfg, ".csv"));
  out.files.push_back(output_path(cfg, "_fit.json"));
  io::write_atomic(out.files[0], csv.str());
  io::write_atomic(out.files[1], io::dump(doc));
  std::ostringstream s;
  s << "photon-number-scan: p=(" << num(p.x()) << "," << num(p.y()) << "," << num(p.z()) << ") alpha="
    << num(cfg.alpha) << ", " << res.rows.size() << " sigma values, " << res.excluded << " excluded\n";
  for (const auto& r : res.rows)
    s << "  sigma=" << num(r.sigma) << "  dim=" << r.dimension << "  <N_f>=" << num(r.photon_number)
      << (r.converged ? "" : "  (not converged)") << "\n";
  if (res.fit)
    s << "  fitted slope b=" << num(res.fit->slope) << "  predicted alpha*A(|grad E|)=" << num(res.predicted_slope)
      << "\n";
  else
    s << "  fewer than 2 converged points: no fit\n";
  out.summary = s.str();
  if (!res.fit && res.excluded > 0) throw SolverError("photon-number-scan: too few converged points", {});
  return out;
}

inline Outcome run_kernel_norm(const RunConfig& cfg, unsigned workers) {
  const auto basis = cfg.velocity == "free" ? nullptr : configured_basis(cfg);
  const auto velocities = parallel_map(
      cfg.p_list, [&](const Vec3& p) { return velocity_for(cfg, p, basis); }, workers);
  io::CsvTable csv(cfg.digest, {"px", "py", "pz", "gEx", "gEy", "gEz", "sigma", "alpha", "rho", "norm_sq",
                                "predicted_slope"});
  std::ostringstream s;
  s << "kernel-norm: " << cfg.p_list.size() << " momentum point(s), rho=" << num(cfg.rho) << "\n";
  for (std::size_t i = 0; i < cfg.p_list.size(); ++i) {
    const Vec3& p = cfg.p_list[i];
    KernelParams kp;
    kp.p = p;
    kp.grad_e = velocities[i];
    kp.alpha = cfg.alpha;
    kp.alpha_max = cfg.alpha_max;
    const double slope = cfg.alpha * angular_constant(kp.grad_e.norm());
    for (double sigma : sigma_points(cfg)) {
      kp.sigma = sigma;
      const double n = kernel_l2_norm_sq(kp, cfg.rho);
      csv.add_row({num(p.x()), num(p.y()), num(p.z()), num(kp.grad_e.x()), num(kp.grad_e.y()), num(kp.grad_e.z()),
                   num(sigma), num(cfg.alpha), num(cfg.rho), num(n), num(slope)});
      s << "  p=(" << num(p.x()) << "," << num(p.y()) << "," << num(p.z()) << ") sigma=" << num(sigma)
        << "  ||v||^2=" << num(n) << "\n";
    }
  }
  Outcome out;
  out.files.push_back(output_path(cfg, ".csv"));
  io::write_atomic(out.files.back(), csv.str());
  out.summary = s.str();
  return out;
}

inline Outcome run_equivalence(const RunConfig& cfg, unsigned workers) {
  const std::vector<double> sigmas =
      cfg.sigma_list.empty() ? std::vector<double>{1e-3, 1e-4, 1e-5, 1e-6} : cfg.sigma_list;
  const auto basis = cfg.velocity == "free" ? nullptr : configured_basis(cfg);
  const auto velocities = parallel_map(
      cfg.p_list, [&](const Vec3& p) { return velocity_for(cfg, p, basis); }, workers);
  auto doc = io::json_document(cfg.digest);
  doc["alpha"] = cfg.alpha;
  doc["sigmas"] = sigmas;
  doc["points"] = nlohmann::ordered_json::array();
  std::ostringstream s;
  s << "equivalence: " << cfg.p_list.size() << " momentum point(s) over " << sigmas.size() << " sigma values\n";
  for (std::size_t i = 0; i < cfg.p_list.size(); ++i) {
    KernelParams kp;
    kp.p = cfg.p_list[i];
    kp.grad_e = velocities[i];
    kp.alpha = cfg.alpha;
    kp.alpha_max = cfg.alpha_max;
    const EquivalenceVerdict v = equivalence_diagnostic(kp, sigmas);
    nlohmann::ordered_json point;
    point["p"] = {v.p.x(), v.p.y(), v.p.z()};
    point["grad_e"] = {v.grad_e.x(), v.grad_e.y(), v.grad_e.z()};
    point["norm_sq"] = v.norm_sq;
    point["slope"] = v.fit.slope;
    point["intercept"] = v.fit.intercept;
    point["predicted_slope"] = v.predicted_slope;
    point["threshold"] = v.threshold;
    point["verdict"] = to_string(v.verdict);
    doc["points"].push_back(point);
    s << "  p=(" << num(v.p.x()) << "," << num(v.p.y()) << "," << num(v.p.z()) << ")  slope=" << num(v.fit.slope)
      << "  verdict=" << to_string(v.verdict) << "\n";
  }
  Outcome out;
  out.files.push_back(output_path(cfg, ".json"));
  io::write_atomic(out.files.back(), io::dump(doc));
  out.summary = s.str();
  return out;
}

inline Outcome run_pull_through(const RunConfig& cfg, unsigned workers) {
  const auto basis = configured_basis(cfg);
  const Vec3 p = cfg.p_list.front();
  const FiberHamiltonian h = assemble(p, cfg.sigma, cfg.alpha, basis);
  const GroundState gs = ground_state(h, cfg.u, cfg.solver_options());
  std::vector<std::size_t> modes(basis->num_modes());
  for (std::size_t j = 0; j < modes.size(); ++j) modes[j] = j;
  const auto results =
      parallel_map(modes, [&](std::size_t j) { return pull_through_residual(h, gs, j); }, workers);
  io::CsvTable csv(cfg.digest, {"mode", "kx", "ky", "kz", "helicity", "weight", "residual", "edge_mass", "bound", "ok"});
  std::size_t violations = 0;
  double worst = 0.0;
  for (std::size_t j = 0; j < results.size(); ++j) {
    const Mode& md = basis->grid()[j];
    const double bound = 1e-10 + cfg.edge_factor * results[j].edge_mass;
    const bool good = results[j].residual <= bound;
    if (!good) ++violations;
    worst = std::max(worst, results[j].residual);
    csv.add_row({std::to_string(j), num(md.k.x()), num(md.k.y()), num(md.k.z()),
                 md.helicity == Helicity::plus ? "+" : "-", num(md.weight), num(results[j].residual),
                 num(results[j].edge_mass), num(bound), good ? "1" : "0"});
  }
  Outcome out;
  out.files.push_back(output_path(cfg, ".csv"));
  io::write_atomic(out.files.back(), csv.str());
  std::ostringstream s;
  s << "pull-through-check: " << results.size() << " modes, dimension " << basis->dimension() << ", E="
    << num(gs.energy) << "\n  max residual " << num(worst) << ", edge mass " << num(edge_mass(*basis, gs.psi))
    << ", " << violations << " mode(s) above 1e-10 + " << num(cfg.edge_factor) << " * edge mass\n";
  out.summary = s.str();
  return out;
}

inline Outcome run_scattering(const RunConfig& cfg, unsigned workers) {
  if (cfg.levels.empty()) throw ConfigError("scattering.levels", "no levels given");
  const BumpProfile profile(cfg.profile_center, cfg.profile_width);
  const int m = cfg.inverse_epsilon;
  const auto reports = parallel_map(
      cfg.levels,
      [&](int n) {
        const double t = std::ldexp(1.0, n * m);
        return std::make_pair(decompose(t, m, profile), t);
      },
      workers);
  io::CsvTable csv(cfg.digest, {"t", "n", "N", "sigma_t", "c", "cN2"});
  std::ostringstream s;
  s << "scattering-cells: beta=" << num(cfg.beta) << " epsilon=1/" << m << " alpha=" << num(cfg.alpha) << "\n";
  for (const auto& [cells, t] : reports) {
    const OverlapReport r = overlap_matrix(cells, cfg.alpha, cfg.beta);
    csv.add_row({num(t), std::to_string(cells.level), std::to_string(cells.total_cells), num(r.sigma_t), num(r.c),
                 num(r.statistic)});
    s << "  n=" << cells.level << "  N=" << cells.total_cells << "  kept=" << cells.cells.size()
      << "  sigma_t=" << num(r.sigma_t) << "  c=" << num(r.c) << "  cN^2=" << num(r.statistic) << "\n";
  }
  Outcome out;
  out.files.push_back(output_path(cfg, ".csv"));
  io::write_atomic(out.files.back(), csv.str());
  out.summary = s.str();
  return out;
}

}  // namespace detail

/// Runs one subcommand on a parsed configuration.
inline Outcome execute(const RunConfig& cfg, unsigned workers = worker_count()) {
  if (cfg.command == "spectrum") return detail::run_spectrum(cfg, workers);
  if (cfg.command == "photon-number-scan") return detail::run_scan(cfg, workers);
  if (cfg.command == "kernel-norm") return detail::run_kernel_norm(cfg, workers);
  if (cfg.command == "equivalence") return detail::run_equivalence(cfg, workers);
  if (cfg.command == "pull-through-check") return detail::run_pull_through(cfg, workers);
  if (cfg.command == "scattering-cells") return detail::run_scattering(cfg, workers);
  throw ConfigError("command", "unknown subcommand '" + cfg.command + "'");
}

/// Parses argv, runs the selected subcommand and maps errors to exit codes:
/// 0 success, 2 configuration or domain error, 3 solver non-convergence,
/// 4 declared divergence, 1 anything else.
inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Dressed-electron infrared cloud experiments"};
  app.set_version_flag("--version", std::string(io::kVersion));
  app.require_subcommand(1);
  std::string config_path;
  std::string output_dir;
  int workers = 0;
  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("config", config_path, "INI configuration file")->required();
    sub->add_option("-o,--output-dir", output_dir, "Overrides [output] dir");
    sub->add_option("-j,--workers", workers, "Worker threads (default: IRCLOUD_WORKERS, else 1)")
        ->check(CLI::NonNegativeNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ExitCode::ok : ExitCode::config_error;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg = load_config(config_path, command);
    if (!output_dir.empty()) cfg.dir = output_dir;
    const unsigned w = workers > 0 ? static_cast<unsigned>(workers) : worker_count();
    const Outcome o = execute(cfg, w);
    out << o.summary;
    for (const auto& f : o.files) out << "wrote " << f.string() << "\n";
    return ExitCode::ok;
  } catch (const ConfigError& e) {
    err << "config error (" << config_path << "): " << e.what() << "\n";
    return ExitCode::config_error;
  } catch (const SolverError& e) {
    err << "solver error (" << config_path << ", [solver]): " << e.what() << "\n";
    return ExitCode::solver_error;
  } catch (const DivergenceError& e) {
    err << "divergence (" << config_path << ", [physics]): " << e.what() << "\n";
    return ExitCode::divergence;
  } catch (const DomainError& e) {
    err << "domain error (" << config_path << "): " << e.what() << "\n";
    return ExitCode::config_error;
  } catch (const TruncationError& e) {
    err << "truncation error (" << config_path << ", [grid]): " << e.what() << "\n";
    return ExitCode::config_error;
  } catch (const ResourceError& e) {
    err << "resource error (" << config_path << ", grid.max_dimension): " << e.what() << "\n";
    return ExitCode::config_error;
  } catch (const InsufficientDataError& e) {
    err << "insufficient data (" << config_path << ", physics.sigma_list): " << e.what() << "\n";
    return ExitCode::config_error;
  } catch (const std::exception& e) {
    err << "error (" << config_path << "): " << e.what() << "\n";
    return ExitCode::failure;
  }
}

}  // namespace ircloud::cli
