#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ircloud/core.hpp"
#include "ircloud/io.hpp"
#include "ircloud/spectral.hpp"

/// Run configuration: INI sections physics, grid, solver, scattering, output.
namespace ircloud {

struct RunConfig {
  std::string command;

  // [physics]
  std::vector<Vec3> p_list{Vec3::Zero()};
  double alpha = 0.0;
  double alpha_max = kDefaultAlphaMax;
  double sigma = 0.1;
  std::vector<double> sigma_list;
  Vec3 u = Vec3::UnitZ();
  /// "measured" (ground-state expectation of p - X) or "free" (grad E = p).
  std::string velocity = "measured";
  double rho = 0.0;
  double c_bound = 1.0;

  // [grid]
  int n_radial = 2;
  int n_angular = 6;
  double ir_floor = 0.1;
  int n_max = 2;
  int n_cap = 2;
  int nodes_per_decade = 2;
  double floor_ratio = 0.25;
  std::size_t max_dimension = kDefaultMaxDimension;

  // [solver]
  double tolerance = 1e-8;
  int max_iter = 10000;
  double fd_step = 1e-3;
  double edge_factor = 1e3;

  // [scattering]
  double beta = 2.0;
  int inverse_epsilon = 20;
  std::vector<int> levels{1, 2, 3};
  Vec3 profile_center = Vec3(0.0, 0.0, 0.15);
  double profile_width = 0.1;

  // [output]
  std::string dir = ".";
  std::string stem;

  /// FNV-1a digest of the canonical key = value listing.
  std::string digest;

  ScanPolicy scan_policy() const {
    ScanPolicy sp;
    sp.nodes_per_decade = nodes_per_decade;
    sp.floor_ratio = floor_ratio;
    sp.n_angular = n_angular;
    sp.n_max = n_max;
    sp.n_cap = n_cap;
    sp.max_dimension = max_dimension;
    return sp;
  }

  SolverOptions solver_options() const {
    SolverOptions so;
    so.tolerance = tolerance;
    so.max_iterations = max_iter;
    return so;
  }
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a finite number, got '" + s + "'");
  }
}

inline long parse_int(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + s + "'");
  }
}

inline std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(parse_double(key, part));
  return out;
}

inline Vec3 parse_vec3(const std::string& key, const std::string& s) {
  const auto v = parse_list(key, s);
  if (v.size() != 3) throw ConfigError(key, "expected three comma-separated numbers");
  return Vec3(v[0], v[1], v[2]);
}

}  // namespace detail

/// Parses INI text. Every key is checked against the schema; unknown sections
/// or keys are rejected with their section.key name.
inline RunConfig parse_config(const std::string& text, const std::string& command) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  RunConfig cfg;
  cfg.command = command;
  cfg.stem = command;
  using Setter = std::function<void(const std::string& key, const std::string& value)>;
  auto dbl = [](double& target) -> Setter {
    return [&target](const std::string& k, const std::string& v) { target = detail::parse_double(k, v); };
  };
  auto integer = [](int& target) -> Setter {
    return [&target](const std::string& k, const std::string& v) { target = static_cast<int>(detail::parse_int(k, v)); };
  };
  const std::map<std::string, std::map<std::string, Setter>> schema{
      {"physics",
       {{"p",
         [&](const std::string& k, const std::string& v) {
           cfg.p_list.clear();
           for (const auto& point : detail::split(v, ';')) cfg.p_list.push_back(detail::parse_vec3(k, point));
         }},
        {"alpha", dbl(cfg.alpha)},
        {"alpha_max", dbl(cfg.alpha_max)},
        {"sigma", dbl(cfg.sigma)},
        {"sigma_list", [&](const std::string& k, const std::string& v) { cfg.sigma_list = detail::parse_list(k, v); }},
        {"u", [&](const std::string& k, const std::string& v) { cfg.u = detail::parse_vec3(k, v); }},
        {"velocity", [&](const std::string& k, const std::string& v) {
           if (v != "measured" && v != "free") throw ConfigError(k, "expected 'measured' or 'free'");
           cfg.velocity = v;
         }},
        {"rho", dbl(cfg.rho)},
        {"c_bound", dbl(cfg.c_bound)}}},
      {"grid",
       {{"n_radial", integer(cfg.n_radial)},
        {"n_angular", integer(cfg.n_angular)},
        {"ir_floor", dbl(cfg.ir_floor)},
        {"n_max", integer(cfg.n_max)},
        {"n_cap", integer(cfg.n_cap)},
        {"nodes_per_decade", integer(cfg.nodes_per_decade)},
        {"floor_ratio", dbl(cfg.floor_ratio)},
        {"max_dimension", [&](const std::string& k, const std::string& v) {
           const long n = detail::parse_int(k, v);
           if (n < 1) throw ConfigError(k, "must be positive");
           cfg.max_dimension = static_cast<std::size_t>(n);
         }}}},
      {"solver",
       {{"tolerance", dbl(cfg.tolerance)},
        {"max_iter", integer(cfg.max_iter)},
        {"fd_step", dbl(cfg.fd_step)},
        {"edge_factor", dbl(cfg.edge_factor)}}},
      {"scattering",
       {{"beta", dbl(cfg.beta)},
        {"inverse_epsilon", integer(cfg.inverse_epsilon)},
        {"levels", [&](const std::string& k, const std::string& v) {
           cfg.levels.clear();
           for (const auto& part : detail::split(v, ',')) cfg.levels.push_back(static_cast<int>(detail::parse_int(k, part)));
         }},
        {"profile_center", [&](const std::string& k, const std::string& v) { cfg.profile_center = detail::parse_vec3(k, v); }},
        {"profile_width", dbl(cfg.profile_width)}}},
      {"output",
       {{"dir", [&](const std::string&, const std::string& v) { cfg.dir = v; }},
        {"stem", [&](const std::string& k, const std::string& v) {
           if (v.empty() || v.find('/') != std::string::npos) throw ConfigError(k, "must be a plain file stem");
           cfg.stem = v;
         }}}},
  };

  std::ostringstream canonical;
  canonical << "command=" << command << '\n';
  std::map<std::string, std::map<std::string, std::string>> sorted;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw ConfigError(section, "key outside of any section");
    const auto sit = schema.find(section);
    if (sit == schema.end()) throw ConfigError(section, "unknown section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto kit = sit->second.find(key);
      if (kit == sit->second.end()) throw ConfigError(full, "unknown key");
      const std::string raw = value.get_value<std::string>();
      kit->second(full, raw);
      sorted[section][key] = raw;
    }
  }
  for (const auto& [section, keys] : sorted)
    for (const auto& [key, value] : keys) canonical << section << '.' << key << '=' << value << '\n';
  cfg.digest = io::hex64(io::fnv1a(canonical.str()));

  // Value checks.
  if (!(cfg.alpha >= 0.0)) throw ConfigError("physics.alpha", "must be non-negative");
  if (!(cfg.alpha_max > 0.0)) throw ConfigError("physics.alpha_max", "must be positive");
  if (cfg.alpha > cfg.alpha_max) throw ConfigError("physics.alpha", "exceeds physics.alpha_max");
  if (cfg.p_list.empty()) throw ConfigError("physics.p", "no momentum given");
  for (const auto& p : cfg.p_list)
    if (!(p.norm() < kMaxMomentum)) throw ConfigError("physics.p", "|p| must be below 1/3");
  if (!(cfg.sigma >= 0.0 && cfg.sigma <= 0.5)) throw ConfigError("physics.sigma", "must lie in [0, 1/2]");
  for (double s : cfg.sigma_list)
    if (!(s >= 0.0 && s <= 0.5)) throw ConfigError("physics.sigma_list", "values must lie in [0, 1/2]");
  if (!(cfg.u.norm() > 0.0)) throw ConfigError("physics.u", "must be non-zero");
  if (!(cfg.rho >= 0.0)) throw ConfigError("physics.rho", "must be non-negative");
  if (!(cfg.c_bound > 0.0)) throw ConfigError("physics.c_bound", "must be positive");
  if (cfg.n_radial < 1) throw ConfigError("grid.n_radial", "must be >= 1");
  if (cfg.n_angular < 1) throw ConfigError("grid.n_angular", "must be >= 1");
  if (!(cfg.ir_floor > 0.0 && cfg.ir_floor < 1.0)) throw ConfigError("grid.ir_floor", "must lie in (0, 1)");
  if (cfg.n_max < 0) throw ConfigError("grid.n_max", "must be >= 0");
  if (cfg.n_cap < 0) throw ConfigError("grid.n_cap", "must be >= 0");
  if (cfg.nodes_per_decade < 1) throw ConfigError("grid.nodes_per_decade", "must be >= 1");
  if (!(cfg.floor_ratio > 0.0 && cfg.floor_ratio <= 1.0)) throw ConfigError("grid.floor_ratio", "must lie in (0, 1]");
  if (!(cfg.tolerance > 0.0)) throw ConfigError("solver.tolerance", "must be positive");
  if (cfg.max_iter < 1) throw ConfigError("solver.max_iter", "must be >= 1");
  if (!(cfg.fd_step > 0.0)) throw ConfigError("solver.fd_step", "must be positive");
  if (!(cfg.edge_factor >= 0.0)) throw ConfigError("solver.edge_factor", "must be non-negative");
  if (!(cfg.beta > 1.0)) throw ConfigError("scattering.beta", "must exceed 1");
  if (cfg.inverse_epsilon < 2) throw ConfigError("scattering.inverse_epsilon", "must be an integer >= 2");
  for (int n : cfg.levels)
    if (n < 0 || n > 6) throw ConfigError("scattering.levels", "levels must lie in 0..6");
  if (!(cfg.profile_width > 0.0)) throw ConfigError("scattering.profile_width", "must be positive");
  return cfg;
}

inline RunConfig load_config(const std::string& path, const std::string& command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), command);
}

}  // namespace ircloud
