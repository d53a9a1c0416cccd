#pragma once

#include <charconv>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tresca/contact.hpp"
#include "tresca/mesh.hpp"

namespace tresca {

// Flat key=value run configuration; defaults mirror the built-in experiment.
struct RunConfig {
  double E = 1.0;
  double nu = 0.3;
  double g = -0.1;
  double kappa = 0.2;
  double alpha = 1e-3;
  int order = 2;
  std::optional<int> cells_per_side;
  std::optional<std::string> mesh_file;
  std::string mode = "uniform";  // uniform | adaptive | verify
  int levels = 4;
  int dof_threshold = 8000;
  double theta = 0.5;
  double epsilon = 1e-8;
  int max_iterations = 100;
  std::string active_set_mode = "per-quadrature-point";
  std::string outdir = ".";
};

namespace detail {

inline double parse_number(const std::string& key, const std::string& value) {
  double v = 0.0;
  const char* begin = value.data();
  const char* end = begin + value.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw std::invalid_argument("config: bad numeric value for '" + key +
                                "': '" + value + "'");
  return v;
}

inline int parse_int(const std::string& key, const std::string& value) {
  int v = 0;
  const char* begin = value.data();
  const char* end = begin + value.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw std::invalid_argument("config: bad integer value for '" + key +
                                "': '" + value + "'");
  return v;
}

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace detail

inline void apply_config_key(RunConfig& config, const std::string& key,
                             const std::string& value) {
  if (key == "E")
    config.E = detail::parse_number(key, value);
  else if (key == "nu")
    config.nu = detail::parse_number(key, value);
  else if (key == "g")
    config.g = detail::parse_number(key, value);
  else if (key == "kappa")
    config.kappa = detail::parse_number(key, value);
  else if (key == "alpha")
    config.alpha = detail::parse_number(key, value);
  else if (key == "order")
    config.order = detail::parse_int(key, value);
  else if (key == "cells_per_side")
    config.cells_per_side = detail::parse_int(key, value);
  else if (key == "mesh_file")
    config.mesh_file = value;
  else if (key == "mode")
    config.mode = value;
  else if (key == "levels")
    config.levels = detail::parse_int(key, value);
  else if (key == "N_threshold")
    config.dof_threshold = detail::parse_int(key, value);
  else if (key == "theta")
    config.theta = detail::parse_number(key, value);
  else if (key == "epsilon")
    config.epsilon = detail::parse_number(key, value);
  else if (key == "max_iterations")
    config.max_iterations = detail::parse_int(key, value);
  else if (key == "active_set_mode")
    config.active_set_mode = value;
  else if (key == "outdir")
    config.outdir = value;
  else
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

// One "key=value" pair per line; '#' starts a comment.
inline RunConfig parse_config(std::istream& is,
                              RunConfig config = RunConfig{}) {
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config parse error at line " +
                                  std::to_string(line_no) +
                                  ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      apply_config_key(config, key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config parse error at line " +
                                  std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

inline void validate_config(RunConfig& config) {
  if (!(config.E > 0.0)) throw std::invalid_argument("config: E must be positive");
  if (!(config.nu > -1.0 && config.nu < 0.5))
    throw std::invalid_argument("config: nu must lie in (-1, 0.5)");
  if (!(config.kappa >= 0.0))
    throw std::invalid_argument("config: kappa must be nonnegative");
  if (!(config.alpha > 0.0))
    throw std::invalid_argument("config: alpha must be positive");
  if (config.order != 1 && config.order != 2)
    throw std::invalid_argument("config: order must be 1 or 2");
  if (config.cells_per_side && config.mesh_file)
    throw std::invalid_argument(
        "config: cells_per_side and mesh_file are mutually exclusive");
  if (!config.cells_per_side && !config.mesh_file) config.cells_per_side = 4;
  if (config.cells_per_side && *config.cells_per_side < 1)
    throw std::invalid_argument("config: cells_per_side must be at least 1");
  if (config.mode != "uniform" && config.mode != "adaptive" &&
      config.mode != "verify")
    throw std::invalid_argument("config: mode must be uniform, adaptive or verify");
  if (config.levels < 1)
    throw std::invalid_argument("config: levels must be at least 1");
  if (!(config.theta > 0.0 && config.theta <= 1.0))
    throw std::invalid_argument("config: theta must lie in (0, 1]");
  if (!(config.epsilon > 0.0))
    throw std::invalid_argument("config: epsilon must be positive");
  if (config.max_iterations < 1)
    throw std::invalid_argument("config: max_iterations must be at least 1");
  if (config.active_set_mode != "per-quadrature-point" &&
      config.active_set_mode != "per-facet-mean")
    throw std::invalid_argument(
        "config: active_set_mode must be per-quadrature-point or "
        "per-facet-mean");
}

inline std::string emit_config(const RunConfig& config) {
  std::ostringstream os;
  os << "E=" << detail::format_double(config.E) << "\n";
  os << "nu=" << detail::format_double(config.nu) << "\n";
  os << "g=" << detail::format_double(config.g) << "\n";
  os << "kappa=" << detail::format_double(config.kappa) << "\n";
  os << "alpha=" << detail::format_double(config.alpha) << "\n";
  os << "order=" << config.order << "\n";
  if (config.cells_per_side)
    os << "cells_per_side=" << *config.cells_per_side << "\n";
  if (config.mesh_file) os << "mesh_file=" << *config.mesh_file << "\n";
  os << "mode=" << config.mode << "\n";
  os << "levels=" << config.levels << "\n";
  os << "N_threshold=" << config.dof_threshold << "\n";
  os << "theta=" << detail::format_double(config.theta) << "\n";
  os << "epsilon=" << detail::format_double(config.epsilon) << "\n";
  os << "max_iterations=" << config.max_iterations << "\n";
  os << "active_set_mode=" << config.active_set_mode << "\n";
  os << "outdir=" << config.outdir << "\n";
  return os.str();
}

inline SolverConfig solver_config(const RunConfig& config) {
  SolverConfig sc;
  sc.tolerance = config.epsilon;
  sc.max_iterations = config.max_iterations;
  sc.active_set_mode = config.active_set_mode == "per-facet-mean"
                           ? ActiveSetMode::PerFacetMean
                           : ActiveSetMode::PerQuadraturePoint;
  return sc;
}

}  // namespace tresca
