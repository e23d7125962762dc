#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ipsk/eval.hpp"

namespace ipsk {

struct LongTConfig {
  std::vector<std::pair<int, double>> grid;  // (M, T)
  double C = 1.0;
  int replicates = 1;
  int M_rho = 1000;
};

struct StudyConfig {
  std::vector<int> M_list;
  std::vector<int> gap_list{1};
  std::vector<double> sigma_list;
  int replicates = 1;
  int gap_M = 256;
  int prediction_tests = 16;
  std::optional<LongTConfig> long_t;
};

/// Experiment description. JSON keys (unknown keys are rejected):
///   system: {N, d, sigma, kernel: {type, ...}}
///     kernel types: "opinion"; "lennard-jones" {p, q, eps, r_m, r_trunc,
///     support_radius}; "piecewise-polynomial" {knots, degree, coeffs};
///     "constant" {c, support_radius}; "zero".
///   init: {type: "uniform", lo, hi} | {type: "gaussian", mean, scale}
///   dt, T, T_f, M, M_rho, rho_bins
///   basis: {degree, s, C, mode: "uniform"|"rho-adaptive", rcond,
///           grid_points, n_cells?, support?: [lo, hi]}
///   study: {M_list, gap_list, sigma_list, replicates, gap_M,
///           prediction_tests, long_t?: {grid: [[M, T], ...], C, replicates, M_rho}}
///   seed, output_dir
struct ExperimentConfig {
  std::string name = "experiment";
  SystemParams system;
  nlohmann::json kernel_spec;
  InitialDistribution init = UniformBox{};
  double dt = 0.01;
  double T = 1.0;
  double T_f = 1.0;
  int M = 16;
  int M_rho = 1000;
  int rho_bins = 1000;
  EstimatorConfig estimator;
  StudyConfig study;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";

  /// Throws ConfigError on any violated invariant.
  void validate() const;
  StudySetup setup() const;
};

/// Throws ConfigError on schema or value violations.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

InteractionKernel kernel_from_json(const nlohmann::json& j);

/// Applies IPSK_SEED and IPSK_OUT when set.
void apply_env_overrides(ExperimentConfig& cfg);

enum class Scale { Desk, Paper };
Scale scale_from_string(const std::string& s);

/// Reproduction presets: "opinion" and "lennard-jones".
ExperimentConfig preset(const std::string& target, Scale scale);

}  // namespace ipsk
