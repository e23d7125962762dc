#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipsk/estimator.hpp"
#include "ipsk/eval.hpp"
#include "ipsk/hypospace.hpp"
#include "ipsk/measure.hpp"
#include "ipsk/sim.hpp"

namespace ipsk::io {

inline constexpr std::uint16_t kTrajectoryVersion = 1;

/// Binary trajectory layout (little endian):
///   "IPSK" | u16 version | u32 N | u32 d | u32 L | f64 dt | f64 sigma |
///   (L+1)*N*d f64, time-major, particle-major, coordinate-minor.
std::vector<std::uint8_t> encode_trajectory(const Trajectory& traj);
/// Throws IoError on a malformed buffer.
Trajectory decode_trajectory(const std::vector<std::uint8_t>& bytes);

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory(const std::filesystem::path& path);

/// Shortest round-trip safe rendering with 17 significant digits.
std::string format_double(double x);

/// Header `t,x_1_1,...,x_N_d`.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
/// Header `bin_lo,bin_hi,weight`.
void write_measure_csv(const std::filesystem::path& path, const EmpiricalMeasure& measure);

nlohmann::json basis_to_json(const HypothesisBasis& basis);
HypothesisBasis basis_from_json(const nlohmann::json& j);

/// Basis descriptor, coefficients and fine-grid samples.
nlohmann::json estimated_kernel_to_json(const EstimatedKernel& est);
/// Rebuilds the estimator from its JSON descriptor.
EstimatedKernel estimated_kernel_from_json(const nlohmann::json& j);
/// Header `r,phi_hat` or `r,phi_hat,phi_true` when a truth kernel is given.
void write_kernel_csv(const std::filesystem::path& path, const EstimatedKernel& est,
                      const InteractionKernel* truth = nullptr);

/// Header `x,mean_error,std_error,n,lambda_min` (plus `sigma` when requested).
void write_rate_csv(const std::filesystem::path& path, const RateFit& fit, bool with_sigma = false);
nlohmann::json rate_fit_to_json(const RateFit& fit);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ipsk::io
