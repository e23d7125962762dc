#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipsk/config.hpp"
#include "ipsk/error.hpp"

namespace ipsk::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kIo = 3, kData = 4 };

int exit_code(ErrorKind kind);

/// Writes traj_<m>.bin for m < count plus manifest.json into the output dir.
nlohmann::json cmd_simulate(const ExperimentConfig& cfg, int count);

/// Writes kernel.json, kernel.csv and diagnostics.json. Every file must share
/// N, d, L and dt (DataError otherwise).
nlohmann::json cmd_estimate(const ExperimentConfig& cfg, const std::vector<std::filesystem::path>& files);

nlohmann::json cmd_convergence(const ExperimentConfig& cfg);
nlohmann::json cmd_gap_study(const ExperimentConfig& cfg);
nlohmann::json cmd_long_t(const ExperimentConfig& cfg);
nlohmann::json cmd_prediction(const ExperimentConfig& cfg);

/// Convergence, gap, long-trajectory (when configured) and prediction
/// studies; writes summary.json.
nlohmann::json cmd_reproduce(const ExperimentConfig& cfg, const std::string& target, Scale scale);

/// Parses arguments, dispatches and maps errors to exit codes.
int run(int argc, char** argv);

}  // namespace ipsk::cli
