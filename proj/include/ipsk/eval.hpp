#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "ipsk/estimator.hpp"
#include "ipsk/measure.hpp"
#include "ipsk/sim.hpp"

namespace ipsk {

/// Everything a study needs to generate data and score estimators.
struct StudySetup {
  SystemParams system;
  InitialDistribution init = UniformBox{};
  double dt = 0.01;
  double T = 1.0;
  double T_f = 1.0;
  EstimatorConfig estimator;
  int M_rho = 1000;   // trajectories behind the scoring measure
  int rho_bins = 1000;
};

/// |||est - truth||| under rho, using the raw estimator sum_p a_p psi_p
/// (zero outside the basis support).
double kernel_error(const EstimatedKernel& est, const InteractionKernel& truth, const EmpiricalMeasure& rho);
double kernel_error(const InteractionKernel& a, const InteractionKernel& b, const EmpiricalMeasure& rho);

/// Simulates M trajectories; trajectory m uses NoiseStream(seed, m).
std::vector<Trajectory> simulate_ensemble(const SystemParams& params, const InitialDistribution& init,
                                          double T, double dt, int M, std::uint64_t seed);

/// Scoring measure from M_rho independent trajectories, streamed in chunks
/// (two passes: support, then counts) so memory stays bounded.
EmpiricalMeasure ground_truth_rho(const SystemParams& params, const InitialDistribution& init, double T,
                                  double dt, int M_rho, int bins, std::uint64_t seed);

/// True and estimated systems from the same initial draw and the same
/// Gaussian increments; only the drift kernel differs.
std::pair<Trajectory, Trajectory> predict_pair(const SystemParams& truth, const InteractionKernel& est,
                                               const InitialDistribution& init, double T_f, double dt,
                                               const NoiseStream& noise);

/// sqrt of the time average over grid points in [t_a, t_b] of
/// (1/N) |X_t - Xhat_t|^2.
double traj_error(const Trajectory& X, const Trajectory& Xhat, double t_a, double t_b);

/// Ceiling 2 T^2 exp(8 T^2 (R+1)^2 S^2) |||est - truth|||^2 on
/// sup_t (1/N) E|Xhat_t - X_t|^2. May be +inf.
double prediction_bound(double T, double R, double S, double kernel_err);

/// lambda_min of A.
double coercivity_estimate(const NormalSystem& system);

struct RatePoint {
  double x = 0.0;
  double mean_error = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  double lambda_min = 0.0;
  double sigma = 0.0;
};

/// Ordinary least squares of log(mean_error) on log(x) over points with x in
/// [x_lo, x_hi]. Degenerate with fewer than 3 usable points or errors at
/// round-off level.
struct RateFit {
  std::vector<RatePoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  bool degenerate = true;
  double fit_lo = 0.0;
  double fit_hi = 0.0;
};

RateFit fit_rate(std::vector<RatePoint> points, double x_lo = 0.0,
                 double x_hi = std::numeric_limits<double>::infinity());

/// Error vs M with n from the dimension rule; each (M, replicate) cell uses
/// seeds derived from (seed, M, replicate).
RateFit convergence_study(const StudySetup& setup, std::span<const int> M_list, int replicates,
                          std::uint64_t seed);

/// For each sigma: simulate M trajectories at dt, subsample by each gap,
/// estimate and score. The slope is fit over the upper decade of gaps.
std::vector<RateFit> gap_study(const StudySetup& setup, std::span<const int> gaps,
                               std::span<const double> sigmas, int M, int replicates, std::uint64_t seed);

/// Error vs M T with n from the long-trajectory rule with constant C_long.
/// Scored against a measure from M_rho_long trajectories of length max T.
RateFit long_T_study(const StudySetup& setup, std::span<const std::pair<int, double>> grid, double C_long,
                     int replicates, int M_rho_long, std::uint64_t seed);

struct PredictionStats {
  double mean = 0.0;
  double std = 0.0;
  double max_ratio_to_bound = 0.0;  // sup_t err^2 / prediction_bound over pairs
};

struct PredictionReport {
  PredictionStats train_ic_train_interval;
  PredictionStats train_ic_future_interval;
  PredictionStats random_ic_train_interval;
  PredictionStats random_ic_future_interval;
  double kernel_error = 0.0;
};

/// Trajectory prediction with training ICs (replaying the training streams)
/// and fresh ICs, each over [0, T] and [T, T_f], using `tests` pairs.
PredictionReport prediction_study(const StudySetup& setup, const EstimatedKernel& est,
                                  const EmpiricalMeasure& rho, std::uint64_t train_seed, int tests,
                                  std::uint64_t seed);

struct PredictionExperiment {
  EstimateResult fit;
  EmpiricalMeasure rho;
  PredictionReport report;
};

/// Trains on M trajectories, scores against a ground-truth measure and runs
/// the prediction study with `tests` pairs per initial-condition class.
PredictionExperiment prediction_experiment(const StudySetup& setup, int M, int tests, std::uint64_t seed);

}  // namespace ipsk
