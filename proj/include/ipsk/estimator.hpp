#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ipsk/hypospace.hpp"
#include "ipsk/kernel.hpp"
#include "ipsk/measure.hpp"
#include "ipsk/sim.hpp"

namespace ipsk {

struct NormalSystemMeta {
  int M = 0;
  int L = 0;
  double T = 0.0;
  int N = 0;
  std::string basis_id;
};

/// A_{M,L} and b_{M,L}: means over trajectories of
///   A_m(p,q) = 1/(L N) sum_l <f_{psi_p}(X_l), f_{psi_q}(X_l)>,
///   b_m(p)   = 1/(T N) sum_l <f_{psi_p}(X_l), X_{l+1} - X_l>.
/// A is exactly symmetric and positive semidefinite.
struct NormalSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<bool> active;
  NormalSystemMeta meta;
};

NormalSystem assemble_single(const Trajectory& traj, const HypothesisBasis& basis);

/// Deterministic in the worker count: trajectories are grouped into blocks
/// whose size depends only on M, each block is summed in index order, and
/// block sums are combined by a fixed-shape pairwise tree.
NormalSystem assemble(std::span<const Trajectory> trajs, const HypothesisBasis& basis);

struct SolveResult {
  Eigen::VectorXd coefficients;
  int rank = 0;
  bool degenerate = false;
};

/// Pseudo-inverse solution, discarding eigenvalues below rcond * max |eig|.
/// Inactive coefficients are forced to zero; A == 0 gives the zero vector
/// with `degenerate` set.
SolveResult solve(const NormalSystem& system, double rcond);

/// Smallest eigenvalue of A restricted to the active basis functions.
double min_eigenvalue(const NormalSystem& system);

/// Estimated kernel: raw piecewise-polynomial sum_p a_p psi_p and its
/// post-processed linear interpolant on a fine grid over [R_min, R_max]
/// (constant extrapolation outside). The two agree at the grid nodes.
struct EstimatedKernel {
  std::vector<double> coefficients;
  HypothesisBasis basis;
  InteractionKernel raw;
  InteractionKernel smoothed;
  std::vector<double> grid;
  std::vector<double> grid_values;
};

EstimatedKernel post_process(std::span<const double> coefficients, const HypothesisBasis& basis,
                             int grid_points);

struct EstimatorConfig {
  int s = 1;
  double C = 1.0;
  int degree = 0;
  PartitionMode mode = PartitionMode::Uniform;
  double rcond = 1e-10;
  int grid_points = 1000;
  int rho_bins = 1000;
  std::optional<int> n_cells;                       // overrides the dimension rule
  std::optional<std::pair<double, double>> support;  // overrides the observed support
};

struct EstimateResult {
  EstimatedKernel kernel;
  EmpiricalMeasure measure;
  int n_cells = 0;
  std::size_t n = 0;
  double lambda_min = 0.0;
  int rank = 0;
  bool degenerate = false;
};

/// Empirical measure -> dimension rule -> basis -> normal equations ->
/// pseudo-inverse -> post-processing.
EstimateResult estimate(std::span<const Trajectory> trajs, const EstimatorConfig& config);

}  // namespace ipsk
