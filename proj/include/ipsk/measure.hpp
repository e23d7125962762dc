#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ipsk/sim.hpp"

namespace ipsk {

/// Weighted histogram of pairwise distances on [R_min, R_max].
struct EmpiricalMeasure {
  std::vector<double> edges;    // B+1, strictly increasing
  std::vector<double> weights;  // B, summing to 1
  std::uint64_t counts_total = 0;

  std::size_t bins() const { return weights.size(); }
  double r_min() const { return edges.front(); }
  double r_max() const { return edges.back(); }
  double midpoint(std::size_t b) const { return 0.5 * (edges[b] + edges[b + 1]); }
};

/// Index of the cell of a strictly increasing `edges` array containing r,
/// with the last cell right-closed. Returns -1 outside [edges.front(),
/// edges.back()]. Uses a uniform-spacing guess corrected against `edges`, so
/// the answer always agrees with the stored edges.
std::ptrdiff_t locate(std::span<const double> edges, double r);

/// Histogram over r_{ii'}^{(m)}(t_l), i < i', l = 0..L-1, every sample
/// weighted 1 / (C(N,2) L M). The support is the observed [min, max]; a
/// single-valued sample set is widened by a relative 1e-6.
EmpiricalMeasure empirical_rho(std::span<const Trajectory> trajs, int bins);

/// As above on a caller-fixed range; samples outside [lo, hi] are dropped
/// and the remaining weights renormalised.
EmpiricalMeasure empirical_rho(std::span<const Trajectory> trajs, int bins, double lo, double hi);

/// Histogram of an explicit multiset of distances (equal weights).
EmpiricalMeasure histogram(std::span<const double> distances, int bins);

/// Every pairwise distance entering the measure, in trajectory, time, pair
/// order. Used for exact per-sample quadrature.
std::vector<double> distance_samples(std::span<const Trajectory> trajs);

/// |||f||| = sqrt(sum_b |f(r_b) r_b|^2 w_b) with r_b the bin midpoints.
template <class F>
double rho_norm(F&& f, const EmpiricalMeasure& measure) {
  double acc = 0.0;
  for (std::size_t b = 0; b < measure.bins(); ++b) {
    if (measure.weights[b] == 0.0) continue;
    const double r = measure.midpoint(b);
    const double v = f(r) * r;
    acc += v * v * measure.weights[b];
  }
  return std::sqrt(acc);
}

/// Exact per-sample version: sqrt(mean_k |f(r_k) r_k|^2).
template <class F>
double rho_norm_samples(F&& f, std::span<const double> samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (double r : samples) {
    const double v = f(r) * r;
    acc += v * v;
  }
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

struct AutocorrResult {
  double tau = 0.0;
  bool degenerate = false;
  int cutoff_lag = 0;
};

/// tau = dt (1 + 2 sum_{k>=1} c(k)) from the normalised autocorrelation of
/// r_12(t) averaged across trajectories, summing until c first drops below
/// 0.05. Clamped to >= dt; a constant series yields dt with `degenerate` set.
AutocorrResult autocorr_time(std::span<const Trajectory> trajs);

/// N_ess = M T / tau.
double effective_sample_size(double M, double T, double tau);

}  // namespace ipsk
