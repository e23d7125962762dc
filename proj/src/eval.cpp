#include "ipsk/eval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "ipsk/error.hpp"
#include "ipsk/parallel.hpp"
#include "ipsk/random.hpp"

namespace ipsk {

namespace {

// Seed-derivation tags, one per data source.
enum : std::uint64_t { kTagRho = 1, kTagTrain = 2, kTagGap = 3, kTagRhoLong = 4, kTagLong = 5, kTagFresh = 6,
                       kTagPredict = 7 };

constexpr std::size_t kChunk = 256;

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

}  // namespace

double kernel_error(const InteractionKernel& a, const InteractionKernel& b, const EmpiricalMeasure& rho) {
  return rho_norm([&](double r) { return a(r) - b(r); }, rho);
}

double kernel_error(const EstimatedKernel& est, const InteractionKernel& truth, const EmpiricalMeasure& rho) {
  // sum_p a_p psi_p vanishes outside the basis support.
  const double lo = est.basis.r_min(), hi = est.basis.r_max();
  return rho_norm([&](double r) { return (r < lo || r > hi ? 0.0 : est.raw(r)) - truth(r); }, rho);
}

std::vector<Trajectory> simulate_ensemble(const SystemParams& params, const InitialDistribution& init,
                                          double T, double dt, int M, std::uint64_t seed) {
  if (M < 0) throw InputError("ensemble size must be nonnegative");
  std::vector<Trajectory> out(static_cast<std::size_t>(M));
  parallel_for(out.size(), [&](std::size_t m) { out[m] = simulate(params, init, T, dt, NoiseStream(seed, m)); });
  return out;
}

EmpiricalMeasure ground_truth_rho(const SystemParams& params, const InitialDistribution& init, double T,
                                  double dt, int M_rho, int bins, std::uint64_t seed) {
  if (M_rho < 1) throw InputError("ground-truth measure needs M_rho >= 1");
  const std::size_t total = static_cast<std::size_t>(M_rho);
  auto chunk_of = [&](std::size_t start) {
    const std::size_t count = std::min(kChunk, total - start);
    std::vector<Trajectory> trajs(count);
    parallel_for(count, [&](std::size_t i) {
      trajs[i] = simulate(params, init, T, dt, NoiseStream(seed, start + i));
    });
    return trajs;
  };
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t start = 0; start < total; start += kChunk) {
    const auto trajs = chunk_of(start);
    for (double r : distance_samples(trajs)) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  if (!(hi > lo)) hi = lo + std::max(1e-6 * lo, 1e-12);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins), 0);
  std::vector<double> edges;
  for (std::size_t start = 0; start < total; start += kChunk) {
    const auto trajs = chunk_of(start);
    const auto part = empirical_rho(trajs, bins, lo, hi);
    edges = part.edges;
    for (std::size_t b = 0; b < counts.size(); ++b)
      counts[b] += static_cast<std::uint64_t>(std::llround(part.weights[b] * static_cast<double>(part.counts_total)));
  }
  EmpiricalMeasure m;
  m.edges = std::move(edges);
  m.weights.resize(counts.size());
  std::uint64_t sum = 0;
  for (auto c : counts) sum += c;
  for (std::size_t b = 0; b < counts.size(); ++b) m.weights[b] = static_cast<double>(counts[b]) / static_cast<double>(sum);
  m.counts_total = sum;
  return m;
}

std::pair<Trajectory, Trajectory> predict_pair(const SystemParams& truth, const InteractionKernel& est,
                                               const InitialDistribution& init, double T_f, double dt,
                                               const NoiseStream& noise) {
  SystemParams hat = truth;
  hat.kernel = est;
  return {simulate(truth, init, T_f, dt, noise), simulate(hat, init, T_f, dt, noise)};
}

double traj_error(const Trajectory& X, const Trajectory& Xhat, double t_a, double t_b) {
  if (X.N() != Xhat.N() || X.d() != Xhat.d() || X.L() != Xhat.L() || X.dt() != Xhat.dt())
    throw InputError("traj_error: trajectories do not share a grid");
  const double tol = 1e-9 * X.dt();
  if (!(t_a <= t_b) || t_a < -tol || t_b > X.T() + tol) throw InputError("traj_error: interval outside trajectory");
  const int l0 = static_cast<int>(std::ceil((t_a - tol) / X.dt()));
  const int l1 = std::min(X.L(), static_cast<int>(std::floor((t_b + tol) / X.dt())));
  if (l1 < l0) throw InputError("traj_error: no grid points in interval");
  double acc = 0.0;
  for (int l = l0; l <= l1; ++l) {
    const auto a = X.state(l), b = Xhat.state(l);
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    acc += s / X.N();
  }
  return std::sqrt(acc / (l1 - l0 + 1));
}

double prediction_bound(double T, double R, double S, double kernel_err) {
  if (kernel_err == 0.0) return 0.0;
  const double e = 8.0 * T * T * (R + 1.0) * (R + 1.0) * S * S;
  return 2.0 * T * T * std::exp(e) * kernel_err * kernel_err;
}

double coercivity_estimate(const NormalSystem& system) { return min_eigenvalue(system); }

RateFit fit_rate(std::vector<RatePoint> points, double x_lo, double x_hi) {
  RateFit fit;
  fit.points = std::move(points);
  fit.fit_lo = x_lo;
  fit.fit_hi = x_hi;
  std::vector<double> lx, ly;
  bool tiny = true;
  for (const auto& p : fit.points) {
    if (p.x < x_lo * (1 - 1e-12) || p.x > x_hi * (1 + 1e-12)) continue;
    if (!(p.x > 0.0) || !(p.mean_error > 0.0)) continue;
    if (p.mean_error > 1e-10) tiny = false;
    lx.push_back(std::log(p.x));
    ly.push_back(std::log(p.mean_error));
  }
  if (lx.size() < 3) return fit;
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.degenerate = tiny;
  return fit;
}

RateFit convergence_study(const StudySetup& setup, std::span<const int> M_list, int replicates,
                          std::uint64_t seed) {
  if (replicates < 1) throw InputError("convergence study: replicates must be >= 1");
  const auto rho = ground_truth_rho(setup.system, setup.init, setup.T, setup.dt, setup.M_rho, setup.rho_bins,
                                    derive_seed(seed, {kTagRho}));
  std::vector<RatePoint> points;
  for (int M : M_list) {
    std::vector<double> errs, lams;
    std::size_t n = 0;
    for (int rep = 0; rep < replicates; ++rep) {
      const auto trajs = simulate_ensemble(setup.system, setup.init, setup.T, setup.dt, M,
                                           derive_seed(seed, {kTagTrain, static_cast<std::uint64_t>(M),
                                                              static_cast<std::uint64_t>(rep)}));
      const auto res = estimate(trajs, setup.estimator);
      errs.push_back(kernel_error(res.kernel, setup.system.kernel, rho));
      lams.push_back(res.lambda_min);
      n = res.n;
    }
    const auto [m, s] = mean_std(errs);
    points.push_back({static_cast<double>(M), m, s, n, mean_std(lams).first, setup.system.sigma});
  }
  return fit_rate(std::move(points));
}

std::vector<RateFit> gap_study(const StudySetup& setup, std::span<const int> gaps,
                               std::span<const double> sigmas, int M, int replicates, std::uint64_t seed) {
  if (replicates < 1) throw InputError("gap study: replicates must be >= 1");
  const int L = step_count(setup.T, setup.dt);
  for (int k : gaps)
    if (k < 1 || L % k != 0) throw ConfigError("gap study: gap " + std::to_string(k) + " does not divide L");
  std::vector<RateFit> fits;
  for (std::size_t si = 0; si < sigmas.size(); ++si) {
    SystemParams params = setup.system;
    params.sigma = sigmas[si];
    const auto rho = ground_truth_rho(params, setup.init, setup.T, setup.dt, setup.M_rho, setup.rho_bins,
                                      derive_seed(seed, {kTagRho, si}));
    std::vector<std::vector<double>> errs(gaps.size());
    std::vector<std::vector<double>> lams(gaps.size());
    std::vector<std::size_t> ns(gaps.size(), 0);
    for (int rep = 0; rep < replicates; ++rep) {
      const auto trajs = simulate_ensemble(params, setup.init, setup.T, setup.dt, M,
                                           derive_seed(seed, {kTagGap, si, static_cast<std::uint64_t>(rep)}));
      for (std::size_t g = 0; g < gaps.size(); ++g) {
        std::vector<Trajectory> sub;
        sub.reserve(trajs.size());
        for (const auto& t : trajs) sub.push_back(subsample(t, gaps[g]));
        const auto res = estimate(sub, setup.estimator);
        errs[g].push_back(kernel_error(res.kernel, params.kernel, rho));
        lams[g].push_back(res.lambda_min);
        ns[g] = res.n;
      }
    }
    std::vector<RatePoint> points;
    double xmax = 0.0;
    for (std::size_t g = 0; g < gaps.size(); ++g) {
      const auto [m, s] = mean_std(errs[g]);
      const double x = gaps[g] * setup.dt;
      xmax = std::max(xmax, x);
      points.push_back({x, m, s, ns[g], mean_std(lams[g]).first, params.sigma});
    }
    fits.push_back(fit_rate(std::move(points), xmax / 10.0, xmax));
  }
  return fits;
}

RateFit long_T_study(const StudySetup& setup, std::span<const std::pair<int, double>> grid, double C_long,
                     int replicates, int M_rho_long, std::uint64_t seed) {
  if (grid.empty()) throw InputError("long-T study: empty grid");
  if (replicates < 1) throw InputError("long-T study: replicates must be >= 1");
  double T_max = 0.0;
  for (const auto& [M, T] : grid) {
    if (M < 1 || !(T > 0.0)) throw InputError("long-T study: grid needs M >= 1 and T > 0");
    T_max = std::max(T_max, T);
  }
  const auto rho = ground_truth_rho(setup.system, setup.init, T_max, setup.dt, M_rho_long, setup.rho_bins,
                                    derive_seed(seed, {kTagRhoLong}));
  std::vector<RatePoint> points;
  for (const auto& [M, T] : grid) {
    EstimatorConfig cfg = setup.estimator;
    cfg.n_cells = dimension_rule_long_T(M, T, setup.dt, cfg.s, C_long);
    std::vector<double> errs, lams;
    std::size_t n = 0;
    for (int rep = 0; rep < replicates; ++rep) {
      const auto trajs = simulate_ensemble(
          setup.system, setup.init, T, setup.dt, M,
          derive_seed(seed, {kTagLong, static_cast<std::uint64_t>(M), std::bit_cast<std::uint64_t>(T),
                             static_cast<std::uint64_t>(rep)}));
      const auto res = estimate(trajs, cfg);
      errs.push_back(kernel_error(res.kernel, setup.system.kernel, rho));
      lams.push_back(res.lambda_min);
      n = res.n;
    }
    const auto [m, s] = mean_std(errs);
    points.push_back({M * T, m, s, n, mean_std(lams).first, setup.system.sigma});
  }
  return fit_rate(std::move(points));
}

PredictionReport prediction_study(const StudySetup& setup, const EstimatedKernel& est,
                                  const EmpiricalMeasure& rho, std::uint64_t train_seed, int tests,
                                  std::uint64_t seed) {
  if (tests < 1) throw InputError("prediction study: need at least one test trajectory");
  if (setup.T_f < setup.T) throw ConfigError("prediction study: T_f must be >= T");
  PredictionReport report;
  report.kernel_error = kernel_error(est, setup.system.kernel, rho);
  const double R = std::max(setup.system.kernel.support_radius(), est.smoothed.support_radius());
  const double S = std::max(setup.system.kernel.bound(), est.smoothed.bound());
  const double bound = prediction_bound(setup.T, R, S, report.kernel_error);
  const bool future = setup.T_f > setup.T;

  auto run = [&](std::uint64_t stream_seed, PredictionStats& train_iv, PredictionStats& future_iv) {
    std::vector<double> e_train(static_cast<std::size_t>(tests)), e_future(static_cast<std::size_t>(tests));
    std::vector<double> ratio(static_cast<std::size_t>(tests));
    parallel_for(static_cast<std::size_t>(tests), [&](std::size_t m) {
      const auto [X, Xhat] = predict_pair(setup.system, est.smoothed, setup.init, setup.T_f, setup.dt,
                                          NoiseStream(stream_seed, m));
      e_train[m] = traj_error(X, Xhat, 0.0, setup.T);
      e_future[m] = future ? traj_error(X, Xhat, setup.T, setup.T_f) : 0.0;
      double sup = 0.0;
      const int lT = step_count(setup.T, setup.dt);
      for (int l = 0; l <= lT; ++l) {
        const auto a = X.state(l), b = Xhat.state(l);
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
        sup = std::max(sup, s / X.N());
      }
      ratio[m] = std::isinf(bound) ? 0.0 : (bound > 0.0 ? sup / bound : (sup > 0.0 ? INFINITY : 0.0));
    });
    const auto [mt, st] = mean_std(e_train);
    const auto [mf, sf] = mean_std(e_future);
    const double rmax = *std::max_element(ratio.begin(), ratio.end());
    train_iv = {mt, st, rmax};
    future_iv = {mf, sf, rmax};
  };
  run(train_seed, report.train_ic_train_interval, report.train_ic_future_interval);
  run(derive_seed(seed, {kTagFresh}), report.random_ic_train_interval, report.random_ic_future_interval);
  return report;
}

PredictionExperiment prediction_experiment(const StudySetup& setup, int M, int tests, std::uint64_t seed) {
  PredictionExperiment out;
  const std::uint64_t train_seed = derive_seed(seed, {kTagPredict});
  const auto trajs = simulate_ensemble(setup.system, setup.init, setup.T, setup.dt, M, train_seed);
  out.fit = estimate(trajs, setup.estimator);
  out.rho = ground_truth_rho(setup.system, setup.init, setup.T, setup.dt, setup.M_rho, setup.rho_bins,
                             derive_seed(seed, {kTagRho}));
  out.report = prediction_study(setup, out.fit.kernel, out.rho, train_seed, tests, seed);
  return out;
}

}  // namespace ipsk
