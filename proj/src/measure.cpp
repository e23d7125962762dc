#include "ipsk/measure.hpp"

#include <algorithm>
#include <limits>

#include "ipsk/error.hpp"
#include "ipsk/parallel.hpp"

namespace ipsk {

namespace {

constexpr std::size_t kBlock = 32;

void check_homogeneous(std::span<const Trajectory> trajs) {
  if (trajs.empty()) throw InputError("empirical measure: no trajectories");
  for (const auto& t : trajs)
    if (t.N() != trajs[0].N() || t.d() != trajs[0].d())
      throw DataError("empirical measure: trajectories differ in N or d");
}

template <class Visit>
void for_each_distance(const Trajectory& t, Visit&& visit) {
  const int N = t.N(), d = t.d();
  for (int l = 0; l < t.L(); ++l) {
    const auto x = t.state(l);
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) {
        double r2 = 0.0;
        for (int c = 0; c < d; ++c) {
          const double dx = x[j * d + c] - x[i * d + c];
          r2 += dx * dx;
        }
        visit(std::sqrt(r2));
      }
  }
}

std::vector<double> uniform_edges(double lo, double hi, int bins) {
  std::vector<double> e(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) e[b] = lo + (hi - lo) * b / bins;
  e.back() = hi;
  return e;
}

std::pair<double, double> widen(double lo, double hi) {
  if (hi > lo) return {lo, hi};
  const double delta = std::max(1e-6 * std::abs(lo), 1e-12);
  return {std::max(0.0, lo - delta), hi + delta};
}

EmpiricalMeasure finish(std::vector<double> edges, const std::vector<std::uint64_t>& counts) {
  EmpiricalMeasure m;
  m.edges = std::move(edges);
  m.weights.assign(counts.size(), 0.0);
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw InputError("empirical measure: no samples in range");
  for (std::size_t b = 0; b < counts.size(); ++b)
    m.weights[b] = static_cast<double>(counts[b]) / static_cast<double>(total);
  m.counts_total = total;
  return m;
}

EmpiricalMeasure histogram_range(std::span<const Trajectory> trajs, int bins, double lo, double hi) {
  auto edges = uniform_edges(lo, hi, bins);
  const std::size_t blocks = (trajs.size() + kBlock - 1) / kBlock;
  std::vector<std::vector<std::uint64_t>> partial(blocks);
  parallel_for(blocks, [&](std::size_t blk) {
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins), 0);
    const std::size_t end = std::min(trajs.size(), (blk + 1) * kBlock);
    for (std::size_t m = blk * kBlock; m < end; ++m)
      for_each_distance(trajs[m], [&](double r) {
        const auto b = locate(edges, r);
        if (b >= 0) ++counts[static_cast<std::size_t>(b)];
      });
    partial[blk] = std::move(counts);
  });
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins), 0);
  for (const auto& p : partial)
    for (std::size_t b = 0; b < counts.size(); ++b) counts[b] += p[b];
  return finish(std::move(edges), counts);
}

}  // namespace

std::ptrdiff_t locate(std::span<const double> edges, double r) {
  const std::size_t cells = edges.size() - 1;
  if (!(r >= edges.front()) || !(r <= edges.back())) return -1;
  const double pos = (r - edges.front()) / (edges.back() - edges.front()) * static_cast<double>(cells);
  auto g = static_cast<std::ptrdiff_t>(std::min<double>(std::max(pos, 0.0), static_cast<double>(cells - 1)));
  const auto last = static_cast<std::ptrdiff_t>(cells) - 1;
  for (int step = 0; step < 4; ++step) {
    if (g > 0 && r < edges[g]) {
      --g;
    } else if (g < last && r >= edges[g + 1]) {
      ++g;
    } else {
      return g;
    }
  }
  // Non-uniform edges: fall back to bisection.
  const auto it = std::upper_bound(edges.begin(), edges.end(), r);
  return std::min<std::ptrdiff_t>(std::distance(edges.begin(), it) - 1, last);
}

EmpiricalMeasure empirical_rho(std::span<const Trajectory> trajs, int bins) {
  check_homogeneous(trajs);
  if (bins < 1) throw InputError("empirical measure: need at least one bin");
  std::vector<double> lo(trajs.size(), std::numeric_limits<double>::infinity());
  std::vector<double> hi(trajs.size(), -std::numeric_limits<double>::infinity());
  parallel_for(trajs.size(), [&](std::size_t m) {
    for_each_distance(trajs[m], [&](double r) {
      lo[m] = std::min(lo[m], r);
      hi[m] = std::max(hi[m], r);
    });
  });
  const auto [a, b] = widen(*std::min_element(lo.begin(), lo.end()), *std::max_element(hi.begin(), hi.end()));
  return histogram_range(trajs, bins, a, b);
}

EmpiricalMeasure empirical_rho(std::span<const Trajectory> trajs, int bins, double lo, double hi) {
  check_homogeneous(trajs);
  if (bins < 1) throw InputError("empirical measure: need at least one bin");
  if (!(lo < hi)) throw InputError("empirical measure: range must have lo < hi");
  return histogram_range(trajs, bins, lo, hi);
}

EmpiricalMeasure histogram(std::span<const double> distances, int bins) {
  if (distances.empty()) throw InputError("histogram: no samples");
  if (bins < 1) throw InputError("histogram: need at least one bin");
  const auto [mn, mx] = std::minmax_element(distances.begin(), distances.end());
  const auto [a, b] = widen(*mn, *mx);
  auto edges = uniform_edges(a, b, bins);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins), 0);
  for (double r : distances) ++counts[static_cast<std::size_t>(locate(edges, r))];
  return finish(std::move(edges), counts);
}

std::vector<double> distance_samples(std::span<const Trajectory> trajs) {
  std::vector<double> out;
  for (const auto& t : trajs) for_each_distance(t, [&](double r) { out.push_back(r); });
  return out;
}

AutocorrResult autocorr_time(std::span<const Trajectory> trajs) {
  if (trajs.empty()) throw InputError("autocorrelation: no trajectories");
  const double dt = trajs[0].dt();
  if (trajs[0].L() < 2) throw InputError("autocorrelation: need L >= 2");

  // Centred r_12 series per trajectory, plus its lag-0 sum of squares.
  std::vector<std::vector<double>> series;
  std::vector<double> energy;
  std::size_t len = std::numeric_limits<std::size_t>::max();
  for (const auto& t : trajs) {
    std::vector<double> s(static_cast<std::size_t>(t.L()) + 1);
    for (int l = 0; l <= t.L(); ++l) {
      const auto x = t.state(l);
      double r2 = 0.0;
      for (int c = 0; c < t.d(); ++c) r2 += (x[t.d() + c] - x[c]) * (x[t.d() + c] - x[c]);
      s[l] = std::sqrt(r2);
    }
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double e = 0.0, scale = 0.0;
    for (double& v : s) {
      scale = std::max(scale, std::abs(v));
      v -= mean;
      e += v * v;
    }
    if (!(e > 1e-24 * scale * scale * static_cast<double>(s.size())) ) continue;
    len = std::min(len, s.size());
    series.push_back(std::move(s));
    energy.push_back(e);
  }
  if (series.empty()) return {dt, true, 0};

  double sum = 0.0;
  int cutoff = 0;
  for (std::size_t k = 1; k < len; ++k) {
    double c = 0.0;
    for (std::size_t m = 0; m < series.size(); ++m) {
      const auto& s = series[m];
      double acc = 0.0;
      for (std::size_t l = 0; l + k < s.size(); ++l) acc += s[l] * s[l + k];
      c += acc / energy[m];
    }
    c /= static_cast<double>(series.size());
    cutoff = static_cast<int>(k);
    if (c < 0.05) break;
    sum += c;
  }
  return {std::max(dt, dt * (1.0 + 2.0 * sum)), false, cutoff};
}

double effective_sample_size(double M, double T, double tau) {
  if (!(M > 0.0) || !(T > 0.0) || !(tau > 0.0))
    throw InputError("effective sample size: arguments must be positive");
  return M * T / tau;
}

}  // namespace ipsk
