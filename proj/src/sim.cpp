#include "ipsk/sim.hpp"

#include <cmath>

#include "ipsk/error.hpp"

namespace ipsk {

void SystemParams::validate() const {
  if (N < 2) throw InputError("system: need at least two particles");
  if (d < 1) throw InputError("system: dimension must be at least 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InputError("system: sigma must be finite and >= 0");
}

void validate(const InitialDistribution& init) {
  if (const auto* u = std::get_if<UniformBox>(&init)) {
    if (!(u->lo < u->hi)) throw InputError("uniform initial distribution needs lo < hi");
  } else if (const auto* g = std::get_if<IsotropicGaussian>(&init)) {
    if (!(g->scale > 0.0)) throw InputError("gaussian initial distribution needs scale > 0");
  }
}

Trajectory::Trajectory(int N, int d, int L, std::vector<double> states, TrajectoryMeta meta)
    : N_(N), d_(d), L_(L), states_(std::move(states)), meta_(std::move(meta)) {
  if (N_ < 1 || d_ < 1) throw InputError("trajectory: bad shape");
  if (L_ < 1) throw InputError("trajectory: need at least one step");
  if (!(meta_.dt > 0.0) || !std::isfinite(meta_.dt)) throw InputError("trajectory: dt must be positive");
  if (states_.size() != static_cast<std::size_t>(L_ + 1) * state_size())
    throw InputError("trajectory: state count does not match (L+1)*N*d");
  for (double x : states_)
    if (!std::isfinite(x)) throw InputError("trajectory: non-finite state");
}

std::vector<double> Trajectory::times() const {
  std::vector<double> t(static_cast<std::size_t>(L_) + 1);
  for (int l = 0; l <= L_; ++l) t[l] = time(l);
  return t;
}

std::size_t Pairwise::pair_index(int i, int j) const {
  // Row-major upper triangle without the diagonal.
  const auto ii = static_cast<std::size_t>(i), jj = static_cast<std::size_t>(j);
  return ii * (2 * static_cast<std::size_t>(N) - ii - 1) / 2 + (jj - ii - 1);
}

double Pairwise::distance(int i, int j) const {
  if (i == j) return 0.0;
  return i < j ? distances[pair_index(i, j)] : distances[pair_index(j, i)];
}

std::vector<double> Pairwise::displacement(int i, int j) const {
  std::vector<double> v(d, 0.0);
  if (i == j) return v;
  const std::size_t k = i < j ? pair_index(i, j) : pair_index(j, i);
  const double sign = i < j ? 1.0 : -1.0;
  for (int c = 0; c < d; ++c) v[c] = sign * displacements[k * d + c];
  return v;
}

Pairwise pairwise(std::span<const double> state, int N, int d) {
  if (state.size() != static_cast<std::size_t>(N) * d) throw InputError("pairwise: state size mismatch");
  for (double x : state)
    if (!std::isfinite(x)) throw InputError("pairwise: non-finite state");
  Pairwise out{N, d, {}, {}};
  const std::size_t pairs = static_cast<std::size_t>(N) * (N - 1) / 2;
  out.displacements.reserve(pairs * d);
  out.distances.reserve(pairs);
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double r2 = 0.0;
      for (int c = 0; c < d; ++c) {
        const double dx = state[j * d + c] - state[i * d + c];
        out.displacements.push_back(dx);
        r2 += dx * dx;
      }
      out.distances.push_back(std::sqrt(r2));
    }
  return out;
}

void drift(std::span<const double> state, int N, int d, const InteractionKernel& kernel,
           std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const double inv_n = 1.0 / N;
  double dx[16];
  for (int i = 0; i < N; ++i) {
    const double* xi = state.data() + static_cast<std::size_t>(i) * d;
    for (int j = i + 1; j < N; ++j) {
      const double* xj = state.data() + static_cast<std::size_t>(j) * d;
      double r2 = 0.0;
      if (d <= 16) {
        for (int c = 0; c < d; ++c) {
          dx[c] = xj[c] - xi[c];
          r2 += dx[c] * dx[c];
        }
        const double w = kernel(std::sqrt(r2)) * inv_n;
        for (int c = 0; c < d; ++c) {
          out[i * d + c] += w * dx[c];
          out[j * d + c] -= w * dx[c];
        }
      } else {
        for (int c = 0; c < d; ++c) r2 += (xj[c] - xi[c]) * (xj[c] - xi[c]);
        const double w = kernel(std::sqrt(r2)) * inv_n;
        for (int c = 0; c < d; ++c) {
          const double v = w * (xj[c] - xi[c]);
          out[i * d + c] += v;
          out[j * d + c] -= v;
        }
      }
    }
  }
}

std::vector<double> drift(std::span<const double> state, int N, int d,
                          const InteractionKernel& kernel) {
  std::vector<double> out(static_cast<std::size_t>(N) * d);
  drift(state, N, d, kernel, out);
  return out;
}

std::vector<double> em_step(std::span<const double> state, double dt, const SystemParams& params,
                            std::span<const double> increments) {
  if (!(dt > 0.0)) throw InputError("em_step: dt must be positive");
  const std::size_t n = static_cast<std::size_t>(params.N) * params.d;
  if (state.size() != n || increments.size() != n) throw InputError("em_step: size mismatch");
  std::vector<double> f = drift(state, params.N, params.d, params.kernel);
  const double noise = params.sigma * std::sqrt(dt);
  std::vector<double> next(n);
  for (std::size_t k = 0; k < n; ++k) next[k] = state[k] + f[k] * dt + noise * increments[k];
  return next;
}

std::vector<double> sample_initial(const InitialDistribution& init, int N, int d,
                                   const NoiseStream& noise) {
  validate(init);
  const std::size_t n = static_cast<std::size_t>(N) * d;
  std::vector<double> x(n);
  if (const auto* u = std::get_if<UniformBox>(&init)) {
    for (std::size_t k = 0; k < n; ++k) x[k] = u->lo + (u->hi - u->lo) * noise.uniform(k);
  } else {
    const auto& g = std::get<IsotropicGaussian>(init);
    for (std::size_t k = 0; k < n; ++k) x[k] = g.mean + g.scale * noise.normal(k);
  }
  return x;
}

Trajectory integrate(const SystemParams& params, std::vector<double> x0, int L, double dt,
                     const NoiseStream& noise) {
  params.validate();
  if (!(dt > 0.0)) throw InputError("integrate: dt must be positive");
  if (L < 1) throw InputError("integrate: need at least one step");
  const std::size_t n = static_cast<std::size_t>(params.N) * params.d;
  if (x0.size() != n) throw InputError("integrate: initial state has wrong size");
  std::vector<double> states((static_cast<std::size_t>(L) + 1) * n);
  std::copy(x0.begin(), x0.end(), states.begin());
  std::vector<double> f(n);
  const double amp = params.sigma * std::sqrt(dt);
  for (int l = 0; l < L; ++l) {
    const double* x = states.data() + static_cast<std::size_t>(l) * n;
    double* y = states.data() + static_cast<std::size_t>(l + 1) * n;
    drift({x, n}, params.N, params.d, params.kernel, f);
    const std::uint64_t base = n * (static_cast<std::uint64_t>(l) + 1);
    if (amp != 0.0) {
      for (std::size_t k = 0; k < n; ++k) y[k] = x[k] + f[k] * dt + amp * noise.normal(base + k);
    } else {
      for (std::size_t k = 0; k < n; ++k) y[k] = x[k] + f[k] * dt;
    }
  }
  TrajectoryMeta meta{dt, noise.seed(), noise.stream_id(), params.sigma, params.kernel.id(), 1};
  return Trajectory(params.N, params.d, L, std::move(states), std::move(meta));
}

int step_count(double T, double dt) {
  if (!(dt > 0.0) || !(T > 0.0) || !std::isfinite(T) || !std::isfinite(dt))
    throw ConfigError("T and dt must be positive and finite");
  const double ratio = T / dt;
  const double L = std::round(ratio);
  if (L < 1.0 || std::abs(ratio - L) > 1e-9 * std::max(1.0, L))
    throw ConfigError("T/dt must be a positive integer");
  return static_cast<int>(L);
}

Trajectory simulate(const SystemParams& params, const InitialDistribution& init, double T,
                    double dt, const NoiseStream& noise) {
  params.validate();
  const int L = step_count(T, dt);
  return integrate(params, sample_initial(init, params.N, params.d, noise), L, dt, noise);
}

Trajectory subsample(const Trajectory& traj, int k) {
  if (k < 1 || traj.L() % k != 0) throw InputError("subsample: gap must divide the step count");
  if (k == 1) return traj;
  const int L = traj.L() / k;
  const std::size_t n = traj.state_size();
  std::vector<double> states;
  states.reserve((static_cast<std::size_t>(L) + 1) * n);
  for (int l = 0; l <= L; ++l) {
    const auto s = traj.state(l * k);
    states.insert(states.end(), s.begin(), s.end());
  }
  TrajectoryMeta meta = traj.meta();
  meta.dt = traj.dt() * k;
  meta.gap = traj.meta().gap * k;
  return Trajectory(traj.N(), traj.d(), L, std::move(states), std::move(meta));
}

}  // namespace ipsk
