#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ipsk/kernel.hpp"
#include "ipsk/random.hpp"

namespace ipsk {

struct SystemParams {
  int N = 2;
  int d = 1;
  double sigma = 0.0;
  InteractionKernel kernel;

  /// Throws InputError unless N >= 2, d >= 1, sigma >= 0 and finite.
  void validate() const;
};

struct UniformBox {
  double lo = 0.0;
  double hi = 1.0;
};

struct IsotropicGaussian {
  double mean = 0.0;
  double scale = 1.0;
};

using InitialDistribution = std::variant<UniformBox, IsotropicGaussian>;

void validate(const InitialDistribution& init);

struct TrajectoryMeta {
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double sigma = 0.0;
  std::string kernel_id;
  int gap = 1;
};

/// L+1 states X_{t_0}, ..., X_{t_L} of an N-particle system in R^d, stored
/// time-major, particle-major, coordinate-minor. t_l = l * dt.
class Trajectory {
 public:
  Trajectory() = default;
  /// Validates shape, L >= 1, dt > 0 and finiteness of every state.
  Trajectory(int N, int d, int L, std::vector<double> states, TrajectoryMeta meta);

  int N() const { return N_; }
  int d() const { return d_; }
  int L() const { return L_; }
  double dt() const { return meta_.dt; }
  double T() const { return L_ * meta_.dt; }
  double time(int l) const { return l * meta_.dt; }
  std::vector<double> times() const;
  const TrajectoryMeta& meta() const { return meta_; }

  std::size_t state_size() const { return static_cast<std::size_t>(N_) * d_; }
  std::span<const double> state(int l) const {
    return {states_.data() + static_cast<std::size_t>(l) * state_size(), state_size()};
  }
  std::span<const double> data() const { return states_; }

 private:
  int N_ = 0;
  int d_ = 0;
  int L_ = 0;
  std::vector<double> states_;
  TrajectoryMeta meta_;
};

/// Pairwise displacements x_j - x_i and distances for i < j, stored in
/// lexicographic pair order.
struct Pairwise {
  int N = 0;
  int d = 0;
  std::vector<double> displacements;
  std::vector<double> distances;

  std::size_t pair_index(int i, int j) const;
  /// Symmetric, zero on the diagonal.
  double distance(int i, int j) const;
  /// Antisymmetric: displacement(i, j) = x_j - x_i.
  std::vector<double> displacement(int i, int j) const;
};

Pairwise pairwise(std::span<const double> state, int N, int d);

/// f_phi(X)_i = (1/N) sum_{j != i} phi(|x_j - x_i|) (x_j - x_i). `out` has
/// N*d entries and is overwritten.
void drift(std::span<const double> state, int N, int d, const InteractionKernel& kernel,
           std::span<double> out);
std::vector<double> drift(std::span<const double> state, int N, int d,
                          const InteractionKernel& kernel);

/// Pairwise energy V_phi(X) = (1/2N) sum_{i,j} Phi(|x_i - x_j|) where
/// Phi'(r) = phi(r) r, given the antiderivative `potential`.
template <class Potential>
double pairwise_energy(std::span<const double> state, int N, int d, Potential&& potential);

/// One Euler-Maruyama step: X + f(X) dt + sigma sqrt(dt) W.
std::vector<double> em_step(std::span<const double> state, double dt, const SystemParams& params,
                            std::span<const double> increments);

/// Draws an initial state from `init`, consuming draws 0 .. N*d-1 of the
/// stream (particle-major, coordinate-minor).
std::vector<double> sample_initial(const InitialDistribution& init, int N, int d,
                                   const NoiseStream& noise);

/// Integrates from x0 for L steps; step l consumes normals
/// N*d*(l+1) .. N*d*(l+2)-1 of the stream.
Trajectory integrate(const SystemParams& params, std::vector<double> x0, int L, double dt,
                     const NoiseStream& noise);

/// Throws ConfigError when T/dt is not an integer to within 1e-9 relative.
int step_count(double T, double dt);

Trajectory simulate(const SystemParams& params, const InitialDistribution& init, double T,
                    double dt, const NoiseStream& noise);

/// Keeps every k-th state. Throws InputError unless k divides L.
Trajectory subsample(const Trajectory& traj, int k);

// ---------------------------------------------------------------------------

template <class Potential>
double pairwise_energy(std::span<const double> state, int N, int d, Potential&& potential) {
  double v = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double r2 = 0.0;
      for (int c = 0; c < d; ++c) {
        const double dx = state[j * d + c] - state[i * d + c];
        r2 += dx * dx;
      }
      v += potential(std::sqrt(r2));
    }
  // Each unordered pair appears twice in the double sum.
  return v / N;
}

}  // namespace ipsk
