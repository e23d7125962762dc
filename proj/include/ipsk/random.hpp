#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace ipsk {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic seed derivation from a master seed and a tuple of tags.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(master);
  for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

/// Counter-based Gaussian/uniform stream. Draw k is a pure function of
/// (seed, stream id, k): there is no hidden state, so a trajectory's noise can
/// be replayed from any step by index alone.
///
/// Normals use the cosine branch of Box-Muller on two hashed uniforms.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id),
        base_(splitmix64(splitmix64(seed) ^ (stream_id * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t index, unsigned lane = 0) const {
    const std::uint64_t u = splitmix64(base_ ^ splitmix64(2 * index + lane));
    return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal(std::uint64_t index) const {
    const double u1 = uniform(index, 0);
    const double u2 = uniform(index, 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t base_;
};

}  // namespace ipsk
