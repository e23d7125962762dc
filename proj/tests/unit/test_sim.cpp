#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ipsk/error.hpp"
#include "ipsk/sim.hpp"
#include "oracles.hpp"

using namespace ipsk;

namespace {

std::vector<double> random_state(int N, int d, std::uint64_t seed, double scale = 2.0) {
  NoiseStream s(seed, 0);
  std::vector<double> x(static_cast<std::size_t>(N) * d);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = scale * s.uniform(k);
  return x;
}

SystemParams params(int N, int d, double sigma, InteractionKernel k) {
  SystemParams p;
  p.N = N;
  p.d = d;
  p.sigma = sigma;
  p.kernel = std::move(k);
  return p;
}

}  // namespace

TEST_CASE("pairwise distances for two particles") {
  const std::vector<double> x = {0.0, 3.0};
  const auto pw = pairwise(x, 2, 1);
  CHECK(pw.distance(0, 1) == 3.0);
  CHECK(pw.displacement(0, 1)[0] == 3.0);
  CHECK(pw.displacement(1, 0)[0] == -3.0);
  CHECK(pw.distance(1, 1) == 0.0);
}

TEST_CASE("identical positions give zero distances") {
  const std::vector<double> x(8, 1.25);
  const auto pw = pairwise(x, 4, 2);
  for (double r : pw.distances) CHECK(r == 0.0);
}

TEST_CASE("pairwise distances match a per-pair norm") {
  const auto x = random_state(3, 2, 11);
  const auto pw = pairwise(x, 3, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double dx = x[j * 2] - x[i * 2], dy = x[j * 2 + 1] - x[i * 2 + 1];
      CHECK(pw.distance(i, j) == doctest::Approx(std::hypot(dx, dy)).epsilon(1e-15));
      CHECK(pw.distance(i, j) == pw.distance(j, i));
    }
}

TEST_CASE("drift of two particles with unit kernel") {
  const std::vector<double> x = {0.0, 0.0, 1.0, 0.0};
  const auto f = drift(x, 2, 2, InteractionKernel::constant(1.0, 10.0));
  CHECK(f[0] == 0.5);
  CHECK(f[1] == 0.0);
  CHECK(f[2] == -0.5);
  CHECK(f[3] == 0.0);
}

TEST_CASE("zero kernel gives zero drift") {
  const auto x = random_state(6, 3, 5);
  for (double v : drift(x, 6, 3, InteractionKernel::zero())) CHECK(v == 0.0);
}

TEST_CASE("drift matches the brute-force double loop") {
  const auto k = InteractionKernel::opinion();
  const auto x = random_state(7, 2, 3, 1.5);
  const auto f = drift(x, 7, 2, k);
  const auto g = oracle::drift(x, 7, 2, [&](double r) { return k(r); });
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] == doctest::Approx(g[i]).epsilon(1e-13));
}

TEST_CASE("drift sums to zero") {
  for (const auto& k : {InteractionKernel::opinion(), InteractionKernel::lennard_jones(8, 2, 1, 1, 0.95, 6)}) {
    const auto x = random_state(10, 2, 17);
    const auto f = drift(x, 10, 2, k);
    for (int c = 0; c < 2; ++c) {
      double s = 0.0, scale = 0.0;
      for (int i = 0; i < 10; ++i) {
        s += f[i * 2 + c];
        scale = std::max(scale, std::abs(f[i * 2 + c]));
      }
      CHECK(std::abs(s) <= 1e-12 * std::max(1.0, scale));
    }
  }
}

TEST_CASE("drift is minus the gradient of the pairwise energy") {
  const auto k = InteractionKernel::opinion();
  const double a = 1.0 / std::sqrt(2.0) - 0.05, b = 1.0 / std::sqrt(2.0) + 0.05;
  const std::vector<double> breaks = {a, b, 0.95, 1.05};
  auto Phi = [&](double r) { return oracle::antiderivative([&](double s) { return k(s); }, r, breaks); };
  const auto x = random_state(5, 2, 23, 1.2);
  const auto f = drift(x, 5, 2, k);
  const auto g = oracle::neg_gradient(x, 5, 2, Phi, 1e-6);
  double scale = 0.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(f[i] - g[i]) <= 1e-5 * scale);
}

TEST_CASE("pairwise_energy agrees with the oracle energy") {
  auto Phi = [](double r) { return 0.5 * r * r; };  // phi == 1
  const auto x = random_state(4, 3, 8);
  CHECK(pairwise_energy(x, 4, 3, Phi) == doctest::Approx(oracle::energy(x, 4, 3, Phi)));
}

TEST_CASE("drift is permutation equivariant") {
  const auto k = InteractionKernel::opinion();
  const auto x = random_state(6, 1, 31, 3.0);
  const std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  std::vector<double> y(x.size());
  for (int i = 0; i < 6; ++i) y[i] = x[perm[i]];
  const auto fx = drift(x, 6, 1, k), fy = drift(y, 6, 1, k);
  for (int i = 0; i < 6; ++i) CHECK(fy[i] == doctest::Approx(fx[perm[i]]).epsilon(1e-14));
}

TEST_CASE("euler-maruyama steps") {
  SUBCASE("no noise, no interaction") {
    const std::vector<double> x = {0.3, -1.0}, w = {5.0, 7.0};
    const auto y = em_step(x, 0.1, params(2, 1, 0.0, InteractionKernel::zero()), w);
    CHECK(y == x);
  }
  SUBCASE("pure noise") {
    const std::vector<double> x = {0.3, -1.0}, w = {0.5, -2.0};
    const auto y = em_step(x, 1.0, params(2, 1, 1.0, InteractionKernel::zero()), w);
    CHECK(y[0] == doctest::Approx(0.8));
    CHECK(y[1] == doctest::Approx(-3.0));
  }
  SUBCASE("one deterministic step") {
    const std::vector<double> x = {0.0, 2.0}, w = {0.0, 0.0};
    const auto y = em_step(x, 0.1, params(2, 1, 0.0, InteractionKernel::constant(1.0, 10.0)), w);
    CHECK(y[0] == doctest::Approx(0.1));
    CHECK(y[1] == doctest::Approx(1.9));
  }
}

TEST_CASE("simulation is reproducible and stream-addressed") {
  const auto p = params(4, 2, 0.3, InteractionKernel::opinion());
  const InitialDistribution init = UniformBox{0.0, 2.0};
  const auto a = simulate(p, init, 0.5, 0.01, NoiseStream(9, 3));
  const auto b = simulate(p, init, 0.5, 0.01, NoiseStream(9, 3));
  const auto c = simulate(p, init, 0.5, 0.01, NoiseStream(9, 4));
  CHECK(a.L() == 50);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  CHECK_FALSE(std::equal(a.data().begin(), a.data().end(), c.data().begin()));

  // Step l uses normals N d (l+1) .. N d (l+2) - 1.
  const NoiseStream s(9, 3);
  const auto x0 = a.state(0), x1 = a.state(1);
  std::vector<double> w(8);
  for (std::size_t k = 0; k < 8; ++k) w[k] = s.normal(8 + k);
  const auto y = em_step(x0, 0.01, p, w);
  for (std::size_t k = 0; k < 8; ++k) CHECK(y[k] == x1[k]);
}

TEST_CASE("initial distributions") {
  const NoiseStream s(1, 0);
  const auto u = sample_initial(UniformBox{2.0, 3.0}, 100, 1, s);
  for (double v : u) CHECK((v > 2.0 && v < 3.0));
  const auto g = sample_initial(IsotropicGaussian{1.0, 2.0}, 2000, 2, s);
  const double mean = std::accumulate(g.begin(), g.end(), 0.0) / g.size();
  CHECK(mean == doctest::Approx(1.0).epsilon(0.1));
  CHECK_THROWS_AS(validate(InitialDistribution{UniformBox{1.0, 1.0}}), InputError);
}

TEST_CASE("step count requires an integer ratio") {
  CHECK(step_count(5.0, 0.01) == 500);
  CHECK(step_count(0.5, 0.001) == 500);
  CHECK_THROWS_AS(step_count(1.0, 0.3), ConfigError);
  CHECK_THROWS_AS(step_count(-1.0, 0.1), ConfigError);
}

TEST_CASE("subsampling") {
  const auto p = params(3, 1, 0.2, InteractionKernel::opinion());
  const auto t = simulate(p, UniformBox{0.0, 1.0}, 0.1, 0.01, NoiseStream(2, 0));
  const auto same = subsample(t, 1);
  CHECK(std::equal(t.data().begin(), t.data().end(), same.data().begin()));
  const auto five = subsample(t, 5);
  CHECK(five.L() == 2);
  CHECK(five.dt() == doctest::Approx(0.05));
  CHECK(five.time(1) == doctest::Approx(0.05));
  CHECK(five.time(2) == doctest::Approx(0.1));
  const auto two = subsample(t, 2);
  for (int l = 0; l <= two.L(); ++l) {
    const auto a = two.state(l), b = t.state(2 * l);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
  CHECK_THROWS_AS(subsample(t, 3), InputError);
}

TEST_CASE("trajectory validation") {
  CHECK_THROWS_AS(Trajectory(2, 1, 1, {0.0, 1.0, 2.0}, oracle::meta(0.1)), InputError);
  CHECK_THROWS_AS(Trajectory(2, 1, 1, {0.0, 1.0, 2.0, NAN}, oracle::meta(0.1)), InputError);
  CHECK_THROWS_AS(Trajectory(2, 1, 1, {0.0, 1.0, 2.0, 3.0}, oracle::meta(0.0)), InputError);
  CHECK_THROWS_AS(params(1, 1, 0.0, InteractionKernel::zero()).validate(), InputError);
}
