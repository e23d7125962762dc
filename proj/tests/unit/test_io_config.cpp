#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ipsk/config.hpp"
#include "ipsk/error.hpp"
#include "ipsk/io.hpp"
#include "oracles.hpp"

using namespace ipsk;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "ipsk_unit" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json tiny_config() {
  return json::parse(R"({
    "system": {"N": 4, "d": 1, "sigma": 0.1, "kernel": {"type": "opinion"}},
    "init": {"type": "uniform", "lo": 0, "hi": 4},
    "dt": 0.01, "T": 0.2, "T_f": 0.4, "M": 8, "M_rho": 16, "rho_bins": 100,
    "basis": {"degree": 0, "C": 2},
    "study": {"M_list": [4, 8, 16], "gap_list": [1, 2, 4], "replicates": 1},
    "seed": 7
  })");
}

}  // namespace

TEST_CASE("binary trajectories round-trip bit-identically") {
  SystemParams p;
  p.N = 3;
  p.d = 2;
  p.sigma = 0.25;
  p.kernel = InteractionKernel::opinion();
  const auto t = simulate(p, UniformBox{0.0, 2.0}, 0.1, 0.01, NoiseStream(4, 2));
  const auto bytes = io::encode_trajectory(t);
  CHECK(bytes.size() == 4 + 2 + 12 + 16 + t.data().size() * 8);
  const auto u = io::decode_trajectory(bytes);
  CHECK(u.N() == 3);
  CHECK(u.d() == 2);
  CHECK(u.L() == t.L());
  CHECK(u.dt() == t.dt());
  CHECK(u.meta().sigma == 0.25);
  CHECK(std::equal(t.data().begin(), t.data().end(), u.data().begin()));

  const auto dir = scratch("traj");
  io::write_trajectory(dir / "a.bin", t);
  const auto v = io::read_trajectory(dir / "a.bin");
  CHECK(std::equal(t.data().begin(), t.data().end(), v.data().begin()));
}

TEST_CASE("malformed trajectory buffers are rejected") {
  const Trajectory t(2, 1, 1, {0.0, 1.0, 0.5, 1.5}, oracle::meta(0.1));
  auto bytes = io::encode_trajectory(t);
  SUBCASE("bad magic") {
    bytes[0] = 'X';
    CHECK_THROWS_AS(io::decode_trajectory(bytes), IoError);
  }
  SUBCASE("bad version") {
    bytes[4] = 99;
    CHECK_THROWS_AS(io::decode_trajectory(bytes), IoError);
  }
  SUBCASE("truncated") {
    bytes.pop_back();
    CHECK_THROWS_AS(io::decode_trajectory(bytes), IoError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(io::read_trajectory("/nonexistent/ipsk/x.bin"), IoError);
  }
}

TEST_CASE("number formatting") {
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  CHECK(io::format_double(2.0) == "2");
  CHECK(std::stod(io::format_double(M_PI)) == M_PI);
}

TEST_CASE("csv outputs") {
  const auto dir = scratch("csv");
  const Trajectory t(2, 1, 1, {0.0, 1.0, 0.5, 1.5}, oracle::meta(0.5));
  io::write_trajectory_csv(dir / "t.csv", t);
  CHECK(slurp(dir / "t.csv") == "t,x_1_1,x_2_1\n0,0,1\n0.5,0.5,1.5\n");

  const auto m = histogram(std::vector<double>{1.0, 3.0}, 2);
  io::write_measure_csv(dir / "m.csv", m);
  CHECK(slurp(dir / "m.csv") == "bin_lo,bin_hi,weight\n1,2,0.5\n2,3,0.5\n");

  RateFit fit;
  fit.points.push_back(RatePoint{32, 0.5, 0.1, 4, 0.25, 0.1});
  io::write_rate_csv(dir / "r.csv", fit);
  CHECK(slurp(dir / "r.csv") == "x,mean_error,std_error,n,lambda_min\n32,0.5,0.10000000000000001,4,0.25\n");
}

TEST_CASE("basis and estimator JSON round trip") {
  EmpiricalMeasure m;
  for (int b = 0; b <= 200; ++b) m.edges.push_back(0.5 + b * 0.01);
  m.weights.assign(200, 0.0);
  for (int b = 0; b < 200; ++b)
    if (b < 80 || b >= 120) m.weights[b] = 1.0 / 160.0;
  const auto basis = build_basis(m, 5, 1, PartitionMode::Uniform);
  const auto j = io::basis_to_json(basis);
  CHECK(j.contains("knots"));
  CHECK(j.contains("degree"));
  CHECK(j.contains("scales"));
  CHECK(j.at("inactive").size() == basis.inactive_indices().size());
  const auto back = io::basis_from_json(j);
  for (std::size_t p = 0; p < basis.n(); ++p)
    for (double r = 0.5; r <= 2.5; r += 0.0173) CHECK(back.eval(p, r) == basis.eval(p, r));

  std::vector<double> a(basis.n());
  for (std::size_t p = 0; p < a.size(); ++p) a[p] = 0.1 * p;
  const auto est = post_process(a, basis, 50);
  const auto again = io::estimated_kernel_from_json(json::parse(io::estimated_kernel_to_json(est).dump()));
  CHECK(again.grid_values == est.grid_values);
  for (double r = 0.0; r < 3.0; r += 0.05) {
    CHECK(again.raw(r) == est.raw(r));
    CHECK(again.smoothed(r) == est.smoothed(r));
  }
}

TEST_CASE("config parsing") {
  const auto cfg = parse_config(tiny_config());
  CHECK(cfg.system.N == 4);
  CHECK(cfg.estimator.s == 1);
  CHECK(cfg.study.sigma_list == std::vector<double>{0.1});
  CHECK(cfg.seed == 7u);
  const auto again = parse_config(config_to_json(cfg));
  CHECK(config_to_json(again) == config_to_json(cfg));

  auto bad = [](auto edit) {
    auto j = tiny_config();
    edit(j);
    return j;
  };
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["extra"] = 1; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["basis"]["degre"] = 1; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["dt"] = -0.1; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["T_f"] = 0.1; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["T"] = 0.205; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["dt"] = "fast"; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["system"]["kernel"] = {{"type", "spline"}}; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["system"]["N"] = 1; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["basis"]["mode"] = "random"; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j.erase("system"); })), ConfigError);

  const auto dir = scratch("cfg");
  io::write_text(dir / "broken.json", "{ not json");
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "absent.json"), IoError);
}

TEST_CASE("kernel specs") {
  const auto lj = kernel_from_json(json::parse(
      R"({"type": "lennard-jones", "p": 8, "q": 2, "eps": 1, "r_m": 1, "r_trunc": 0.95, "support_radius": 6})"));
  CHECK(lj(2.0) == doctest::Approx(oracle::lj_phi(8, 2, 1.0, 1.0, 2.0)));
  const auto pp = kernel_from_json(json::parse(R"({"type": "piecewise-polynomial", "knots": [0, 1, 2], "degree": 0, "coeffs": [1, 2]})"));
  CHECK(pp(1.5) == 2.0);
  CHECK_THROWS_AS(kernel_from_json(json::parse(R"({"type": "piecewise-polynomial", "knots": [0, 1], "degree": 0, "coeffs": [1, 2]})")),
                  ConfigError);
}

TEST_CASE("environment overrides") {
  auto cfg = parse_config(tiny_config());
  ::setenv("IPSK_SEED", "12345", 1);
  ::setenv("IPSK_OUT", "/tmp/ipsk_env_out", 1);
  apply_env_overrides(cfg);
  ::unsetenv("IPSK_SEED");
  ::unsetenv("IPSK_OUT");
  CHECK(cfg.seed == 12345u);
  CHECK(cfg.output_dir == fs::path("/tmp/ipsk_env_out"));
}

TEST_CASE("presets") {
  for (auto scale : {Scale::Desk, Scale::Paper}) {
    const auto od = preset("opinion", scale);
    CHECK(od.system.N == 10);
    CHECK(od.system.d == 1);
    CHECK(od.system.sigma == 0.1);
    CHECK(od.dt == 0.01);
    CHECK(od.T == 5.0);
    CHECK(od.estimator.degree == 0);
    CHECK(od.study.M_list.front() == 32);
    CHECK(od.study.long_t.has_value());
    const auto lj = preset("lennard-jones", scale);
    CHECK(lj.system.N == 10);
    CHECK(lj.system.d == 2);
    CHECK(lj.system.sigma == 0.05);
    CHECK(lj.dt == 0.001);
    CHECK(lj.T == 0.5);
    CHECK(lj.estimator.degree == 1);
    CHECK_NOTHROW(parse_config(config_to_json(od)));
    CHECK_NOTHROW(parse_config(config_to_json(lj)));
  }
  CHECK(preset("opinion", Scale::Desk).study.M_list.back() == 1024);
  CHECK(preset("opinion", Scale::Desk).M_rho == 10000);
  CHECK_THROWS_AS(preset("flocking", Scale::Desk), ConfigError);
  CHECK_THROWS_AS(scale_from_string("huge"), ConfigError);
}
