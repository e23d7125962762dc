#include "ipsk/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ipsk/error.hpp"

namespace ipsk::io {

namespace {

template <class U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <class U>
U get_le(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw IoError("trajectory: truncated data");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(in[pos + i]) << (8 * i);
  pos += sizeof(U);
  return v;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  return os;
}

void check_written(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

std::vector<std::uint8_t> encode_trajectory(const Trajectory& traj) {
  std::vector<std::uint8_t> out;
  out.reserve(34 + traj.data().size() * 8);
  for (char c : std::string("IPSK")) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint16_t>(out, kTrajectoryVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(traj.N()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(traj.d()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(traj.L()));
  put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(traj.dt()));
  put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(traj.meta().sigma));
  for (double x : traj.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
  return out;
}

Trajectory decode_trajectory(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "IPSK", 4) != 0) throw IoError("trajectory: bad magic");
  std::size_t pos = 4;
  const auto version = get_le<std::uint16_t>(bytes, pos);
  if (version != kTrajectoryVersion) throw IoError("trajectory: unsupported version " + std::to_string(version));
  const auto N = get_le<std::uint32_t>(bytes, pos);
  const auto d = get_le<std::uint32_t>(bytes, pos);
  const auto L = get_le<std::uint32_t>(bytes, pos);
  const double dt = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  const double sigma = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  const std::uint64_t count = (static_cast<std::uint64_t>(L) + 1) * N * d;
  if (bytes.size() - pos != count * 8) throw IoError("trajectory: payload size does not match header");
  std::vector<double> states(count);
  for (auto& x : states) x = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  TrajectoryMeta meta;
  meta.dt = dt;
  meta.sigma = sigma;
  try {
    return Trajectory(static_cast<int>(N), static_cast<int>(d), static_cast<int>(L), std::move(states), meta);
  } catch (const InputError& e) {
    throw IoError(std::string("trajectory: ") + e.what());
  }
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  const auto bytes = encode_trajectory(traj);
  auto os = open_out(path, true);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  check_written(os, path);
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_trajectory(bytes);
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  auto os = open_out(path);
  os << 't';
  for (int i = 1; i <= traj.N(); ++i)
    for (int c = 1; c <= traj.d(); ++c) os << ",x_" << i << '_' << c;
  os << '\n';
  for (int l = 0; l <= traj.L(); ++l) {
    os << format_double(traj.time(l));
    for (double x : traj.state(l)) os << ',' << format_double(x);
    os << '\n';
  }
  check_written(os, path);
}

void write_measure_csv(const std::filesystem::path& path, const EmpiricalMeasure& measure) {
  auto os = open_out(path);
  os << "bin_lo,bin_hi,weight\n";
  for (std::size_t b = 0; b < measure.bins(); ++b)
    os << format_double(measure.edges[b]) << ',' << format_double(measure.edges[b + 1]) << ','
       << format_double(measure.weights[b]) << '\n';
  check_written(os, path);
}

nlohmann::json basis_to_json(const HypothesisBasis& basis) {
  return {{"knots", basis.knots()},
          {"degree", basis.degree()},
          {"scales", basis.transform()},
          {"inactive", basis.inactive_indices()}};
}

HypothesisBasis basis_from_json(const nlohmann::json& j) {
  try {
    auto knots = j.at("knots").get<std::vector<double>>();
    const int degree = j.at("degree").get<int>();
    auto transform = j.at("scales").get<std::vector<double>>();
    if (knots.size() < 2 || degree < 0) throw IoError("basis JSON: bad knots or degree");
    std::vector<bool> active((knots.size() - 1) * static_cast<std::size_t>(degree + 1), true);
    for (auto p : j.at("inactive").get<std::vector<std::size_t>>()) {
      if (p >= active.size()) throw IoError("basis JSON: inactive index out of range");
      active[p] = false;
    }
    return HypothesisBasis(std::move(knots), degree, std::move(transform), std::move(active));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("basis JSON: ") + e.what());
  } catch (const InputError& e) {
    throw IoError(std::string("basis JSON: ") + e.what());
  }
}

nlohmann::json estimated_kernel_to_json(const EstimatedKernel& est) {
  return {{"basis", basis_to_json(est.basis)},
          {"coefficients", est.coefficients},
          {"grid", est.grid},
          {"grid_values", est.grid_values}};
}

EstimatedKernel estimated_kernel_from_json(const nlohmann::json& j) {
  try {
    const auto basis = basis_from_json(j.at("basis"));
    const auto coeffs = j.at("coefficients").get<std::vector<double>>();
    const auto grid = j.at("grid").get<std::vector<double>>();
    if (coeffs.size() != basis.n()) throw IoError("kernel JSON: coefficient count mismatch");
    return post_process(coeffs, basis, static_cast<int>(grid.size()));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("kernel JSON: ") + e.what());
  }
}

void write_kernel_csv(const std::filesystem::path& path, const EstimatedKernel& est,
                      const InteractionKernel* truth) {
  auto os = open_out(path);
  os << (truth ? "r,phi_hat,phi_true\n" : "r,phi_hat\n");
  for (std::size_t g = 0; g < est.grid.size(); ++g) {
    os << format_double(est.grid[g]) << ',' << format_double(est.grid_values[g]);
    if (truth) os << ',' << format_double((*truth)(est.grid[g]));
    os << '\n';
  }
  check_written(os, path);
}

void write_rate_csv(const std::filesystem::path& path, const RateFit& fit, bool with_sigma) {
  auto os = open_out(path);
  os << "x,mean_error,std_error,n,lambda_min" << (with_sigma ? ",sigma" : "") << '\n';
  for (const auto& p : fit.points) {
    os << format_double(p.x) << ',' << format_double(p.mean_error) << ',' << format_double(p.std_error) << ','
       << p.n << ',' << format_double(p.lambda_min);
    if (with_sigma) os << ',' << format_double(p.sigma);
    os << '\n';
  }
  check_written(os, path);
}

nlohmann::json rate_fit_to_json(const RateFit& fit) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : fit.points)
    points.push_back({{"x", p.x},
                      {"mean_error", p.mean_error},
                      {"std_error", p.std_error},
                      {"n", p.n},
                      {"lambda_min", p.lambda_min},
                      {"sigma", p.sigma}});
  return {{"slope", fit.slope},
          {"intercept", fit.intercept},
          {"degenerate", fit.degenerate},
          {"fit_range", {fit.fit_lo, std::isinf(fit.fit_hi) ? nlohmann::json(nullptr) : nlohmann::json(fit.fit_hi)}},
          {"points", points}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
  check_written(os, path);
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto os = open_out(path);
  os << text;
  check_written(os, path);
}

}  // namespace ipsk::io
