#include "ipsk/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "ipsk/error.hpp"
#include "ipsk/io.hpp"

namespace ipsk {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  require_object(j, where);
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <class T>
T get_or(const json& j, const char* key, const std::string& where, T fallback) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

void positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be positive and finite");
}

void at_least(long long v, long long lo, const std::string& what) {
  if (v < lo) throw ConfigError(what + " must be >= " + std::to_string(lo));
}

InitialDistribution init_from_json(const json& j) {
  const std::string where = "init";
  require_object(j, where);
  const auto type = get<std::string>(j, "type", where);
  if (type == "uniform") {
    check_keys(j, where, {"type", "lo", "hi"});
    return UniformBox{get<double>(j, "lo", where), get<double>(j, "hi", where)};
  }
  if (type == "gaussian") {
    check_keys(j, where, {"type", "mean", "scale"});
    return IsotropicGaussian{get_or<double>(j, "mean", where, 0.0), get_or<double>(j, "scale", where, 1.0)};
  }
  throw ConfigError("init: unknown type '" + type + "'");
}

json init_to_json(const InitialDistribution& init) {
  if (const auto* u = std::get_if<UniformBox>(&init)) return {{"type", "uniform"}, {"lo", u->lo}, {"hi", u->hi}};
  const auto& g = std::get<IsotropicGaussian>(init);
  return {{"type", "gaussian"}, {"mean", g.mean}, {"scale", g.scale}};
}

std::uint64_t parse_seed(const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::uint64_t>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    char* end = nullptr;
    const auto v = std::strtoull(s.c_str(), &end, 10);
    if (!s.empty() && *end == '\0' && s[0] != '-') return v;
  }
  throw ConfigError("seed: expected a non-negative integer");
}

}  // namespace

InteractionKernel kernel_from_json(const json& j) {
  const std::string where = "system.kernel";
  require_object(j, where);
  const auto type = get<std::string>(j, "type", where);
  try {
    if (type == "opinion") {
      check_keys(j, where, {"type"});
      return InteractionKernel::opinion();
    }
    if (type == "lennard-jones") {
      check_keys(j, where, {"type", "p", "q", "eps", "r_m", "r_trunc", "support_radius"});
      return InteractionKernel::lennard_jones(get_or<int>(j, "p", where, 8), get_or<int>(j, "q", where, 2),
                                              get_or<double>(j, "eps", where, 1.0),
                                              get_or<double>(j, "r_m", where, 1.0),
                                              get_or<double>(j, "r_trunc", where, 0.95),
                                              get<double>(j, "support_radius", where));
    }
    if (type == "piecewise-polynomial") {
      check_keys(j, where, {"type", "knots", "degree", "coeffs"});
      return InteractionKernel::piecewise_polynomial(get<std::vector<double>>(j, "knots", where),
                                                     get<int>(j, "degree", where),
                                                     get<std::vector<double>>(j, "coeffs", where));
    }
    if (type == "constant") {
      check_keys(j, where, {"type", "c", "support_radius"});
      return InteractionKernel::constant(get<double>(j, "c", where), get<double>(j, "support_radius", where));
    }
    if (type == "zero") {
      check_keys(j, where, {"type"});
      return InteractionKernel::zero();
    }
  } catch (const InputError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const DegenerateError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": unknown type '" + type + "'");
}

void ExperimentConfig::validate() const {
  try {
    system.validate();
    ipsk::validate(init);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  positive(dt, "dt");
  positive(T, "T");
  positive(T_f, "T_f");
  if (T > T_f) throw ConfigError("T must be <= T_f");
  step_count(T, dt);
  step_count(T_f, dt);
  at_least(M, 1, "M");
  at_least(M_rho, 1, "M_rho");
  at_least(rho_bins, 1, "rho_bins");
  at_least(estimator.degree, 0, "basis.degree");
  at_least(estimator.s, 1, "basis.s");
  positive(estimator.C, "basis.C");
  positive(estimator.rcond, "basis.rcond");
  at_least(estimator.grid_points, 2, "basis.grid_points");
  if (estimator.n_cells) at_least(*estimator.n_cells, 1, "basis.n_cells");
  if (estimator.support && !(estimator.support->first >= 0.0 && estimator.support->second > estimator.support->first))
    throw ConfigError("basis.support must satisfy 0 <= lo < hi");
  for (int m : study.M_list) at_least(m, 1, "study.M_list entries");
  for (int k : study.gap_list) at_least(k, 1, "study.gap_list entries");
  for (double s : study.sigma_list)
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("study.sigma_list entries must be >= 0");
  at_least(study.replicates, 1, "study.replicates");
  at_least(study.gap_M, 1, "study.gap_M");
  at_least(study.prediction_tests, 1, "study.prediction_tests");
  if (study.long_t) {
    const auto& lt = *study.long_t;
    if (lt.grid.empty()) throw ConfigError("study.long_t.grid must not be empty");
    for (const auto& [m, t] : lt.grid) {
      at_least(m, 1, "study.long_t.grid M");
      positive(t, "study.long_t.grid T");
      step_count(t, dt);
    }
    positive(lt.C, "study.long_t.C");
    at_least(lt.replicates, 1, "study.long_t.replicates");
    at_least(lt.M_rho, 1, "study.long_t.M_rho");
  }
}

StudySetup ExperimentConfig::setup() const {
  StudySetup s;
  s.system = system;
  s.init = init;
  s.dt = dt;
  s.T = T;
  s.T_f = T_f;
  s.estimator = estimator;
  s.M_rho = M_rho;
  s.rho_bins = rho_bins;
  return s;
}

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "config",
             {"name", "system", "init", "dt", "T", "T_f", "M", "M_rho", "rho_bins", "basis", "study", "seed",
              "output_dir"});
  ExperimentConfig cfg;
  cfg.name = get_or<std::string>(j, "name", "config", cfg.name);

  const auto& sys = j.contains("system") ? j.at("system") : throw ConfigError("config: missing key 'system'");
  check_keys(sys, "system", {"N", "d", "sigma", "kernel"});
  cfg.system.N = get<int>(sys, "N", "system");
  cfg.system.d = get<int>(sys, "d", "system");
  cfg.system.sigma = get<double>(sys, "sigma", "system");
  if (!sys.contains("kernel")) throw ConfigError("system: missing key 'kernel'");
  cfg.kernel_spec = sys.at("kernel");
  cfg.system.kernel = kernel_from_json(cfg.kernel_spec);

  if (!j.contains("init")) throw ConfigError("config: missing key 'init'");
  cfg.init = init_from_json(j.at("init"));
  cfg.dt = get<double>(j, "dt", "config");
  cfg.T = get<double>(j, "T", "config");
  cfg.T_f = get_or<double>(j, "T_f", "config", cfg.T);
  cfg.M = get_or<int>(j, "M", "config", cfg.M);
  cfg.M_rho = get_or<int>(j, "M_rho", "config", cfg.M_rho);
  cfg.rho_bins = get_or<int>(j, "rho_bins", "config", cfg.rho_bins);

  if (j.contains("basis")) {
    const auto& b = j.at("basis");
    const std::string w = "basis";
    check_keys(b, w, {"degree", "s", "C", "mode", "rcond", "grid_points", "rho_bins", "n_cells", "support"});
    auto& e = cfg.estimator;
    e.degree = get_or<int>(b, "degree", w, e.degree);
    e.s = get_or<int>(b, "s", w, e.degree + 1);
    e.C = get_or<double>(b, "C", w, e.C);
    try {
      e.mode = partition_mode_from_string(get_or<std::string>(b, "mode", w, "uniform"));
    } catch (const InputError& err) {
      throw ConfigError(std::string("basis.mode: ") + err.what());
    }
    e.rcond = get_or<double>(b, "rcond", w, e.rcond);
    e.grid_points = get_or<int>(b, "grid_points", w, e.grid_points);
    e.rho_bins = get_or<int>(b, "rho_bins", w, e.rho_bins);
    if (b.contains("n_cells")) e.n_cells = get<int>(b, "n_cells", w);
    if (b.contains("support")) {
      const auto sup = get<std::vector<double>>(b, "support", w);
      if (sup.size() != 2) throw ConfigError("basis.support: expected [lo, hi]");
      e.support = std::pair{sup[0], sup[1]};
    }
  }

  if (j.contains("study")) {
    const auto& s = j.at("study");
    const std::string w = "study";
    check_keys(s, w, {"M_list", "gap_list", "sigma_list", "replicates", "gap_M", "prediction_tests", "long_t"});
    auto& st = cfg.study;
    st.M_list = get_or<std::vector<int>>(s, "M_list", w, st.M_list);
    st.gap_list = get_or<std::vector<int>>(s, "gap_list", w, st.gap_list);
    st.sigma_list = get_or<std::vector<double>>(s, "sigma_list", w, st.sigma_list);
    st.replicates = get_or<int>(s, "replicates", w, st.replicates);
    st.gap_M = get_or<int>(s, "gap_M", w, st.gap_M);
    st.prediction_tests = get_or<int>(s, "prediction_tests", w, st.prediction_tests);
    if (s.contains("long_t")) {
      const auto& l = s.at("long_t");
      const std::string lw = "study.long_t";
      check_keys(l, lw, {"grid", "C", "replicates", "M_rho"});
      LongTConfig lt;
      const auto grid = get<std::vector<std::pair<int, double>>>(l, "grid", lw);
      lt.grid = grid;
      lt.C = get_or<double>(l, "C", lw, lt.C);
      lt.replicates = get_or<int>(l, "replicates", lw, lt.replicates);
      lt.M_rho = get_or<int>(l, "M_rho", lw, lt.M_rho);
      st.long_t = lt;
    }
  }
  if (cfg.study.sigma_list.empty()) cfg.study.sigma_list = {cfg.system.sigma};

  if (j.contains("seed")) cfg.seed = parse_seed(j.at("seed"));
  cfg.output_dir = get_or<std::string>(j, "output_dir", "config", cfg.output_dir.string());
  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json basis = {{"degree", cfg.estimator.degree},       {"s", cfg.estimator.s},
                {"C", cfg.estimator.C},                 {"mode", to_string(cfg.estimator.mode)},
                {"rcond", cfg.estimator.rcond},         {"grid_points", cfg.estimator.grid_points},
                {"rho_bins", cfg.estimator.rho_bins}};
  if (cfg.estimator.n_cells) basis["n_cells"] = *cfg.estimator.n_cells;
  if (cfg.estimator.support) basis["support"] = {cfg.estimator.support->first, cfg.estimator.support->second};
  json study = {{"M_list", cfg.study.M_list},
                {"gap_list", cfg.study.gap_list},
                {"sigma_list", cfg.study.sigma_list},
                {"replicates", cfg.study.replicates},
                {"gap_M", cfg.study.gap_M},
                {"prediction_tests", cfg.study.prediction_tests}};
  if (cfg.study.long_t) {
    const auto& lt = *cfg.study.long_t;
    study["long_t"] = {{"grid", lt.grid}, {"C", lt.C}, {"replicates", lt.replicates}, {"M_rho", lt.M_rho}};
  }
  return {{"name", cfg.name},
          {"system", {{"N", cfg.system.N}, {"d", cfg.system.d}, {"sigma", cfg.system.sigma}, {"kernel", cfg.kernel_spec}}},
          {"init", init_to_json(cfg.init)},
          {"dt", cfg.dt},
          {"T", cfg.T},
          {"T_f", cfg.T_f},
          {"M", cfg.M},
          {"M_rho", cfg.M_rho},
          {"rho_bins", cfg.rho_bins},
          {"basis", basis},
          {"study", study},
          {"seed", cfg.seed},
          {"output_dir", cfg.output_dir.string()}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_json(path));
}

void apply_env_overrides(ExperimentConfig& cfg) {
  if (const char* s = std::getenv("IPSK_SEED"); s && *s) cfg.seed = parse_seed(json(std::string(s)));
  if (const char* o = std::getenv("IPSK_OUT"); o && *o) cfg.output_dir = o;
}

Scale scale_from_string(const std::string& s) {
  if (s == "desk") return Scale::Desk;
  if (s == "paper") return Scale::Paper;
  throw ConfigError("unknown scale '" + s + "' (expected desk or paper)");
}

ExperimentConfig preset(const std::string& target, Scale scale) {
  const bool paper = scale == Scale::Paper;
  json j;
  if (target == "opinion") {
    std::vector<int> Ms;
    for (int M = 32; M <= (paper ? 4096 : 1024); M *= 2) Ms.push_back(M);
    json long_grid = json::array();
    if (paper) {
      for (int M : {1, 4, 16})
        for (double T : {100.0, 500.0, 1500.0}) long_grid.push_back({M, T});
    } else {
      for (int M : {4, 16, 64})
        for (double T : {10.0, 40.0, 160.0}) long_grid.push_back({M, T});
    }
    j = {{"name", "opinion"},
         {"system", {{"N", 10}, {"d", 1}, {"sigma", 0.1}, {"kernel", {{"type", "opinion"}}}}},
         {"init", {{"type", "uniform"}, {"lo", 0.0}, {"hi", 8.0}}},
         {"dt", 0.01},
         {"T", 5.0},
         {"T_f", 50.0},
         {"M", paper ? 4096 : 1024},
         {"M_rho", paper ? 100000 : 10000},
         {"basis", {{"degree", 0}, {"s", 1}, {"C", 40.0}, {"mode", "uniform"}}},
         {"study",
          {{"M_list", Ms},
           {"gap_list", {1, 2, 4, 5, 10, 20, 25, 50, 100}},
           {"sigma_list", {0.1, 0.5}},
           {"replicates", paper ? 10 : 5},
           {"gap_M", 1024},
           {"prediction_tests", paper ? 4096 : 1024},
           {"long_t", {{"grid", long_grid}, {"C", 4.0}, {"replicates", paper ? 10 : 5}, {"M_rho", paper ? 1000 : 200}}}}},
         {"seed", 20201},
         {"output_dir", "out/opinion"}};
  } else if (target == "lennard-jones") {
    std::vector<int> Ms;
    for (int M = 32; M <= (paper ? 4096 : 1024); M *= 2) Ms.push_back(M);
    j = {{"name", "lennard-jones"},
         {"system",
          {{"N", 10},
           {"d", 2},
           {"sigma", 0.05},
           {"kernel",
            {{"type", "lennard-jones"}, {"p", 8}, {"q", 2}, {"eps", 1.0}, {"r_m", 1.0}, {"r_trunc", 0.95},
             {"support_radius", 6.0}}}}},
         {"init", {{"type", "gaussian"}, {"mean", 0.0}, {"scale", 1.0}}},
         {"dt", 0.001},
         {"T", 0.5},
         {"T_f", paper ? 20.0 : 2.0},
         {"M", paper ? 4096 : 1024},
         {"M_rho", paper ? 100000 : 10000},
         {"basis", {{"degree", 1}, {"s", 2}, {"C", 30.0}, {"mode", "rho-adaptive"}}},
         {"study",
          {{"M_list", Ms},
           {"gap_list", {1, 5, 10, 20, 25, 50, 100}},
           {"sigma_list", {0.05, 0.25}},
           {"replicates", paper ? 10 : 5},
           {"gap_M", 1024},
           {"prediction_tests", paper ? 4096 : 1024}}},
         {"seed", 20202},
         {"output_dir", "out/lennard-jones"}};
  } else {
    throw ConfigError("unknown preset '" + target + "' (expected opinion or lennard-jones)");
  }
  return parse_config(j);
}

}  // namespace ipsk
