#include "ipsk/cli.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ipsk/io.hpp"
#include "ipsk/parallel.hpp"
#include "ipsk/random.hpp"

namespace ipsk::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string traj_name(int m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "traj_%05d.bin", m);
  return buf;
}

void check_homogeneous(const std::vector<Trajectory>& trajs, const std::vector<fs::path>& files) {
  for (std::size_t m = 1; m < trajs.size(); ++m) {
    const auto& a = trajs[0];
    const auto& b = trajs[m];
    if (a.N() != b.N() || a.d() != b.d() || a.L() != b.L() || a.dt() != b.dt())
      throw DataError("'" + files[m].string() + "' differs from '" + files[0].string() + "' in N, d, L or dt");
  }
}

void write_gap_csv(const fs::path& path, const std::vector<RateFit>& fits) {
  RateFit all;
  for (const auto& f : fits) all.points.insert(all.points.end(), f.points.begin(), f.points.end());
  io::write_rate_csv(path, all, true);
}

json prediction_stats(const PredictionStats& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"max_ratio_to_bound", s.max_ratio_to_bound}};
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return kIo;
    case ErrorKind::Data:
    case ErrorKind::Degenerate: return kData;
    case ErrorKind::Config:
    case ErrorKind::Input: return kConfig;
  }
  return kConfig;
}

json cmd_simulate(const ExperimentConfig& cfg, int count) {
  if (count < 1) throw ConfigError("simulate: --count must be >= 1");
  const auto trajs = simulate_ensemble(cfg.system, cfg.init, cfg.T, cfg.dt, count, cfg.seed);
  json files = json::array();
  for (int m = 0; m < count; ++m) {
    const auto name = traj_name(m);
    io::write_trajectory(cfg.output_dir / name, trajs[static_cast<std::size_t>(m)]);
    files.push_back({{"file", name}, {"seed", cfg.seed}, {"stream", m}});
  }
  json manifest = {{"M", count},
                   {"N", cfg.system.N},
                   {"d", cfg.system.d},
                   {"L", trajs.front().L()},
                   {"dt", cfg.dt},
                   {"T", cfg.T},
                   {"sigma", cfg.system.sigma},
                   {"kernel", cfg.system.kernel.id()},
                   {"seed", cfg.seed},
                   {"files", files},
                   {"config", config_to_json(cfg)}};
  io::write_json(cfg.output_dir / "manifest.json", manifest);
  return manifest;
}

json cmd_estimate(const ExperimentConfig& cfg, const std::vector<fs::path>& files) {
  if (files.empty()) throw ConfigError("estimate: no trajectory files given");
  const auto start = std::chrono::steady_clock::now();
  std::vector<Trajectory> trajs;
  trajs.reserve(files.size());
  for (const auto& f : files) trajs.push_back(io::read_trajectory(f));
  check_homogeneous(trajs, files);

  const auto res = estimate(trajs, cfg.estimator);
  const double err = kernel_error(res.kernel, cfg.system.kernel, res.measure);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  io::write_json(cfg.output_dir / "kernel.json", io::estimated_kernel_to_json(res.kernel));
  io::write_kernel_csv(cfg.output_dir / "kernel.csv", res.kernel, &cfg.system.kernel);
  json diag = {{"M", trajs.size()},
               {"n", res.n},
               {"n_cells", res.n_cells},
               {"rank", res.rank},
               {"lambda_min", res.lambda_min},
               {"degenerate", res.degenerate},
               {"support", {res.measure.r_min(), res.measure.r_max()}},
               {"kernel_error", err},
               {"wall_time_s", wall}};
  io::write_json(cfg.output_dir / "diagnostics.json", diag);
  return diag;
}

json cmd_convergence(const ExperimentConfig& cfg) {
  if (cfg.study.M_list.empty()) throw ConfigError("convergence: study.M_list is empty");
  const auto fit = convergence_study(cfg.setup(), cfg.study.M_list, cfg.study.replicates, cfg.seed);
  io::write_rate_csv(cfg.output_dir / "convergence.csv", fit);
  const auto j = io::rate_fit_to_json(fit);
  io::write_json(cfg.output_dir / "convergence.json", j);
  return j;
}

json cmd_gap_study(const ExperimentConfig& cfg) {
  const auto fits = gap_study(cfg.setup(), cfg.study.gap_list, cfg.study.sigma_list, cfg.study.gap_M,
                              cfg.study.replicates, cfg.seed);
  write_gap_csv(cfg.output_dir / "gap_study.csv", fits);
  json out = json::array();
  for (std::size_t i = 0; i < fits.size(); ++i) {
    auto j = io::rate_fit_to_json(fits[i]);
    j["sigma"] = cfg.study.sigma_list[i];
    out.push_back(j);
  }
  json summary = {{"fits", out}};
  io::write_json(cfg.output_dir / "gap_study.json", summary);
  return summary;
}

json cmd_long_t(const ExperimentConfig& cfg) {
  if (!cfg.study.long_t) throw ConfigError("long-t: study.long_t is not configured");
  const auto& lt = *cfg.study.long_t;
  const auto fit = long_T_study(cfg.setup(), lt.grid, lt.C, lt.replicates, lt.M_rho, cfg.seed);
  io::write_rate_csv(cfg.output_dir / "long_t.csv", fit);
  const auto j = io::rate_fit_to_json(fit);
  io::write_json(cfg.output_dir / "long_t.json", j);
  return j;
}

json cmd_prediction(const ExperimentConfig& cfg) {
  const auto exp = prediction_experiment(cfg.setup(), cfg.M, cfg.study.prediction_tests, cfg.seed);
  const auto& r = exp.report;
  std::string table = "ic,interval,mean,std\n";
  auto row = [&](const char* ic, const char* iv, const PredictionStats& s) {
    table += std::string(ic) + ',' + iv + ',' + io::format_double(s.mean) + ',' + io::format_double(s.std) + '\n';
  };
  row("training", "train", r.train_ic_train_interval);
  row("training", "future", r.train_ic_future_interval);
  row("random", "train", r.random_ic_train_interval);
  row("random", "future", r.random_ic_future_interval);
  io::write_text(cfg.output_dir / "prediction.csv", table);
  io::write_kernel_csv(cfg.output_dir / "prediction_kernel.csv", exp.fit.kernel, &cfg.system.kernel);
  json j = {{"M", cfg.M},
            {"tests", cfg.study.prediction_tests},
            {"T", cfg.T},
            {"T_f", cfg.T_f},
            {"kernel_error", r.kernel_error},
            {"training_ic", {{"train", prediction_stats(r.train_ic_train_interval)},
                             {"future", prediction_stats(r.train_ic_future_interval)}}},
            {"random_ic", {{"train", prediction_stats(r.random_ic_train_interval)},
                           {"future", prediction_stats(r.random_ic_future_interval)}}}};
  io::write_json(cfg.output_dir / "prediction.json", j);
  return j;
}

json cmd_reproduce(const ExperimentConfig& cfg, const std::string& target, Scale scale) {
  json summary = {{"target", target}, {"scale", scale == Scale::Desk ? "desk" : "paper"}, {"seed", cfg.seed}};
  summary["convergence"] = cmd_convergence(cfg);
  summary["gap_study"] = cmd_gap_study(cfg);
  if (cfg.study.long_t) summary["long_t"] = cmd_long_t(cfg);
  summary["prediction"] = cmd_prediction(cfg);
  io::write_json(cfg.output_dir / "summary.json", summary);
  return summary;
}

int run(int argc, char** argv) {
  CLI::App app{"Simulate interacting particle systems and learn their interaction kernels"};
  app.require_subcommand(1);

  std::string config_path, out_dir, preset_name, scale_name = "desk";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON)");
    sub->add_option("--preset", preset_name, "Use a built-in preset instead of --config")
        ->check(CLI::IsMember({"opinion", "lennard-jones"}));
    sub->add_option("--scale", scale_name, "Preset scale")->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--threads", threads, "Worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);
  };

  int count = 1;
  std::vector<std::string> files;
  std::string target;

  auto* sim = app.add_subcommand("simulate", "Simulate trajectories");
  common(sim);
  sim->add_option("--count", count, "Number of trajectories")->check(CLI::PositiveNumber);
  auto* est = app.add_subcommand("estimate", "Estimate the kernel from trajectory files");
  common(est);
  est->add_option("files", files, "Trajectory files")->required();
  auto* conv = app.add_subcommand("convergence", "Error vs number of trajectories");
  common(conv);
  auto* gap = app.add_subcommand("gap-study", "Error vs observation gap");
  common(gap);
  auto* lt = app.add_subcommand("long-t", "Error vs M T");
  common(lt);
  auto* pred = app.add_subcommand("predict", "Trajectory prediction with a learned kernel");
  common(pred);
  auto* rep = app.add_subcommand("reproduce", "Run every study of a preset");
  common(rep);
  rep->add_option("--target", target, "opinion or lennard-jones")
      ->required()
      ->check(CLI::IsMember({"opinion", "lennard-jones"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    set_thread_count(threads);
    const Scale scale = scale_from_string(scale_name);
    if (rep->parsed()) preset_name = target;
    ExperimentConfig cfg;
    if (!config_path.empty() && !preset_name.empty() && !rep->parsed())
      throw ConfigError("give either --config or --preset, not both");
    if (!config_path.empty())
      cfg = load_config(config_path);
    else if (!preset_name.empty())
      cfg = preset(preset_name, scale);
    else
      throw ConfigError("no configuration: pass --config or --preset");
    apply_env_overrides(cfg);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;

    if (sim->parsed()) {
      cmd_simulate(cfg, count);
    } else if (est->parsed()) {
      std::vector<fs::path> paths(files.begin(), files.end());
      cmd_estimate(cfg, paths);
    } else if (conv->parsed()) {
      cmd_convergence(cfg);
    } else if (gap->parsed()) {
      cmd_gap_study(cfg);
    } else if (lt->parsed()) {
      cmd_long_t(cfg);
    } else if (pred->parsed()) {
      cmd_prediction(cfg);
    } else {
      cmd_reproduce(cfg, target, scale);
    }
    std::cout << "wrote results to " << cfg.output_dir.string() << '\n';
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
}

}  // namespace ipsk::cli
