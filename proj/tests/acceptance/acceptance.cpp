// Acceptance suite: one PASS/FAIL line per criterion, using the desk presets.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ipsk/config.hpp"
#include "ipsk/eval.hpp"
#include "ipsk/parallel.hpp"
#include "oracles.hpp"

using namespace ipsk;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string points_of(const RateFit& fit) {
  std::string s;
  for (const auto& p : fit.points) s += "  x=" + fmt("%-8g", p.x) + " error=" + fmt("%.4g", p.mean_error) +
                                        " +- " + fmt("%.2g", p.std_error) + " n=" + std::to_string(p.n) + "\n";
  return s;
}

Outcome rate_in_band(const RateFit& fit, double lo, double hi) {
  Outcome o;
  o.pass = !fit.degenerate && fit.slope >= lo && fit.slope <= hi;
  o.detail = "slope " + fmt("%.3f", fit.slope) + " (band [" + fmt("%.2f", lo) + ", " + fmt("%.2f", hi) + "])\n" +
             points_of(fit);
  return o;
}

Outcome convergence(const std::string& target, double lo, double hi, std::uint64_t seed) {
  const auto cfg = preset(target, Scale::Desk);
  return rate_in_band(convergence_study(cfg.setup(), cfg.study.M_list, cfg.study.replicates, seed), lo, hi);
}

Outcome gap_bias(std::uint64_t seed) {
  const auto cfg = preset("opinion", Scale::Desk);
  const std::vector<double> sigmas = {0.1, 0.5};
  const auto fits = gap_study(cfg.setup(), cfg.study.gap_list, sigmas, 1024, cfg.study.replicates, seed);
  Outcome o;
  bool slopes = true;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const bool ok = !fits[i].degenerate && fits[i].slope >= 0.3 && fits[i].slope <= 0.7;
    slopes = slopes && ok;
    o.detail += "sigma " + fmt("%.1f", sigmas[i]) + ": slope " + fmt("%.3f", fits[i].slope) + " (band [0.30, 0.70]) " +
                (ok ? "ok" : "out of band") + "\n" + points_of(fits[i]);
  }
  bool monotone = true;
  const auto& a = fits[0].points;
  const auto& b = fits[1].points;
  for (std::size_t g = 0; g < a.size(); ++g) {
    if (a[g].x < fits[0].fit_lo * (1 - 1e-12)) continue;
    if (!(b[g].mean_error + 2.0 * b[g].std_error > a[g].mean_error)) monotone = false;
  }
  o.detail += std::string("error increases with sigma at every coarse gap: ") + (monotone ? "yes" : "no") + "\n";
  o.pass = slopes && monotone;
  return o;
}

Outcome prediction(std::uint64_t seed) {
  const auto cfg = preset("opinion", Scale::Desk);
  const auto exp = prediction_experiment(cfg.setup(), 1024, cfg.study.prediction_tests, seed);
  const auto& r = exp.report;
  const double ref = 2.1e-2;
  const double train = r.train_ic_train_interval.mean, fresh = r.random_ic_train_interval.mean;
  const bool band = train >= ref / 3 && train <= 3 * ref && fresh >= ref / 3 && fresh <= 3 * ref;
  const double rel = std::abs(train - fresh) / std::max(train, fresh);
  Outcome o;
  o.pass = band && rel < 0.3;
  o.detail = "[0,5] mean error: training ICs " + fmt("%.4g", train) + ", random ICs " + fmt("%.4g", fresh) +
             " (band [" + fmt("%.3g", ref / 3) + ", " + fmt("%.3g", 3 * ref) + "]); relative difference " +
             fmt("%.3f", rel) + " (< 0.30)\n" + "[5," + fmt("%g", cfg.T_f) + "] mean error: training ICs " +
             fmt("%.4g", r.train_ic_future_interval.mean) + ", random ICs " + fmt("%.4g", r.random_ic_future_interval.mean) +
             "; kernel error " + fmt("%.4g", r.kernel_error) + "\n";
  return o;
}

Outcome exact_recovery(std::uint64_t seed) {
  EmpiricalMeasure flat;
  for (int b = 0; b <= 1000; ++b) flat.edges.push_back(b * 0.01);
  flat.weights.assign(1000, 1e-3);
  Outcome o;
  o.pass = true;
  for (int degree : {0, 1}) {
    const auto basis = build_basis(flat, 8, degree, PartitionMode::Uniform);
    std::vector<double> e(basis.n(), 0.0);
    e[degree == 0 ? 1 : 2] = 0.05;
    SystemParams p;
    p.N = 6;
    p.d = 1;
    p.sigma = 0.0;
    p.kernel = basis.combination(e);
    const auto trajs = simulate_ensemble(p, UniformBox{0.0, 3.0}, 0.5, 0.01, 16, seed + degree);
    EstimatorConfig cfg;
    cfg.degree = degree;
    cfg.s = degree + 1;
    cfg.n_cells = 8;
    cfg.support = std::pair{0.0, 10.0};
    const auto res = estimate(trajs, cfg);
    const auto rho = ground_truth_rho(p, UniformBox{0.0, 3.0}, 0.5, 0.01, 256, 1000, seed + 100 + degree);
    const double err = kernel_error(res.kernel, p.kernel, rho);
    o.pass = o.pass && err < 1e-6;
    o.detail += "degree " + std::to_string(degree) + ": error " + fmt("%.3g", err) + " (< 1e-6)\n";
  }
  return o;
}

std::vector<double> random_state(int N, int d, std::uint64_t seed, double scale) {
  NoiseStream s(seed, 0);
  std::vector<double> x(static_cast<std::size_t>(N) * d);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = scale * s.uniform(k);
  return x;
}

Outcome properties(std::uint64_t seed) {
  Outcome o;
  o.pass = true;
  auto check = [&](const std::string& name, bool ok) {
    o.pass = o.pass && ok;
    o.detail += (ok ? "ok    " : "FAIL  ") + name + "\n";
  };

  {
    bool ok = true;
    for (const auto& k : {InteractionKernel::opinion(), InteractionKernel::lennard_jones(8, 2, 1, 1, 0.95, 6)})
      for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_state(10, 2, seed + trial, 3.0);
        const auto f = drift(x, 10, 2, k);
        for (int c = 0; c < 2; ++c) {
          double s = 0.0, scale = 0.0;
          for (int i = 0; i < 10; ++i) {
            s += f[i * 2 + c];
            scale = std::max(scale, std::abs(f[i * 2 + c]));
          }
          ok = ok && std::abs(s) <= 1e-12 * std::max(1.0, scale);
        }
      }
    check("drift sums to zero (1e-12)", ok);
  }
  {
    const auto k = InteractionKernel::opinion();
    const double a = 1.0 / std::sqrt(2.0) - 0.05, b = 1.0 / std::sqrt(2.0) + 0.05;
    const std::vector<double> breaks = {a, b, 0.95, 1.05};
    auto Phi = [&](double r) { return oracle::antiderivative([&](double s) { return k(s); }, r, breaks); };
    bool ok = true;
    for (int trial = 0; trial < 5; ++trial) {
      const auto x = random_state(6, 2, seed + 50 + trial, 1.2);
      const auto f = drift(x, 6, 2, k);
      const auto g = oracle::neg_gradient(x, 6, 2, Phi, 1e-6);
      double scale = 0.0;
      for (double v : f) scale = std::max(scale, std::abs(v));
      for (std::size_t i = 0; i < f.size(); ++i) ok = ok && std::abs(f[i] - g[i]) <= 1e-5 * scale;
    }
    check("drift equals minus the energy gradient (1e-5)", ok);
  }

  SystemParams lj;
  lj.N = 7;
  lj.d = 2;
  lj.sigma = 0.05;
  lj.kernel = InteractionKernel::lennard_jones(8, 2, 1.0, 1.0, 0.95, 6.0);
  const auto trajs = simulate_ensemble(lj, IsotropicGaussian{0.0, 1.0}, 0.05, 0.001, 8, seed + 7);
  const auto basis = build_basis(empirical_rho(trajs, 400), 6, 1, PartitionMode::Uniform);
  const auto sys = assemble(trajs, basis);
  {
    const double scale = sys.A.cwiseAbs().maxCoeff();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.A);
    check("A symmetric positive semidefinite",
          (sys.A - sys.A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale &&
              es.eigenvalues().minCoeff() >= -1e-10 * sys.A.norm());
  }
  {
    const std::vector<int> perm = {4, 2, 6, 0, 1, 5, 3};
    std::vector<Trajectory> relabeled;
    for (const auto& t : trajs) {
      std::vector<double> s(t.data().size());
      for (int l = 0; l <= t.L(); ++l)
        for (int i = 0; i < 7; ++i)
          for (int c = 0; c < 2; ++c) s[(l * 7 + i) * 2 + c] = t.state(l)[perm[i] * 2 + c];
      relabeled.emplace_back(7, 2, t.L(), std::move(s), t.meta());
    }
    const auto q = assemble(relabeled, basis);
    check("(A, b) invariant under particle relabeling (1e-12)",
          (q.A - sys.A).cwiseAbs().maxCoeff() <= 1e-12 * sys.A.cwiseAbs().maxCoeff() &&
              (q.b - sys.b).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, sys.b.cwiseAbs().maxCoeff()));
  }
  {
    const int before = thread_count();
    bool ok = true;
    for (int w : {1, 2, 4, 8}) {
      set_thread_count(w);
      const auto s = assemble(trajs, basis);
      ok = ok && std::equal(s.A.data(), s.A.data() + s.A.size(), sys.A.data()) &&
           std::equal(s.b.data(), s.b.data() + s.b.size(), sys.b.data());
    }
    set_thread_count(before);
    check("assembly bit-identical with 1, 2, 4, 8 workers", ok);
  }
  {
    const auto rho = empirical_rho(trajs, 400);
    bool ok = true;
    for (int degree : {0, 1, 2}) {
      const auto bs = build_basis(rho, 9, degree, PartitionMode::Uniform);
      const std::size_t n = bs.n();
      std::vector<double> G(n * n, 0.0);
      for (std::size_t b = 0; b < rho.bins(); ++b) {
        const double r = rho.midpoint(b);
        for (std::size_t p = 0; p < n; ++p)
          for (std::size_t q = 0; q < n; ++q) G[p * n + q] += bs.eval(p, r) * bs.eval(q, r) * r * r * rho.weights[b];
      }
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q)
          ok = ok && std::abs(G[p * n + q] - ((p == q && bs.active()[p]) ? 1.0 : 0.0)) < 1e-8;
    }
    check("basis Gram matrix is the identity (1e-8)", ok);
  }
  {
    EmpiricalMeasure u;
    for (int b = 0; b <= 1000; ++b) u.edges.push_back(b / 1000.0);
    u.weights.assign(1000, 1e-3);
    const double v = rho_norm([](double r) { return r; }, u);
    auto f = [](double r) { return std::sin(3.0 * r) + 0.5; };
    const double h = rho_norm([&](double r) { return -2.5 * f(r); }, u);
    check("rho norm: r on U[0,1] = sqrt(1/5) (1e-3) and homogeneity",
          std::abs(v - std::sqrt(0.2)) < 1e-3 && std::abs(h - 2.5 * rho_norm(f, u)) < 1e-12 * h);
  }
  {
    const auto cfg = preset("opinion", Scale::Desk);
    bool ok = true;
    std::string vals;
    for (int M : {256, 1024}) {
      const auto data = simulate_ensemble(cfg.system, cfg.init, cfg.T, cfg.dt, M, seed + M);
      const auto res = estimate(data, cfg.estimator);
      ok = ok && res.lambda_min > 0.0;
      vals += " M=" + std::to_string(M) + ": " + fmt("%.3g", res.lambda_min) + " (n=" + std::to_string(res.n) + ")";
    }
    check("lambda_min(A) > 0 for opinion dynamics," + vals, ok);
  }
  return o;
}

Outcome long_trajectories(std::uint64_t seed) {
  const auto cfg = preset("opinion", Scale::Desk);
  const auto& lt = *cfg.study.long_t;
  const auto fit = long_T_study(cfg.setup(), lt.grid, lt.C, lt.replicates, lt.M_rho, seed);
  double lo = 1e300, hi = 0.0;
  for (const auto& [M, T] : lt.grid) {
    lo = std::min(lo, M * T);
    hi = std::max(hi, M * T);
  }
  auto o = rate_in_band(fit, -0.45, -0.22);
  const double decades = std::log10(hi / lo);
  o.pass = o.pass && decades >= 1.5;
  o.detail = "M T spans " + fmt("%.2f", decades) + " decades; " + o.detail;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::vector<int> only;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int threads = 0;
  app.add_option("--only", only, "Run only these criteria (1-7)")->check(CLI::Range(1, 7));
  app.add_option("--seed", seed, "Master seed override")->each([&](const std::string&) { has_seed = true; });
  app.add_option("--threads", threads, "Worker threads (0 = hardware)");
  CLI11_PARSE(app, argc, argv);
  set_thread_count(threads);

  const auto od_seed = has_seed ? seed : preset("opinion", Scale::Desk).seed;
  const auto lj_seed = has_seed ? seed : preset("lennard-jones", Scale::Desk).seed;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"opinion-dynamics convergence rate in M", [&] { return convergence("opinion", -0.45, -0.22, od_seed); }},
      {"lennard-jones convergence rate in M", [&] { return convergence("lennard-jones", -0.52, -0.28, lj_seed); }},
      {"discretization bias vs observation gap", [&] { return gap_bias(od_seed); }},
      {"trajectory prediction", [&] { return prediction(od_seed); }},
      {"exact recovery of an in-span kernel", [&] { return exact_recovery(od_seed); }},
      {"property suite", [&] { return properties(od_seed); }},
      {"long-trajectory rate in M T", [&] { return long_trajectories(od_seed); }},
  };
  const std::set<int> chosen(only.begin(), only.end());
  int failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!chosen.empty() && !chosen.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what() + "\n";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d %s: %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), secs);
    std::size_t pos = 0;
    while (pos < o.detail.size()) {
      const auto end = o.detail.find('\n', pos);
      std::printf("    %s\n", o.detail.substr(pos, end - pos).c_str());
      pos = end == std::string::npos ? o.detail.size() : end + 1;
    }
    std::fflush(stdout);
    ++ran;
    if (!o.pass) ++failed;
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
