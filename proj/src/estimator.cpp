#include "ipsk/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "ipsk/error.hpp"
#include "ipsk/parallel.hpp"

namespace ipsk {

namespace {

struct Sums {
  Eigen::MatrixXd A;  // upper triangle only until finalised
  Eigen::VectorXd b;
  std::uint64_t outside = 0;

  explicit Sums(std::size_t n) : A(Eigen::MatrixXd::Zero(n, n)), b(Eigen::VectorXd::Zero(n)) {}
  Sums& operator+=(const Sums& o) {
    A += o.A;
    b += o.b;
    outside += o.outside;
    return *this;
  }
};

// Reusable per-thread scratch for one trajectory.
struct Scratch {
  std::vector<std::vector<int>> idx;       // per particle: basis index per raw entry
  std::vector<std::vector<double>> vec;    // per particle: d values per raw entry
  std::vector<int> slot;                   // basis index -> merged position, -1 if unused
  std::vector<int> merged_idx;
  std::vector<double> merged_vec;
  std::vector<double> vals;
};

// Adds the unnormalised sums over l = 0..L-1 of <f_p, f_q> and <f_p, dX>
// (f_p carrying its 1/N factor) for one trajectory.
void accumulate(const Trajectory& traj, const HypothesisBasis& basis, Sums& out, Scratch& s) {
  const int N = traj.N(), d = traj.d();
  const std::size_t k = basis.per_cell();
  const double inv_n = 1.0 / N;
  s.idx.assign(N, {});
  s.vec.assign(N, {});
  s.slot.assign(basis.n(), -1);
  s.vals.resize(k);
  const auto& active = basis.active();
  std::vector<double> dx(d);

  for (int l = 0; l < traj.L(); ++l) {
    const auto x = traj.state(l);
    const auto y = traj.state(l + 1);
    for (int i = 0; i < N; ++i) {
      s.idx[i].clear();
      s.vec[i].clear();
    }
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) {
        double r2 = 0.0;
        for (int c = 0; c < d; ++c) {
          dx[c] = x[j * d + c] - x[i * d + c];
          r2 += dx[c] * dx[c];
        }
        const double r = std::sqrt(r2);
        const auto cell = basis.cell_of(r);
        if (cell < 0) {
          ++out.outside;
          continue;
        }
        basis.eval_cell(static_cast<std::size_t>(cell), r, s.vals);
        for (std::size_t m = 0; m < k; ++m) {
          const int p = static_cast<int>(static_cast<std::size_t>(cell) * k + m);
          if (!active[p]) continue;
          const double w = s.vals[m] * inv_n;
          s.idx[i].push_back(p);
          s.idx[j].push_back(p);
          for (int c = 0; c < d; ++c) s.vec[i].push_back(w * dx[c]);
          for (int c = 0; c < d; ++c) s.vec[j].push_back(-w * dx[c]);
        }
      }

    for (int i = 0; i < N; ++i) {
      // Merge repeated basis indices: f_p(X)_i as a sparse list.
      s.merged_idx.clear();
      s.merged_vec.clear();
      for (std::size_t e = 0; e < s.idx[i].size(); ++e) {
        const int p = s.idx[i][e];
        int pos = s.slot[p];
        if (pos < 0) {
          pos = static_cast<int>(s.merged_idx.size());
          s.slot[p] = pos;
          s.merged_idx.push_back(p);
          s.merged_vec.insert(s.merged_vec.end(), d, 0.0);
        }
        for (int c = 0; c < d; ++c) s.merged_vec[pos * d + c] += s.vec[i][e * d + c];
      }
      const std::size_t m = s.merged_idx.size();
      for (std::size_t a = 0; a < m; ++a) {
        const int p = s.merged_idx[a];
        s.slot[p] = -1;
        const double* va = s.merged_vec.data() + a * d;
        double proj = 0.0;
        for (int c = 0; c < d; ++c) proj += va[c] * (y[i * d + c] - x[i * d + c]);
        out.b(p) += proj;
        for (std::size_t bb = a; bb < m; ++bb) {
          const int q = s.merged_idx[bb];
          const double* vb = s.merged_vec.data() + bb * d;
          double dot = 0.0;
          for (int c = 0; c < d; ++c) dot += va[c] * vb[c];
          out.A(std::min(p, q), std::max(p, q)) += dot;
        }
      }
    }
  }
}

void check_homogeneous(std::span<const Trajectory> trajs) {
  if (trajs.empty()) throw InputError("assemble: no trajectories");
  const auto& t0 = trajs[0];
  for (const auto& t : trajs)
    if (t.N() != t0.N() || t.d() != t0.d() || t.L() != t0.L() || t.dt() != t0.dt())
      throw DataError("assemble: trajectories differ in N, d, L or dt");
}

NormalSystem finish(Sums sums, const HypothesisBasis& basis, const Trajectory& t0, int M) {
  const std::size_t n = basis.n();
  const double a_scale = 1.0 / (static_cast<double>(t0.L()) * t0.N() * M);
  const double b_scale = 1.0 / (t0.T() * t0.N() * M);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r < c; ++r) sums.A(c, r) = sums.A(r, c);
  NormalSystem sys;
  sys.A = sums.A * a_scale;
  sys.b = sums.b * b_scale;
  sys.active = basis.active();
  sys.meta = {M, t0.L(), t0.T(), t0.N(), basis.id()};
  return sys;
}

}  // namespace

NormalSystem assemble_single(const Trajectory& traj, const HypothesisBasis& basis) {
  Sums sums(basis.n());
  Scratch scratch;
  accumulate(traj, basis, sums, scratch);
  return finish(std::move(sums), basis, traj, 1);
}

NormalSystem assemble(std::span<const Trajectory> trajs, const HypothesisBasis& basis) {
  check_homogeneous(trajs);
  const std::size_t M = trajs.size();
  const std::size_t block = std::max<std::size_t>(16, (M + 63) / 64);
  const std::size_t blocks = (M + block - 1) / block;
  std::vector<Sums> level(blocks, Sums(basis.n()));
  parallel_for(blocks, [&](std::size_t blk) {
    Scratch scratch;
    const std::size_t end = std::min(M, (blk + 1) * block);
    for (std::size_t m = blk * block; m < end; ++m) accumulate(trajs[m], basis, level[blk], scratch);
  });
  while (level.size() > 1) {
    std::vector<Sums> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      next.push_back(std::move(level[i]));
      next.back() += level[i + 1];
    }
    if (level.size() % 2 == 1) next.push_back(std::move(level.back()));
    level = std::move(next);
  }
  return finish(std::move(level.front()), basis, trajs[0], static_cast<int>(M));
}

SolveResult solve(const NormalSystem& system, double rcond) {
  if (!(rcond > 0.0)) throw InputError("solve: rcond must be positive");
  const auto n = system.A.rows();
  SolveResult out;
  out.coefficients = Eigen::VectorXd::Zero(n);
  if (n == 0) {
    out.degenerate = true;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(system.A);
  if (es.info() != Eigen::Success) throw DegenerateError("solve: eigen-decomposition failed");
  const auto& lambda = es.eigenvalues();
  const double top = lambda.cwiseAbs().maxCoeff();
  if (top == 0.0) {
    out.degenerate = true;
    return out;
  }
  const Eigen::VectorXd proj = es.eigenvectors().transpose() * system.b;
  Eigen::VectorXd scaled = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(lambda(i)) > rcond * top) {
      scaled(i) = proj(i) / lambda(i);
      ++out.rank;
    }
  out.coefficients = es.eigenvectors() * scaled;
  for (Eigen::Index i = 0; i < n; ++i)
    if (static_cast<std::size_t>(i) < system.active.size() && !system.active[i]) out.coefficients(i) = 0.0;
  return out;
}

double min_eigenvalue(const NormalSystem& system) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < system.A.rows(); ++i)
    if (static_cast<std::size_t>(i) >= system.active.size() || system.active[i]) keep.push_back(i);
  if (keep.empty()) return 0.0;
  Eigen::MatrixXd sub(keep.size(), keep.size());
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = 0; b < keep.size(); ++b) sub(a, b) = system.A(keep[a], keep[b]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

EstimatedKernel post_process(std::span<const double> coefficients, const HypothesisBasis& basis,
                             int grid_points) {
  if (grid_points < 2) throw InputError("post_process: need at least two grid points");
  EstimatedKernel est;
  est.coefficients.assign(coefficients.begin(), coefficients.end());
  est.basis = basis;
  est.raw = basis.combination(coefficients);
  est.grid.resize(static_cast<std::size_t>(grid_points));
  est.grid_values.resize(est.grid.size());
  const double lo = basis.r_min(), hi = basis.r_max();
  for (int g = 0; g < grid_points; ++g) est.grid[g] = lo + (hi - lo) * g / (grid_points - 1);
  est.grid.back() = hi;
  for (std::size_t g = 0; g < est.grid.size(); ++g) est.grid_values[g] = est.raw(est.grid[g]);
  est.smoothed = InteractionKernel::linear_interpolant(est.grid, est.grid_values);
  return est;
}

EstimateResult estimate(std::span<const Trajectory> trajs, const EstimatorConfig& config) {
  if (trajs.empty()) throw InputError("estimate: no trajectories (M = 0)");
  if (config.degree < 0) throw ConfigError("estimate: degree must be >= 0");
  if (config.rho_bins < 1 || config.grid_points < 2) throw ConfigError("estimate: bad bin/grid counts");
  const int M = static_cast<int>(trajs.size());
  int cells = 0;
  if (config.n_cells) {
    cells = *config.n_cells;
    if (cells < 1) throw ConfigError("estimate: n_cells must be >= 1");
  } else {
    if (M < 3) throw ConfigError("estimate: the dimension rule needs M >= 3; set basis.n_cells");
    cells = dimension_rule(M, config.s, config.C);
  }
  // Quadrature bins aligned with uniform cells, several per cell.
  const int per_cell = config.degree + 1;
  const int want = std::max(config.rho_bins, 8 * per_cell * cells);
  const int bins = cells * ((want + cells - 1) / cells);

  EstimateResult out;
  out.measure = config.support ? empirical_rho(trajs, bins, config.support->first, config.support->second)
                               : empirical_rho(trajs, bins);
  const HypothesisBasis basis = build_basis(out.measure, cells, config.degree, config.mode);
  const NormalSystem system = assemble(trajs, basis);
  const SolveResult sol = solve(system, config.rcond);
  out.kernel = post_process({sol.coefficients.data(), static_cast<std::size_t>(sol.coefficients.size())},
                            basis, config.grid_points);
  out.n_cells = cells;
  out.n = basis.n();
  out.lambda_min = min_eigenvalue(system);
  out.rank = sol.rank;
  out.degenerate = sol.degenerate;
  return out;
}

}  // namespace ipsk
