#include "ipsk/hypospace.hpp"

#include <cmath>
#include <sstream>

#include "ipsk/error.hpp"

namespace ipsk {

namespace {

int rule(double count, int s, double C) {
  if (!(C > 0.0) || !std::isfinite(C)) throw InputError("dimension rule: C must be positive");
  if (s < 1) throw InputError("dimension rule: s must be >= 1");
  if (!(count >= 3.0)) throw InputError("dimension rule: sample count must be >= 3");
  const double n = C * std::pow(count / std::log(count), 1.0 / (2.0 * s + 1.0));
  return std::max(1, static_cast<int>(std::lround(n)));
}

void legendre(double u, std::span<double> out) {
  out[0] = 1.0;
  if (out.size() > 1) out[1] = u;
  for (std::size_t k = 1; k + 1 < out.size(); ++k)
    out[k + 1] = ((2.0 * k + 1.0) * u * out[k] - static_cast<double>(k) * out[k - 1]) / (k + 1.0);
}

// Monomial coefficients (in u) of P_0 .. P_deg, row k = P_k.
std::vector<std::vector<double>> legendre_monomials(int deg) {
  std::vector<std::vector<double>> P(deg + 1, std::vector<double>(deg + 1, 0.0));
  P[0][0] = 1.0;
  if (deg >= 1) P[1][1] = 1.0;
  for (int k = 1; k < deg; ++k)
    for (int m = 0; m <= deg; ++m) {
      double v = -static_cast<double>(k) * P[k - 1][m];
      if (m > 0) v += (2.0 * k + 1.0) * P[k][m - 1];
      P[k + 1][m] = v / (k + 1.0);
    }
  return P;
}

// Coefficients in t of sum_m c[m] (alpha t + beta)^m.
std::vector<double> substitute(std::span<const double> c, double alpha, double beta) {
  std::vector<double> out(c.size(), 0.0);
  // Horner in polynomial arithmetic: out = out * (alpha t + beta) + c[m].
  for (std::size_t m = c.size(); m-- > 0;) {
    std::vector<double> next(c.size(), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      next[k] += beta * out[k];
      if (k + 1 < c.size()) next[k + 1] += alpha * out[k];
    }
    next[0] += c[m];
    out = std::move(next);
  }
  return out;
}

}  // namespace

int dimension_rule(double M, int s, double C) { return rule(M, s, C); }

int dimension_rule_long_T(double M, double T, double dt, int s, double C) {
  if (!(M > 0.0) || !(T > 0.0) || !(dt > 0.0)) throw InputError("dimension rule: M, T, dt must be positive");
  return rule(M * T / dt, s, C);
}

int dimension_rule_ess(double M, double T, double tau, int s, double C) {
  return rule(effective_sample_size(M, T, tau), s, C);
}

std::string to_string(PartitionMode mode) {
  return mode == PartitionMode::Uniform ? "uniform" : "rho-adaptive";
}

PartitionMode partition_mode_from_string(const std::string& s) {
  if (s == "uniform") return PartitionMode::Uniform;
  if (s == "rho-adaptive" || s == "adaptive") return PartitionMode::RhoAdaptive;
  throw ConfigError("unknown partition mode '" + s + "'");
}

HypothesisBasis::HypothesisBasis(std::vector<double> knots, int degree, std::vector<double> transform,
                                 std::vector<bool> active)
    : knots_(std::move(knots)), degree_(degree), transform_(std::move(transform)), active_(std::move(active)) {
  if (knots_.size() < 2) throw InputError("basis: need at least one cell");
  if (degree_ < 0) throw InputError("basis: negative degree");
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
    if (!(knots_[i] < knots_[i + 1])) throw InputError("basis: knots must be strictly increasing");
  if (transform_.size() != n_cells() * per_cell() * per_cell() || active_.size() != n())
    throw InputError("basis: transform/active sizes do not match");
}

std::vector<std::size_t> HypothesisBasis::inactive_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < active_.size(); ++p)
    if (!active_[p]) out.push_back(p);
  return out;
}

std::ptrdiff_t HypothesisBasis::cell_of(double r) const { return locate(knots_, r); }

void HypothesisBasis::eval_cell(std::size_t c, double r, std::span<double> out) const {
  const std::size_t k = per_cell();
  const double h = knots_[c + 1] - knots_[c];
  const double u = 2.0 * (r - knots_[c]) / h - 1.0;
  double P[8];
  std::vector<double> Pheap;
  std::span<double> Ps;
  if (k <= 8) {
    Ps = {P, k};
  } else {
    Pheap.resize(k);
    Ps = Pheap;
  }
  legendre(u, Ps);
  const double* T = transform_.data() + c * k * k;
  for (std::size_t j = 0; j < k; ++j) {
    double v = 0.0;
    for (std::size_t m = 0; m <= j; ++m) v += T[j * k + m] * Ps[m];
    out[j] = v;
  }
}

double HypothesisBasis::eval(std::size_t p, double r) const {
  if (p >= n()) throw InputError("basis: index out of range");
  const auto c = cell_of(r);
  if (c < 0 || static_cast<std::size_t>(c) != p / per_cell()) return 0.0;
  double vals[8];
  std::vector<double> heap;
  std::span<double> out;
  if (per_cell() <= 8) {
    out = {vals, per_cell()};
  } else {
    heap.resize(per_cell());
    out = heap;
  }
  eval_cell(static_cast<std::size_t>(c), r, out);
  return out[p % per_cell()];
}

InteractionKernel HypothesisBasis::combination(std::span<const double> coeffs) const {
  if (coeffs.size() != n()) throw InputError("basis combination: coefficient count mismatch");
  const std::size_t k = per_cell();
  const auto P = legendre_monomials(degree_);
  std::vector<double> poly;
  poly.reserve(n());
  for (std::size_t c = 0; c < n_cells(); ++c) {
    // Legendre coefficients of the cell polynomial.
    std::vector<double> leg(k, 0.0);
    const double* T = transform_.data() + c * k * k;
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t m = 0; m <= j; ++m) leg[m] += coeffs[c * k + j] * T[j * k + m];
    std::vector<double> mono(k, 0.0);
    for (std::size_t m = 0; m < k; ++m)
      for (std::size_t e = 0; e < k; ++e) mono[e] += leg[m] * P[m][e];
    const double h = knots_[c + 1] - knots_[c];
    const auto local = substitute(mono, 2.0 / h, -1.0);
    poly.insert(poly.end(), local.begin(), local.end());
  }
  return InteractionKernel::piecewise_polynomial(knots_, degree_, std::move(poly));
}

std::string HypothesisBasis::id() const {
  std::ostringstream os;
  os.precision(17);
  os << "pp(cells=" << n_cells() << ",degree=" << degree_ << ",support=[" << r_min() << "," << r_max()
     << "])";
  return os.str();
}

HypothesisBasis build_basis(const EmpiricalMeasure& measure, int n_cells, int degree, PartitionMode mode) {
  if (n_cells < 1) throw InputError("build_basis: need at least one cell");
  if (degree < 0) throw InputError("build_basis: degree must be >= 0");
  if (!(measure.r_max() > measure.r_min())) throw InputError("build_basis: measure support has zero width");

  const std::size_t B = measure.bins();
  std::vector<double> knots(static_cast<std::size_t>(n_cells) + 1);
  if (mode == PartitionMode::Uniform) {
    const double lo = measure.r_min(), hi = measure.r_max();
    for (int j = 0; j <= n_cells; ++j) knots[j] = lo + (hi - lo) * j / n_cells;
    knots.back() = hi;
  } else {
    if (B < static_cast<std::size_t>(n_cells))
      throw InputError("build_basis: rho-adaptive partition needs at least as many bins as cells");
    std::vector<double> cum(B + 1, 0.0);
    for (std::size_t b = 0; b < B; ++b) cum[b + 1] = cum[b] + measure.weights[b];
    knots.front() = measure.edges.front();
    knots.back() = measure.edges.back();
    std::size_t prev = 0;
    for (int j = 1; j < n_cells; ++j) {
      const double target = static_cast<double>(j) / n_cells * cum[B];
      std::size_t e = prev + 1;
      while (e < B && cum[e] < target) ++e;
      e = std::min(e, B - static_cast<std::size_t>(n_cells - j));
      e = std::max(e, prev + 1);
      knots[j] = measure.edges[e];
      prev = e;
    }
  }

  const std::size_t k = static_cast<std::size_t>(degree) + 1;
  // Per-cell Legendre Gram matrices under the weight r^2 w_b at bin midpoints.
  std::vector<double> gram(static_cast<std::size_t>(n_cells) * k * k, 0.0);
  std::vector<double> mass(static_cast<std::size_t>(n_cells), 0.0);
  std::vector<double> P(k);
  for (std::size_t b = 0; b < B; ++b) {
    const double w = measure.weights[b];
    if (w <= 0.0) continue;
    const double r = measure.midpoint(b);
    const auto c = locate(knots, r);
    if (c < 0) continue;
    const double omega = w * r * r;
    if (omega <= 0.0) continue;
    const auto cc = static_cast<std::size_t>(c);
    mass[cc] += w;
    const double u = 2.0 * (r - knots[cc]) / (knots[cc + 1] - knots[cc]) - 1.0;
    legendre(u, P);
    double* G = gram.data() + cc * k * k;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) G[i * k + j] += omega * P[i] * P[j];
  }

  std::vector<double> transform(static_cast<std::size_t>(n_cells) * k * k, 0.0);
  std::vector<bool> active(static_cast<std::size_t>(n_cells) * k, false);
  for (std::size_t c = 0; c < static_cast<std::size_t>(n_cells); ++c) {
    if (mass[c] <= 0.0) continue;
    const double* G = gram.data() + c * k * k;
    auto inner = [&](const std::vector<double>& x, const std::vector<double>& y) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) s += x[i] * G[i * k + j] * y[j];
      return s;
    };
    std::vector<std::vector<double>> q;  // orthonormal so far (Legendre coords)
    std::vector<bool> q_active;
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> v(k, 0.0);
      v[j] = 1.0;
      const double norm0 = inner(v, v);
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t i = 0; i < q.size(); ++i) {
          if (!q_active[i]) continue;
          const double proj = inner(v, q[i]);
          for (std::size_t m = 0; m < k; ++m) v[m] -= proj * q[i][m];
        }
      const double nv = inner(v, v);
      const bool ok = norm0 > 0.0 && nv > 1e-12 * norm0;
      if (ok) {
        const double s = 1.0 / std::sqrt(nv);
        for (double& x : v) x *= s;
      } else {
        std::fill(v.begin(), v.end(), 0.0);
      }
      q.push_back(v);
      q_active.push_back(ok);
      active[c * k + j] = ok;
      for (std::size_t m = 0; m <= j; ++m) transform[c * k * k + j * k + m] = v[m];
    }
  }
  return HypothesisBasis(std::move(knots), degree, std::move(transform), std::move(active));
}

double eval_basis(const HypothesisBasis& basis, std::size_t p, double r) { return basis.eval(p, r); }

std::vector<double> basis_gram(const HypothesisBasis& basis, const EmpiricalMeasure& measure) {
  const std::size_t n = basis.n(), k = basis.per_cell();
  std::vector<double> G(n * n, 0.0);
  std::vector<double> vals(k);
  for (std::size_t b = 0; b < measure.bins(); ++b) {
    const double w = measure.weights[b];
    if (w == 0.0) continue;
    const double r = measure.midpoint(b);
    const auto c = basis.cell_of(r);
    if (c < 0) continue;
    basis.eval_cell(static_cast<std::size_t>(c), r, vals);
    const std::size_t off = static_cast<std::size_t>(c) * k;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) G[(off + i) * n + off + j] += vals[i] * vals[j] * r * r * w;
  }
  return G;
}

}  // namespace ipsk
