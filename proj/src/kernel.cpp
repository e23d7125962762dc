#include "ipsk/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ipsk/error.hpp"

namespace ipsk {

namespace {

double ipow(double x, int k) {
  double out = 1.0;
  for (int i = 0; i < k; ++i) out *= x;
  return out;
}

constexpr double kInvSqrt2 = 0.70710678118654752440;

std::size_t locate_cell(const std::vector<double>& knots, double r) {
  const auto it = std::upper_bound(knots.begin(), knots.end(), r);
  const auto idx = static_cast<std::size_t>(std::distance(knots.begin(), it));
  // Right-closed last cell.
  return std::min(idx == 0 ? 0 : idx - 1, knots.size() - 2);
}

double poly_value(std::span<const double> c, double t) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * t + c[k];
  return v;
}

double poly_slope(std::span<const double> c, double t) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) v = v * t + static_cast<double>(k) * c[k];
  return v;
}

double eval_pp(const PiecewisePolynomialKernel& k, double r) {
  if (r < k.knots.front()) return k.left_value;
  if (r > k.knots.back()) return k.right_value;
  const std::size_t c = locate_cell(k.knots, r);
  return poly_value(k.cell(c), r - k.knots[c]);
}

double pp_bound(const PiecewisePolynomialKernel& k) {
  double vmax = 0.0, dmax = 0.0;
  for (std::size_t c = 0; c < k.n_cells(); ++c) {
    const double h = k.knots[c + 1] - k.knots[c];
    for (int s = 0; s <= 8; ++s) {
      const double t = h * s / 8.0;
      vmax = std::max(vmax, std::abs(poly_value(k.cell(c), t)));
      dmax = std::max(dmax, std::abs(poly_slope(k.cell(c), t)));
    }
  }
  return vmax + dmax;
}

}  // namespace

namespace opinion {

double phi(double r) {
  const double a = kInvSqrt2 - 0.05;
  const double b = kInvSqrt2 + 0.05;
  if (r < a) return 0.4;
  if (r < b) return -0.3 * std::cos(10.0 * std::numbers::pi * (r - a)) + 0.7;
  if (r < 0.95) return 1.0;
  if (r < 1.05) return 0.5 * std::cos(10.0 * std::numbers::pi * (r - 0.95)) + 0.5;
  return 0.0;
}

double dphi(double r) {
  const double a = kInvSqrt2 - 0.05;
  const double b = kInvSqrt2 + 0.05;
  if (r < a) return 0.0;
  if (r < b) return 3.0 * std::numbers::pi * std::sin(10.0 * std::numbers::pi * (r - a));
  if (r < 0.95) return 0.0;
  if (r < 1.05) return -5.0 * std::numbers::pi * std::sin(10.0 * std::numbers::pi * (r - 0.95));
  return 0.0;
}

}  // namespace opinion

namespace lj {

double potential(int p, int q, double eps, double r_m, double r) {
  const double x = r_m / r;
  return p * eps / (p - q) * (static_cast<double>(q) / p * ipow(x, p) - ipow(x, q));
}

double phi(int p, int q, double eps, double r_m, double r) {
  const double x = r_m / r;
  const double c = static_cast<double>(p) * q * eps / (p - q);
  return c * (ipow(x, q) - ipow(x, p)) / (r * r);
}

double dphi(int p, int q, double eps, double r_m, double r) {
  const double x = r_m / r;
  const double c = static_cast<double>(p) * q * eps / (p - q);
  const double r3 = r * r * r;
  return c * ((p + 2) * ipow(x, p) - (q + 2) * ipow(x, q)) / r3;
}

}  // namespace lj

TruncationCoeffs lj_truncation_coeffs(int p, int q, double eps, double r_m, double r_trunc) {
  if (!(p > q) || q < 1 || !(eps > 0.0) || !(r_m > 0.0))
    throw InputError("lennard-jones: need p > q >= 1, eps > 0, r_m > 0");
  if (!(r_trunc > 0.0) || !std::isfinite(r_trunc))
    throw InputError("lennard-jones: r_trunc must be positive");
  const double x = r_m / r_trunc;
  const double scale = ipow(x, p) + ipow(x, q);
  const double value = lj::phi(p, q, eps, r_m, r_trunc);
  if (std::abs(ipow(x, q) - ipow(x, p)) <= 1e-14 * scale)
    throw DegenerateError("lennard-jones: phi(r_trunc) = 0, exponential matching is degenerate");
  if (r_trunc > r_m) throw InputError("lennard-jones: r_trunc must lie below r_m");
  const double slope = lj::dphi(p, q, eps, r_m, r_trunc);
  const double r11 = ipow(r_trunc, 11);
  const double b = -slope / (12.0 * r11 * value);
  const double a = value * std::exp(b * r11 * r_trunc);
  return {a, b};
}

InteractionKernel InteractionKernel::opinion() {
  return {OpinionKernel{}, 2.0, 1.0 + 5.0 * std::numbers::pi};
}

InteractionKernel InteractionKernel::lennard_jones(int p, int q, double eps, double r_m,
                                                   double r_trunc, double support_radius) {
  if (!(support_radius > 0.0)) throw InputError("lennard-jones: support radius must be positive");
  const auto [a, b] = lj_truncation_coeffs(p, q, eps, r_m, r_trunc);
  LennardJonesKernel k{p, q, eps, r_m, r_trunc, a, b};
  // Bound S from a dense scan of |phi| + |phi'|.
  const double hi = std::max(support_radius, 10.0);
  double vmax = 0.0, dmax = 0.0;
  constexpr int kSamples = 20000;
  for (int i = 0; i <= kSamples; ++i) {
    const double r = hi * i / kSamples;
    double v, d;
    if (r < r_trunc) {
      const double r11 = ipow(r, 11);
      v = a * std::exp(-b * r11 * r);
      d = -12.0 * b * r11 * v;
    } else {
      v = lj::phi(p, q, eps, r_m, r);
      d = lj::dphi(p, q, eps, r_m, r);
    }
    vmax = std::max(vmax, std::abs(v));
    dmax = std::max(dmax, std::abs(d));
  }
  return {k, support_radius, 1.01 * (vmax + dmax)};
}

InteractionKernel InteractionKernel::piecewise_polynomial(std::vector<double> knots, int degree,
                                                          std::vector<double> coeffs) {
  if (knots.size() < 2) throw InputError("piecewise polynomial: need at least two knots");
  if (degree < 0) throw InputError("piecewise polynomial: negative degree");
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    if (!(knots[i] < knots[i + 1]) || !std::isfinite(knots[i + 1]))
      throw InputError("piecewise polynomial: knots must be finite and strictly increasing");
  if (coeffs.size() != (knots.size() - 1) * static_cast<std::size_t>(degree + 1))
    throw InputError("piecewise polynomial: coefficient count does not match cells * (degree+1)");
  PiecewisePolynomialKernel k{std::move(knots), degree, std::move(coeffs), 0.0, 0.0};
  k.left_value = k.cell(0)[0];
  const std::size_t last = k.n_cells() - 1;
  k.right_value = poly_value(k.cell(last), k.knots[last + 1] - k.knots[last]);
  const double R = k.knots.back();
  const double S = pp_bound(k);
  return {std::move(k), R, S};
}

InteractionKernel InteractionKernel::linear_interpolant(std::span<const double> nodes,
                                                        std::span<const double> values) {
  if (nodes.size() < 2 || nodes.size() != values.size())
    throw InputError("linear interpolant: need matching nodes/values, at least two");
  std::vector<double> coeffs;
  coeffs.reserve(2 * (nodes.size() - 1));
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    coeffs.push_back(values[i]);
    coeffs.push_back((values[i + 1] - values[i]) / (nodes[i + 1] - nodes[i]));
  }
  auto k = piecewise_polynomial({nodes.begin(), nodes.end()}, 1, std::move(coeffs));
  // Hold the exact end value rather than the re-evaluated slope product.
  std::get<PiecewisePolynomialKernel>(k.v_).right_value = values.back();
  return k;
}

InteractionKernel InteractionKernel::constant(double c, double support_radius) {
  return {ConstantKernel{c}, support_radius, std::abs(c)};
}

InteractionKernel InteractionKernel::zero() { return {ZeroKernel{}, 0.0, 0.0}; }

double InteractionKernel::operator()(double r) const {
  struct Visitor {
    double r;
    double operator()(const OpinionKernel&) const { return opinion::phi(r); }
    double operator()(const LennardJonesKernel& k) const {
      if (r < k.r_trunc) {
        const double r2 = r * r;
        const double r4 = r2 * r2;
        const double r12 = r4 * r4 * r4;
        return k.a * std::exp(-k.b * r12);
      }
      return lj::phi(k.p, k.q, k.eps, k.r_m, r);
    }
    double operator()(const PiecewisePolynomialKernel& k) const { return eval_pp(k, r); }
    double operator()(const ConstantKernel& k) const { return k.c; }
    double operator()(const ZeroKernel&) const { return 0.0; }
  };
  return std::visit(Visitor{r}, v_);
}

double InteractionKernel::eval(double r) const {
  if (!std::isfinite(r) || r < 0.0)
    throw InputError("kernel evaluation requires a finite, nonnegative distance");
  return (*this)(r);
}

std::string InteractionKernel::id() const {
  struct Visitor {
    std::string operator()(const OpinionKernel&) const { return "opinion"; }
    std::string operator()(const LennardJonesKernel& k) const {
      std::ostringstream os;
      os << "lennard_jones(p=" << k.p << ",q=" << k.q << ",eps=" << k.eps << ",r_m=" << k.r_m
         << ",r_trunc=" << k.r_trunc << ")";
      return os.str();
    }
    std::string operator()(const PiecewisePolynomialKernel& k) const {
      return "piecewise_polynomial(cells=" + std::to_string(k.n_cells()) +
             ",degree=" + std::to_string(k.degree) + ")";
    }
    std::string operator()(const ConstantKernel& k) const {
      std::ostringstream os;
      os << "constant(" << k.c << ")";
      return os.str();
    }
    std::string operator()(const ZeroKernel&) const { return "zero"; }
  };
  return std::visit(Visitor{}, v_);
}

double eval_kernel(const InteractionKernel& kernel, double r) { return kernel.eval(r); }

}  // namespace ipsk
