#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ipsk {

/// Heterophilious opinion-dynamics kernel. Piecewise on [0, 1.05), zero
/// beyond; C^{1,1} with support in [0, 2].
struct OpinionKernel {};

/// phi(r) = Phi'(r) / r for the (p, q) Lennard-Jones type potential,
/// replaced below r_trunc by a * exp(-b * r^12) with C^1 matching.
struct LennardJonesKernel {
  int p = 8;
  int q = 2;
  double eps = 1.0;
  double r_m = 1.0;
  double r_trunc = 0.95;
  double a = 0.0;
  double b = 0.0;
};

/// Piecewise polynomial on a partition `knots` (n_cells + 1 entries). Cell c
/// holds degree+1 monomial coefficients in the local variable t = r - knots[c].
/// Outside [knots.front(), knots.back()] the boundary value is held constant.
struct PiecewisePolynomialKernel {
  std::vector<double> knots;
  int degree = 0;
  std::vector<double> coeffs;
  double left_value = 0.0;
  double right_value = 0.0;

  std::size_t n_cells() const { return knots.empty() ? 0 : knots.size() - 1; }
  std::span<const double> cell(std::size_t c) const {
    return {coeffs.data() + c * static_cast<std::size_t>(degree + 1),
            static_cast<std::size_t>(degree + 1)};
  }
};

struct ConstantKernel {
  double c = 0.0;
};

struct ZeroKernel {};

/// A radial interaction kernel phi : R+ -> R, together with the admissible-set
/// metadata (support radius R, bound S on |phi| + |phi'|).
///
/// Immutable once built; evaluation is pure and thread-safe.
class InteractionKernel {
 public:
  using Variant = std::variant<OpinionKernel, LennardJonesKernel,
                               PiecewisePolynomialKernel, ConstantKernel, ZeroKernel>;

  InteractionKernel() : InteractionKernel(ZeroKernel{}, 0.0, 0.0) {}

  static InteractionKernel opinion();
  /// `support_radius` is configuration: the LJ kernel is not compactly
  /// supported, so R is the upper end of the region the dynamics explores.
  static InteractionKernel lennard_jones(int p, int q, double eps, double r_m,
                                         double r_trunc, double support_radius);
  static InteractionKernel piecewise_polynomial(std::vector<double> knots, int degree,
                                                std::vector<double> coeffs);
  /// Linear interpolant through (nodes[i], values[i]), constant outside.
  static InteractionKernel linear_interpolant(std::span<const double> nodes,
                                              std::span<const double> values);
  static InteractionKernel constant(double c, double support_radius);
  static InteractionKernel zero();

  /// Unchecked evaluation; callers guarantee r >= 0 and finite.
  double operator()(double r) const;
  /// Checked evaluation. Throws InputError on negative or non-finite r.
  double eval(double r) const;

  double support_radius() const { return R_; }
  double bound() const { return S_; }
  const Variant& variant() const { return v_; }
  std::string id() const;

 private:
  InteractionKernel(Variant v, double R, double S) : v_(std::move(v)), R_(R), S_(S) {}

  Variant v_;
  double R_;
  double S_;
};

double eval_kernel(const InteractionKernel& kernel, double r);

struct TruncationCoeffs {
  double a;
  double b;
};

/// Coefficients of a * exp(-b r^12) matching value and slope of the LJ kernel
/// at r_trunc. Throws DegenerateError when phi(r_trunc) == 0 (r_trunc == r_m)
/// and InputError for r_trunc outside (0, r_m].
TruncationCoeffs lj_truncation_coeffs(int p, int q, double eps, double r_m, double r_trunc);

namespace lj {
/// Untruncated phi(r) = Phi'(r)/r and its derivative.
double phi(int p, int q, double eps, double r_m, double r);
double dphi(int p, int q, double eps, double r_m, double r);
/// The pair potential Phi(r).
double potential(int p, int q, double eps, double r_m, double r);
}  // namespace lj

namespace opinion {
double phi(double r);
double dphi(double r);
}  // namespace opinion

}  // namespace ipsk
