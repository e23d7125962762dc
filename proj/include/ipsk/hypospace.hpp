#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ipsk/kernel.hpp"
#include "ipsk/measure.hpp"

namespace ipsk {

/// n = round(C (M / ln M)^{1/(2s+1)}), at least 1. Requires M >= 3, C > 0,
/// s >= 1.
int dimension_rule(double M, int s, double C);

/// Long-trajectory convention: the same rule with M replaced by the sample
/// count M T / dt (which must be >= 3).
int dimension_rule_long_T(double M, double T, double dt, int s, double C);

/// Effective-sample-size rule: the same rule with M replaced by M T / tau.
int dimension_rule_ess(double M, double T, double tau, int s, double C);

enum class PartitionMode { Uniform, RhoAdaptive };

std::string to_string(PartitionMode mode);
PartitionMode partition_mode_from_string(const std::string& s);

/// Piecewise polynomials of a fixed degree on a partition of [R_min, R_max].
///
/// Within cell c the functions psi_{c,0..degree} are combinations of Legendre
/// polynomials in the local variable u = 2 (r - knot_c) / h_c - 1, chosen so
/// that {psi_p(r) r} is orthonormal under the quadrature of the measure the
/// basis was built from. Functions supported on cells without mass (or that
/// are numerically dependent there) are inactive and identically zero.
class HypothesisBasis {
 public:
  HypothesisBasis() = default;
  HypothesisBasis(std::vector<double> knots, int degree, std::vector<double> transform,
                  std::vector<bool> active);

  std::size_t n() const { return n_cells() * per_cell(); }
  std::size_t n_cells() const { return knots_.size() - 1; }
  std::size_t per_cell() const { return static_cast<std::size_t>(degree_) + 1; }
  int degree() const { return degree_; }
  double r_min() const { return knots_.front(); }
  double r_max() const { return knots_.back(); }
  const std::vector<double>& knots() const { return knots_; }
  /// Row-major (degree+1) x (degree+1) lower-triangular Legendre
  /// coefficients per cell.
  const std::vector<double>& transform() const { return transform_; }
  const std::vector<bool>& active() const { return active_; }
  std::vector<std::size_t> inactive_indices() const;

  /// Cell containing r (last cell right-closed) or -1 outside the support.
  std::ptrdiff_t cell_of(double r) const;
  /// Values of the degree+1 functions of cell c at r (r assumed inside c).
  void eval_cell(std::size_t c, double r, std::span<double> out) const;
  /// psi_p(r); zero outside p's cell and outside [R_min, R_max]. Throws
  /// InputError for p >= n.
  double eval(std::size_t p, double r) const;

  /// sum_p coeffs[p] psi_p as a piecewise polynomial kernel (constant
  /// extrapolation outside the support).
  InteractionKernel combination(std::span<const double> coeffs) const;

  std::string id() const;

 private:
  std::vector<double> knots_;
  int degree_ = 0;
  std::vector<double> transform_;
  std::vector<bool> active_;
};

/// Builds the basis on the measure's support with n_cells cells. Uniform mode
/// uses equal-width cells; rho-adaptive places knots on measure edges at the
/// empirical quantiles j / n_cells.
HypothesisBasis build_basis(const EmpiricalMeasure& measure, int n_cells, int degree,
                            PartitionMode mode);

double eval_basis(const HypothesisBasis& basis, std::size_t p, double r);

/// Quadrature Gram matrix G(p,q) = sum_b psi_p(r_b) psi_q(r_b) r_b^2 w_b,
/// row-major n x n.
std::vector<double> basis_gram(const HypothesisBasis& basis, const EmpiricalMeasure& measure);

}  // namespace ipsk
