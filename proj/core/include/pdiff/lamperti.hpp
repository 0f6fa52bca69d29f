#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "pdiff/malliavin.hpp"
#include "pdiff/model.hpp"

namespace pdiff {

/// Tabulated F(y) = int_anchor^y du / |sigma(u)| with its inverse.
///
/// Nodes are equispaced and placed so the anchor is a node (F = 0 there
/// exactly). Node values come from cumulative composite Simpson; between
/// nodes F is a cubic Hermite interpolant with slopes 1/|sigma|, limited
/// (Fritsch-Carlson) so the interpolant stays strictly increasing.
class TransformTable {
 public:
  double forward(double y) const;
  double inverse(double z) const;

  double anchor() const noexcept { return anchor_; }
  double domain_lo() const noexcept { return y_.front(); }
  double domain_hi() const noexcept { return y_.back(); }
  double range_lo() const noexcept { return f_.front(); }
  double range_hi() const noexcept { return f_.back(); }
  double tol() const noexcept { return tol_; }
  /// +1 if sigma > 0 on the domain, -1 if sigma < 0 (F uses |sigma|).
  int orientation() const noexcept { return orientation_; }
  /// Largest interpolation error found on the cell-midpoint check grid.
  double check_error() const noexcept { return check_error_; }

  std::span<const double> nodes() const noexcept { return y_; }
  std::span<const double> values() const noexcept { return f_; }

 private:
  friend TransformTable build_transform(const Coefficient&, double, std::pair<double, double>,
                                        std::size_t, double);
  TransformTable() = default;

  double hermite(std::size_t cell, double t) const noexcept;
  std::size_t cell_of(double y) const noexcept;

  std::vector<double> y_;
  std::vector<double> f_;
  std::vector<double> slope_;
  double h_ = 0.0;
  double anchor_ = 0.0;
  double tol_ = 0.0;
  int orientation_ = 1;
  double check_error_ = 0.0;
};

/// Builds the table on at least [domain.first, domain.second] with about
/// n_nodes nodes. Throws DegenerateDiffusion if sigma vanishes or changes
/// sign, DomainTooSmall if the anchor lies outside the domain, and
/// ToleranceNotMet if the midpoint check exceeds tol.
TransformTable build_transform(const Coefficient& sigma, double anchor,
                               std::pair<double, double> domain, std::size_t n_nodes = 16385,
                               double tol = 1e-10);

/// [X0 - w, X0 + w] widened to contain x0, w = width_in_sd * sup|sigma| * sqrt(T),
/// X0 = x0 / (1 - alpha).
std::pair<double, double> default_transform_domain(const ValidatedSpec& spec,
                                                   double width_in_sd = 12.0);

/// Transformed drift b(y)/sigma(y) - sigma'(y)/2 at y = F^{-1}(z) (sign
/// flipped when sigma < 0).
double tilde_b(const TransformTable& table, const Coefficient& b, const Coefficient& sigma,
               double z);

/// Chain rule: b'(y) - b(y) sigma'(y) / sigma(y) - sigma''(y) sigma(y) / 2.
double tilde_b_d1(const TransformTable& table, const Coefficient& b, const Coefficient& sigma,
                  double z);

/// Grid sup of |tilde_b'| over the table's range.
double tilde_b_sup_d1(const TransformTable& table, const Coefficient& b,
                      const Coefficient& sigma, std::size_t n_grid);

/// tilde_b as a custom-tabulated coefficient; the second derivative is a
/// central difference of the chain-rule first derivative.
Coefficient tilde_b_coefficient(std::shared_ptr<const TransformTable> table, const Coefficient& b,
                                const Coefficient& sigma);

/// Unit-diffusion spec solved by Y = F(X):
///   Y_t = y0 + int tilde_b(Y) ds + s B_t + alpha sup Y, s = orientation,
/// with y0 = (1 - alpha) F(x0 / (1 - alpha)) so that Y_0 = F(X_0).
ProblemSpec transformed_spec(const ValidatedSpec& spec, std::shared_ptr<const TransformTable> table);

/// Maps every state of an X-path through F.
std::vector<double> map_forward(const TransformTable& table, std::span<const double> x);

struct LiftCheck {
  double lhs = 0.0;  // ||DX_T||_H
  double rhs = 0.0;  // inf|sigma| * ||DY_T||_H
  bool violated = false;
};

/// ||DX_T||_H >= inf|sigma| ||DY_T||_H - slack for fields on matched grids.
LiftCheck lift_bound_check(const DerivativeField& x_field, const DerivativeField& y_field,
                           double inf_sigma, double slack);

}  // namespace pdiff
