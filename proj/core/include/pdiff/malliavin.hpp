#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pdiff/integrate.hpp"
#include "pdiff/model.hpp"

namespace pdiff {

/// Pathwise Malliavin derivative of a simulated path at the final time,
/// indexed by r_i = i * dt for i < n_steps.
///
/// The r-index i is the sensitivity to the increment db[i]; entries with
/// r_i >= t_k never enter the H-norm at time t_k, so D_r X_t = 0 for r > t
/// holds by construction. d_m is d_x frozen at the first-attainment argmax.
struct DerivativeField {
  double dt = 0.0;
  std::vector<double> d_x;
  std::vector<double> d_m;
  double h_norm_sq = 0.0;      // ||D X_T||_H^2
  double m_norm_sq = 0.0;      // ||D M_T||_H^2
  double sup_h_norm_sq = 0.0;  // max_k ||D X_{t_k}||_H^2
  std::vector<double> h_norm_sq_by_time;  // n_steps + 1 entries when tracked
};

/// Propagates D_{r_i} X along the path.
///
/// Per step k -> k+1 with g_k = b'(x_k) dt + sigma'(x_k) db_k, every live
/// r-index evolves as D <- D (1 + g_k), and the increment at i = k seeds
/// D_{r_k} with sigma(x_k). When step k+1 sets a new running max the
/// implicit alpha term is resolved:
///   D_{k+1} = (D_k (1 + g_k) - alpha D M_k [+ sigma(x_k) at i = k]) / (1 - alpha),
///   D M_{k+1} = D_{k+1}.
/// Between new-max steps the field is a common scalar multiple plus the
/// newly seeded entries, so it is stored lazily as scale * V and only
/// materialized at new-max steps; H-norms are carried by recurrences.
/// Memory O(n), time O(n * number of new-max steps).
DerivativeField propagate_derivative(const PathState& path, const ValidatedSpec& spec,
                                     const GridSpec& grid, bool track_all_times = false);

/// Left-Riemann sum over r_i < t_k of |d_x[i]|^2 dt.
double h_norm_sq(std::span<const double> d_x, double dt, std::size_t k);

/// max_k ||D X_{t_k}||_H^2 along the path.
double sup_h_norm_sq(const PathState& path, const ValidatedSpec& spec, const GridSpec& grid);

/// sum_i d_x[i] h[i] dt, the directional derivative along int h.
double inner_product(const DerivativeField& field, std::span<const double> h);

/// (X^eps_T - X_T) / eps with X^eps driven by db[k] + eps h(t_k) dt.
double cameron_martin_fd(const ValidatedSpec& spec, const GridSpec& grid, const NoiseBlock& noise,
                         std::span<const double> h, double eps);

}  // namespace pdiff
