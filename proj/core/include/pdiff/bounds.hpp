#pragma once

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "pdiff/model.hpp"

namespace pdiff {

/// theta(t0, alpha, Lb) = sqrt(2 Lb^2 t0^2 + 8 alpha^2) + Lb^2 t0^2 + 4 alpha^2.
/// Lb is the sup-norm of the drift derivative. Even in alpha.
double theta(double t0, double alpha, double lb);

/// Upper bound on | ||DX_{t2}||^2 - ||DX_{t1}||^2 | given sup_s ||DX_s||^2:
/// 2 * theta(t2 - t1, alpha, Lb) * sup_dx2.
double diff_bound(double t1, double t2, double alpha, double lb, double sup_dx2);

/// Lower bound on sup_{s<=t} ||DX_s||^2: sigma^2 t / (2 (1 + 2 Lb^2 t^2 + 2 alpha^2)).
double sup_lower_bound(double t, double alpha, double lb, double sigma_bar);

/// Lower bound on ||DX_t||^2 for t <= t0: (1 - 2 theta(t0)) * sup_lower_bound(t).
/// Negative when theta(t0) >= 1/2; admissibility is the caller's check.
double final_lower_bound(double t, double t0, double alpha, double lb, double sigma_bar);

/// Largest t0 with theta(t0, alpha, Lb) < 1/2: 0 if theta(0) >= 1/2, +inf
/// when Lb = 0 and theta(0) < 1/2, otherwise the root of theta = 1/2 found
/// by bisection to relative tolerance 1e-12.
double max_horizon(double alpha, double lb);

/// Largest |alpha| with theta(t0, alpha, Lb) < 1/2 (0 if none).
double critical_alpha(double t0, double lb);

inline constexpr double kInfiniteHorizon = std::numeric_limits<double>::infinity();

struct RegimeReport {
  double t0 = 0.0;
  double theta_at_t0 = 0.0;
  bool admissible = false;
  double t0_max = 0.0;  // may be kInfiniteHorizon
  std::vector<std::pair<double, double>> lower_bound_curve;
  double alpha = 0.0;
  double lb = 0.0;
  BoundSource lb_source = BoundSource::grid;
  double sigma_bar = 0.0;
  bool transformed = false;  // theta computed for the unit-diffusion transform
};

struct RegimeOptions {
  std::size_t curve_points = 100;
  std::size_t transform_nodes = 16385;
};

/// Evaluates the smooth-density regime at t0. Constant sigma uses Lb =
/// ||b'|| and sigma_bar = |sigma|; otherwise the drift of the transformed
/// unit-diffusion process is used and sigma_bar = inf |sigma|.
RegimeReport regime_report(const ValidatedSpec& spec, double t0, const RegimeOptions& options = {});

}  // namespace pdiff
