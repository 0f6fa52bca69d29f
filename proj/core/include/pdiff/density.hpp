#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdiff/model.hpp"

namespace pdiff {

/// N terminal values X_T; path i uses noise keyed by (seed, i), so the
/// result does not depend on the worker count.
std::vector<double> ensemble(const ValidatedSpec& spec, const GridSpec& grid, std::size_t n,
                             std::uint64_t seed, unsigned workers = 1);

/// Density at z of x0/(1-alpha) + sigma B_t + alpha/(1-alpha) sigma S_t,
/// S_t = sup_{s<=t} B_s, by quadrature of the joint law of (B_t, S_t) along
/// the line of constant z.
double oracle_driftless(double x0, double sigma, double alpha, double t, double z);

struct SampleMoments {
  double mean = 0.0;
  double sd = 0.0;  // unbiased
};
SampleMoments sample_moments(std::span<const double> samples);

/// 1.06 * s * N^{-1/5}.
double rule_of_thumb_bandwidth(std::span<const double> samples);

/// n points spanning mean +- width_in_sd * s.
std::vector<double> default_eval_grid(std::span<const double> samples, std::size_t n = 512,
                                      double width_in_sd = 6.0);

/// Kernel estimate and its first two derivatives at one bandwidth.
struct KdeLevel {
  double bandwidth = 0.0;
  std::vector<double> p;
  std::vector<double> d1;
  std::vector<double> d2;
};

/// Pointwise standard errors of the difference between two ladder levels,
/// from the per-sample spread of the kernel differences.
struct LevelDifference {
  std::size_t fine = 0;
  std::size_t coarse = 0;
  std::vector<double> se_d1;
  std::vector<double> se_d2;
};

struct DensityEstimate {
  std::vector<double> z;
  std::vector<double> p;  // estimate at the base bandwidth
  double bandwidth = 0.0;
  std::size_t n_samples = 0;
  std::vector<KdeLevel> ladder;  // h/2, h, 2h in ladder mode, else just h
  std::vector<LevelDifference> differences;  // adjacent ladder pairs
  double sample_mean = 0.0;
  double sample_sd = 0.0;
};

struct KdeOptions {
  std::optional<double> bandwidth;  // nullopt: rule of thumb
  bool ladder = false;
  unsigned workers = 1;
};

/// Gaussian-kernel estimate on eval_grid. Throws EmptySample for N < 2.
DensityEstimate kde(std::span<const double> samples, std::span<const double> eval_grid,
                    const KdeOptions& options = {});

struct SmoothnessThresholds {
  double central_sd = 2.0;  // region mean +- central_sd * s
  double max_rms_z = 3.0;
};

/// Bandwidth-ladder stability of p' and p''. A heuristic, not a proof.
///
/// rel_l2_* is ||f_fine - f_coarse|| / ||f_coarse|| on the central region,
/// the largest over adjacent pairs. rms_z_* standardizes the same
/// differences by their Monte Carlo standard error; the verdict uses these,
/// since at desk sample sizes the relative L2 numbers are dominated by
/// sampling noise for smooth and rough targets alike.
struct SmoothnessReport {
  double rel_l2_d1 = 0.0;
  double rel_l2_d2 = 0.0;
  double rms_z_d1 = 0.0;
  double rms_z_d2 = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string label = "heuristic bandwidth-ladder diagnostic, not a proof of smoothness";
};

/// Needs a ladder of at least 3 bandwidths (kde with ladder = true).
SmoothnessReport smoothness_diagnostic(const DensityEstimate& estimate,
                                       const SmoothnessThresholds& thresholds = {});

/// Trapezoidal integral over an increasing grid.
double trapezoid(std::span<const double> z, std::span<const double> f);

/// Trapezoidal integral of |p - q|. Throws GridMismatch on length mismatch.
double l1_distance(std::span<const double> z, std::span<const double> p,
                   std::span<const double> q);

}  // namespace pdiff
