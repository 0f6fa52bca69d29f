#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pdiff/model.hpp"

namespace pdiff {

/// Brownian increments for one path, each N(0, dt).
class NoiseBlock {
 public:
  /// Counter-keyed draw: increment k depends only on (seed, path_index, k).
  static NoiseBlock generate(std::uint64_t seed, std::uint64_t path_index, const GridSpec& grid);
  static NoiseBlock from_increments(std::vector<double> db, double dt, std::uint64_t seed = 0,
                                    std::uint64_t path_index = 0);

  std::span<const double> increments() const noexcept { return db_; }
  std::size_t size() const noexcept { return db_.size(); }
  double dt() const noexcept { return dt_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t path_index() const noexcept { return path_index_; }

  /// Cameron-Martin shift: db[k] + eps * h[k] * dt.
  NoiseBlock shifted(std::span<const double> h, double eps) const;
  /// Sums consecutive groups of `factor` increments.
  NoiseBlock coarsened(std::size_t factor) const;
  /// Negated increments (drives the transformed process when sigma < 0).
  NoiseBlock negated() const;

 private:
  std::vector<double> db_;
  double dt_ = 0.0;
  std::uint64_t seed_ = 0;
  std::uint64_t path_index_ = 0;
};

struct StepResolution {
  double x_next;
  bool is_new_max;
};

/// Unique solution of X = a + alpha * max(m_prev, X) for alpha < 1. Ties
/// (a + alpha * m_prev == m_prev) resolve to is_new_max = false.
inline StepResolution resolve_step(double a, double m_prev, double alpha) noexcept {
  const double stay = a + alpha * m_prev;
  if (stay <= m_prev) return {stay, false};
  return {a / (1.0 - alpha), true};
}

/// Euler-Maruyama with coefficients frozen at the left endpoint and the
/// alpha * max term resolved exactly per step. x[0] = x0 / (1 - alpha).
PathState euler_path(const ValidatedSpec& spec, const GridSpec& grid, const NoiseBlock& noise);

/// Terminal value only; same arithmetic as euler_path without storing the path.
double euler_terminal(const ValidatedSpec& spec, const GridSpec& grid, const NoiseBlock& noise);

/// Driftless, constant-sigma closed form
///   x_k = x0/(1-alpha) + sigma*B_k + alpha/(1-alpha) * max_{j<=k} sigma*B_j.
PathState explicit_additive_path(double x0, double alpha, double sigma, const NoiseBlock& noise);

struct PicardResult {
  PathState path;
  std::vector<double> sup_diff;  // sup_diff[n] = max_k |X^{n+1}_k - X^n_k|
  bool converged = false;
};

/// Discrete Picard iteration started from X^0 = x0, each iterate built from
/// the resolved-max representation. Stops once sup_diff < tol; otherwise
/// returns the last iterate with converged = false.
PicardResult picard_solve(const ValidatedSpec& spec, const GridSpec& grid, const NoiseBlock& noise,
                          std::size_t n_iter, double tol);

}  // namespace pdiff
