#include "pdiff/malliavin.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pdiff {

namespace {

constexpr double kScaleFloor = 1e-150;
constexpr double kScaleCeil = 1e150;

}  // namespace

DerivativeField propagate_derivative(const PathState& path, const ValidatedSpec& vspec,
                                     const GridSpec& grid, bool track_all_times) {
  const std::size_t n = grid.n_steps();
  if (path.db.size() != n || path.x.size() != n + 1 || path.argmax_idx.size() != n + 1) {
    throw Error(ErrorKind::GridMismatch,
                "path has " + std::to_string(path.db.size()) + " steps, grid has " +
                    std::to_string(n));
  }
  const ProblemSpec& spec = vspec.spec();
  const double dt = grid.dt();
  const double alpha = spec.alpha;
  const double inv = 1.0 / (1.0 - alpha);

  DerivativeField f;
  f.dt = dt;
  std::vector<double> v(n, 0.0);  // D_{r_i} X_k = scale * v[i] for i < k
  std::vector<double>& dm = f.d_m;
  dm.assign(n, 0.0);
  double scale = 1.0;
  double sdd = 0.0;  // sum of D^2 over live entries, unweighted
  if (track_all_times) f.h_norm_sq_by_time.assign(n + 1, 0.0);

  for (std::size_t k = 0; k < n; ++k) {
    const double xk = path.x[k];
    const double a = 1.0 + spec.drift.d1(xk) * dt + spec.diffusion.d1(xk) * path.db[k];
    const double sig = spec.diffusion.value(xk);
    const bool new_max = path.argmax_idx[k + 1] == k + 1;

    if (!new_max) {
      const double next_scale = scale * a;
      if (!(std::abs(next_scale) >= kScaleFloor && std::abs(next_scale) <= kScaleCeil)) {
        for (std::size_t i = 0; i < k; ++i) v[i] *= next_scale;
        scale = 1.0;
      } else {
        scale = next_scale;
      }
      v[k] = sig / scale;
      sdd = a * a * sdd + sig * sig;
    } else {
      const double fac = scale * a;
      double ss = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double d = (fac * v[i] - alpha * dm[i]) * inv;
        v[i] = d;
        dm[i] = d;
        ss += d * d;
      }
      const double dk = sig * inv;
      v[k] = dk;
      dm[k] = dk;
      ss += dk * dk;
      scale = 1.0;
      sdd = ss;
    }

    if (!std::isfinite(sdd)) {
      throw Error(ErrorKind::NonFinite,
                  "derivative left the finite range at step " + std::to_string(k + 1), k + 1);
    }
    const double hk = sdd * dt;
    f.sup_h_norm_sq = std::max(f.sup_h_norm_sq, hk);
    if (track_all_times) f.h_norm_sq_by_time[k + 1] = hk;
  }

  f.d_x.resize(n);
  double hx = 0.0;
  double hm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    f.d_x[i] = scale * v[i];
    hx += f.d_x[i] * f.d_x[i];
    hm += dm[i] * dm[i];
  }
  f.h_norm_sq = hx * dt;
  f.m_norm_sq = hm * dt;
  // The direct final sum replaces the recurrence value at t_n.
  f.sup_h_norm_sq = std::max(f.sup_h_norm_sq, f.h_norm_sq);
  if (track_all_times) f.h_norm_sq_by_time[n] = f.h_norm_sq;
  return f;
}

double h_norm_sq(std::span<const double> d_x, double dt, std::size_t k) {
  const std::size_t m = std::min(k, d_x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += d_x[i] * d_x[i];
  return s * dt;
}

double sup_h_norm_sq(const PathState& path, const ValidatedSpec& spec, const GridSpec& grid) {
  return propagate_derivative(path, spec, grid, false).sup_h_norm_sq;
}

double inner_product(const DerivativeField& field, std::span<const double> h) {
  if (h.size() != field.d_x.size()) {
    throw Error(ErrorKind::GridMismatch, "direction length differs from derivative field");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) s += field.d_x[i] * h[i];
  return s * field.dt;
}

double cameron_martin_fd(const ValidatedSpec& spec, const GridSpec& grid, const NoiseBlock& noise,
                         std::span<const double> h, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be > 0");
  const double base = euler_terminal(spec, grid, noise);
  const double bumped = euler_terminal(spec, grid, noise.shifted(h, eps));
  const double fd = (bumped - base) / eps;
  if (!std::isfinite(fd)) throw Error(ErrorKind::NonFinite, "finite difference is not finite");
  return fd;
}

}  // namespace pdiff
