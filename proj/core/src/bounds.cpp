#include "pdiff/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "pdiff/lamperti.hpp"

namespace pdiff {

double theta(double t0, double alpha, double lb) {
  const double q = lb * lb * t0 * t0;
  const double a2 = alpha * alpha;
  return std::sqrt(2.0 * q + 8.0 * a2) + q + 4.0 * a2;
}

double diff_bound(double t1, double t2, double alpha, double lb, double sup_dx2) {
  if (!(t1 <= t2)) throw Error(ErrorKind::InvalidArgument, "diff_bound needs t1 <= t2");
  return 2.0 * theta(t2 - t1, alpha, lb) * sup_dx2;
}

double sup_lower_bound(double t, double alpha, double lb, double sigma_bar) {
  if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "sup_lower_bound needs t >= 0");
  return sigma_bar * sigma_bar * t / (2.0 * (1.0 + 2.0 * lb * lb * t * t + 2.0 * alpha * alpha));
}

double final_lower_bound(double t, double t0, double alpha, double lb, double sigma_bar) {
  if (!(t >= 0.0 && t <= t0)) {
    throw Error(ErrorKind::InvalidArgument, "final_lower_bound needs 0 <= t <= t0");
  }
  return (1.0 - 2.0 * theta(t0, alpha, lb)) * sup_lower_bound(t, alpha, lb, sigma_bar);
}

double max_horizon(double alpha, double lb) {
  if (!(lb >= 0.0)) throw Error(ErrorKind::InvalidArgument, "max_horizon needs Lb >= 0");
  if (theta(0.0, alpha, lb) >= 0.5) return 0.0;
  if (lb == 0.0) return kInfiniteHorizon;
  // theta(t) >= Lb^2 t^2, so theta(1/Lb) >= 1 brackets the root.
  double lo = 0.0;
  double hi = 1.0 / lb;
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    (theta(mid, alpha, lb) < 0.5 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double critical_alpha(double t0, double lb) {
  if (theta(t0, 0.0, lb) >= 0.5) return 0.0;
  // theta >= 2 sqrt(2) |alpha| reaches 1/2 before |alpha| = 1/4.
  double lo = 0.0;
  double hi = 0.25;
  while (hi - lo > 1e-15) {
    const double mid = 0.5 * (lo + hi);
    (theta(t0, mid, lb) < 0.5 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

RegimeReport regime_report(const ValidatedSpec& vspec, double t0, const RegimeOptions& options) {
  if (!(t0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "regime_report needs t0 > 0");
  const ProblemSpec& spec = vspec.spec();
  const EffectiveBounds& eb = vspec.bounds();

  RegimeReport r;
  r.t0 = t0;
  r.alpha = spec.alpha;
  if (spec.diffusion.is_constant()) {
    r.lb = eb.drift_d1.value;
    r.lb_source = eb.drift_d1.source;
    r.sigma_bar = std::abs(spec.diffusion.value(spec.x0));
  } else {
    if (eb.diffusion_sign == 0 || !(eb.diffusion_inf > 0.0)) {
      throw Error(ErrorKind::DegenerateDiffusion,
                  "transform needs a diffusion bounded away from zero with constant sign");
    }
    const auto table = std::make_shared<const TransformTable>(
        build_transform(spec.diffusion, spec.x0, default_transform_domain(vspec),
                        options.transform_nodes));
    r.lb = tilde_b_sup_d1(*table, spec.drift, spec.diffusion, options.transform_nodes);
    r.lb_source = BoundSource::grid;
    r.sigma_bar = eb.diffusion_inf;
    r.transformed = true;
  }

  r.theta_at_t0 = theta(t0, r.alpha, r.lb);
  r.admissible = r.theta_at_t0 < 0.5;
  r.t0_max = max_horizon(r.alpha, r.lb);

  const double end = std::min(t0, r.t0_max);
  const std::size_t m = std::max<std::size_t>(options.curve_points, 2);
  r.lower_bound_curve.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = end > 0.0 ? grid_point(0.0, end, i, m) : 0.0;
    const double value =
        end > 0.0 ? final_lower_bound(t, end, r.alpha, r.lb, r.sigma_bar) : 0.0;
    r.lower_bound_curve.emplace_back(t, value);
  }
  return r;
}

}  // namespace pdiff
