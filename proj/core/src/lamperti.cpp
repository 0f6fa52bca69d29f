#include "pdiff/lamperti.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace pdiff {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Kahan-compensated running sum.
struct Accumulator {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) noexcept {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

double TransformTable::hermite(std::size_t j, double t) const noexcept {
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * f_[j] + h10 * h_ * slope_[j] + h01 * f_[j + 1] + h11 * h_ * slope_[j + 1];
}

std::size_t TransformTable::cell_of(double y) const noexcept {
  const double pos = (y - y_.front()) / h_;
  const auto last = static_cast<std::ptrdiff_t>(y_.size()) - 2;
  auto j = static_cast<std::ptrdiff_t>(std::floor(pos));
  j = std::clamp<std::ptrdiff_t>(j, 0, last);
  // Guard against rounding in pos near node boundaries.
  if (y < y_[static_cast<std::size_t>(j)] && j > 0) --j;
  if (j < last && y >= y_[static_cast<std::size_t>(j) + 1]) ++j;
  return static_cast<std::size_t>(j);
}

double TransformTable::forward(double y) const {
  if (!(y >= y_.front() && y <= y_.back())) {
    throw Error(ErrorKind::OutOfDomain, "y = " + num(y) + " outside transform domain [" +
                                            num(y_.front()) + ", " + num(y_.back()) + "]");
  }
  const std::size_t j = cell_of(y);
  if (y == y_[j]) return f_[j];
  return hermite(j, (y - y_[j]) / h_);
}

double TransformTable::inverse(double z) const {
  if (!(z >= f_.front() && z <= f_.back())) {
    throw Error(ErrorKind::OutOfDomain, "z = " + num(z) + " outside transform range [" +
                                            num(f_.front()) + ", " + num(f_.back()) + "]");
  }
  auto it = std::upper_bound(f_.begin(), f_.end(), z);
  std::size_t j = it == f_.begin() ? 0 : static_cast<std::size_t>(it - f_.begin()) - 1;
  j = std::min(j, f_.size() - 2);
  if (z == f_[j]) return y_[j];

  // Safeguarded secant (Illinois) on g(t) = H_j(t) - z over t in [0, 1].
  double a = 0.0;
  double b = 1.0;
  double ga = f_[j] - z;
  double gb = f_[j + 1] - z;
  if (gb == 0.0) return y_[j + 1];
  const double stop = 1e-15 * std::max(1.0, std::abs(z));
  double t = 0.5;
  int side = 0;
  for (int iter = 0; iter < 200; ++iter) {
    t = a - ga * (b - a) / (gb - ga);
    if (!(t > a && t < b)) t = 0.5 * (a + b);
    const double g = hermite(j, t) - z;
    if (std::abs(g) <= stop || b - a <= 4e-16) break;
    if (g < 0.0) {
      a = t;
      ga = g;
      if (side == -1) gb *= 0.5;
      side = -1;
    } else {
      b = t;
      gb = g;
      if (side == 1) ga *= 0.5;
      side = 1;
    }
  }
  return y_[j] + t * h_;
}

TransformTable build_transform(const Coefficient& sigma, double anchor,
                               std::pair<double, double> domain, std::size_t n_nodes, double tol) {
  const auto [lo, hi] = domain;
  if (!(lo < hi)) throw Error(ErrorKind::InvalidArgument, "transform domain needs lo < hi");
  if (n_nodes < 3) throw Error(ErrorKind::InvalidArgument, "transform needs at least 3 nodes");
  if (!(anchor >= lo && anchor <= hi)) {
    throw Error(ErrorKind::DomainTooSmall,
                "anchor " + num(anchor) + " outside [" + num(lo) + ", " + num(hi) + "]");
  }

  TransformTable t;
  t.anchor_ = anchor;
  t.tol_ = tol;
  t.h_ = (hi - lo) / static_cast<double>(n_nodes - 1);
  const double h = t.h_;
  const auto below = static_cast<std::size_t>(std::ceil((anchor - lo) / h - 1e-9));
  const auto above = static_cast<std::size_t>(std::ceil((hi - anchor) / h - 1e-9));
  const std::size_t m = below + above + 1;
  t.y_.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    t.y_[j] = anchor + (static_cast<double>(j) - static_cast<double>(below)) * h;
  }

  const double s0 = sigma.value(anchor);
  if (!(s0 != 0.0) || !std::isfinite(s0)) {
    throw Error(ErrorKind::DegenerateDiffusion, "sigma(anchor) = " + num(s0));
  }
  t.orientation_ = s0 > 0.0 ? 1 : -1;
  const double sgn = t.orientation_;
  auto inv_sigma = [&](double y) {
    const double s = sgn * sigma.value(y);
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorKind::DegenerateDiffusion,
                  "sigma vanishes or changes sign at y = " + num(y));
    }
    return 1.0 / s;
  };

  t.slope_.resize(m);
  for (std::size_t j = 0; j < m; ++j) t.slope_[j] = inv_sigma(t.y_[j]);

  auto simpson = [&](double a, double b, double fa, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * inv_sigma(0.5 * (a + b)) + fb);
  };

  t.f_.assign(m, 0.0);
  Accumulator up;
  for (std::size_t j = below; j + 1 < m; ++j) {
    up.add(simpson(t.y_[j], t.y_[j + 1], t.slope_[j], t.slope_[j + 1]));
    t.f_[j + 1] = up.sum;
  }
  Accumulator down;
  for (std::size_t j = below; j > 0; --j) {
    down.add(simpson(t.y_[j - 1], t.y_[j], t.slope_[j - 1], t.slope_[j]));
    t.f_[j - 1] = -down.sum;
  }

  // Fritsch-Carlson limiter; inactive for smooth sigma on fine grids.
  for (std::size_t j = 0; j + 1 < m; ++j) {
    const double delta = (t.f_[j + 1] - t.f_[j]) / h;
    if (!(delta > 0.0)) {
      throw Error(ErrorKind::DegenerateDiffusion, "transform not strictly increasing near y = " +
                                                      num(t.y_[j]));
    }
    const double a = t.slope_[j] / delta;
    const double b = t.slope_[j + 1] / delta;
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double c = 3.0 / std::sqrt(r2);
      t.slope_[j] = c * a * delta;
      t.slope_[j + 1] = c * b * delta;
    }
  }

  // Midpoint check against Simpson on the half cell.
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < m; ++j) {
    const double mid = 0.5 * (t.y_[j] + t.y_[j + 1]);
    const double ref = t.f_[j] + simpson(t.y_[j], mid, inv_sigma(t.y_[j]), inv_sigma(mid));
    worst = std::max(worst, std::abs(t.hermite(j, 0.5) - ref));
  }
  t.check_error_ = worst;
  if (worst > tol) {
    throw Error(ErrorKind::ToleranceNotMet, "transform interpolation error " + num(worst) +
                                                " exceeds tol " + num(tol) +
                                                "; increase n_nodes");
  }
  return t;
}

std::pair<double, double> default_transform_domain(const ValidatedSpec& vspec, double width_in_sd) {
  const ProblemSpec& spec = vspec.spec();
  const double start = spec.x0 / (1.0 - spec.alpha);
  const double w =
      width_in_sd * vspec.bounds().diffusion_sup.value * std::sqrt(spec.horizon);
  return {std::min(spec.x0, start) - w, std::max(spec.x0, start) + w};
}

double tilde_b(const TransformTable& table, const Coefficient& b, const Coefficient& sigma,
               double z) {
  const double y = table.inverse(z);
  return table.orientation() * (b.value(y) / sigma.value(y) - 0.5 * sigma.d1(y));
}

double tilde_b_d1(const TransformTable& table, const Coefficient& b, const Coefficient& sigma,
                  double z) {
  const double y = table.inverse(z);
  const double s = sigma.value(y);
  return b.d1(y) - b.value(y) * sigma.d1(y) / s - 0.5 * sigma.d2(y) * s;
}

double tilde_b_sup_d1(const TransformTable& table, const Coefficient& b,
                      const Coefficient& sigma, std::size_t n_grid) {
  if (n_grid < 2) throw Error(ErrorKind::InvalidArgument, "tilde_b_sup_d1 needs n_grid >= 2");
  double best = 0.0;
  for (std::size_t i = 0; i < n_grid; ++i) {
    const double z = grid_point(table.range_lo(), table.range_hi(), i, n_grid);
    best = std::max(best, std::abs(tilde_b_d1(table, b, sigma, z)));
  }
  return best;
}

Coefficient tilde_b_coefficient(std::shared_ptr<const TransformTable> table, const Coefficient& b,
                                const Coefficient& sigma) {
  auto src = std::make_shared<TabulatedSource>();
  src->drift = std::make_shared<const Coefficient>(b);
  src->diffusion = std::make_shared<const Coefficient>(sigma);
  src->anchor = table->anchor();
  src->domain_lo = table->domain_lo();
  src->domain_hi = table->domain_hi();
  src->n_nodes = table->nodes().size();
  src->tol = table->tol();

  auto value = [table, b, sigma](double z) { return tilde_b(*table, b, sigma, z); };
  auto d1 = [table, b, sigma](double z) { return tilde_b_d1(*table, b, sigma, z); };
  auto d2 = [table, b, sigma](double z) {
    constexpr double step = 1e-4;
    const double zl = std::max(table->range_lo(), z - step);
    const double zr = std::min(table->range_hi(), z + step);
    return (tilde_b_d1(*table, b, sigma, zr) - tilde_b_d1(*table, b, sigma, zl)) / (zr - zl);
  };
  return Coefficient::tabulated(value, d1, d2, std::move(src));
}

ProblemSpec transformed_spec(const ValidatedSpec& vspec, std::shared_ptr<const TransformTable> table) {
  const ProblemSpec& spec = vspec.spec();
  if (spec.x0 != table->anchor()) {
    throw Error(ErrorKind::InvalidArgument, "transform anchor " + num(table->anchor()) +
                                                " differs from x0 " + num(spec.x0));
  }
  const EffectiveBounds& eb = vspec.bounds();
  if (!spec.diffusion.is_constant() && (eb.diffusion_sign == 0 || !(eb.diffusion_inf > 0.0))) {
    throw Error(ErrorKind::DegenerateDiffusion, "diffusion vanishes or changes sign");
  }
  ProblemSpec y;
  y.alpha = spec.alpha;
  y.horizon = spec.horizon;
  y.x0 = (1.0 - spec.alpha) * table->forward(spec.x0 / (1.0 - spec.alpha));
  y.diffusion = Coefficient::constant(static_cast<double>(table->orientation()));
  y.drift = tilde_b_coefficient(table, spec.drift, spec.diffusion);
  return y;
}

std::vector<double> map_forward(const TransformTable& table, std::span<const double> x) {
  std::vector<double> z(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) z[k] = table.forward(x[k]);
  return z;
}

LiftCheck lift_bound_check(const DerivativeField& x_field, const DerivativeField& y_field,
                           double inf_sigma, double slack) {
  if (x_field.d_x.size() != y_field.d_x.size() || x_field.dt != y_field.dt) {
    throw Error(ErrorKind::GridMismatch, "derivative fields live on different grids");
  }
  LiftCheck c;
  c.lhs = std::sqrt(x_field.h_norm_sq);
  c.rhs = inf_sigma * std::sqrt(y_field.h_norm_sq);
  c.violated = c.lhs < c.rhs - slack;
  return c;
}

}  // namespace pdiff
