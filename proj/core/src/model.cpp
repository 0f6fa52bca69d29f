#include "pdiff/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pdiff {

namespace {

constexpr std::string_view kConstNames[] = {"value"};
constexpr std::string_view kLinearNames[] = {"intercept", "slope"};
constexpr std::string_view kSineNames[] = {"amplitude", "frequency", "phase", "offset"};
constexpr std::string_view kTanhNames[] = {"amplitude", "scale", "offset"};
constexpr std::string_view kOuNames[] = {"rate", "mean"};

std::array<double, 4> preset_defaults(Preset preset) {
  switch (preset) {
    case Preset::constant: return {0.0, 0.0, 0.0, 0.0};
    case Preset::linear: return {0.0, 0.0, 0.0, 0.0};
    case Preset::sine: return {1.0, 1.0, 0.0, 0.0};
    case Preset::tanh: return {1.0, 1.0, 0.0, 0.0};
    case Preset::ornstein_uhlenbeck: return {1.0, 0.0, 0.0, 0.0};
    default: return {};
  }
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string_view preset_name(Preset preset) noexcept {
  switch (preset) {
    case Preset::constant: return "const";
    case Preset::linear: return "linear";
    case Preset::sine: return "sine";
    case Preset::tanh: return "tanh";
    case Preset::ornstein_uhlenbeck: return "ornstein_uhlenbeck";
    case Preset::custom_callback: return "custom-callback";
    case Preset::custom_tabulated: return "custom-tabulated";
  }
  return "unknown";
}

std::optional<Preset> preset_from_name(std::string_view name) noexcept {
  for (Preset p : {Preset::constant, Preset::linear, Preset::sine, Preset::tanh,
                   Preset::ornstein_uhlenbeck, Preset::custom_callback,
                   Preset::custom_tabulated}) {
    if (preset_name(p) == name) return p;
  }
  return std::nullopt;
}

std::span<const std::string_view> preset_param_names(Preset preset) noexcept {
  switch (preset) {
    case Preset::constant: return kConstNames;
    case Preset::linear: return kLinearNames;
    case Preset::sine: return kSineNames;
    case Preset::tanh: return kTanhNames;
    case Preset::ornstein_uhlenbeck: return kOuNames;
    default: return {};
  }
}

std::optional<double> DeclaredBounds::for_order(int order) const noexcept {
  switch (order) {
    case 0: return sup;
    case 1: return sup_d1;
    case 2: return sup_d2;
    default: return std::nullopt;
  }
}

std::string_view to_string(BoundSource source) noexcept {
  return source == BoundSource::declared ? "declared" : "grid";
}

Coefficient::Coefficient() = default;

Coefficient Coefficient::constant(double value) {
  Coefficient c;
  c.preset_ = Preset::constant;
  c.p_ = {value, 0.0, 0.0, 0.0};
  return c;
}

Coefficient Coefficient::linear(double intercept, double slope) {
  Coefficient c;
  c.preset_ = Preset::linear;
  c.p_ = {intercept, slope, 0.0, 0.0};
  return c;
}

Coefficient Coefficient::sine(double amplitude, double frequency, double phase, double offset) {
  Coefficient c;
  c.preset_ = Preset::sine;
  c.p_ = {amplitude, frequency, phase, offset};
  return c;
}

Coefficient Coefficient::tanh(double amplitude, double scale, double offset) {
  Coefficient c;
  c.preset_ = Preset::tanh;
  c.p_ = {amplitude, scale, offset, 0.0};
  return c;
}

Coefficient Coefficient::ornstein_uhlenbeck(double rate, double mean) {
  Coefficient c;
  c.preset_ = Preset::ornstein_uhlenbeck;
  c.p_ = {rate, mean, 0.0, 0.0};
  return c;
}

Coefficient Coefficient::custom(Callback value, Callback d1, Callback d2) {
  if (!value || !d1 || !d2) {
    throw Error(ErrorKind::InvalidArgument, "custom coefficient needs value, d1 and d2");
  }
  Coefficient c;
  c.preset_ = Preset::custom_callback;
  c.callbacks_ = std::make_shared<const Callbacks>(
      Callbacks{std::move(value), std::move(d1), std::move(d2)});
  return c;
}

Coefficient Coefficient::tabulated(Callback value, Callback d1, Callback d2,
                                   std::shared_ptr<const TabulatedSource> source) {
  Coefficient c = custom(std::move(value), std::move(d1), std::move(d2));
  c.preset_ = Preset::custom_tabulated;
  c.source_ = std::move(source);
  return c;
}

Coefficient Coefficient::from_params(Preset preset, const std::map<std::string, double>& params) {
  const auto names = preset_param_names(preset);
  if (names.empty()) {
    throw Error(ErrorKind::InvalidArgument,
                std::string("preset '") + std::string(preset_name(preset)) +
                    "' cannot be built from parameters");
  }
  std::array<double, 4> p = preset_defaults(preset);
  for (const auto& [key, v] : params) {
    const auto it = std::find(names.begin(), names.end(), key);
    if (it == names.end()) {
      throw Error(ErrorKind::InvalidArgument, "unknown parameter '" + key + "' for preset '" +
                                                  std::string(preset_name(preset)) + "'");
    }
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::InvalidArgument, "parameter '" + key + "' is not finite");
    }
    p[static_cast<std::size_t>(it - names.begin())] = v;
  }
  Coefficient c;
  c.preset_ = preset;
  c.p_ = p;
  return c;
}

std::map<std::string, double> Coefficient::params() const {
  std::map<std::string, double> out;
  const auto names = preset_param_names(preset_);
  for (std::size_t i = 0; i < names.size(); ++i) out.emplace(std::string(names[i]), p_[i]);
  return out;
}

Coefficient Coefficient::with_bounds(DeclaredBounds bounds) const {
  Coefficient c = *this;
  c.bounds_ = bounds;
  return c;
}

double Coefficient::value(double x) const {
  switch (preset_) {
    case Preset::constant: return p_[0];
    case Preset::linear: return p_[0] + p_[1] * x;
    case Preset::sine: return p_[0] * std::sin(p_[1] * x + p_[2]) + p_[3];
    case Preset::tanh: return p_[0] * std::tanh(p_[1] * x) + p_[2];
    case Preset::ornstein_uhlenbeck: return p_[0] * (p_[1] - x);
    case Preset::custom_callback:
    case Preset::custom_tabulated: return callbacks_->value(x);
  }
  return 0.0;
}

double Coefficient::d1(double x) const {
  switch (preset_) {
    case Preset::constant: return 0.0;
    case Preset::linear: return p_[1];
    case Preset::sine: return p_[0] * p_[1] * std::cos(p_[1] * x + p_[2]);
    case Preset::tanh: {
      const double t = std::tanh(p_[1] * x);
      return p_[0] * p_[1] * (1.0 - t * t);
    }
    case Preset::ornstein_uhlenbeck: return -p_[0];
    case Preset::custom_callback:
    case Preset::custom_tabulated: return callbacks_->d1(x);
  }
  return 0.0;
}

double Coefficient::d2(double x) const {
  switch (preset_) {
    case Preset::constant:
    case Preset::linear:
    case Preset::ornstein_uhlenbeck: return 0.0;
    case Preset::sine: return -p_[0] * p_[1] * p_[1] * std::sin(p_[1] * x + p_[2]);
    case Preset::tanh: {
      const double t = std::tanh(p_[1] * x);
      return -2.0 * p_[0] * p_[1] * p_[1] * t * (1.0 - t * t);
    }
    case Preset::custom_callback:
    case Preset::custom_tabulated: return callbacks_->d2(x);
  }
  return 0.0;
}

double Coefficient::eval(double x, int order) const {
  switch (order) {
    case 0: return value(x);
    case 1: return d1(x);
    case 2: return d2(x);
    default:
      throw Error(ErrorKind::UnsupportedOrder,
                  "derivative order " + std::to_string(order) + " not in {0, 1, 2}");
  }
}

bool Coefficient::is_constant() const noexcept {
  switch (preset_) {
    case Preset::constant: return true;
    case Preset::linear: return p_[1] == 0.0;
    case Preset::sine: return p_[0] == 0.0 || p_[1] == 0.0;
    case Preset::tanh: return p_[0] == 0.0 || p_[1] == 0.0;
    case Preset::ornstein_uhlenbeck: return p_[0] == 0.0;
    default: return false;
  }
}

GridSpec::GridSpec(double horizon, std::size_t n_steps)
    : horizon_(horizon), n_steps_(n_steps), dt_(horizon / static_cast<double>(n_steps)) {
  if (n_steps == 0) throw Error(ErrorKind::InvalidArgument, "grid needs n_steps >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorKind::InvalidArgument, "grid horizon must be finite and > 0");
  }
}

std::vector<double> GridSpec::times() const {
  std::vector<double> t(n_steps_ + 1);
  for (std::size_t k = 0; k <= n_steps_; ++k) t[k] = time(k);
  return t;
}

double sup_norm_estimate(const Coefficient& c, int order, double lo, double hi,
                         std::size_t n_grid) {
  if (!(lo < hi)) throw Error(ErrorKind::InvalidArgument, "sup_norm_estimate needs lo < hi");
  if (n_grid < 2) throw Error(ErrorKind::InvalidArgument, "sup_norm_estimate needs n_grid >= 2");
  double best = 0.0;
  for (std::size_t i = 0; i < n_grid; ++i) {
    best = std::max(best, std::abs(c.eval(grid_point(lo, hi, i, n_grid), order)));
  }
  return best;
}

namespace {

struct GridScan {
  double sup[3] = {0.0, 0.0, 0.0};
  double inf_abs = std::numeric_limits<double>::infinity();
  bool has_pos = false;
  bool has_neg = false;
  bool has_zero = false;
};

GridScan scan(const Coefficient& c, double lo, double hi, std::size_t n) {
  GridScan s;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid_point(lo, hi, i, n);
    const double v = c.value(x);
    s.sup[0] = std::max(s.sup[0], std::abs(v));
    s.sup[1] = std::max(s.sup[1], std::abs(c.d1(x)));
    s.sup[2] = std::max(s.sup[2], std::abs(c.d2(x)));
    s.inf_abs = std::min(s.inf_abs, std::abs(v));
    if (v > 0.0) s.has_pos = true;
    else if (v < 0.0) s.has_neg = true;
    else s.has_zero = true;
  }
  return s;
}

void check_derivatives(const Coefficient& c, std::string_view role, double lo, double hi,
                       const ValidationOptions& opt) {
  const double h = opt.fd_step;
  for (std::size_t i = 0; i < opt.n_grid; ++i) {
    const double x = grid_point(lo, hi, i, opt.n_grid);
    const double fd1 = (c.value(x + h) - c.value(x - h)) / (2.0 * h);
    const double an1 = c.d1(x);
    const double fd2 = (c.d1(x + h) - c.d1(x - h)) / (2.0 * h);
    const double an2 = c.d2(x);
    const bool bad1 = !(std::abs(fd1 - an1) <= opt.fd_tol * (1.0 + std::abs(an1)));
    const bool bad2 = !(std::abs(fd2 - an2) <= opt.fd_tol * (1.0 + std::abs(an2)));
    if (bad1 || bad2) {
      throw Error(ErrorKind::InconsistentDerivatives,
                  std::string(role) + ": " + (bad1 ? "d1" : "d2") +
                      " disagrees with finite differences at x = " + format_number(x),
                  i);
    }
  }
}

NormEstimate effective(const Coefficient& c, std::string_view role, int order, double grid_sup) {
  if (const auto declared = c.declared_bounds().for_order(order)) {
    if (grid_sup > *declared * (1.0 + 1e-12) + 1e-15) {
      throw Error(ErrorKind::DeclaredBoundViolated,
                  std::string(role) + ": grid sup of order-" + std::to_string(order) +
                      " derivative " + format_number(grid_sup) + " exceeds declared bound " +
                      format_number(*declared));
    }
    return {*declared, BoundSource::declared};
  }
  return {grid_sup, BoundSource::grid};
}

}  // namespace

ValidatedSpec validate(const ProblemSpec& spec, const ValidationOptions& options) {
  if (!(spec.alpha < 1.0)) {
    throw Error(ErrorKind::AlphaOutOfRange,
                "alpha must be < 1 (got " + format_number(spec.alpha) + ")");
  }
  if (!std::isfinite(spec.alpha) || !std::isfinite(spec.x0)) {
    throw Error(ErrorKind::InvalidArgument, "x0 and alpha must be finite");
  }
  if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon)) {
    throw Error(ErrorKind::InvalidArgument, "horizon must be finite and > 0");
  }
  if (options.n_grid < 2) throw Error(ErrorKind::InvalidArgument, "validation grid too small");

  double lo = 0.0;
  double hi = 0.0;
  if (options.interval) {
    std::tie(lo, hi) = *options.interval;
    if (!(lo < hi)) throw Error(ErrorKind::InvalidArgument, "validation interval needs lo < hi");
  } else {
    // Two passes: the width depends on sup|sigma|, which is itself a grid
    // quantity. Seed with |sigma(x0)| (at least 1) and rescan once.
    const double start = spec.x0 / (1.0 - spec.alpha);
    const double c_lo = std::min(spec.x0, start);
    const double c_hi = std::max(spec.x0, start);
    const double root_t = std::sqrt(spec.horizon);
    double w = options.width_in_sd * std::max(1.0, std::abs(spec.diffusion.value(spec.x0))) * root_t;
    const double sigma_bar =
        sup_norm_estimate(spec.diffusion, 0, c_lo - w, c_hi + w, options.n_grid);
    if (sigma_bar > 0.0) w = options.width_in_sd * sigma_bar * root_t;
    lo = c_lo - w;
    hi = c_hi + w;
  }

  check_derivatives(spec.drift, "drift", lo, hi, options);
  check_derivatives(spec.diffusion, "diffusion", lo, hi, options);

  const GridScan b = scan(spec.drift, lo, hi, options.n_grid);
  const GridScan s = scan(spec.diffusion, lo, hi, options.n_grid);

  EffectiveBounds eb;
  effective(spec.drift, "drift", 0, b.sup[0]);
  eb.drift_d1 = effective(spec.drift, "drift", 1, b.sup[1]);
  effective(spec.drift, "drift", 2, b.sup[2]);
  eb.diffusion_sup = effective(spec.diffusion, "diffusion", 0, s.sup[0]);
  eb.diffusion_d1 = effective(spec.diffusion, "diffusion", 1, s.sup[1]);
  eb.diffusion_d2 = effective(spec.diffusion, "diffusion", 2, s.sup[2]);
  eb.diffusion_inf = s.inf_abs;
  eb.diffusion_sign = s.has_zero || (s.has_pos && s.has_neg) ? 0 : (s.has_pos ? 1 : -1);
  eb.grid_lo = lo;
  eb.grid_hi = hi;

  if (options.require_transform && (eb.diffusion_sign == 0 || !(eb.diffusion_inf > 0.0))) {
    throw Error(ErrorKind::DegenerateDiffusion,
                "diffusion vanishes or changes sign on [" + format_number(lo) + ", " +
                    format_number(hi) + "]");
  }
  return ValidatedSpec(spec, eb);
}

ValidatedSpec validate(const ValidatedSpec& spec, const ValidationOptions& options) {
  return validate(spec.spec(), options);
}

}  // namespace pdiff
