#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdiff/error.hpp"

namespace pdiff {

/// Built-in coefficient families. Catalog presets serialize to config
/// files; the two custom kinds exist only in-process (tabulated ones can be
/// rebuilt from their recorded source).
enum class Preset {
  constant,            // value
  linear,              // intercept + slope * x
  sine,                // amplitude * sin(frequency * x + phase) + offset
  tanh,                // amplitude * tanh(scale * x) + offset
  ornstein_uhlenbeck,  // rate * (mean - x)
  custom_callback,
  custom_tabulated,
};

std::string_view preset_name(Preset preset) noexcept;
std::optional<Preset> preset_from_name(std::string_view name) noexcept;

/// Parameter names of a catalog preset, in storage order.
std::span<const std::string_view> preset_param_names(Preset preset) noexcept;

struct DeclaredBounds {
  std::optional<double> sup;
  std::optional<double> sup_d1;
  std::optional<double> sup_d2;

  std::optional<double> for_order(int order) const noexcept;
  bool empty() const noexcept { return !sup && !sup_d1 && !sup_d2; }
  bool operator==(const DeclaredBounds&) const = default;
};

class Coefficient;

/// Provenance of a tabulated transformed drift: enough to rebuild it.
struct TabulatedSource {
  std::shared_ptr<const Coefficient> drift;
  std::shared_ptr<const Coefficient> diffusion;
  double anchor = 0.0;
  double domain_lo = 0.0;
  double domain_hi = 0.0;
  std::size_t n_nodes = 0;
  double tol = 0.0;
};

/// Scalar function with first and second derivatives. Immutable; copies
/// share callback state.
class Coefficient {
 public:
  using Callback = std::function<double(double)>;

  Coefficient();

  static Coefficient constant(double value);
  static Coefficient linear(double intercept, double slope);
  static Coefficient sine(double amplitude = 1.0, double frequency = 1.0, double phase = 0.0,
                          double offset = 0.0);
  static Coefficient tanh(double amplitude = 1.0, double scale = 1.0, double offset = 0.0);
  static Coefficient ornstein_uhlenbeck(double rate = 1.0, double mean = 0.0);
  static Coefficient custom(Callback value, Callback d1, Callback d2);
  static Coefficient tabulated(Callback value, Callback d1, Callback d2,
                               std::shared_ptr<const TabulatedSource> source);

  /// Catalog preset from named parameters; missing names take defaults,
  /// unknown names throw InvalidArgument.
  static Coefficient from_params(Preset preset, const std::map<std::string, double>& params);

  Preset preset() const noexcept { return preset_; }
  std::map<std::string, double> params() const;
  const DeclaredBounds& declared_bounds() const noexcept { return bounds_; }
  Coefficient with_bounds(DeclaredBounds bounds) const;
  const std::shared_ptr<const TabulatedSource>& source() const noexcept { return source_; }

  double value(double x) const;
  double d1(double x) const;
  double d2(double x) const;
  /// order in {0, 1, 2}; anything else throws UnsupportedOrder.
  double eval(double x, int order) const;

  /// True when the function is identically constant by construction.
  bool is_constant() const noexcept;

 private:
  struct Callbacks {
    Callback value;
    Callback d1;
    Callback d2;
  };

  Preset preset_ = Preset::constant;
  std::array<double, 4> p_{};
  DeclaredBounds bounds_;
  std::shared_ptr<const Callbacks> callbacks_;
  std::shared_ptr<const TabulatedSource> source_;
};

/// X_t = x0 + int b(X) ds + int sigma(X) dB + alpha * sup_{s<=t} X_s.
struct ProblemSpec {
  double x0 = 0.0;
  double alpha = 0.0;
  Coefficient drift = Coefficient::constant(0.0);
  Coefficient diffusion = Coefficient::constant(1.0);
  double horizon = 1.0;
};

/// Uniform grid t_k = k * dt on [0, horizon]; time(n_steps) is the horizon.
class GridSpec {
 public:
  GridSpec(double horizon, std::size_t n_steps);

  std::size_t n_steps() const noexcept { return n_steps_; }
  double horizon() const noexcept { return horizon_; }
  double dt() const noexcept { return dt_; }
  double time(std::size_t k) const noexcept {
    return k == n_steps_ ? horizon_ : static_cast<double>(k) * dt_;
  }
  std::vector<double> times() const;

  bool operator==(const GridSpec&) const = default;

 private:
  double horizon_;
  std::size_t n_steps_;
  double dt_;
};

/// One discretized trajectory. Arrays over states have n_steps + 1 entries;
/// db has n_steps.
struct PathState {
  std::vector<double> x;
  std::vector<double> running_max;
  std::vector<std::size_t> argmax_idx;
  std::vector<double> db;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;

  std::size_t n_steps() const noexcept { return db.size(); }
};

enum class BoundSource { declared, grid };
std::string_view to_string(BoundSource source) noexcept;

struct NormEstimate {
  double value = 0.0;
  BoundSource source = BoundSource::grid;
  bool operator==(const NormEstimate&) const = default;
};

struct EffectiveBounds {
  NormEstimate drift_d1;
  NormEstimate diffusion_sup;
  NormEstimate diffusion_d1;
  NormEstimate diffusion_d2;
  double diffusion_inf = 0.0;  // grid inf |sigma|
  int diffusion_sign = 0;      // +1 / -1 if sigma keeps its sign on the grid, else 0
  double grid_lo = 0.0;
  double grid_hi = 0.0;
  bool operator==(const EffectiveBounds&) const = default;
};

struct ValidationOptions {
  std::size_t n_grid = 4096;
  double width_in_sd = 10.0;
  bool require_transform = false;
  double fd_step = 1e-4;
  double fd_tol = 1e-6;
  std::optional<std::pair<double, double>> interval;  // overrides the default grid
};

class ValidatedSpec {
 public:
  const ProblemSpec& spec() const noexcept { return spec_; }
  const EffectiveBounds& bounds() const noexcept { return bounds_; }

 private:
  friend ValidatedSpec validate(const ProblemSpec& spec, const ValidationOptions& options);
  ValidatedSpec(ProblemSpec spec, EffectiveBounds bounds)
      : spec_(std::move(spec)), bounds_(bounds) {}

  ProblemSpec spec_;
  EffectiveBounds bounds_;
};

ValidatedSpec validate(const ProblemSpec& spec, const ValidationOptions& options = {});
ValidatedSpec validate(const ValidatedSpec& spec, const ValidationOptions& options = {});

/// max |f^(order)| over n_grid equispaced points of [lo, hi]. A lower bound
/// on the true sup-norm.
double sup_norm_estimate(const Coefficient& c, int order, double lo, double hi,
                         std::size_t n_grid);

/// Point i of an n-point equispaced grid on [lo, hi]; nested grids share
/// bit-identical points and the last point is hi exactly.
inline double grid_point(double lo, double hi, std::size_t i, std::size_t n) noexcept {
  if (i + 1 == n) return hi;
  return lo + (hi - lo) * (static_cast<double>(i) / static_cast<double>(n - 1));
}

}  // namespace pdiff
