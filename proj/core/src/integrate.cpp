#include "pdiff/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pdiff/rng.hpp"

namespace pdiff {

namespace {

// Kahan-compensated running sum.
class CompensatedSum {
 public:
  explicit CompensatedSum(double start = 0.0) : sum_(start) {}
  void add(double v) noexcept {
    const double y = v - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const noexcept { return sum_; }

 private:
  double sum_;
  double comp_ = 0.0;
};

void check_noise(const GridSpec& grid, const NoiseBlock& noise) {
  if (noise.size() != grid.n_steps()) {
    throw Error(ErrorKind::GridMismatch, "noise has " + std::to_string(noise.size()) +
                                             " increments, grid has " +
                                             std::to_string(grid.n_steps()) + " steps");
  }
}

[[noreturn]] void non_finite(std::size_t k) {
  throw Error(ErrorKind::NonFinite, "state left the finite range at step " + std::to_string(k), k);
}

PathState make_path(std::size_t n, const NoiseBlock& noise) {
  PathState p;
  p.x.resize(n + 1);
  p.running_max.resize(n + 1);
  p.argmax_idx.resize(n + 1);
  p.db.assign(noise.increments().begin(), noise.increments().end());
  p.seed = noise.seed();
  p.path_index = noise.path_index();
  return p;
}

}  // namespace

NoiseBlock NoiseBlock::generate(std::uint64_t seed, std::uint64_t path_index,
                                const GridSpec& grid) {
  const CounterStream stream(seed, path_index);
  const double scale = std::sqrt(grid.dt());
  std::vector<double> db(grid.n_steps());
  const std::size_t n = db.size();
  for (std::size_t k = 0; k + 1 < n; k += 2) {
    const auto [g0, g1] = stream.normal_pair(k >> 1);
    db[k] = scale * g0;
    db[k + 1] = scale * g1;
  }
  if (n % 2) db[n - 1] = scale * stream.normal(n - 1);
  return from_increments(std::move(db), grid.dt(), seed, path_index);
}

NoiseBlock NoiseBlock::from_increments(std::vector<double> db, double dt, std::uint64_t seed,
                                       std::uint64_t path_index) {
  NoiseBlock n;
  n.db_ = std::move(db);
  n.dt_ = dt;
  n.seed_ = seed;
  n.path_index_ = path_index;
  return n;
}

NoiseBlock NoiseBlock::shifted(std::span<const double> h, double eps) const {
  if (h.size() != db_.size()) {
    throw Error(ErrorKind::GridMismatch, "shift direction length differs from noise length");
  }
  NoiseBlock out = *this;
  for (std::size_t k = 0; k < db_.size(); ++k) out.db_[k] = db_[k] + eps * h[k] * dt_;
  return out;
}

NoiseBlock NoiseBlock::coarsened(std::size_t factor) const {
  if (factor == 0 || db_.size() % factor != 0) {
    throw Error(ErrorKind::GridMismatch, "coarsening factor must divide the step count");
  }
  NoiseBlock out = *this;
  out.db_.assign(db_.size() / factor, 0.0);
  for (std::size_t k = 0; k < out.db_.size(); ++k) {
    CompensatedSum s;
    for (std::size_t j = 0; j < factor; ++j) s.add(db_[k * factor + j]);
    out.db_[k] = s.value();
  }
  out.dt_ = dt_ * static_cast<double>(factor);
  return out;
}

NoiseBlock NoiseBlock::negated() const {
  NoiseBlock out = *this;
  for (double& v : out.db_) v = -v;
  return out;
}

PathState euler_path(const ValidatedSpec& vspec, const GridSpec& grid, const NoiseBlock& noise) {
  check_noise(grid, noise);
  const ProblemSpec& spec = vspec.spec();
  const std::size_t n = grid.n_steps();
  const double dt = grid.dt();
  const double alpha = spec.alpha;
  const auto db = noise.increments();

  PathState p = make_path(n, noise);
  p.x[0] = spec.x0 / (1.0 - alpha);
  p.running_max[0] = p.x[0];
  p.argmax_idx[0] = 0;
  if (!std::isfinite(p.x[0])) non_finite(0);

  CompensatedSum a(spec.x0);
  for (std::size_t k = 0; k < n; ++k) {
    const double xk = p.x[k];
    a.add(spec.drift.value(xk) * dt + spec.diffusion.value(xk) * db[k]);
    const StepResolution r = resolve_step(a.value(), p.running_max[k], alpha);
    if (!std::isfinite(r.x_next)) non_finite(k + 1);
    p.x[k + 1] = r.x_next;
    if (r.is_new_max) {
      p.running_max[k + 1] = r.x_next;
      p.argmax_idx[k + 1] = k + 1;
    } else {
      p.running_max[k + 1] = p.running_max[k];
      p.argmax_idx[k + 1] = p.argmax_idx[k];
    }
  }
  return p;
}

double euler_terminal(const ValidatedSpec& vspec, const GridSpec& grid, const NoiseBlock& noise) {
  check_noise(grid, noise);
  const ProblemSpec& spec = vspec.spec();
  const double dt = grid.dt();
  const double alpha = spec.alpha;
  const auto db = noise.increments();

  double x = spec.x0 / (1.0 - alpha);
  double m = x;
  if (!std::isfinite(x)) non_finite(0);
  CompensatedSum a(spec.x0);
  for (std::size_t k = 0; k < db.size(); ++k) {
    a.add(spec.drift.value(x) * dt + spec.diffusion.value(x) * db[k]);
    const StepResolution r = resolve_step(a.value(), m, alpha);
    if (!std::isfinite(r.x_next)) non_finite(k + 1);
    x = r.x_next;
    if (r.is_new_max) m = x;
  }
  return x;
}

PathState explicit_additive_path(double x0, double alpha, double sigma, const NoiseBlock& noise) {
  if (!(alpha < 1.0)) throw Error(ErrorKind::AlphaOutOfRange, "alpha must be < 1");
  const std::size_t n = noise.size();
  const auto db = noise.increments();
  const double start = x0 / (1.0 - alpha);
  const double lift = alpha / (1.0 - alpha);

  PathState p = make_path(n, noise);
  CompensatedSum b;
  double s = 0.0;  // running max of sigma * B, which starts at 0
  p.x[0] = start;
  p.running_max[0] = start;
  p.argmax_idx[0] = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    b.add(sigma * db[k - 1]);
    const double bk = b.value();
    s = std::max(s, bk);
    p.x[k] = start + bk + lift * s;
  }
  // Running max and first attainment of x itself.
  for (std::size_t k = 1; k <= n; ++k) {
    if (p.x[k] > p.running_max[k - 1]) {
      p.running_max[k] = p.x[k];
      p.argmax_idx[k] = k;
    } else {
      p.running_max[k] = p.running_max[k - 1];
      p.argmax_idx[k] = p.argmax_idx[k - 1];
    }
  }
  return p;
}

PicardResult picard_solve(const ValidatedSpec& vspec, const GridSpec& grid,
                          const NoiseBlock& noise, std::size_t n_iter, double tol) {
  if (n_iter == 0) throw Error(ErrorKind::InvalidArgument, "picard_solve needs n_iter >= 1");
  check_noise(grid, noise);
  const ProblemSpec& spec = vspec.spec();
  const std::size_t n = grid.n_steps();
  const double dt = grid.dt();
  const double start = spec.x0 / (1.0 - spec.alpha);
  const double lift = spec.alpha / (1.0 - spec.alpha);
  const auto db = noise.increments();

  std::vector<double> prev(n + 1, spec.x0);
  std::vector<double> next(n + 1);
  PicardResult result;
  for (std::size_t it = 0; it < n_iter; ++it) {
    // X^{n+1}_k = x0/(1-alpha) + Z_k + alpha/(1-alpha) * max_{j<=k} Z_j, with Z
    // accumulated from X^n in the same order and form as euler_path.
    CompensatedSum z(spec.x0);
    double z_max = 0.0;
    next[0] = start;
    for (std::size_t k = 0; k < n; ++k) {
      const double xk = prev[k];
      z.add(spec.drift.value(xk) * dt + spec.diffusion.value(xk) * db[k]);
      const double zk = z.value() - spec.x0;
      z_max = std::max(z_max, zk);
      next[k + 1] = start + zk + lift * z_max;
      if (!std::isfinite(next[k + 1])) non_finite(k + 1);
    }
    double diff = 0.0;
    for (std::size_t k = 0; k <= n; ++k) diff = std::max(diff, std::abs(next[k] - prev[k]));
    result.sup_diff.push_back(diff);
    std::swap(prev, next);
    if (diff < tol) {
      result.converged = true;
      break;
    }
  }

  PathState& p = result.path;
  p = make_path(n, noise);
  p.x = prev;
  p.running_max[0] = p.x[0];
  p.argmax_idx[0] = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (p.x[k] > p.running_max[k - 1]) {
      p.running_max[k] = p.x[k];
      p.argmax_idx[k] = k;
    } else {
      p.running_max[k] = p.running_max[k - 1];
      p.argmax_idx[k] = p.argmax_idx[k - 1];
    }
  }
  return result;
}

}  // namespace pdiff
