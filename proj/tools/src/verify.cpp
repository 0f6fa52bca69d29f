#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "pdiff/bounds.hpp"
#include "pdiff/integrate.hpp"
#include "pdiff/lamperti.hpp"
#include "pdiff/malliavin.hpp"
#include "pdiff/parallel.hpp"

namespace pdiff_cli {

using namespace pdiff;

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + mid));
}

std::vector<double> alphas_of(const ValidatedSpec& spec, const VerifyOptions& o) {
  return o.alphas.empty() ? std::vector<double>{spec.spec().alpha} : o.alphas;
}

ValidatedSpec driftless(const ValidatedSpec& base, double alpha) {
  ProblemSpec s;
  s.x0 = base.spec().x0;
  s.horizon = base.spec().horizon;
  s.alpha = alpha;
  return validate(s);
}

SuiteResult additive_identity(const ValidatedSpec& base, const GridSpec& grid,
                              const VerifyOptions& o) {
  SuiteResult r;
  r.name = "additive_identity";
  r.pass = true;
  Json per = Json::array();
  for (double alpha : alphas_of(base, o)) {
    const ValidatedSpec spec = driftless(base, alpha);
    std::vector<double> err(o.n_paths), scale(o.n_paths);
    parallel_for(o.n_paths, o.workers, [&](std::size_t p) {
      const NoiseBlock noise = NoiseBlock::generate(o.seed, p, grid);
      const PathState a = euler_path(spec, grid, noise);
      const PathState b = explicit_additive_path(spec.spec().x0, alpha, 1.0, noise);
      for (std::size_t k = 0; k < a.x.size(); ++k) {
        err[p] = std::max(err[p], std::abs(a.x[k] - b.x[k]));
        scale[p] = std::max(scale[p], std::abs(a.x[k]));
      }
    });
    const double worst = err.empty() ? 0.0 : *std::max_element(err.begin(), err.end());
    const double big = scale.empty() ? 0.0 : *std::max_element(scale.begin(), scale.end());
    const double tol = 1e-12 * std::max(1.0, big);
    r.pass = r.pass && worst <= tol;
    per.push_back({{"alpha", alpha}, {"max_abs_error", worst}, {"tolerance", tol}});
  }
  r.details = {{"per_alpha", per}};
  return r;
}

SuiteResult malliavin_closed_form(const ValidatedSpec& base, const GridSpec& grid,
                                  const VerifyOptions& o) {
  SuiteResult r;
  r.name = "malliavin_closed_form";
  r.pass = true;
  Json per = Json::array();
  const double t = grid.horizon();
  for (double alpha : alphas_of(base, o)) {
    const ValidatedSpec spec = driftless(base, alpha);
    std::vector<double> err(o.n_paths);
    parallel_for(o.n_paths, o.workers, [&](std::size_t p) {
      const PathState path = euler_path(spec, grid, NoiseBlock::generate(o.seed, p, grid));
      const double tau = grid.time(path.argmax_idx.back());
      const double closed = tau / ((1.0 - alpha) * (1.0 - alpha)) + (t - tau);
      err[p] = std::abs(propagate_derivative(path, spec, grid).h_norm_sq - closed);
    });
    const double worst = err.empty() ? 0.0 : *std::max_element(err.begin(), err.end());
    r.pass = r.pass && worst <= 1e-10;
    per.push_back({{"alpha", alpha}, {"max_abs_error", worst}, {"tolerance", 1e-10}});
  }
  r.details = {{"per_alpha", per}};
  return r;
}

SuiteResult cameron_martin(const ValidatedSpec& spec, const GridSpec& grid, const VerifyOptions& o) {
  SuiteResult r;
  r.name = "cameron_martin";
  const std::vector<double> h(grid.n_steps(), 1.0);
  std::vector<double> rel(o.n_paths);
  parallel_for(o.n_paths, o.workers, [&](std::size_t p) {
    const NoiseBlock noise = NoiseBlock::generate(o.seed, p, grid);
    const double ip = inner_product(propagate_derivative(euler_path(spec, grid, noise), spec, grid), h);
    const double fd = cameron_martin_fd(spec, grid, noise, h, 1e-4);
    rel[p] = std::abs(fd - ip) / std::max(std::abs(ip), std::numeric_limits<double>::min());
  });
  const double med = median(rel);
  r.pass = med <= 1e-2;
  r.details = {{"direction", "h = 1"}, {"eps", 1e-4}, {"median_relative_error", med},
               {"tolerance", 1e-2}};
  return r;
}

SuiteResult lower_bounds(const ValidatedSpec& spec, const GridSpec& grid, const VerifyOptions& o) {
  SuiteResult r;
  r.name = "lower_bounds";
  const RegimeReport rep = regime_report(spec, grid.horizon());
  const double alpha = spec.spec().alpha;
  const double t0 = std::min(grid.horizon(), rep.t0_max);
  const bool final_applies = t0 > 0.0 && theta(t0, alpha, rep.lb) < 0.5;
  const double slack = 1.0 - 10.0 * grid.dt();

  std::vector<char> sup_bad(o.n_paths), fin_bad(o.n_paths);
  parallel_for(o.n_paths, o.workers, [&](std::size_t p) {
    const PathState path = euler_path(spec, grid, NoiseBlock::generate(o.seed, p, grid));
    const auto hn = propagate_derivative(path, spec, grid, true).h_norm_sq_by_time;
    double run = 0.0;
    for (std::size_t k = 1; k < hn.size(); ++k) {
      const double t = grid.time(k);
      run = std::max(run, hn[k]);
      if (run < slack * sup_lower_bound(t, alpha, rep.lb, rep.sigma_bar)) sup_bad[p] = 1;
      if (final_applies && t <= t0 &&
          hn[k] < slack * final_lower_bound(t, t0, alpha, rep.lb, rep.sigma_bar)) {
        fin_bad[p] = 1;
      }
    }
  });
  const auto n_sup = std::count(sup_bad.begin(), sup_bad.end(), 1);
  const auto n_fin = std::count(fin_bad.begin(), fin_bad.end(), 1);
  r.pass = n_sup == 0 && n_fin == 0;
  r.details = {{"lb", rep.lb},
               {"lb_source", std::string(to_string(rep.lb_source))},
               {"sigma_bar", rep.sigma_bar},
               {"transformed", rep.transformed},
               {"t0", t0},
               {"final_bound_applies", final_applies},
               {"multiplicative_slack", slack},
               {"sup_bound_violating_paths", n_sup},
               {"final_bound_violating_paths", n_fin}};
  return r;
}

SuiteResult lamperti(const ValidatedSpec& spec, const GridSpec& grid, const VerifyOptions& o) {
  SuiteResult r;
  r.name = "lamperti";
  if (spec.spec().diffusion.is_constant()) {
    r.skipped = true;
    r.pass = true;
    r.details = {{"reason", "constant diffusion; the transform is affine"}};
    return r;
  }
  const ValidatedSpec xs = validate(spec, ValidationOptions{.require_transform = true, .interval = std::nullopt});
  auto table = std::make_shared<const TransformTable>(
      build_transform(xs.spec().diffusion, xs.spec().x0, default_transform_domain(xs)));
  const ValidatedSpec ys = validate(transformed_spec(xs, table));
  const double inf_sigma = xs.bounds().diffusion_inf;

  double round_trip = 0.0;
  constexpr std::size_t kProbe = 20001;
  for (std::size_t i = 0; i < kProbe; ++i) {
    const double y = grid_point(table->domain_lo(), table->domain_hi(), i, kProbe);
    round_trip = std::max(round_trip, std::abs(table->inverse(table->forward(y)) - y));
    const double z = grid_point(table->range_lo(), table->range_hi(), i, kProbe);
    round_trip = std::max(round_trip, std::abs(table->forward(table->inverse(z)) - z));
  }

  std::vector<double> diff(o.n_paths);
  std::vector<char> bad(o.n_paths);
  parallel_for(o.n_paths, o.workers, [&](std::size_t p) {
    const NoiseBlock noise = NoiseBlock::generate(o.seed, p, grid);
    const PathState xp = euler_path(xs, grid, noise);
    const PathState yp = euler_path(ys, grid, noise);
    const auto fx = map_forward(*table, xp.x);
    for (std::size_t k = 0; k < fx.size(); ++k) diff[p] = std::max(diff[p], std::abs(fx[k] - yp.x[k]));
    bad[p] = lift_bound_check(propagate_derivative(xp, xs, grid), propagate_derivative(yp, ys, grid),
                              inf_sigma, 10.0 * grid.dt())
                 .violated;
  });
  const double worst = diff.empty() ? 0.0 : *std::max_element(diff.begin(), diff.end());
  double mean = 0.0;
  for (double d : diff) mean += d;
  if (!diff.empty()) mean /= static_cast<double>(diff.size());
  const auto n_bad = std::count(bad.begin(), bad.end(), 1);
  r.pass = mean <= 5e-2 && round_trip <= 1e-8 && n_bad == 0;
  r.details = {{"mean_sup_difference", mean},
               {"max_sup_difference", worst},
               {"sup_difference_tolerance", 5e-2},
               {"round_trip_error", round_trip},
               {"round_trip_tolerance", 1e-8},
               {"lift_violations", n_bad},
               {"lift_slack", 10.0 * grid.dt()},
               {"transform_check_error", table->check_error()}};
  return r;
}

}  // namespace

std::vector<SuiteResult> run_suites(const ValidatedSpec& spec, const GridSpec& grid,
                                    const VerifyOptions& o) {
  std::vector<SuiteResult> out;
  auto wanted = [&](const char* name) {
    return o.suites.empty() || std::find(o.suites.begin(), o.suites.end(), name) != o.suites.end();
  };
  if (wanted("additive_identity")) out.push_back(additive_identity(spec, grid, o));
  if (wanted("malliavin_closed_form")) out.push_back(malliavin_closed_form(spec, grid, o));
  if (wanted("cameron_martin")) out.push_back(cameron_martin(spec, grid, o));
  if (wanted("lower_bounds")) out.push_back(lower_bounds(spec, grid, o));
  if (wanted("lamperti")) out.push_back(lamperti(spec, grid, o));
  return out;
}

}  // namespace pdiff_cli
