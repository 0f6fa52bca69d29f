#include "pdiff_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdiff/bounds.hpp"
#include "pdiff/density.hpp"
#include "pdiff/integrate.hpp"
#include "pdiff/lamperti.hpp"
#include "pdiff/malliavin.hpp"
#include "pdiff/model.hpp"
#include "pdiff/parallel.hpp"
#include "pdiff/serialize.hpp"
#include "verify.hpp"

namespace pdiff_cli {

using namespace pdiff;
namespace fs = std::filesystem;

namespace {

constexpr const char* kOutEnv = "PDIFF_OUT_DIR";

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::Config, what); }

// Typed access to an optional JSON block with field-path error messages.
class Block {
 public:
  Block(const Json* j, std::string where) : j_(j), where_(std::move(where)) {
    if (j_ && !j_->is_object()) config_error(where_ + ": expected an object");
  }

  void allow(std::initializer_list<std::string_view> keys) const {
    if (!j_) return;
    for (const auto& [k, v] : j_->items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        config_error(where_ + "." + k + ": unknown key");
      }
    }
  }
  bool has(const char* key) const { return j_ && j_->contains(key); }
  const Json& at(const char* key) const { return (*j_)[key]; }
  std::string path(const char* key) const { return where_ + "." + key; }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    if (!at(key).is_number()) config_error(path(key) + ": expected a number");
    return at(key).get<double>();
  }
  std::size_t count(const char* key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      config_error(path(key) + ": expected a non-negative integer");
    }
    return v.get<std::size_t>();
  }
  bool flag(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!at(key).is_boolean()) config_error(path(key) + ": expected true or false");
    return at(key).get<bool>();
  }
  std::string text(const char* key, std::string fallback) const {
    if (!has(key)) return fallback;
    if (!at(key).is_string()) config_error(path(key) + ": expected a string");
    return at(key).get<std::string>();
  }

 private:
  const Json* j_;
  std::string where_;
};

struct Flags {
  std::string config;
  std::string out;
  unsigned workers = 1;
  std::optional<std::uint64_t> seed;
};

struct Context {
  Json config;
  ProblemSpec problem;
  std::optional<GridSpec> grid;
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  std::string format = "csv";
  fs::path out_dir;
  unsigned workers = 1;
  Metadata meta;

  const GridSpec& require_grid() const {
    if (!grid) config_error("grid: missing (needs n_steps)");
    return *grid;
  }
  Block block(const char* name) const {
    return Block(config.contains(name) ? &config[name] : nullptr, name);
  }
};

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    config_error("config is not valid JSON: " + std::string(e.what()));
  }
}

Context make_context(const Flags& flags) {
  Context c;
  Json cfg = load_json(flags.config);
  if (!cfg.is_object()) config_error("config: expected a JSON object");
  Block top(&cfg, "config");
  top.allow({"problem", "grid", "seed", "n_paths", "format", "output_dir", "simulate",
             "derivative", "regime", "density", "transform", "verify"});
  if (!cfg.contains("problem")) config_error("problem: missing");
  c.problem = problem_from_json(cfg["problem"]);
  if (cfg.contains("grid")) c.grid = grid_from_json(cfg["grid"], c.problem.horizon);
  if (cfg.contains("seed")) {
    if (!cfg["seed"].is_number_unsigned() && !(cfg["seed"].is_number_integer() && cfg["seed"].get<std::int64_t>() >= 0)) {
      config_error("seed: expected a non-negative integer");
    }
    c.seed = cfg["seed"].get<std::uint64_t>();
  }
  if (flags.seed) c.seed = *flags.seed;
  c.n_paths = top.count("n_paths", 0);
  c.format = top.text("format", "csv");
  if (c.format != "csv" && c.format != "json") config_error("format: expected \"csv\" or \"json\"");

  std::string out = top.text("output_dir", "pdiff_out");
  if (const char* env = std::getenv(kOutEnv); env && *env) out = env;
  if (!flags.out.empty()) out = flags.out;
  c.out_dir = out;
  c.workers = std::max(1u, flags.workers);

  // The hash covers everything that determines results, not where they go.
  cfg["seed"] = c.seed;
  cfg.erase("output_dir");
  c.meta.config_hash = config_hash(cfg);
  c.meta.seed = c.seed;
  c.config = std::move(cfg);
  return c;
}

void write_file(const fs::path& path, const std::string& data) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << data;
  if (!out) throw Error(ErrorKind::Config, "cannot write '" + path.string() + "'");
}

void write_json(const fs::path& path, const Context& c, Json body) {
  body["metadata"] = c.meta.to_json();
  write_file(path, body.dump(2) + "\n");
}

std::string path_name(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06zu.%s", stem, i, ext);
  return buf;
}

// Re-raises a path's NonFinite error with the path index attached.
template <class Fn>
auto on_path(std::size_t i, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonFinite) throw;
    throw Error(ErrorKind::NonFinite, "path " + std::to_string(i) + ": " + e.what(), i);
  }
}

Json path_to_json(const PathState& p, const GridSpec& grid) {
  std::vector<double> tau(p.argmax_idx.size());
  for (std::size_t k = 0; k < tau.size(); ++k) tau[k] = grid.time(p.argmax_idx[k]);
  return {{"path_id", p.path_index}, {"t", grid.times()},   {"x", p.x},
          {"running_max", p.running_max}, {"argmax_time", tau}, {"db", p.db}};
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Context& c, std::ostream& out) {
  const Block b = c.block("simulate");
  b.allow({"export_paths"});
  const GridSpec& grid = c.require_grid();
  const ValidatedSpec spec = validate(c.problem);
  const std::size_t n = c.n_paths;
  const std::size_t n_export = std::min(n, b.count("export_paths", std::min<std::size_t>(n, 10)));

  std::vector<double> x_t(n), m_t(n), tau(n);
  std::vector<PathState> kept(n_export);
  parallel_for(n, c.workers, [&](std::size_t i) {
    PathState p = on_path(i, [&] { return euler_path(spec, grid, NoiseBlock::generate(c.seed, i, grid)); });
    x_t[i] = p.x.back();
    m_t[i] = p.running_max.back();
    tau[i] = grid.time(p.argmax_idx.back());
    if (i < n_export) kept[i] = std::move(p);
  });

  auto moments = [](const std::vector<double>& v) {
    const SampleMoments m = sample_moments(v);
    Json j{{"mean", m.mean}, {"sd", m.sd}};
    if (!v.empty()) {
      j["min"] = *std::min_element(v.begin(), v.end());
      j["max"] = *std::max_element(v.begin(), v.end());
    }
    return j;
  };
  std::size_t at_end = 0;
  for (double t : tau) at_end += t == grid.horizon();

  Json summary{{"command", "simulate"},
               {"problem", to_json(c.problem)},
               {"grid", to_json(grid)},
               {"n_paths", n},
               {"terminal", moments(x_t)},
               {"running_max", moments(m_t)},
               {"argmax_time", moments(tau)},
               {"fraction_max_at_horizon", n ? static_cast<double>(at_end) / static_cast<double>(n) : 0.0},
               {"exported_paths", n_export}};
  write_json(c.out_dir / "summary.json", c, summary);

  if (c.format == "csv") {
    for (std::size_t i = 0; i < n_export; ++i) {
      std::ostringstream os;
      write_path_csv(os, kept[i], grid, c.meta);
      write_file(c.out_dir / "paths" / path_name("path", i, "csv"), os.str());
    }
  } else {
    Json paths = Json::array();
    for (const PathState& p : kept) paths.push_back(path_to_json(p, grid));
    write_json(c.out_dir / "paths.json", c, {{"paths", paths}});
  }
  out << "simulate: " << n << " paths, terminal mean " << format_double(summary["terminal"]["mean"].get<double>())
      << ", wrote " << c.out_dir.string() << "\n";
  return kOk;
}

// -------------------------------------------------------------- derivative

int cmd_derivative(const Context& c, std::ostream& out) {
  const Block b = c.block("derivative");
  b.allow({"export_paths", "t0"});
  const GridSpec& grid = c.require_grid();
  const ValidatedSpec spec = validate(c.problem);
  const std::size_t n = c.n_paths;
  const std::size_t n_export = std::min(n, b.count("export_paths", std::min<std::size_t>(n, 10)));
  const double t0_req = b.number("t0", grid.horizon());
  if (!(t0_req > 0.0)) config_error("derivative.t0: must be > 0");

  const RegimeReport rep = regime_report(spec, t0_req);
  const double alpha = c.problem.alpha;
  const double t0 = std::min({t0_req, rep.t0_max, grid.horizon()});
  const bool final_applies = t0 > 0.0 && theta(t0, alpha, rep.lb) < 0.5;
  const double slack = 1.0 - 10.0 * grid.dt();

  struct Row {
    double h_final = 0, sup = 0, tau = 0;
    bool sup_violation = false, final_violation = false;
  };
  std::vector<Row> rows(n);
  std::vector<DerivativeField> kept(n_export);
  parallel_for(n, c.workers, [&](std::size_t i) {
    const PathState path =
        on_path(i, [&] { return euler_path(spec, grid, NoiseBlock::generate(c.seed, i, grid)); });
    DerivativeField f = on_path(i, [&] { return propagate_derivative(path, spec, grid, true); });
    Row& r = rows[i];
    r.h_final = f.h_norm_sq;
    r.sup = f.sup_h_norm_sq;
    r.tau = grid.time(path.argmax_idx.back());
    double run = 0.0;
    for (std::size_t k = 1; k < f.h_norm_sq_by_time.size(); ++k) {
      const double t = grid.time(k);
      const double hk = f.h_norm_sq_by_time[k];
      run = std::max(run, hk);
      r.sup_violation = r.sup_violation || run < slack * sup_lower_bound(t, alpha, rep.lb, rep.sigma_bar);
      if (final_applies && t <= t0) {
        r.final_violation = r.final_violation ||
                            hk < slack * final_lower_bound(t, t0, alpha, rep.lb, rep.sigma_bar);
      }
    }
    if (i < n_export) {
      f.h_norm_sq_by_time.clear();
      kept[i] = std::move(f);
    }
  });

  Json per = Json::array();
  std::size_t n_sup = 0, n_fin = 0;
  double mean_h = 0.0, min_h = n ? rows[0].h_final : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Row& r = rows[i];
    n_sup += r.sup_violation;
    n_fin += r.final_violation;
    mean_h += r.h_final;
    min_h = std::min(min_h, r.h_final);
    per.push_back({{"path_id", i},
                   {"h_norm_sq_final", r.h_final},
                   {"sup_h_norm_sq", r.sup},
                   {"argmax_time", r.tau},
                   {"sup_bound_violation", r.sup_violation},
                   {"final_bound_violation", r.final_violation}});
  }
  if (n) mean_h /= static_cast<double>(n);

  Json bounds{{"lb", rep.lb},
              {"lb_source", std::string(to_string(rep.lb_source))},
              {"sigma_bar", rep.sigma_bar},
              {"t0", t0},
              {"theta_at_t0", theta(t0, alpha, rep.lb)},
              {"sup_lower_bound_at_horizon", sup_lower_bound(grid.horizon(), alpha, rep.lb, rep.sigma_bar)},
              {"final_bound_applies", final_applies},
              {"final_lower_bound_at_t0",
               final_applies ? Json(final_lower_bound(t0, t0, alpha, rep.lb, rep.sigma_bar)) : Json()},
              {"multiplicative_slack", slack}};
  Json summary{{"command", "derivative"},
               {"problem", to_json(c.problem)},
               {"grid", to_json(grid)},
               {"n_paths", n},
               {"bounds", bounds},
               {"mean_h_norm_sq_final", mean_h},
               {"min_h_norm_sq_final", min_h},
               {"sup_bound_violating_paths", n_sup},
               {"final_bound_violating_paths", n_fin},
               {"paths", per}};
  write_json(c.out_dir / "derivative_summary.json", c, summary);

  if (c.format == "csv") {
    for (std::size_t i = 0; i < n_export; ++i) {
      std::ostringstream os;
      write_derivative_csv(os, kept[i], c.meta);
      write_file(c.out_dir / "derivatives" / path_name("derivative", i, "csv"), os.str());
    }
  } else {
    Json fields = Json::array();
    for (std::size_t i = 0; i < n_export; ++i) {
      fields.push_back({{"path_id", i}, {"dt", kept[i].dt}, {"d_x", kept[i].d_x}, {"d_m", kept[i].d_m}});
    }
    write_json(c.out_dir / "derivatives.json", c, {{"fields", fields}});
  }
  out << "derivative: " << n << " paths, " << n_sup << " sup-bound and " << n_fin
      << " final-bound violations, wrote " << c.out_dir.string() << "\n";
  return kOk;
}

// ------------------------------------------------------------------ regime

int cmd_regime(const Context& c, std::ostream& out) {
  const Block b = c.block("regime");
  b.allow({"t0", "curve_points", "transform_nodes"});
  const double t0 = b.number("t0", c.problem.horizon);
  if (!(t0 > 0.0)) config_error("regime.t0: must be > 0");
  RegimeOptions opt;
  opt.curve_points = b.count("curve_points", opt.curve_points);
  opt.transform_nodes = b.count("transform_nodes", opt.transform_nodes);
  const ValidatedSpec spec = validate(c.problem);
  const RegimeReport rep = regime_report(spec, t0, opt);

  Json body = to_json(rep);
  body["command"] = "regime";
  body["problem"] = to_json(c.problem);
  body["effective_bounds"] = to_json(spec.bounds());
  write_json(c.out_dir / "regime.json", c, body);
  std::ostringstream os;
  write_curve_csv(os, rep, c.meta);
  write_file(c.out_dir / "lower_bound_curve.csv", os.str());
  out << "regime: theta(t0) = " << format_double(rep.theta_at_t0)
      << (rep.admissible ? " (admissible)" : " (not admissible)") << ", t0_max = "
      << (std::isinf(rep.t0_max) ? std::string("inf") : format_double(rep.t0_max)) << "\n";
  return kOk;
}

// ----------------------------------------------------------------- density

std::vector<double> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("density.samples_file: cannot open '" + path + "'");
  std::vector<double> v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::string cell = line.substr(0, line.find(','));
    char* end = nullptr;
    const double x = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str()) continue;  // header
    v.push_back(x);
  }
  return v;
}

bool driftless_additive(const ProblemSpec& p) {
  return p.drift.preset() == Preset::constant && p.drift.value(0.0) == 0.0 &&
         p.diffusion.is_constant();
}

int cmd_density(const Context& c, std::ostream& out) {
  const Block b = c.block("density");
  b.allow({"bandwidth", "ladder", "eval_points", "width_in_sd", "samples_file", "thresholds"});
  const ValidatedSpec spec = validate(c.problem);

  std::vector<double> samples;
  if (b.has("samples_file")) {
    samples = read_samples(b.text("samples_file", ""));
  } else {
    if (c.n_paths == 0) config_error("density: no samples_file and n_paths = 0; nothing to estimate");
    samples = ensemble(spec, c.require_grid(), c.n_paths, c.seed, c.workers);
  }
  if (samples.size() < 2) config_error("density: need at least 2 samples");

  KdeOptions opt;
  opt.ladder = b.flag("ladder", true);
  opt.workers = c.workers;
  if (b.has("bandwidth")) {
    const Json& bw = b.at("bandwidth");
    if (bw.is_string() && bw.get<std::string>() == "rule") {
    } else if (bw.is_number() && bw.get<double>() > 0.0) {
      opt.bandwidth = bw.get<double>();
    } else {
      config_error("density.bandwidth: expected \"rule\" or a positive number");
    }
  }
  SmoothnessThresholds th;
  if (b.has("thresholds")) {
    const Block t(&b.at("thresholds"), "density.thresholds");
    t.allow({"central_sd", "max_rms_z"});
    th.central_sd = t.number("central_sd", th.central_sd);
    th.max_rms_z = t.number("max_rms_z", th.max_rms_z);
  }
  const auto z = default_eval_grid(samples, b.count("eval_points", 512), b.number("width_in_sd", 6.0));
  const DensityEstimate est = kde(samples, z, opt);

  std::optional<std::vector<double>> oracle;
  if (driftless_additive(c.problem)) {
    std::vector<double> q(z.size());
    const double sigma = c.problem.diffusion.value(0.0);
    for (std::size_t i = 0; i < z.size(); ++i) {
      q[i] = oracle_driftless(c.problem.x0, sigma, c.problem.alpha, c.problem.horizon, z[i]);
    }
    oracle = std::move(q);
  }

  Json diag{{"command", "density"},
            {"problem", to_json(c.problem)},
            {"n_samples", est.n_samples},
            {"bandwidth", est.bandwidth},
            {"sample_mean", est.sample_mean},
            {"sample_sd", est.sample_sd},
            {"normalization", trapezoid(est.z, est.p)}};
  if (oracle) diag["l1_to_oracle"] = l1_distance(est.z, est.p, *oracle);
  if (est.ladder.size() >= 3) {
    const SmoothnessReport s = smoothness_diagnostic(est, th);
    diag["smoothness"] = {{"rel_l2_d1", s.rel_l2_d1}, {"rel_l2_d2", s.rel_l2_d2},
                          {"rms_z_d1", s.rms_z_d1},   {"rms_z_d2", s.rms_z_d2},
                          {"threshold", s.threshold}, {"empirically_smooth", s.pass},
                          {"label", s.label}};
  }
  // The theorem's verdict is reported separately from the measurement.
  try {
    const RegimeReport rep = regime_report(spec, c.problem.horizon);
    diag["theorem"] = {{"theta_at_horizon", rep.theta_at_t0},
                       {"guarantees_smooth_density", rep.admissible},
                       {"lb_source", std::string(to_string(rep.lb_source))}};
  } catch (const Error& e) {
    diag["theorem"] = {{"guarantees_smooth_density", false}, {"reason", e.what()}};
  }
  write_json(c.out_dir / "density_diagnostics.json", c, diag);

  std::ostringstream os;
  if (oracle) {
    CsvWriter w(os, c.meta, {"z", "p_hat", "p_oracle"});
    for (std::size_t i = 0; i < z.size(); ++i) w.row({est.z[i], est.p[i], (*oracle)[i]});
  } else {
    CsvWriter w(os, c.meta, {"z", "p_hat"});
    for (std::size_t i = 0; i < z.size(); ++i) w.row({est.z[i], est.p[i]});
  }
  write_file(c.out_dir / "density.csv", os.str());
  out << "density: N = " << est.n_samples << ", h = " << format_double(est.bandwidth) << ", wrote "
      << c.out_dir.string() << "\n";
  return kOk;
}

// --------------------------------------------------------------- transform

int cmd_transform(const Context& c, std::ostream& out) {
  const Block b = c.block("transform");
  b.allow({"domain", "n_nodes", "tol", "width_in_sd"});
  const ValidatedSpec spec = validate(c.problem, ValidationOptions{.require_transform = true, .interval = std::nullopt});
  std::pair<double, double> domain = default_transform_domain(spec, b.number("width_in_sd", 12.0));
  if (b.has("domain")) {
    const Json& d = b.at("domain");
    if (!d.is_array() || d.size() != 2 || !d[0].is_number() || !d[1].is_number()) {
      config_error("transform.domain: expected [lo, hi]");
    }
    domain = {d[0].get<double>(), d[1].get<double>()};
  }
  auto table = std::make_shared<const TransformTable>(build_transform(
      c.problem.diffusion, c.problem.x0, domain, b.count("n_nodes", 16385), b.number("tol", 1e-10)));
  const ProblemSpec ys = transformed_spec(spec, table);

  std::ostringstream os;
  write_transform_csv(os, *table, c.meta);
  write_file(c.out_dir / "transform.csv", os.str());
  write_json(c.out_dir / "transformed_spec.json", c, {{"problem", to_json(ys)}});
  write_json(c.out_dir / "transform.json", c,
             {{"command", "transform"},
              {"anchor", table->anchor()},
              {"domain", {table->domain_lo(), table->domain_hi()}},
              {"range", {table->range_lo(), table->range_hi()}},
              {"n_nodes", table->nodes().size()},
              {"orientation", table->orientation()},
              {"check_error", table->check_error()},
              {"tol", table->tol()},
              {"tilde_b_sup_d1", tilde_b_sup_d1(*table, c.problem.drift, c.problem.diffusion, 8193)}});
  out << "transform: " << table->nodes().size() << " nodes, check error "
      << format_double(table->check_error()) << ", wrote " << c.out_dir.string() << "\n";
  return kOk;
}

// ------------------------------------------------------------------ verify

int cmd_verify(const Context& c, std::ostream& out) {
  const Block b = c.block("verify");
  b.allow({"suites", "n_paths", "alphas"});
  VerifyOptions o;
  o.n_paths = b.count("n_paths", c.n_paths ? c.n_paths : 100);
  o.workers = c.workers;
  o.seed = c.seed;
  if (b.has("suites")) {
    const Json& s = b.at("suites");
    if (!s.is_array()) config_error("verify.suites: expected an array of names");
    for (const Json& name : s) {
      if (!name.is_string() || std::find(std::begin(kSuiteNames), std::end(kSuiteNames),
                                         name.get<std::string>()) == std::end(kSuiteNames)) {
        config_error("verify.suites: unknown suite " + name.dump());
      }
      o.suites.push_back(name.get<std::string>());
    }
  }
  if (b.has("alphas")) {
    const Json& a = b.at("alphas");
    if (!a.is_array()) config_error("verify.alphas: expected an array of numbers");
    for (const Json& v : a) {
      if (!v.is_number() || !(v.get<double>() < 1.0)) config_error("verify.alphas: each must be a number < 1");
      o.alphas.push_back(v.get<double>());
    }
  }
  const ValidatedSpec spec = validate(c.problem);
  const auto results = run_suites(spec, c.require_grid(), o);

  bool all = true;
  Json suites = Json::array();
  for (const SuiteResult& r : results) {
    all = all && r.pass;
    suites.push_back({{"name", r.name}, {"pass", r.pass}, {"skipped", r.skipped}, {"details", r.details}});
    out << (r.skipped ? "[SKIP] " : r.pass ? "[PASS] " : "[FAIL] ") << r.name << "\n";
  }
  write_json(c.out_dir / "verify.json", c,
             {{"command", "verify"}, {"problem", to_json(c.problem)}, {"pass", all}, {"suites", suites}});
  return all ? kOk : kVerificationFailed;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::AlphaOutOfRange:
    case ErrorKind::InvalidArgument:
    case ErrorKind::EmptySample:
    case ErrorKind::UnsupportedOrder:
    case ErrorKind::DeclaredBoundViolated:
    case ErrorKind::InconsistentDerivatives:
      return kConfigError;
    default:
      return kNumericError;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"pdiff: numerical lab for diffusions perturbed by their running maximum", "pdiff"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  Flags flags;
  using Handler = int (*)(const Context&, std::ostream&);
  const std::pair<const char*, std::pair<const char*, Handler>> table[] = {
      {"simulate", {"Simulate paths; write path CSVs and a summary", cmd_simulate}},
      {"derivative", {"Propagate pathwise Malliavin derivatives and check the lower bounds", cmd_derivative}},
      {"regime", {"Evaluate theta, the admissible horizon and the lower-bound curve", cmd_regime}},
      {"density", {"Estimate the terminal density with bandwidth-ladder diagnostics", cmd_density}},
      {"transform", {"Build the unit-diffusion transform table and transformed spec", cmd_transform}},
      {"verify", {"Run the invariant suites; exit 4 on any failure", cmd_verify}},
  };
  std::vector<std::pair<CLI::App*, Handler>> subs;
  for (const auto& [name, desc_fn] : table) {
    CLI::App* s = app.add_subcommand(name, desc_fn.first);
    s->add_option("--config", flags.config, "Run configuration (JSON)")->required();
    s->add_option("--out", flags.out, "Output directory (overrides config and " + std::string(kOutEnv) + ")");
    s->add_option("--workers", flags.workers, "Worker threads")->check(CLI::PositiveNumber);
    s->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { flags.seed = v; },
                                          "RNG seed (overrides config)");
    subs.emplace_back(s, desc_fn.second);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    for (const auto& [s, handler] : subs) {
      if (s->parsed()) return handler(make_context(flags), out);
    }
    return kConfigError;
  } catch (const Error& e) {
    err << "pdiff: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const Json::exception& e) {
    err << "pdiff: Config: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "pdiff: " << e.what() << "\n";
    return kNumericError;
  }
}

}  // namespace pdiff_cli
