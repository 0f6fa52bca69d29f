#include "pdiff/serialize.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <set>

namespace pdiff {

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::Config, where + ": " + what);
}

void reject_unknown(const Json& j, const std::string& where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) config_error(where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (std::string_view key : keys) known = known || k == key;
    if (!known) config_error(where + "." + k, "unknown key");
  }
}

double get_number(const Json& j, const std::string& where) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  if (!j.is_number()) config_error(where, "expected a number");
  return j.get<double>();
}

std::size_t get_count(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
    config_error(where, "expected a non-negative integer");
  }
  return j.get<std::size_t>();
}

}  // namespace

std::string_view version() noexcept { return PDIFF_VERSION_STRING; }

Json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

Json to_json(const Coefficient& c) {
  Json j;
  j["preset_id"] = std::string(preset_name(c.preset()));
  if (c.preset() == Preset::custom_callback) {
    throw Error(ErrorKind::Config, "custom-callback coefficients cannot be serialized");
  }
  if (c.preset() == Preset::custom_tabulated) {
    const auto& src = c.source();
    if (!src || !src->drift || !src->diffusion) {
      throw Error(ErrorKind::Config, "custom-tabulated coefficient has no recorded source");
    }
    j["source"] = {{"drift", to_json(*src->drift)},
                   {"diffusion", to_json(*src->diffusion)},
                   {"anchor", src->anchor},
                   {"domain_lo", src->domain_lo},
                   {"domain_hi", src->domain_hi},
                   {"n_nodes", src->n_nodes},
                   {"tol", src->tol}};
  } else {
    Json params = Json::object();
    for (const auto& [k, v] : c.params()) params[k] = v;
    j["params"] = params;
  }
  const DeclaredBounds& b = c.declared_bounds();
  if (!b.empty()) {
    Json jb = Json::object();
    if (b.sup) jb["sup"] = *b.sup;
    if (b.sup_d1) jb["sup_d1"] = *b.sup_d1;
    if (b.sup_d2) jb["sup_d2"] = *b.sup_d2;
    j["declared_bounds"] = jb;
  }
  return j;
}

Coefficient coefficient_from_json(const Json& j, const std::string& where) {
  reject_unknown(j, where, {"preset_id", "params", "declared_bounds", "source"});
  if (!j.contains("preset_id") || !j["preset_id"].is_string()) {
    config_error(where + ".preset_id", "missing or not a string");
  }
  const std::string name = j["preset_id"].get<std::string>();
  const auto preset = preset_from_name(name);
  if (!preset) config_error(where + ".preset_id", "unknown preset '" + name + "'");
  if (*preset == Preset::custom_callback) {
    config_error(where + ".preset_id", "custom-callback exists only in-process");
  }

  Coefficient c;
  if (*preset == Preset::custom_tabulated) {
    if (j.contains("params")) config_error(where + ".params", "not used by custom-tabulated");
    if (!j.contains("source")) config_error(where + ".source", "missing");
    const Json& s = j["source"];
    const std::string sw = where + ".source";
    reject_unknown(s, sw, {"drift", "diffusion", "anchor", "domain_lo", "domain_hi", "n_nodes", "tol"});
    for (const char* key : {"drift", "diffusion", "anchor", "domain_lo", "domain_hi", "n_nodes", "tol"}) {
      if (!s.contains(key)) config_error(sw + "." + key, "missing");
    }
    const Coefficient drift = coefficient_from_json(s["drift"], sw + ".drift");
    const Coefficient diffusion = coefficient_from_json(s["diffusion"], sw + ".diffusion");
    const double lo = get_number(s["domain_lo"], sw + ".domain_lo");
    const double hi = get_number(s["domain_hi"], sw + ".domain_hi");
    auto table = std::make_shared<const TransformTable>(build_transform(
        diffusion, get_number(s["anchor"], sw + ".anchor"), {lo, hi},
        get_count(s["n_nodes"], sw + ".n_nodes"), get_number(s["tol"], sw + ".tol")));
    c = tilde_b_coefficient(std::move(table), drift, diffusion);
  } else {
    if (j.contains("source")) config_error(where + ".source", "only used by custom-tabulated");
    std::map<std::string, double> params;
    if (j.contains("params")) {
      const Json& p = j["params"];
      if (!p.is_object()) config_error(where + ".params", "expected an object");
      for (const auto& [k, v] : p.items()) params[k] = get_number(v, where + ".params." + k);
    }
    try {
      c = Coefficient::from_params(*preset, params);
    } catch (const Error& e) {
      config_error(where + ".params", e.what());
    }
  }

  if (j.contains("declared_bounds")) {
    const Json& b = j["declared_bounds"];
    const std::string bw = where + ".declared_bounds";
    reject_unknown(b, bw, {"sup", "sup_d1", "sup_d2"});
    DeclaredBounds d;
    if (b.contains("sup")) d.sup = get_number(b["sup"], bw + ".sup");
    if (b.contains("sup_d1")) d.sup_d1 = get_number(b["sup_d1"], bw + ".sup_d1");
    if (b.contains("sup_d2")) d.sup_d2 = get_number(b["sup_d2"], bw + ".sup_d2");
    c = c.with_bounds(d);
  }
  return c;
}

Json to_json(const ProblemSpec& spec) {
  return {{"x0", spec.x0},
          {"alpha", spec.alpha},
          {"drift", to_json(spec.drift)},
          {"diffusion", to_json(spec.diffusion)},
          {"horizon", spec.horizon}};
}

ProblemSpec problem_from_json(const Json& j, const std::string& where) {
  reject_unknown(j, where, {"x0", "alpha", "drift", "diffusion", "horizon"});
  ProblemSpec spec;
  if (j.contains("x0")) spec.x0 = get_number(j["x0"], where + ".x0");
  if (j.contains("alpha")) spec.alpha = get_number(j["alpha"], where + ".alpha");
  if (j.contains("horizon")) spec.horizon = get_number(j["horizon"], where + ".horizon");
  if (j.contains("drift")) spec.drift = coefficient_from_json(j["drift"], where + ".drift");
  if (j.contains("diffusion")) {
    spec.diffusion = coefficient_from_json(j["diffusion"], where + ".diffusion");
  }
  if (!(spec.alpha < 1.0)) {
    config_error(where + ".alpha", "alpha must be < 1, got " + format_double(spec.alpha));
  }
  if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon)) {
    config_error(where + ".horizon", "horizon must be finite and > 0");
  }
  if (!std::isfinite(spec.x0)) config_error(where + ".x0", "must be finite");
  return spec;
}

Json to_json(const GridSpec& grid, bool include_times) {
  Json j{{"n_steps", grid.n_steps()}, {"dt", grid.dt()}};
  if (include_times) j["times"] = grid.times();
  return j;
}

GridSpec grid_from_json(const Json& j, double horizon, const std::string& where) {
  reject_unknown(j, where, {"n_steps", "dt", "times"});
  if (!j.contains("n_steps")) config_error(where + ".n_steps", "missing");
  const std::size_t n = get_count(j["n_steps"], where + ".n_steps");
  if (n == 0) config_error(where + ".n_steps", "must be positive");
  GridSpec grid(horizon, n);
  if (j.contains("dt")) {
    const double dt = get_number(j["dt"], where + ".dt");
    if (std::abs(dt - grid.dt()) > 4.0 * std::numeric_limits<double>::epsilon() * grid.dt()) {
      config_error(where + ".dt", "does not equal horizon / n_steps");
    }
  }
  if (j.contains("times")) config_error(where + ".times", "derived field; do not set it");
  return grid;
}

Json to_json(const EffectiveBounds& b) {
  auto est = [](const NormEstimate& e) {
    return Json{{"value", e.value},
                {"source", std::string(to_string(e.source))},
                {"non_rigorous", e.source == BoundSource::grid}};
  };
  return {{"drift_d1", est(b.drift_d1)},
          {"diffusion_sup", est(b.diffusion_sup)},
          {"diffusion_d1", est(b.diffusion_d1)},
          {"diffusion_d2", est(b.diffusion_d2)},
          {"diffusion_inf", b.diffusion_inf},
          {"diffusion_sign", b.diffusion_sign},
          {"grid", {b.grid_lo, b.grid_hi}}};
}

Json to_json(const RegimeReport& r) {
  Json curve = Json::array();
  for (const auto& [t, v] : r.lower_bound_curve) curve.push_back({t, v});
  return {{"t0", r.t0},
          {"theta_at_t0", r.theta_at_t0},
          {"admissible", r.admissible},
          {"t0_max", number_or_inf(r.t0_max)},
          {"alpha", r.alpha},
          {"lb", r.lb},
          {"lb_source", std::string(to_string(r.lb_source))},
          {"lb_non_rigorous", r.lb_source == BoundSource::grid},
          {"sigma_bar", r.sigma_bar},
          {"transformed", r.transformed},
          {"lower_bound_curve", curve}};
}

std::uint64_t config_hash(const Json& config) {
  const std::string s = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Json Metadata::to_json() const {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash));
  return {{"tool", tool}, {"version", std::string(version())}, {"config_hash", buf}, {"seed", seed}};
}

CsvWriter::CsvWriter(std::ostream& out, const Metadata& meta,
                     std::initializer_list<std::string_view> columns)
    : out_(out), width_(columns.size()) {
  const Json m = meta.to_json();
  out_ << "# tool=" << meta.tool << " version=" << version()
       << " config_hash=" << m["config_hash"].get<std::string>() << " seed=" << meta.seed << '\n';
  bool first = true;
  for (std::string_view c : columns) {
    out_ << (first ? "" : ",") << c;
    first = false;
  }
  out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) {
  if (values.size() != width_) throw Error(ErrorKind::InvalidArgument, "CSV row width mismatch");
  bool first = true;
  for (double v : values) {
    out_ << (first ? "" : ",") << format_double(v);
    first = false;
  }
  out_ << '\n';
}

void write_path_csv(std::ostream& out, const PathState& path, const GridSpec& grid,
                    const Metadata& meta) {
  if (path.x.size() != grid.n_steps() + 1) {
    throw Error(ErrorKind::GridMismatch, "path length differs from grid");
  }
  CsvWriter w(out, meta, {"t", "x", "running_max", "argmax_time", "db"});
  (void)w;
  for (std::size_t k = 0; k <= grid.n_steps(); ++k) {
    out << format_double(grid.time(k)) << ',' << format_double(path.x[k]) << ','
        << format_double(path.running_max[k]) << ','
        << format_double(grid.time(path.argmax_idx[k])) << ',';
    if (k < path.db.size()) out << format_double(path.db[k]);
    out << '\n';
  }
}

void write_derivative_csv(std::ostream& out, const DerivativeField& f, const Metadata& meta) {
  CsvWriter w(out, meta, {"r", "d_x", "d_m"});
  for (std::size_t i = 0; i < f.d_x.size(); ++i) {
    w.row({static_cast<double>(i) * f.dt, f.d_x[i], f.d_m[i]});
  }
}

void write_transform_csv(std::ostream& out, const TransformTable& table, const Metadata& meta) {
  CsvWriter w(out, meta, {"y", "F"});
  const auto y = table.nodes();
  const auto f = table.values();
  for (std::size_t i = 0; i < y.size(); ++i) w.row({y[i], f[i]});
}

void write_curve_csv(std::ostream& out, const RegimeReport& r, const Metadata& meta) {
  CsvWriter w(out, meta, {"t", "bound"});
  for (const auto& [t, v] : r.lower_bound_curve) w.row({t, v});
}

}  // namespace pdiff
