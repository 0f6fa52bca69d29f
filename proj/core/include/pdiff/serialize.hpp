#pragma once

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pdiff/bounds.hpp"
#include "pdiff/lamperti.hpp"
#include "pdiff/malliavin.hpp"
#include "pdiff/model.hpp"

namespace pdiff {

using Json = nlohmann::json;

/// Version string baked in at build time.
std::string_view version() noexcept;

// Parsing errors throw Error(Config) naming the offending field path.

Json to_json(const Coefficient& c);
Coefficient coefficient_from_json(const Json& j, const std::string& where = "coefficient");

Json to_json(const ProblemSpec& spec);
ProblemSpec problem_from_json(const Json& j, const std::string& where = "problem");

/// {"n_steps", "dt"} plus "times" when requested.
Json to_json(const GridSpec& grid, bool include_times = false);
/// Accepts n_steps and an optional dt that must equal horizon / n_steps.
GridSpec grid_from_json(const Json& j, double horizon, const std::string& where = "grid");

Json to_json(const EffectiveBounds& bounds);
/// Infinite t0_max becomes the string "inf".
Json to_json(const RegimeReport& report);

/// Number, or "inf" / "-inf" for infinities.
Json number_or_inf(double v);

/// 17 significant digits, '.' decimal.
std::string format_double(double v);

/// 64-bit FNV-1a of the canonical (sorted-key) dump.
std::uint64_t config_hash(const Json& config);

struct Metadata {
  std::string tool = "pdiff";
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  Json to_json() const;
};

/// CSV with a "# tool=... version=... config_hash=... seed=..." first line
/// followed by the column header.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const Metadata& meta, std::initializer_list<std::string_view> columns);
  void row(std::initializer_list<double> values);

 private:
  std::ostream& out_;
  std::size_t width_;
};

/// Columns t, x, running_max, argmax_time, db (db empty on the last row).
void write_path_csv(std::ostream& out, const PathState& path, const GridSpec& grid,
                    const Metadata& meta);
/// Columns r, d_x, d_m.
void write_derivative_csv(std::ostream& out, const DerivativeField& field, const Metadata& meta);
/// Columns y, F.
void write_transform_csv(std::ostream& out, const TransformTable& table, const Metadata& meta);
/// Columns t, bound.
void write_curve_csv(std::ostream& out, const RegimeReport& report, const Metadata& meta);

}  // namespace pdiff
