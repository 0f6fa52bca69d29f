#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdiff/model.hpp"
#include "pdiff/serialize.hpp"

namespace pdiff_cli {

struct VerifyOptions {
  std::vector<std::string> suites;  // empty: all
  std::size_t n_paths = 100;
  std::vector<double> alphas;       // driftless suites; empty: problem alpha
  unsigned workers = 1;
  std::uint64_t seed = 0;
};

struct SuiteResult {
  std::string name;
  bool pass = false;
  bool skipped = false;
  pdiff::Json details;
};

inline constexpr const char* kSuiteNames[] = {"additive_identity", "malliavin_closed_form",
                                              "cameron_martin", "lower_bounds", "lamperti"};

std::vector<SuiteResult> run_suites(const pdiff::ValidatedSpec& spec, const pdiff::GridSpec& grid,
                                    const VerifyOptions& options);

}  // namespace pdiff_cli
