#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "snapfit/errors.hpp"

namespace snapfit::doe {

inline constexpr int kNumFactors = 7;

inline constexpr std::array<const char*, kNumFactors> kFactorNames = {
    "tilt",        "x_offset",   "d_out",      "wall_thickness",
    "snap_length", "snap_angle", "snap_width_cut"};

// One experiment row: assembly variations (tilt, x_offset) plus the
// snap geometry factors.
struct RunConfig {
  std::string run_id;
  double tilt = 0.0;             // degrees
  double x_offset = 0.0;         // mm
  double d_out = 0.0;            // mm
  double wall_thickness = 0.0;   // mm
  double snap_length = 0.0;      // mm
  double snap_angle = 0.0;       // degrees
  double snap_width_cut = 0.0;   // mm

  std::array<double, kNumFactors> factors() const {
    return {tilt,        x_offset,   d_out,      wall_thickness,
            snap_length, snap_angle, snap_width_cut};
  }

  // Throws on a physically impossible configuration.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

// A run expressed in coded units, one level in {-1, 0, +1} per factor.
struct CodedRun {
  std::string run_id;
  std::vector<int> z;

  bool operator==(const CodedRun&) const = default;
};

// Physical values behind the coded levels of one factor. Two-level
// factors carry low == center; the coded center is then reachable only
// by the all-nominal baseline run.
struct FactorSpec {
  std::string name;
  double low = 0.0;
  double center = 0.0;
  double high = 0.0;

  void validate() const;
};

// The 17-run experiment table, V0 first, values exact.
std::vector<RunConfig> table1_runs();

// Level maps matching the table above.
std::vector<FactorSpec> table1_factor_specs();

CodedRun encode(const RunConfig& run, const std::vector<FactorSpec>& specs);
RunConfig decode(const CodedRun& coded, const std::vector<FactorSpec>& specs);

// Two-level design on 2^k runs with balanced, pairwise-orthogonal
// columns. n_runs must be a power of two and at least n_factors + 1.
// The seed picks which interaction columns host the extra factors.
std::vector<CodedRun> fractional_factorial(const std::vector<FactorSpec>& specs,
                                           std::size_t n_runs,
                                           std::uint64_t seed);

// Shortest decimal string that round-trips to the same double.
std::string format_value(double v);

std::string runs_to_csv(const std::vector<RunConfig>& runs);
std::vector<RunConfig> runs_from_csv(const std::string& text);

}  // namespace snapfit::doe
