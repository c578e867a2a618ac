#include "snapfit/doe.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>

namespace snapfit::doe {

namespace {

constexpr double kLevelTol = 1e-9;

struct Row {
  const char* id;
  const char* vals[kNumFactors];
};

// Literal decimal strings; the table is data, not something we derive.
constexpr Row kTable1[] = {
    {"V0", {"0", "0", "21", "0.8", "8.8", "46.926", "0"}},
    {"V1", {"0", "-0.1", "20.84", "0.75", "8.85", "48.926", "0.2"}},
    {"V2", {"0", "-0.1", "21.16", "0.85", "8.75", "44.926", "0.2"}},
    {"V3", {"0", "0.1", "20.84", "0.85", "8.75", "48.926", "0"}},
    {"V4", {"0", "0.1", "21.16", "0.75", "8.85", "44.926", "0"}},
    {"V5", {"1", "-0.1", "20.84", "0.85", "8.85", "44.926", "0"}},
    {"V6", {"1", "-0.1", "21.16", "0.75", "8.75", "48.926", "0"}},
    {"V7", {"1", "0.1", "20.84", "0.75", "8.75", "44.926", "0.2"}},
    {"V8", {"1", "0.1", "21.16", "0.85", "8.85", "48.926", "0.2"}},
    {"V9", {"1", "0.1", "21.16", "0.85", "8.75", "44.926", "0"}},
    {"V10", {"1", "0.1", "20.84", "0.75", "8.85", "48.926", "0"}},
    {"V11", {"1", "-0.1", "21.16", "0.75", "8.85", "44.926", "0.2"}},
    {"V12", {"1", "-0.1", "20.84", "0.85", "8.75", "48.926", "0.2"}},
    {"V13", {"0", "0.1", "21.16", "0.75", "8.75", "48.926", "0.2"}},
    {"V14", {"0", "0.1", "20.84", "0.85", "8.85", "44.926", "0.2"}},
    {"V15", {"0", "-0.1", "21.16", "0.85", "8.85", "48.926", "0"}},
    {"V16", {"0", "-0.1", "20.84", "0.75", "8.75", "44.926", "0"}},
};

double parse_double(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw IoError("not a number: '" + s + "'");
  }
  return v;
}

RunConfig from_factors(std::string run_id, const std::array<double, kNumFactors>& f) {
  RunConfig r;
  r.run_id = std::move(run_id);
  r.tilt = f[0];
  r.x_offset = f[1];
  r.d_out = f[2];
  r.wall_thickness = f[3];
  r.snap_length = f[4];
  r.snap_angle = f[5];
  r.snap_width_cut = f[6];
  return r;
}

bool matches(double value, double level) {
  return std::abs(value - level) <= kLevelTol;
}

}  // namespace

void RunConfig::validate() const {
  if (!(wall_thickness > 0.0) || !(snap_length > 0.0) || !(d_out > 0.0)) {
    throw NumericError("run " + run_id + ": geometry dimensions must be positive");
  }
  if (!(snap_angle > 0.0 && snap_angle < 90.0)) {
    throw NumericError("run " + run_id + ": snap_angle must lie in (0, 90) degrees");
  }
  if (snap_width_cut < 0.0) {
    throw NumericError("run " + run_id + ": snap_width_cut must be >= 0");
  }
}

void FactorSpec::validate() const {
  const bool ascending = low <= center && center <= high;
  const bool descending = low >= center && center >= high;
  if ((!ascending && !descending) || low == high) {
    throw NumericError("factor " + name + ": levels must be monotone and distinct");
  }
}

std::vector<RunConfig> table1_runs() {
  std::vector<RunConfig> runs;
  runs.reserve(std::size(kTable1));
  for (const Row& row : kTable1) {
    std::array<double, kNumFactors> f{};
    for (int j = 0; j < kNumFactors; ++j) f[j] = parse_double(row.vals[j]);
    runs.push_back(from_factors(row.id, f));
  }
  return runs;
}

std::vector<FactorSpec> table1_factor_specs() {
  // Tilt and snap_width_cut vary over two levels only; their nominal
  // value doubles as the low level.
  return {
      {"tilt", 0.0, 0.0, 1.0},
      {"x_offset", -0.1, 0.0, 0.1},
      {"d_out", 20.84, 21.0, 21.16},
      {"wall_thickness", 0.75, 0.8, 0.85},
      {"snap_length", 8.75, 8.8, 8.85},
      {"snap_angle", 44.926, 46.926, 48.926},
      {"snap_width_cut", 0.0, 0.0, 0.2},
  };
}

CodedRun encode(const RunConfig& run, const std::vector<FactorSpec>& specs) {
  if (specs.size() != kNumFactors) {
    throw NumericError("encode: expected 7 factor specs");
  }
  const auto values = run.factors();

  bool all_nominal = true;
  for (int j = 0; j < kNumFactors; ++j) {
    if (!matches(values[j], specs[j].center)) all_nominal = false;
  }

  CodedRun coded;
  coded.run_id = run.run_id;
  coded.z.assign(kNumFactors, 0);
  if (all_nominal) {
    return coded;
  }
  for (int j = 0; j < kNumFactors; ++j) {
    // Low/high take priority so a two-level factor (low == center)
    // codes to -1 outside the baseline run.
    if (matches(values[j], specs[j].low)) {
      coded.z[j] = -1;
    } else if (matches(values[j], specs[j].high)) {
      coded.z[j] = +1;
    } else if (matches(values[j], specs[j].center)) {
      coded.z[j] = 0;
    } else {
      throw ValueNotALevel("run " + run.run_id + ": value " +
                           format_value(values[j]) + " of factor " +
                           specs[j].name + " matches no level");
    }
  }
  return coded;
}

RunConfig decode(const CodedRun& coded, const std::vector<FactorSpec>& specs) {
  if (specs.size() != kNumFactors) {
    throw NumericError("decode: expected 7 factor specs");
  }
  if (coded.z.size() != kNumFactors) {
    throw NumericError("decode: expected 7 coded levels");
  }
  std::array<double, kNumFactors> f{};
  for (int j = 0; j < kNumFactors; ++j) {
    switch (coded.z[j]) {
      case -1: f[j] = specs[j].low; break;
      case 0: f[j] = specs[j].center; break;
      case +1: f[j] = specs[j].high; break;
      default:
        throw NumericError("decode: coded level must be -1, 0 or +1");
    }
  }
  return from_factors(coded.run_id, f);
}

std::vector<CodedRun> fractional_factorial(const std::vector<FactorSpec>& specs,
                                           std::size_t n_runs,
                                           std::uint64_t seed) {
  const std::size_t n_factors = specs.size();
  if (n_factors == 0) throw NumericError("fractional_factorial: no factors");
  if (!std::has_single_bit(n_runs) || n_runs < n_factors + 1) {
    throw InvalidRunCount("n_runs must be a power of two >= n_factors + 1");
  }
  for (const FactorSpec& s : specs) s.validate();

  const unsigned k = static_cast<unsigned>(std::countr_zero(n_runs));

  // Each factor gets a nonzero Walsh index: bit b set means the column
  // multiplies basic column b. Distinct indices give orthogonal +/-1
  // columns; the generator for each non-basic factor is drawn from the
  // remaining interaction indices.
  std::vector<std::size_t> walsh;
  walsh.reserve(n_factors);
  for (std::size_t j = 0; j < std::min<std::size_t>(n_factors, k); ++j) {
    walsh.push_back(std::size_t{1} << j);
  }
  if (n_factors > k) {
    std::vector<std::size_t> interactions;
    for (std::size_t idx = 1; idx < n_runs; ++idx) {
      if (!std::has_single_bit(idx)) interactions.push_back(idx);
    }
    std::mt19937_64 rng(seed);
    std::shuffle(interactions.begin(), interactions.end(), rng);
    for (std::size_t j = k; j < n_factors; ++j) {
      walsh.push_back(interactions[j - k]);
    }
  }

  std::vector<CodedRun> design;
  design.reserve(n_runs);
  for (std::size_t r = 0; r < n_runs; ++r) {
    CodedRun row;
    row.run_id = "R" + std::to_string(r);
    row.z.resize(n_factors);
    for (std::size_t j = 0; j < n_factors; ++j) {
      row.z[j] = (std::popcount(r & walsh[j]) % 2 == 0) ? +1 : -1;
    }
    design.push_back(std::move(row));
  }
  return design;
}

std::string format_value(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw NumericError("format_value failed");
  return std::string(buf, ptr);
}

std::string runs_to_csv(const std::vector<RunConfig>& runs) {
  std::ostringstream out;
  out << "run_id";
  for (const char* name : kFactorNames) out << ',' << name;
  out << '\n';
  for (const RunConfig& r : runs) {
    out << r.run_id;
    for (double v : r.factors()) out << ',' << format_value(v);
    out << '\n';
  }
  return out.str();
}

std::vector<RunConfig> runs_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("runs csv: empty input");
  std::vector<RunConfig> runs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != kNumFactors + 1) {
      throw IoError("runs csv: expected 8 columns, got " +
                    std::to_string(cells.size()));
    }
    std::array<double, kNumFactors> f{};
    for (int j = 0; j < kNumFactors; ++j) f[j] = parse_double(cells[j + 1]);
    runs.push_back(from_factors(cells[0], f));
  }
  return runs;
}

}  // namespace snapfit::doe
