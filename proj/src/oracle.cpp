#include "snapfit/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>

namespace snapfit::oracle {

namespace {

constexpr double kNominalWall = 0.8;
constexpr double kNominalLength = 8.8;
constexpr double kNominalAngleDeg = 46.926;
constexpr double kNominalDOut = 21.0;

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

std::string format9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void ForceProfile::validate() const {
  if (force.size() != displacement.size()) {
    throw LengthMismatch("profile " + run_id +
                         ": force and displacement lengths differ");
  }
  if (displacement.size() < 2 || displacement.front() != 0.0 ||
      displacement.back() != 1.0) {
    throw NumericError("profile " + run_id +
                       ": displacement must span [0, 1]");
  }
  for (std::size_t i = 1; i < displacement.size(); ++i) {
    if (!(displacement[i] > displacement[i - 1])) {
      throw NumericError("profile " + run_id +
                         ": displacement must be strictly increasing");
    }
  }
  for (double f : force) {
    if (!std::isfinite(f)) {
      throw NumericError("profile " + run_id + ": non-finite force value");
    }
  }
}

double amplitude(const doe::RunConfig& run, const OracleParams& oracle) {
  const double wall = run.wall_thickness / kNominalWall;
  const double len = kNominalLength / run.snap_length;
  const double angle =
      std::tan(deg2rad(run.snap_angle)) / std::tan(deg2rad(kNominalAngleDeg));
  const double cut = 1.0 - 1.25 * run.snap_width_cut;
  const double dia = run.d_out / kNominalDOut;
  return oracle.f0 * wall * wall * wall * len * len * len * angle * cut * dia;
}

double peak_position(const doe::RunConfig& run) {
  return 0.55 + 1.0 * run.x_offset + 0.05 * run.tilt;
}

ForceProfile snap_force(const doe::RunConfig& run, std::size_t n_points,
                        const OracleParams& oracle) {
  if (n_points < 2) throw NumericError("snap_force: n_points must be >= 2");
  run.validate();

  const double a = amplitude(run, oracle);
  const double m = peak_position(run);
  if (a <= 0.0) {
    throw DegenerateGeometry("run " + run.run_id +
                             ": non-positive force amplitude");
  }
  if (!(m > 0.0 && m < 1.0)) {
    throw DegenerateGeometry("run " + run.run_id +
                             ": engagement point outside (0, 1)");
  }

  std::mt19937_64 rng(oracle.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sigma = oracle.noise_sigma_rel * a;

  ForceProfile p;
  p.run_id = run.run_id;
  p.displacement.resize(n_points);
  p.force.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(n_points - 1);
    const double u = s / m;
    double f = a * u * u * std::exp(2.0 * (1.0 - u)) + 0.05 * a * s;
    if (sigma > 0.0) f += sigma * noise(rng);
    p.displacement[i] = s;
    p.force[i] = f;
  }
  return p;
}

std::vector<ForceProfile> batch_simulate(const std::vector<doe::RunConfig>& runs,
                                         std::size_t n_points,
                                         const OracleParams& oracle) {
  if (runs.empty()) throw NumericError("batch_simulate: no runs");
  std::vector<ForceProfile> out;
  out.reserve(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    OracleParams sub = oracle;
    sub.seed = oracle.seed + i;
    out.push_back(snap_force(runs[i], n_points, sub));
  }
  return out;
}

std::string profiles_to_csv(const std::vector<ForceProfile>& profiles) {
  std::ostringstream out;
  out << "run_id,index,displacement,force\n";
  for (const ForceProfile& p : profiles) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      out << p.run_id << ',' << i << ',' << format9(p.displacement[i]) << ','
          << format9(p.force[i]) << '\n';
    }
  }
  return out.str();
}

std::vector<ForceProfile> profiles_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("profiles csv: empty input");
  std::vector<ForceProfile> profiles;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id, idx, disp, force;
    if (!std::getline(row, id, ',') || !std::getline(row, idx, ',') ||
        !std::getline(row, disp, ',') || !std::getline(row, force)) {
      throw IoError("profiles csv: malformed row '" + line + "'");
    }
    if (profiles.empty() || profiles.back().run_id != id) {
      profiles.push_back(ForceProfile{id, {}, {}});
    }
    profiles.back().displacement.push_back(std::strtod(disp.c_str(), nullptr));
    profiles.back().force.push_back(std::strtod(force.c_str(), nullptr));
  }
  if (profiles.empty()) throw IoError("profiles csv: no data rows");
  return profiles;
}

}  // namespace snapfit::oracle
