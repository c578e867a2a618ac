#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snapfit/doe.hpp"
#include "snapfit/errors.hpp"

namespace snapfit::oracle {

// A sampled force-vs-displacement curve for one run. Displacement is
// normalized to [0, 1] on a uniform grid.
struct ForceProfile {
  std::string run_id;
  std::vector<double> displacement;
  std::vector<double> force;

  std::size_t size() const { return force.size(); }
  void validate() const;
};

struct OracleParams {
  double f0 = 10.0;             // base force scale
  double noise_sigma_rel = 0.01;  // noise std as a fraction of the run's amplitude
  std::uint64_t seed = 0;
};

// Amplitude and peak location of the deterministic part of the profile
// for a given run.
double amplitude(const doe::RunConfig& run, const OracleParams& oracle);
double peak_position(const doe::RunConfig& run);

// Closed-form snap-fit stand-in: a bump of height A peaking at s = m
// plus a small linear engagement ramp, with optional seeded Gaussian
// noise of std noise_sigma_rel * A.
ForceProfile snap_force(const doe::RunConfig& run, std::size_t n_points,
                        const OracleParams& oracle);

// One profile per run; run i is simulated with sub-seed seed + i so a
// run's data never depends on the other runs.
std::vector<ForceProfile> batch_simulate(const std::vector<doe::RunConfig>& runs,
                                         std::size_t n_points,
                                         const OracleParams& oracle);

std::string profiles_to_csv(const std::vector<ForceProfile>& profiles);
std::vector<ForceProfile> profiles_from_csv(const std::string& text);

}  // namespace snapfit::oracle
