#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snapfit/doe.hpp"
#include "snapfit/eval.hpp"
#include "snapfit/oracle.hpp"
#include "snapfit/pspline.hpp"
#include "snapfit/seqnet.hpp"

namespace snapfit::pipeline {

struct PipelineConfig {
  std::uint64_t seed = 42;
  std::size_t n_points = 500;
  double f0 = 10.0;
  double noise_sigma_rel = 0.01;

  std::size_t interior_knots = 40;
  double lambda = -1.0;  // < 0 selects by GCV over lambda_grid
  std::vector<double> lambda_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0,
                                     1e1,  1e2,  1e3,  1e4};

  long net_layers = 2;
  long net_hidden = 250;
  seqnet::TrainConfig net;

  std::string out_dir = "out";
};

// Per-run penalized fits sharing one knot vector and lambda. A negative
// lambda requests GCV selection, minimizing the summed score across
// profiles so the chosen weight is common to all runs.
struct SplineFits {
  std::vector<pspline::SplineModel> models;
  double lambda = 0.0;
};

SplineFits fit_all_splines(const std::vector<oracle::ForceProfile>& profiles,
                           std::size_t interior_knots, double lambda,
                           const std::vector<double>& grid);

// Response model refit on the named subset of runs (by run_id).
pspline::CoeffResponseModel fit_response_subset(
    const std::vector<doe::CodedRun>& runs,
    const std::vector<pspline::SplineModel>& models,
    const std::vector<std::string>& keep_ids);

struct PipelineResult {
  std::vector<doe::RunConfig> runs;
  std::vector<oracle::ForceProfile> profiles;
  SplineFits splines;
  pspline::CoeffResponseModel response;  // fit on all runs (exported artifact)
  seqnet::SeqNetModel net;
  seqnet::TrainReport report;
  eval::MetricsReport metrics;
  double mean_peak_force = 0.0;
};

// doe -> simulate -> fit-spline -> train -> evaluate -> plot, writing
// every artifact under cfg.out_dir. Deterministic per seed.
PipelineResult run_pipeline(const PipelineConfig& cfg);

// Scoring used by both the pipeline and the evaluate command: spline
// reconstruction, held-out coefficient-response predictions and network
// predictions against the simulated profiles.
eval::MetricsReport score_surrogates(
    const std::vector<oracle::ForceProfile>& profiles,
    const std::vector<doe::CodedRun>& coded,
    const std::vector<pspline::SplineModel>& spline_models,
    const seqnet::SeqNetModel& net, const seqnet::TrainReport& report);

double mean_peak_force(const std::vector<oracle::ForceProfile>& profiles);

PipelineConfig config_from_json_file(const std::string& path);

}  // namespace snapfit::pipeline
