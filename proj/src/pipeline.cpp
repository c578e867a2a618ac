#include "snapfit/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <limits>
#include <set>

#include "snapfit/plot.hpp"
#include "snapfit/serialize.hpp"

namespace snapfit::pipeline {

namespace fs = std::filesystem;

SplineFits fit_all_splines(const std::vector<oracle::ForceProfile>& profiles,
                           std::size_t interior_knots, double lambda,
                           const std::vector<double>& grid) {
  SplineFits out;
  if (lambda >= 0.0) {
    out.lambda = lambda;
  } else {
    if (grid.empty()) throw NumericError("fit_all_splines: empty lambda grid");
    double best = grid.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (double l : grid) {
      double score = 0.0;
      for (const auto& p : profiles) {
        score += pspline::gcv_score(p, interior_knots, l).gcv;
      }
      if (score < best_score || (score == best_score && l > best)) {
        best_score = score;
        best = l;
      }
    }
    out.lambda = best;
  }
  out.models.reserve(profiles.size());
  for (const auto& p : profiles) {
    out.models.push_back(pspline::fit(p, interior_knots, out.lambda));
  }
  return out;
}

pspline::CoeffResponseModel fit_response_subset(
    const std::vector<doe::CodedRun>& runs,
    const std::vector<pspline::SplineModel>& models,
    const std::vector<std::string>& keep_ids) {
  const std::set<std::string> keep(keep_ids.begin(), keep_ids.end());
  std::vector<doe::CodedRun> sub_runs;
  std::vector<pspline::SplineModel> sub_models;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (keep.count(runs[i].run_id)) {
      sub_runs.push_back(runs[i]);
      sub_models.push_back(models[i]);
    }
  }
  return pspline::fit_response(sub_runs, sub_models);
}

double mean_peak_force(const std::vector<oracle::ForceProfile>& profiles) {
  double acc = 0.0;
  for (const auto& p : profiles) {
    acc += *std::max_element(p.force.begin(), p.force.end());
  }
  return acc / static_cast<double>(profiles.size());
}

eval::MetricsReport score_surrogates(
    const std::vector<oracle::ForceProfile>& profiles,
    const std::vector<doe::CodedRun>& coded,
    const std::vector<pspline::SplineModel>& spline_models,
    const seqnet::SeqNetModel& net, const seqnet::TrainReport& report) {
  if (profiles.size() != coded.size() || profiles.size() != spline_models.size()) {
    throw NumericError("score_surrogates: inputs must align");
  }
  const std::size_t n_points = profiles.front().size();

  eval::MethodPredictions spline_fit{"spline_fit", {}};
  for (std::size_t i = 0; i < spline_models.size(); ++i) {
    spline_fit.predictions.push_back(pspline::sample_spline(
        spline_models[i], n_points, profiles[i].run_id));
  }

  // Held-out scoring: the response model never sees the test runs.
  const pspline::CoeffResponseModel crm =
      fit_response_subset(coded, spline_models, report.train_ids);
  eval::MethodPredictions spline_response{"spline_response", {}};
  for (const doe::CodedRun& run : coded) {
    spline_response.predictions.push_back(
        pspline::predict_profile(crm, run, n_points));
  }

  eval::MethodPredictions lstm{"lstm", {}};
  for (const doe::CodedRun& run : coded) {
    lstm.predictions.push_back(seqnet::forward(net, run));
  }

  return eval::compare(profiles, {spline_fit, spline_response, lstm},
                       report.test_ids);
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const auto path = [&](const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
  };

  PipelineResult res;

  // DoE
  res.runs = doe::table1_runs();
  serialize::write_file(path("runs.csv"), doe::runs_to_csv(res.runs));
  const std::vector<doe::FactorSpec> specs = doe::table1_factor_specs();
  std::vector<doe::CodedRun> coded;
  for (const auto& run : res.runs) coded.push_back(doe::encode(run, specs));

  // Simulate
  oracle::OracleParams op;
  op.f0 = cfg.f0;
  op.noise_sigma_rel = cfg.noise_sigma_rel;
  op.seed = cfg.seed;
  res.profiles = oracle::batch_simulate(res.runs, cfg.n_points, op);
  serialize::write_file(path("profiles.csv"),
                        oracle::profiles_to_csv(res.profiles));

  // Spline surrogate
  res.splines = fit_all_splines(res.profiles, cfg.interior_knots, cfg.lambda,
                                cfg.lambda_grid);
  for (std::size_t i = 0; i < res.splines.models.size(); ++i) {
    const auto& m = res.splines.models[i];
    serialize::write_file(path("spline_model_" + res.runs[i].run_id + ".json"),
                          serialize::spline_model_to_json(m).dump(2) + "\n");
    serialize::write_file(
        path("piecewise_" + res.runs[i].run_id + ".json"),
        serialize::piecewise_to_json(pspline::to_piecewise(m)).dump(2) + "\n");
  }
  res.response = pspline::fit_response(coded, res.splines.models);
  serialize::write_file(path("response_model.json"),
                        serialize::response_model_to_json(res.response).dump(2) + "\n");

  // Network surrogate
  seqnet::TrainConfig net_cfg = cfg.net;
  seqnet::SeqNetModel net0 =
      seqnet::init(cfg.net_layers, cfg.net_hidden, net_cfg.seed);
  std::vector<std::pair<doe::CodedRun, oracle::ForceProfile>> dataset;
  for (std::size_t i = 0; i < coded.size(); ++i) {
    dataset.emplace_back(coded[i], res.profiles[i]);
  }
  auto [trained, report] = seqnet::train(std::move(net0), dataset, net_cfg);
  res.net = std::move(trained);
  res.report = std::move(report);
  serialize::write_file(path("net_model.json"),
                        serialize::net_model_to_json(res.net).dump() + "\n");
  serialize::write_file(path("train_report.json"),
                        serialize::train_report_to_json(res.report).dump(2) + "\n");

  // Metrics
  res.metrics = score_surrogates(res.profiles, coded, res.splines.models,
                                 res.net, res.report);
  res.mean_peak_force = mean_peak_force(res.profiles);
  serialize::write_file(path("metrics.csv"), eval::metrics_to_csv(res.metrics));
  serialize::write_file(path("metrics.json"),
                        serialize::metrics_to_json(res.metrics).dump(2) + "\n");

  // Figures: simulation / spline / network panels
  std::vector<oracle::ForceProfile> spline_curves, net_curves;
  for (std::size_t i = 0; i < res.splines.models.size(); ++i) {
    spline_curves.push_back(pspline::sample_spline(
        res.splines.models[i], cfg.n_points, res.runs[i].run_id));
  }
  for (const auto& run : coded) net_curves.push_back(seqnet::forward(res.net, run));
  serialize::write_file(path("fig_simulation.svg"),
                        plot::profiles_to_svg(res.profiles, "Simulation model"));
  serialize::write_file(path("fig_spline.svg"),
                        plot::profiles_to_svg(spline_curves, "P-spline surrogate"));
  serialize::write_file(path("fig_network.svg"),
                        plot::profiles_to_svg(net_curves, "LSTM surrogate"));
  serialize::write_file(path("net_pred.csv"), oracle::profiles_to_csv(net_curves));
  serialize::write_file(path("spline_fit.csv"),
                        oracle::profiles_to_csv(spline_curves));

  return res;
}

PipelineConfig config_from_json_file(const std::string& path) {
  const auto text = serialize::read_file(path);
  serialize::json j;
  try {
    j = serialize::json::parse(text);
  } catch (const std::exception& e) {
    throw UsageError(std::string("config parse error: ") + e.what());
  }
  PipelineConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.net.seed = cfg.seed;
  cfg.n_points = j.value("n_points", cfg.n_points);
  cfg.f0 = j.value("f0", cfg.f0);
  cfg.noise_sigma_rel = j.value("noise_sigma_rel", cfg.noise_sigma_rel);
  if (j.contains("spline")) {
    const auto& s = j["spline"];
    cfg.interior_knots = s.value("interior_knots", cfg.interior_knots);
    if (s.contains("lambda")) {
      if (s["lambda"].is_string()) {
        if (s["lambda"] != "gcv") throw UsageError("spline.lambda: number or \"gcv\"");
        cfg.lambda = -1.0;
      } else {
        cfg.lambda = s["lambda"].get<double>();
      }
    }
  }
  if (j.contains("net")) {
    const auto& n = j["net"];
    cfg.net_layers = n.value("layers", cfg.net_layers);
    cfg.net_hidden = n.value("hidden", cfg.net_hidden);
    cfg.net.learning_rate = n.value("learning_rate", cfg.net.learning_rate);
    cfg.net.early_stop_loss = n.value("early_stop_loss", cfg.net.early_stop_loss);
    cfg.net.max_epochs = n.value("max_epochs", cfg.net.max_epochs);
    cfg.net.split_fraction = n.value("split_fraction", cfg.net.split_fraction);
    cfg.net.seed = n.value("seed", cfg.net.seed);
  }
  cfg.out_dir = j.value("output_dir", cfg.out_dir);
  return cfg;
}

}  // namespace snapfit::pipeline
