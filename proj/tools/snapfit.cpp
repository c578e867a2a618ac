#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snapfit/doe.hpp"
#include "snapfit/errors.hpp"
#include "snapfit/eval.hpp"
#include "snapfit/oracle.hpp"
#include "snapfit/pipeline.hpp"
#include "snapfit/plot.hpp"
#include "snapfit/pspline.hpp"
#include "snapfit/seqnet.hpp"
#include "snapfit/serialize.hpp"

namespace fs = std::filesystem;
using namespace snapfit;

namespace {

struct CommonOpts {
  std::string out_dir = "out";
  std::uint64_t seed = 42;
};

std::string out_path(const CommonOpts& opts, const std::string& name) {
  fs::create_directories(opts.out_dir);
  return (fs::path(opts.out_dir) / name).string();
}

std::vector<doe::FactorSpec> factors_from_json_file(const std::string& path) {
  serialize::json j;
  try {
    j = serialize::json::parse(serialize::read_file(path));
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(std::string("factor spec parse error: ") + e.what());
  }
  std::vector<doe::FactorSpec> specs;
  for (const auto& f : j.at("factors")) {
    doe::FactorSpec s;
    s.name = f.at("name").get<std::string>();
    s.low = f.at("low").get<double>();
    s.center = f.value("center", 0.5 * (s.low + f.at("high").get<double>()));
    s.high = f.at("high").get<double>();
    s.validate();
    specs.push_back(std::move(s));
  }
  return specs;
}

int cmd_doe(const CommonOpts& opts, bool table1, const std::string& factors,
            std::size_t n_runs) {
  if (table1 == !factors.empty()) {
    throw UsageError("doe: pass exactly one of --table1 or --factors");
  }
  if (table1) {
    const auto runs = doe::table1_runs();
    serialize::write_file(out_path(opts, "runs.csv"), doe::runs_to_csv(runs));
    std::printf("doe: wrote %zu runs to %s\n", runs.size(),
                out_path(opts, "runs.csv").c_str());
    return 0;
  }
  const auto specs = factors_from_json_file(factors);
  std::vector<doe::CodedRun> design;
  try {
    design = doe::fractional_factorial(specs, n_runs, opts.seed);
  } catch (const InvalidRunCount& e) {
    throw UsageError(e.what());
  }
  std::vector<doe::RunConfig> runs;
  for (const auto& coded : design) {
    doe::RunConfig run;
    run.run_id = coded.run_id;
    // Generic designs are written in coded units via the level map.
    if (specs.size() == doe::kNumFactors) {
      run = doe::decode(coded, specs);
    } else {
      throw UsageError("doe: generic designs require exactly 7 factors for runs.csv");
    }
    runs.push_back(std::move(run));
  }
  serialize::write_file(out_path(opts, "runs.csv"), doe::runs_to_csv(runs));
  std::printf("doe: wrote %zu-run design to %s\n", runs.size(),
              out_path(opts, "runs.csv").c_str());
  return 0;
}

int cmd_simulate(const CommonOpts& opts, const std::string& runs_path,
                 std::size_t n_points, double noise, double f0) {
  const auto runs = doe::runs_from_csv(serialize::read_file(runs_path));
  oracle::OracleParams op;
  op.f0 = f0;
  op.noise_sigma_rel = noise;
  op.seed = opts.seed;
  const auto profiles = oracle::batch_simulate(runs, n_points, op);
  serialize::write_file(out_path(opts, "profiles.csv"),
                        oracle::profiles_to_csv(profiles));
  std::printf("simulate: %zu profiles x %zu points -> %s\n", profiles.size(),
              n_points, out_path(opts, "profiles.csv").c_str());
  return 0;
}

int cmd_fit_spline(const CommonOpts& opts, const std::string& profiles_path,
                   const std::string& runs_path, std::size_t knots,
                   const std::string& lambda_arg) {
  const auto profiles =
      oracle::profiles_from_csv(serialize::read_file(profiles_path));
  double lambda = -1.0;
  if (lambda_arg != "gcv") {
    try {
      lambda = std::stod(lambda_arg);
    } catch (const std::exception&) {
      throw UsageError("fit-spline: --lambda expects a number or 'gcv'");
    }
    if (lambda < 0) throw UsageError("fit-spline: lambda must be >= 0");
  }
  const auto fits = pipeline::fit_all_splines(profiles, knots, lambda,
                                              pipeline::PipelineConfig{}.lambda_grid);

  std::vector<oracle::ForceProfile> curves;
  for (std::size_t i = 0; i < fits.models.size(); ++i) {
    const auto& id = profiles[i].run_id;
    serialize::write_file(out_path(opts, "spline_model_" + id + ".json"),
                          serialize::spline_model_to_json(fits.models[i]).dump(2) + "\n");
    serialize::write_file(
        out_path(opts, "piecewise_" + id + ".json"),
        serialize::piecewise_to_json(pspline::to_piecewise(fits.models[i])).dump(2) + "\n");
    curves.push_back(
        pspline::sample_spline(fits.models[i], profiles[i].size(), id));
  }
  serialize::write_file(out_path(opts, "spline_fit.csv"),
                        oracle::profiles_to_csv(curves));

  if (!runs_path.empty()) {
    const auto runs = doe::runs_from_csv(serialize::read_file(runs_path));
    const auto specs = doe::table1_factor_specs();
    std::vector<doe::CodedRun> coded;
    for (const auto& run : runs) coded.push_back(doe::encode(run, specs));
    const auto crm = pspline::fit_response(coded, fits.models);
    serialize::write_file(out_path(opts, "response_model.json"),
                          serialize::response_model_to_json(crm).dump(2) + "\n");
  }

  double total_mae = 0.0;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    total_mae += eval::mae(curves[i], profiles[i]);
  }
  std::printf("fit-spline: lambda %.6g, mean reconstruction MAE %.6g over %zu runs\n",
              fits.lambda, total_mae / curves.size(), curves.size());
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& profiles_path,
              const std::string& runs_path, seqnet::TrainConfig cfg,
              long layers, long hidden) {
  const auto profiles =
      oracle::profiles_from_csv(serialize::read_file(profiles_path));
  const auto runs = doe::runs_from_csv(serialize::read_file(runs_path));
  const auto specs = doe::table1_factor_specs();

  std::vector<std::pair<doe::CodedRun, oracle::ForceProfile>> dataset;
  for (const auto& p : profiles) {
    auto it = std::find_if(runs.begin(), runs.end(),
                           [&](const auto& r) { return r.run_id == p.run_id; });
    if (it == runs.end()) {
      throw RunIdMismatch("train: profile " + p.run_id + " has no run row");
    }
    dataset.emplace_back(doe::encode(*it, specs), p);
  }

  auto model = seqnet::init(layers, hidden, cfg.seed,
                            static_cast<long>(profiles.front().size()));
  auto [trained, report] = seqnet::train(std::move(model), dataset, cfg);

  serialize::write_file(out_path(opts, "net_model.json"),
                        serialize::net_model_to_json(trained).dump() + "\n");
  serialize::write_file(out_path(opts, "train_report.json"),
                        serialize::train_report_to_json(report).dump(2) + "\n");

  std::vector<oracle::ForceProfile> preds;
  for (const auto& [coded, _] : dataset) preds.push_back(seqnet::forward(trained, coded));
  serialize::write_file(out_path(opts, "net_pred.csv"),
                        oracle::profiles_to_csv(preds));

  std::printf("train: %zu/%zu split, %zu epochs, final loss %.6g, test MAE %.6g\n",
              report.train_ids.size(), report.test_ids.size(),
              report.epochs_run, report.final_train_loss, report.test_mae);
  return 0;
}

int cmd_evaluate(const CommonOpts& opts) {
  const auto profiles = oracle::profiles_from_csv(
      serialize::read_file(out_path(opts, "profiles.csv")));
  const auto runs =
      doe::runs_from_csv(serialize::read_file(out_path(opts, "runs.csv")));
  const auto specs = doe::table1_factor_specs();
  std::vector<doe::CodedRun> coded;
  for (const auto& run : runs) coded.push_back(doe::encode(run, specs));

  std::vector<pspline::SplineModel> models;
  for (const auto& p : profiles) {
    models.push_back(serialize::spline_model_from_json(serialize::json::parse(
        serialize::read_file(out_path(opts, "spline_model_" + p.run_id + ".json")))));
  }
  const auto net = serialize::net_model_from_json(serialize::json::parse(
      serialize::read_file(out_path(opts, "net_model.json"))));
  const auto report_json = serialize::json::parse(
      serialize::read_file(out_path(opts, "train_report.json")));
  seqnet::TrainReport report;
  report.train_ids = report_json.at("train_ids").get<std::vector<std::string>>();
  report.test_ids = report_json.at("test_ids").get<std::vector<std::string>>();

  const auto metrics =
      pipeline::score_surrogates(profiles, coded, models, net, report);
  serialize::write_file(out_path(opts, "metrics.csv"),
                        eval::metrics_to_csv(metrics));
  serialize::write_file(out_path(opts, "metrics.json"),
                        serialize::metrics_to_json(metrics).dump(2) + "\n");

  for (const auto& row : metrics.rows) {
    if (row.scope == "all") {
      std::printf("evaluate: %s all-scope MAE %.6g (MSE %.6g, %zu profiles)\n",
                  row.method.c_str(), row.mae, row.mse, row.n_profiles);
    }
  }
  return 0;
}

int cmd_plot(const CommonOpts& opts, const std::vector<std::string>& inputs) {
  for (const auto& input : inputs) {
    const auto profiles = oracle::profiles_from_csv(serialize::read_file(input));
    if (profiles.empty() || profiles.front().force.empty()) {
      throw UsageError("plot: no curves in " + input);
    }
    const auto stem = fs::path(input).stem().string();
    const auto out = out_path(opts, "fig_" + stem + ".svg");
    serialize::write_file(out, plot::profiles_to_svg(profiles, stem));
    std::printf("plot: %zu curves -> %s\n", profiles.size(), out.c_str());
  }
  return 0;
}

int cmd_pipeline(pipeline::PipelineConfig cfg) {
  const auto res = pipeline::run_pipeline(cfg);
  for (const auto& row : res.metrics.rows) {
    if (row.scope == "all") {
      std::printf("pipeline: %s all-scope MAE %.6g\n", row.method.c_str(),
                  row.mae);
    }
  }
  std::printf("pipeline: artifacts in %s (mean peak force %.4g)\n",
              cfg.out_dir.c_str(), res.mean_peak_force);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Snap-fit surrogate toolkit: DoE, synthetic simulation, "
               "P-spline and LSTM surrogates, comparison metrics"};
  app.require_subcommand(1);
  app.fallthrough(true);

  CommonOpts opts;
  app.add_option("--out-dir", opts.out_dir, "Artifact directory")
      ->capture_default_str();
  app.add_option("--seed", opts.seed, "Master random seed")
      ->capture_default_str();
  std::string config_path;
  app.add_option("--config", config_path, "Pipeline config JSON");

  // doe
  auto* doe_cmd = app.add_subcommand("doe", "Write the experiment design");
  bool table1 = false;
  std::string factors_path;
  std::size_t n_runs = 16;
  doe_cmd->add_flag("--table1", table1, "Emit the built-in 17-run table");
  doe_cmd->add_option("--factors", factors_path, "Factor spec JSON");
  doe_cmd->add_option("--runs", n_runs, "Design size (power of two)");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Run the synthetic simulator");
  std::string runs_path;
  std::size_t n_points = 500;
  double noise = 0.01, f0 = 10.0;
  sim_cmd->add_option("--runs", runs_path, "runs.csv path");
  sim_cmd->add_option("--n-points", n_points, "Samples per profile")
      ->capture_default_str();
  sim_cmd->add_option("--noise", noise, "Relative noise sigma")
      ->capture_default_str();
  sim_cmd->add_option("--f0", f0, "Base force scale")->capture_default_str();

  // fit-spline
  auto* fit_cmd = app.add_subcommand("fit-spline", "Fit penalized splines");
  std::string profiles_path, fit_runs_path;
  std::size_t knots = 40;
  std::string lambda_arg = "gcv";
  fit_cmd->add_option("--profiles", profiles_path, "profiles.csv path");
  fit_cmd->add_option("--runs", fit_runs_path,
                      "runs.csv (enables the response model)");
  fit_cmd->add_option("--knots", knots, "Interior knot count")
      ->capture_default_str();
  fit_cmd->add_option("--lambda", lambda_arg, "Penalty weight or 'gcv'")
      ->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the LSTM identifier");
  std::string train_profiles, train_runs;
  seqnet::TrainConfig tcfg;
  long layers = 2, hidden = 250;
  train_cmd->add_option("--profiles", train_profiles, "profiles.csv path");
  train_cmd->add_option("--runs", train_runs, "runs.csv path");
  train_cmd->add_option("--epochs", tcfg.max_epochs, "Max epochs")
      ->capture_default_str();
  train_cmd->add_option("--lr", tcfg.learning_rate, "Learning rate")
      ->capture_default_str();
  train_cmd->add_option("--layers", layers, "LSTM layer count")
      ->capture_default_str();
  train_cmd->add_option("--hidden", hidden, "Hidden units per layer")
      ->capture_default_str();

  // evaluate
  auto* eval_cmd =
      app.add_subcommand("evaluate", "Score surrogates against the simulation");

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "Render profile CSVs as SVG");
  std::vector<std::string> plot_inputs;
  plot_cmd->add_option("inputs", plot_inputs, "Profile CSV files")
      ->expected(-1);

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage end to end");
  pipeline::PipelineConfig pcfg;
  pipe_cmd->add_option("--epochs", pcfg.net.max_epochs, "Max training epochs")
      ->capture_default_str();
  pipe_cmd->add_option("--noise", pcfg.noise_sigma_rel, "Relative noise sigma")
      ->capture_default_str();
  std::string pipe_lambda = "gcv";
  pipe_cmd->add_option("--lambda", pipe_lambda, "Penalty weight or 'gcv'")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*doe_cmd) return cmd_doe(opts, table1, factors_path, n_runs);
    if (*sim_cmd) {
      if (runs_path.empty()) runs_path = out_path(opts, "runs.csv");
      return cmd_simulate(opts, runs_path, n_points, noise, f0);
    }
    if (*fit_cmd) {
      if (profiles_path.empty()) profiles_path = out_path(opts, "profiles.csv");
      return cmd_fit_spline(opts, profiles_path, fit_runs_path, knots, lambda_arg);
    }
    if (*train_cmd) {
      if (train_profiles.empty()) train_profiles = out_path(opts, "profiles.csv");
      if (train_runs.empty()) train_runs = out_path(opts, "runs.csv");
      tcfg.seed = opts.seed;
      return cmd_train(opts, train_profiles, train_runs, tcfg, layers, hidden);
    }
    if (*eval_cmd) return cmd_evaluate(opts);
    if (*plot_cmd) {
      if (plot_inputs.empty()) throw UsageError("plot: no input files");
      return cmd_plot(opts, plot_inputs);
    }
    if (*pipe_cmd) {
      // Precedence: flags > config file > built-in defaults.
      pipeline::PipelineConfig base;
      base.seed = opts.seed;
      base.net.seed = opts.seed;
      if (!config_path.empty()) base = pipeline::config_from_json_file(config_path);
      if (app.count("--seed")) {
        base.seed = opts.seed;
        base.net.seed = opts.seed;
      }
      if (pipe_cmd->count("--epochs")) base.net.max_epochs = pcfg.net.max_epochs;
      if (pipe_cmd->count("--noise")) base.noise_sigma_rel = pcfg.noise_sigma_rel;
      if (app.count("--out-dir") || config_path.empty()) base.out_dir = opts.out_dir;
      if (pipe_lambda != "gcv") base.lambda = std::stod(pipe_lambda);
      return cmd_pipeline(base);
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
