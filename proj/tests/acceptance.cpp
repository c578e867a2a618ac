// Acceptance suite: one pass/fail line per criterion, nonzero exit on
// any failure. Criteria 1 and 9 exercise the CLI binary; the rest run
// the library in-process.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "snapfit/doe.hpp"
#include "snapfit/eval.hpp"
#include "snapfit/oracle.hpp"
#include "snapfit/pipeline.hpp"
#include "snapfit/pspline.hpp"
#include "snapfit/seqnet.hpp"

namespace fs = std::filesystem;
using namespace snapfit;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s — %s\n", ok ? "PASS" : "FAIL", criterion,
              name, detail.c_str());
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fmt(const char* format, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), format, a, b);
  return buf;
}

// ---- criterion 1: built-in design reproduction through the CLI ----
void criterion_table1() {
  const auto start = Clock::now();
  const fs::path dir = fs::temp_directory_path() / "snapfit_accept_doe";
  fs::remove_all(dir);
  const std::string cmd = std::string(SNAPFIT_CLI_PATH) + " doe --table1 --out-dir " +
                          dir.string() + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  const std::string csv = slurp(dir / "runs.csv");
  const double elapsed = seconds_since(start);

  bool ok = WEXITSTATUS(rc) == 0;
  ok = ok && std::count(csv.begin(), csv.end(), '\n') == 18;
  for (const char* row :
       {"V0,0,0,21,0.8,8.8,46.926,0\n", "V1,0,-0.1,20.84,0.75,8.85,48.926,0.2\n",
        "V8,1,0.1,21.16,0.85,8.85,48.926,0.2\n",
        "V16,0,-0.1,20.84,0.75,8.75,44.926,0\n"}) {
    ok = ok && csv.find(row) != std::string::npos;
  }
  ok = ok && elapsed < 1.0;
  report(1, "built-in design reproduction", ok,
         fmt("17 rows, V0/V1/V8/V16 byte checks, %.2fs", elapsed));
  fs::remove_all(dir);
}

// ---- criterion 2: spline exactness on a cubic ----
void criterion_spline_exact() {
  const auto start = Clock::now();
  oracle::ForceProfile y;
  y.run_id = "cubic";
  for (int i = 0; i < 500; ++i) {
    const double x = i / 499.0;
    y.displacement.push_back(x);
    y.force.push_back(x * x * x - 2.0 * x);
  }
  const auto model = pspline::fit(y, 20, 0.0);
  double max_err = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    max_err = std::max(max_err, std::abs(model.eval(y.displacement[i]) - y.force[i]));
  }
  const double elapsed = seconds_since(start);
  report(2, "spline exactness", max_err <= 1e-6 && elapsed < 1.0,
         fmt("max abs error %.3g (limit 1e-6), %.2fs", max_err, elapsed));
}

// ---- criterion 3: lambda -> infinity penalty limit ----
void criterion_penalty_limit() {
  const auto start = Clock::now();
  oracle::ForceProfile y;
  y.run_id = "wavy";
  for (int i = 0; i < 500; ++i) {
    const double x = i / 499.0;
    y.displacement.push_back(x);
    y.force.push_back(std::sin(7.0 * x) + 0.3 * x);
  }
  const auto model = pspline::fit(y, 30, 1e12);

  const std::size_t n = y.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += y.displacement[i];
    sy += y.force[i];
    sxx += y.displacement[i] * y.displacement[i];
    sxy += y.displacement[i] * y.force[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;

  double lo = y.force[0], hi = y.force[0];
  for (double f : y.force) {
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  double max_err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double line = intercept + slope * y.displacement[i];
    max_err = std::max(max_err, std::abs(model.eval(y.displacement[i]) - line));
  }
  const double rel = max_err / (hi - lo);
  const double elapsed = seconds_since(start);
  report(3, "penalty limit", rel <= 1e-3 && elapsed < 1.0,
         fmt("relative deviation from LS line %.3g (limit 1e-3), %.2fs", rel,
             elapsed));
}

// ---- criterion 4: piecewise export equivalence + C2 continuity ----
void criterion_piecewise() {
  oracle::OracleParams op;
  op.seed = 4;
  const auto y = oracle::snap_force(doe::table1_runs()[3], 500, op);
  const auto model = pspline::fit(y, 40, 0.5);
  const auto pw = pspline::to_piecewise(model);

  double scale = 0.0;
  for (double f : y.force) scale = std::max(scale, std::abs(f));

  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  double max_eval_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = dist(rng);
    max_eval_err = std::max(
        max_eval_err, std::abs(pspline::eval_piecewise(pw, x) - model.eval(x)));
  }

  double max_cont_err = 0.0;
  for (std::size_t i = 0; i + 1 < pw.coeffs.size(); ++i) {
    const double h = pw.breakpoints[i + 1] - pw.breakpoints[i];
    const auto& l = pw.coeffs[i];
    const auto& r = pw.coeffs[i + 1];
    const double v = ((l.a * h + l.b) * h + l.c) * h + l.d;
    const double d1 = (3.0 * l.a * h + 2.0 * l.b) * h + l.c;
    const double d2 = 6.0 * l.a * h + 2.0 * l.b;
    max_cont_err = std::max({max_cont_err, std::abs(v - r.d), std::abs(d1 - r.c),
                             std::abs(d2 - 2.0 * r.b)});
  }

  const bool ok = max_eval_err <= 1e-9 * scale && max_cont_err <= 1e-8 * scale;
  report(4, "piecewise export equivalence", ok,
         fmt("eval err %.3g (limit 1e-9*scale), continuity err %.3g",
             max_eval_err / scale, max_cont_err / scale));
}

// ---- criterion 5: gradient correctness on 10 seeded small models ----
void criterion_gradients() {
  const auto start = Clock::now();
  doe::CodedRun run;
  run.run_id = "G";
  run.z = {1, -1, 0, 1, 0, -1, 1};
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto model = seqnet::init(1, 8, seed, 500);
    auto target = seqnet::forward(model, run);
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (double& f : target.force) f += noise(rng);
    worst = std::max(worst,
                     seqnet::grad_check(model, run, target, 1e-5, 200, seed));
  }
  const double elapsed = seconds_since(start);
  report(5, "gradient correctness", worst <= 1e-4 && elapsed < 30.0,
         fmt("max relative error %.3g over 10 seeds (limit 1e-4), %.1fs", worst,
             elapsed));
}

// ---- criterion 6: training dynamics / capacity check ----
void criterion_training_dynamics() {
  const auto start = Clock::now();
  const auto runs = doe::table1_runs();
  const auto specs = doe::table1_factor_specs();
  oracle::OracleParams op;
  op.noise_sigma_rel = 0.0;
  std::vector<std::pair<doe::CodedRun, oracle::ForceProfile>> dataset;
  for (std::size_t i : {0u, 1u, 2u, 3u, 4u}) {
    dataset.emplace_back(doe::encode(runs[i], specs),
                         oracle::snap_force(runs[i], 500, op));
  }
  // split 0.8 on 5 samples -> 4 train / 1 test
  seqnet::TrainConfig cfg;
  cfg.learning_rate = 1e-4;
  cfg.max_epochs = 20000;
  cfg.early_stop_loss = 1e-6;
  cfg.seed = 6;
  const auto [model, rep] =
      seqnet::train(seqnet::init(1, 32, cfg.seed, 500), dataset, cfg);
  const double elapsed = seconds_since(start);
  const bool early_ok = rep.stopped_early == (rep.final_train_loss <= 1e-6);
  const bool ok = rep.train_ids.size() == 4 && rep.final_train_loss <= 1e-4 &&
                  early_ok && elapsed < 600.0;
  report(6, "training dynamics", ok,
         fmt("4 clean profiles, final normalized loss %.3g (limit 1e-4), %.0fs",
             rep.final_train_loss, elapsed));
}

// ---- criteria 7-9: full pipeline, determinism, figures ----
void criteria_pipeline() {
  pipeline::PipelineConfig cfg;
  cfg.seed = 42;
  cfg.net.seed = 42;
  cfg.noise_sigma_rel = 0.01;
  cfg.n_points = 500;
  const fs::path dir_a = fs::temp_directory_path() / "snapfit_accept_pipe_a";
  const fs::path dir_b = fs::temp_directory_path() / "snapfit_accept_pipe_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  const auto start = Clock::now();
  cfg.out_dir = dir_a.string();
  const auto res = pipeline::run_pipeline(cfg);
  const double elapsed = seconds_since(start);

  // 7a: split 13/4
  const bool split_ok =
      res.report.train_ids.size() == 13 && res.report.test_ids.size() == 4;
  // 7b: every surrogate's all-scope MAE within 10% of the mean peak force
  const double bound = 0.10 * res.mean_peak_force;
  double worst_mae = 0.0;
  for (const auto& row : res.metrics.rows) {
    if (row.scope == "all") worst_mae = std::max(worst_mae, row.mae);
  }
  // 7c: spline smoothing beats the noisy data against the clean truth
  oracle::OracleParams clean;
  clean.f0 = cfg.f0;
  clean.noise_sigma_rel = 0.0;
  clean.seed = cfg.seed;
  const auto clean_profiles =
      oracle::batch_simulate(res.runs, cfg.n_points, clean);
  double fit_mae = 0.0, data_mae = 0.0;
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const auto fitted = pspline::sample_spline(res.splines.models[i],
                                               cfg.n_points, res.runs[i].run_id);
    fit_mae += eval::mae(fitted, clean_profiles[i]);
    data_mae += eval::mae(res.profiles[i], clean_profiles[i]);
  }
  fit_mae /= static_cast<double>(res.runs.size());
  data_mae /= static_cast<double>(res.runs.size());

  const bool ok7 = split_ok && worst_mae <= bound && fit_mae < data_mae &&
                   elapsed < 900.0;
  report(7, "end-to-end pipeline", ok7,
         fmt("worst all-scope MAE %.3g vs bound %.3g", worst_mae, bound) + ", " +
             fmt("smoothing MAE %.3g < noisy MAE %.3g", fit_mae, data_mae) +
             (split_ok ? ", split 13/4" : ", BAD SPLIT") +
             fmt(", %.0fs", elapsed));

  // 8: determinism, bit-identical artifacts across reruns
  cfg.out_dir = dir_b.string();
  pipeline::run_pipeline(cfg);
  bool det_ok = true;
  std::vector<std::string> files = {"metrics.csv", "net_model.json",
                                    "response_model.json"};
  for (const auto& run : res.runs) {
    files.push_back("spline_model_" + run.run_id + ".json");
  }
  for (const auto& f : files) {
    if (slurp(dir_a / f) != slurp(dir_b / f)) {
      det_ok = false;
      std::printf("  determinism mismatch: %s\n", f.c_str());
    }
  }
  report(8, "determinism", det_ok,
         "metrics.csv and all model JSON files bit-identical across reruns");

  // 9: three figures, 17 polyline curves each
  bool fig_ok = true;
  std::string detail;
  for (const char* name : {"fig_simulation.svg", "fig_spline.svg", "fig_network.svg"}) {
    const std::string svg = slurp(dir_a / name);
    std::size_t count = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
      ++count;
      pos += 9;
    }
    fig_ok = fig_ok && count == 17;
    detail += std::string(name) + ":" + std::to_string(count) + " ";
  }
  report(9, "figure contract", fig_ok, detail + "(17 curves each expected)");

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

}  // namespace

int main() {
  criterion_table1();
  criterion_spline_exact();
  criterion_penalty_limit();
  criterion_piecewise();
  criterion_gradients();
  criterion_training_dynamics();
  criteria_pipeline();
  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "OK" : "FAILED",
              failures);
  return failures == 0 ? 0 : 1;
}
