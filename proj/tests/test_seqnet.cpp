#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "snapfit/doe.hpp"
#include "snapfit/oracle.hpp"
#include "snapfit/seqnet.hpp"

using namespace snapfit;
using oracle::ForceProfile;
using seqnet::NetParams;
using seqnet::SeqNetModel;
using seqnet::TrainConfig;

namespace {

doe::CodedRun coded_run(const std::string& id, std::vector<int> z) {
  doe::CodedRun r;
  r.run_id = id;
  r.z = std::move(z);
  return r;
}

doe::CodedRun some_run() { return coded_run("R", {1, -1, 0, 1, -1, 0, 1}); }

ForceProfile profile_of(const std::string& id, std::vector<double> force) {
  ForceProfile p;
  p.run_id = id;
  const std::size_t n = force.size();
  p.force = std::move(force);
  p.displacement.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.displacement[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return p;
}

bool params_equal(const NetParams& a, const NetParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    for (int g = 0; g < seqnet::kNumGates; ++g) {
      if (a.layers[l].w[g] != b.layers[l].w[g]) return false;
      if (a.layers[l].u[g] != b.layers[l].u[g]) return false;
      if (a.layers[l].b[g] != b.layers[l].b[g]) return false;
    }
  }
  return a.head_w == b.head_w && a.head_b == b.head_b;
}

}  // namespace

TEST_CASE("init is deterministic and shapes stack correctly") {
  const SeqNetModel a = seqnet::init(2, 250, 77);
  const SeqNetModel b = seqnet::init(2, 250, 77);
  CHECK(params_equal(a.params, b.params));

  CHECK(a.params.layers[0].w[0].cols() == 1);
  CHECK(a.params.layers[1].w[0].cols() == 250);
  CHECK(a.params.head_w.rows() == 500);
  CHECK(a.params.head_w.cols() == 250);

  for (const auto& cell : a.params.layers) {
    for (long i = 0; i < cell.b[seqnet::kForget].size(); ++i) {
      CHECK(cell.b[seqnet::kForget](i) == 1.0);
    }
    for (long i = 0; i < cell.b[seqnet::kInput].size(); ++i) {
      CHECK(cell.b[seqnet::kInput](i) == 0.0);
    }
  }

  const SeqNetModel c = seqnet::init(2, 250, 78);
  CHECK_FALSE(params_equal(a.params, c.params));
}

TEST_CASE("weights respect the fan-in bound") {
  const SeqNetModel m = seqnet::init(1, 16, 3);
  const double u_bound = 1.0 / std::sqrt(16.0);
  for (int g = 0; g < seqnet::kNumGates; ++g) {
    CHECK(m.params.layers[0].w[g].cwiseAbs().maxCoeff() <= 1.0);  // fan_in 1
    CHECK(m.params.layers[0].u[g].cwiseAbs().maxCoeff() <= u_bound);
  }
}

TEST_CASE("forward emits 500 points and is pure") {
  const SeqNetModel m = seqnet::init(2, 32, 5);
  const auto run = some_run();
  const ForceProfile p1 = seqnet::forward(m, run);
  const ForceProfile p2 = seqnet::forward(m, run);
  CHECK(p1.size() == 500);
  CHECK(p1.force == p2.force);
  CHECK(p1.run_id == "R");
}

TEST_CASE("all-zero parameters produce the denormalized zero vector") {
  SeqNetModel m = seqnet::init(1, 8, 0, 20);
  for (auto& cell : m.params.layers) {
    for (int g = 0; g < seqnet::kNumGates; ++g) {
      cell.w[g].setZero();
      cell.u[g].setZero();
      cell.b[g].setZero();
    }
  }
  m.params.head_w.setZero();
  m.params.head_b.setZero();
  m.output_norm = {4.5, 2.0};
  const ForceProfile p = seqnet::forward(m, some_run());
  for (double f : p.force) CHECK(f == 4.5);  // 0 * scale + mean
}

TEST_CASE("loss follows the normalized MSE definition") {
  SeqNetModel m = seqnet::init(1, 4, 1, 500);
  m.output_norm = {0.0, 2.0};

  ForceProfile target = profile_of("R", std::vector<double>(500, 1.0));
  CHECK(seqnet::loss(m, target, target) == 0.0);

  ForceProfile shifted = target;
  for (double& f : shifted.force) f += 2.0;  // +1 in normalized units
  CHECK(seqnet::loss(m, shifted, target) == doctest::Approx(1.0).epsilon(1e-12));

  ForceProfile one_off = target;
  one_off.force[123] += 2.0 * 2.0;  // +2 normalized at one point
  CHECK(seqnet::loss(m, one_off, target) ==
        doctest::Approx(4.0 / 500.0).epsilon(1e-12));

  ForceProfile wrong = profile_of("R", std::vector<double>(499, 1.0));
  CHECK_THROWS_AS(seqnet::loss(m, wrong, target), LengthMismatch);
}

TEST_CASE("backward: zero loss gives zero gradients") {
  const SeqNetModel m = seqnet::init(2, 12, 9, 40);
  const auto run = some_run();
  const ForceProfile target = seqnet::forward(m, run);
  NetParams grads = NetParams::zeros_like(m.params);
  const double l = seqnet::backward(m, run, target, grads);
  CHECK(l == 0.0);
  double max_grad = 0.0;
  for (const auto& cell : grads.layers) {
    for (int g = 0; g < seqnet::kNumGates; ++g) {
      max_grad = std::max(max_grad, cell.w[g].cwiseAbs().maxCoeff());
      max_grad = std::max(max_grad, cell.u[g].cwiseAbs().maxCoeff());
      max_grad = std::max(max_grad, cell.b[g].cwiseAbs().maxCoeff());
    }
  }
  max_grad = std::max(max_grad, grads.head_w.cwiseAbs().maxCoeff());
  max_grad = std::max(max_grad, grads.head_b.cwiseAbs().maxCoeff());
  CHECK(max_grad == 0.0);
}

TEST_CASE("backward: head bias gradient is 2/n times the residual") {
  const SeqNetModel m = seqnet::init(1, 8, 21, 30);
  const auto run = some_run();
  ForceProfile target = seqnet::forward(m, run);
  for (std::size_t i = 0; i < target.size(); ++i) {
    target.force[i] += 0.1 * static_cast<double>(i);
  }
  NetParams grads = NetParams::zeros_like(m.params);
  seqnet::backward(m, run, target, grads);

  const ForceProfile pred = seqnet::forward(m, run);
  const double n = 30.0;
  for (long i = 0; i < grads.head_b.size(); ++i) {
    const double resid_norm =
        (pred.force[i] - target.force[i]) / m.output_norm.scale;
    CHECK(grads.head_b(i) ==
          doctest::Approx(2.0 / n * resid_norm).epsilon(1e-10));
  }
}

TEST_CASE("gradient check passes on small random models") {
  const auto run = some_run();
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const SeqNetModel m = seqnet::init(1, 8, seed, 25);
    ForceProfile target = seqnet::forward(m, run);
    for (std::size_t i = 0; i < target.size(); ++i) {
      target.force[i] += std::sin(0.37 * static_cast<double>(i + seed));
    }
    const double err = seqnet::grad_check(m, run, target, 1e-5, 200, seed);
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("gradient check is near-exact for the affine head path") {
  SeqNetModel m = seqnet::init(1, 8, 4, 25);
  for (auto& cell : m.params.layers) {
    for (int g = 0; g < seqnet::kNumGates; ++g) {
      cell.w[g].setZero();
      cell.u[g].setZero();
    }
    cell.b[seqnet::kInput].setZero();
    cell.b[seqnet::kCandidate].setZero();
    cell.b[seqnet::kOutput].setZero();
  }
  const auto run = some_run();
  ForceProfile target = profile_of("R", std::vector<double>(25, 0.5));
  const double err = seqnet::grad_check(m, run, target, 1e-5, 500, 0);
  CHECK(err <= 1e-7);
}

TEST_CASE("grad_check rejects non-positive eps") {
  const SeqNetModel m = seqnet::init(1, 4, 0, 10);
  const ForceProfile target = seqnet::forward(m, some_run());
  CHECK_THROWS(seqnet::grad_check(m, some_run(), target, 0.0));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  SeqNetModel m = seqnet::init(1, 6, 2, 10);
  const NetParams before = m.params;
  NetParams grads = NetParams::zeros_like(m.params);
  seqnet::AdamState state = seqnet::AdamState::zeros_like(m.params);
  seqnet::adam_step(m.params, grads, state, TrainConfig{});
  CHECK(params_equal(m.params, before));
}

TEST_CASE("adam: first-step magnitude matches the bias-corrected formula") {
  SeqNetModel m = seqnet::init(1, 6, 2, 10);
  const NetParams before = m.params;
  NetParams grads = NetParams::zeros_like(m.params);
  grads.head_b.setConstant(0.3);
  grads.head_w.setConstant(-1.7);
  seqnet::AdamState state = seqnet::AdamState::zeros_like(m.params);
  TrainConfig cfg;
  seqnet::adam_step(m.params, grads, state, cfg);

  // t = 1: m_hat = g, v_hat = g^2, step = lr * g / (|g| + eps).
  auto check_block = [&](const Eigen::VectorXd& now, const Eigen::VectorXd& was,
                         double g) {
    for (long i = 0; i < now.size(); ++i) {
      const double step = std::abs(now(i) - was(i));
      CHECK(step <= cfg.learning_rate * (1.0 + 1e-6));
      CHECK(step >= cfg.learning_rate * std::abs(g) /
                        (std::abs(g) + cfg.epsilon) * (1.0 - 1e-6));
    }
  };
  check_block(m.params.head_b, before.head_b, 0.3);
  // Sign: parameters move against the gradient.
  CHECK(m.params.head_b(0) < before.head_b(0));
  CHECK(m.params.head_w(0, 0) > before.head_w(0, 0));
}

TEST_CASE("adam is deterministic") {
  SeqNetModel m1 = seqnet::init(1, 6, 2, 10);
  SeqNetModel m2 = seqnet::init(1, 6, 2, 10);
  NetParams grads = NetParams::zeros_like(m1.params);
  grads.head_b.setLinSpaced(10, -1.0, 1.0);
  seqnet::AdamState s1 = seqnet::AdamState::zeros_like(m1.params);
  seqnet::AdamState s2 = seqnet::AdamState::zeros_like(m2.params);
  seqnet::adam_step(m1.params, grads, s1, TrainConfig{});
  seqnet::adam_step(m2.params, grads, s2, TrainConfig{});
  CHECK(params_equal(m1.params, m2.params));
}

TEST_CASE("train splits 17 samples as 13/4 and is deterministic") {
  const auto runs = doe::table1_runs();
  const auto specs = doe::table1_factor_specs();
  oracle::OracleParams op;
  op.seed = 4;
  const auto profiles = oracle::batch_simulate(runs, 60, op);

  std::vector<std::pair<doe::CodedRun, ForceProfile>> dataset;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    dataset.emplace_back(doe::encode(runs[i], specs), profiles[i]);
  }

  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.seed = 11;
  auto model_a = seqnet::init(1, 8, cfg.seed, 60);
  const auto [trained_a, report_a] = seqnet::train(model_a, dataset, cfg);
  CHECK(report_a.train_ids.size() == 13);
  CHECK(report_a.test_ids.size() == 4);
  CHECK(report_a.epochs_run == 5);
  CHECK(report_a.loss_history.size() == 5);

  auto model_b = seqnet::init(1, 8, cfg.seed, 60);
  const auto [trained_b, report_b] = seqnet::train(model_b, dataset, cfg);
  CHECK(params_equal(trained_a.params, trained_b.params));
  CHECK(report_a.loss_history == report_b.loss_history);
  CHECK(report_a.test_mae == report_b.test_mae);
  CHECK(report_a.train_ids == report_b.train_ids);
}

TEST_CASE("train stops at epoch 1 when the loss starts below threshold") {
  // Zero parameters predict the constant output mean; constant targets
  // then give exactly zero loss at initialization.
  SeqNetModel m = seqnet::init(1, 8, 0, 30);
  for (auto& cell : m.params.layers) {
    for (int g = 0; g < seqnet::kNumGates; ++g) {
      cell.w[g].setZero();
      cell.u[g].setZero();
      cell.b[g].setZero();
    }
  }
  m.params.head_w.setZero();
  m.params.head_b.setZero();

  std::vector<std::pair<doe::CodedRun, ForceProfile>> dataset;
  for (int i = 0; i < 4; ++i) {
    dataset.emplace_back(coded_run("R" + std::to_string(i), {i % 2, -1, 0, 1, 0, 0, 1}),
                         profile_of("R" + std::to_string(i), std::vector<double>(30, 2.5)));
  }
  TrainConfig cfg;
  cfg.max_epochs = 100;
  const auto [trained, report] = seqnet::train(m, dataset, cfg);
  CHECK(report.stopped_early);
  CHECK(report.epochs_run == 1);
  CHECK(report.final_train_loss <= cfg.early_stop_loss);
}

TEST_CASE("train rejects a dataset of one sample") {
  std::vector<std::pair<doe::CodedRun, ForceProfile>> dataset;
  dataset.emplace_back(some_run(), profile_of("R", std::vector<double>(10, 1.0)));
  CHECK_THROWS_AS(seqnet::train(seqnet::init(1, 4, 0, 10), dataset, TrainConfig{}),
                  DatasetTooSmall);
}

TEST_CASE("a small model can drive training loss down") {
  // Scaled-down version of the capacity check: two clean profiles,
  // hidden 16, loss should fall by orders of magnitude.
  const auto runs = doe::table1_runs();
  const auto specs = doe::table1_factor_specs();
  oracle::OracleParams op;
  op.noise_sigma_rel = 0.0;
  std::vector<std::pair<doe::CodedRun, ForceProfile>> dataset;
  for (std::size_t i : {1u, 2u, 3u}) {
    dataset.emplace_back(doe::encode(runs[i], specs),
                         oracle::snap_force(runs[i], 100, op));
  }
  TrainConfig cfg;
  cfg.max_epochs = 1500;
  cfg.learning_rate = 3e-3;
  cfg.split_fraction = 0.67;
  cfg.seed = 1;
  const auto [trained, report] =
      seqnet::train(seqnet::init(1, 16, 1, 100), dataset, cfg);
  CHECK(report.final_train_loss < 1e-3 * report.loss_history.front());
}
