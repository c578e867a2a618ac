#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "snapfit/doe.hpp"
#include "snapfit/errors.hpp"
#include "snapfit/oracle.hpp"

namespace snapfit::seqnet {

enum Gate : int { kInput = 0, kForget = 1, kCandidate = 2, kOutput = 3 };
inline constexpr int kNumGates = 4;

// One LSTM cell: per gate an input weight, a recurrent weight and a bias.
struct CellParams {
  Eigen::MatrixXd w[kNumGates];  // hidden x in_dim
  Eigen::MatrixXd u[kNumGates];  // hidden x hidden
  Eigen::VectorXd b[kNumGates];  // hidden

  static CellParams zeros(long hidden, long in_dim);
};

// The trainable parameter set; gradients and Adam moments share this shape.
struct NetParams {
  std::vector<CellParams> layers;
  Eigen::MatrixXd head_w;  // head_out x hidden
  Eigen::VectorXd head_b;  // head_out

  static NetParams zeros_like(const NetParams& other);
};

struct Norm {
  double mean = 0.0;
  double scale = 1.0;
};

struct SeqNetModel {
  NetParams params;
  long hidden = 250;
  long head_out = 500;
  std::vector<Norm> input_norm;  // 7 entries
  Norm output_norm;

  long layer_count() const { return static_cast<long>(params.layers.size()); }
};

struct TrainConfig {
  double learning_rate = 1e-4;
  double early_stop_loss = 1e-6;
  std::size_t max_epochs = 2000;
  double split_fraction = 0.8;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainReport {
  std::size_t epochs_run = 0;
  double final_train_loss = 0.0;
  double test_mae = 0.0;
  bool stopped_early = false;
  std::vector<double> loss_history;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

struct AdamState {
  NetParams m;
  NetParams v;
  long step = 0;

  static AdamState zeros_like(const NetParams& params);
};

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]; forget biases 1.
SeqNetModel init(long layer_count, long hidden, std::uint64_t seed,
                 long head_out = 500);

// The 7 coded factors enter as a length-7 scalar sequence; the final
// top-layer hidden state feeds the dense head.
oracle::ForceProfile forward(const SeqNetModel& model, const doe::CodedRun& run);

// Mean squared difference in normalized output space.
double loss(const SeqNetModel& model, const oracle::ForceProfile& pred,
            const oracle::ForceProfile& target);

// Exact reverse-mode gradients of loss() w.r.t. every parameter; also
// returns the loss value of the forward pass.
double backward(const SeqNetModel& model, const doe::CodedRun& run,
                const oracle::ForceProfile& target, NetParams& grads);

// Max relative error between backward() and central finite differences
// over a seeded subsample of at least min_params parameters.
double grad_check(const SeqNetModel& model, const doe::CodedRun& run,
                  const oracle::ForceProfile& target, double eps = 1e-5,
                  std::size_t min_params = 200, std::uint64_t seed = 0);

// Bias-corrected Adam update, in place.
void adam_step(NetParams& params, const NetParams& grads, AdamState& state,
               const TrainConfig& cfg);

std::pair<SeqNetModel, TrainReport> train(
    SeqNetModel model,
    const std::vector<std::pair<doe::CodedRun, oracle::ForceProfile>>& dataset,
    const TrainConfig& cfg);

}  // namespace snapfit::seqnet
