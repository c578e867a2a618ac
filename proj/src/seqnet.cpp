#include "snapfit/seqnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace snapfit::seqnet {

namespace {

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x) {
  return 1.0 / (1.0 + (-x).exp());
}

// Visit every parameter block of up to four aligned NetParams.
template <class F>
void for_each_block(NetParams& a, F f) {
  for (CellParams& cell : a.layers) {
    for (int g = 0; g < kNumGates; ++g) {
      f(cell.w[g]);
      f(cell.u[g]);
      f(cell.b[g]);
    }
  }
  f(a.head_w);
  f(a.head_b);
}

template <class F>
void zip_blocks(NetParams& p, const NetParams& g, NetParams& m, NetParams& v,
                F f) {
  auto run = [&](auto& pb, const auto& gb, auto& mb, auto& vb) {
    f(pb, gb, mb, vb);
  };
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    for (int i = 0; i < kNumGates; ++i) {
      run(p.layers[l].w[i], g.layers[l].w[i], m.layers[l].w[i], v.layers[l].w[i]);
      run(p.layers[l].u[i], g.layers[l].u[i], m.layers[l].u[i], v.layers[l].u[i]);
      run(p.layers[l].b[i], g.layers[l].b[i], m.layers[l].b[i], v.layers[l].b[i]);
    }
  }
  run(p.head_w, g.head_w, m.head_w, v.head_w);
  run(p.head_b, g.head_b, m.head_b, v.head_b);
}

std::vector<double*> flatten(NetParams& p) {
  std::vector<double*> ptrs;
  for_each_block(p, [&](auto& block) {
    double* data = block.data();
    for (long i = 0; i < block.size(); ++i) ptrs.push_back(data + i);
  });
  return ptrs;
}

struct StepCache {
  Eigen::VectorXd x;
  Eigen::ArrayXd gate[kNumGates];  // post-activation i, f, g, o
  Eigen::ArrayXd c, tanh_c, h;
};

// Forwards the normalized input sequence, filling the per-step cache
// when one is supplied. Returns the normalized head output.
Eigen::VectorXd forward_normalized(
    const SeqNetModel& model, const std::vector<double>& inputs,
    std::vector<std::vector<StepCache>>* cache) {
  const long layers = model.layer_count();
  const long hidden = model.hidden;
  const long steps = static_cast<long>(inputs.size());

  std::vector<Eigen::ArrayXd> h(layers, Eigen::ArrayXd::Zero(hidden));
  std::vector<Eigen::ArrayXd> c(layers, Eigen::ArrayXd::Zero(hidden));
  if (cache) {
    cache->assign(steps, std::vector<StepCache>(layers));
  }

  for (long t = 0; t < steps; ++t) {
    Eigen::VectorXd x(1);
    x(0) = inputs[t];
    for (long l = 0; l < layers; ++l) {
      const CellParams& cell = model.params.layers[l];
      const Eigen::VectorXd hv = h[l].matrix();
      Eigen::ArrayXd pre[kNumGates];
      for (int g = 0; g < kNumGates; ++g) {
        pre[g] = (cell.w[g] * x + cell.u[g] * hv + cell.b[g]).array();
      }
      const Eigen::ArrayXd gi = sigmoid(pre[kInput]);
      const Eigen::ArrayXd gf = sigmoid(pre[kForget]);
      const Eigen::ArrayXd gg = pre[kCandidate].tanh();
      const Eigen::ArrayXd go = sigmoid(pre[kOutput]);
      const Eigen::ArrayXd c_new = gf * c[l] + gi * gg;
      const Eigen::ArrayXd tanh_c = c_new.tanh();
      const Eigen::ArrayXd h_new = go * tanh_c;
      if (cache) {
        StepCache& sc = (*cache)[t][l];
        sc.x = x;
        sc.gate[kInput] = gi;
        sc.gate[kForget] = gf;
        sc.gate[kCandidate] = gg;
        sc.gate[kOutput] = go;
        sc.c = c_new;
        sc.tanh_c = tanh_c;
        sc.h = h_new;
      }
      c[l] = c_new;
      h[l] = h_new;
      x = h_new.matrix();
    }
  }
  return model.params.head_w * h[layers - 1].matrix() + model.params.head_b;
}

std::vector<double> normalized_inputs(const SeqNetModel& model,
                                      const doe::CodedRun& run) {
  if (run.z.size() != model.input_norm.size()) {
    throw NumericError("seqnet: run has wrong number of coded levels");
  }
  std::vector<double> inputs(run.z.size());
  for (std::size_t j = 0; j < run.z.size(); ++j) {
    inputs[j] = (run.z[j] - model.input_norm[j].mean) / model.input_norm[j].scale;
  }
  return inputs;
}

Eigen::VectorXd normalize_target(const SeqNetModel& model,
                                 const oracle::ForceProfile& target) {
  Eigen::VectorXd t(static_cast<long>(target.force.size()));
  for (long i = 0; i < t.size(); ++i) {
    t(i) = (target.force[i] - model.output_norm.mean) / model.output_norm.scale;
  }
  return t;
}

}  // namespace

CellParams CellParams::zeros(long hidden, long in_dim) {
  CellParams cell;
  for (int g = 0; g < kNumGates; ++g) {
    cell.w[g] = Eigen::MatrixXd::Zero(hidden, in_dim);
    cell.u[g] = Eigen::MatrixXd::Zero(hidden, hidden);
    cell.b[g] = Eigen::VectorXd::Zero(hidden);
  }
  return cell;
}

NetParams NetParams::zeros_like(const NetParams& other) {
  NetParams out;
  for (const CellParams& cell : other.layers) {
    out.layers.push_back(
        CellParams::zeros(cell.u[0].rows(), cell.w[0].cols()));
  }
  out.head_w = Eigen::MatrixXd::Zero(other.head_w.rows(), other.head_w.cols());
  out.head_b = Eigen::VectorXd::Zero(other.head_b.size());
  return out;
}

AdamState AdamState::zeros_like(const NetParams& params) {
  AdamState state;
  state.m = NetParams::zeros_like(params);
  state.v = NetParams::zeros_like(params);
  return state;
}

SeqNetModel init(long layer_count, long hidden, std::uint64_t seed,
                 long head_out) {
  if (layer_count < 1 || hidden < 1) {
    throw NumericError("init: layer_count and hidden must be >= 1");
  }
  std::mt19937_64 rng(seed);
  auto fill_uniform = [&rng](auto& block, long fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    double* data = block.data();
    for (long i = 0; i < block.size(); ++i) data[i] = dist(rng);
  };

  SeqNetModel model;
  model.hidden = hidden;
  model.head_out = head_out;
  for (long l = 0; l < layer_count; ++l) {
    const long in_dim = l == 0 ? 1 : hidden;
    CellParams cell = CellParams::zeros(hidden, in_dim);
    for (int g = 0; g < kNumGates; ++g) {
      fill_uniform(cell.w[g], in_dim);
      fill_uniform(cell.u[g], hidden);
    }
    cell.b[kForget].setOnes();
    model.params.layers.push_back(std::move(cell));
  }
  model.params.head_w = Eigen::MatrixXd::Zero(head_out, hidden);
  fill_uniform(model.params.head_w, hidden);
  model.params.head_b = Eigen::VectorXd::Zero(head_out);
  model.input_norm.assign(doe::kNumFactors, Norm{});
  return model;
}

oracle::ForceProfile forward(const SeqNetModel& model,
                             const doe::CodedRun& run) {
  const Eigen::VectorXd y_norm =
      forward_normalized(model, normalized_inputs(model, run), nullptr);
  oracle::ForceProfile p;
  p.run_id = run.run_id;
  const long n = y_norm.size();
  p.displacement.resize(n);
  p.force.resize(n);
  for (long i = 0; i < n; ++i) {
    p.displacement[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    p.force[i] = y_norm(i) * model.output_norm.scale + model.output_norm.mean;
  }
  return p;
}

double loss(const SeqNetModel& model, const oracle::ForceProfile& pred,
            const oracle::ForceProfile& target) {
  if (pred.size() != target.size()) {
    throw LengthMismatch("loss: profiles differ in length");
  }
  const Eigen::VectorXd p = normalize_target(model, pred);
  const Eigen::VectorXd t = normalize_target(model, target);
  return (p - t).squaredNorm() / static_cast<double>(p.size());
}

double backward(const SeqNetModel& model, const doe::CodedRun& run,
                const oracle::ForceProfile& target, NetParams& grads) {
  if (static_cast<long>(target.force.size()) != model.head_out) {
    throw LengthMismatch("backward: target length != head output dimension");
  }
  const std::vector<double> inputs = normalized_inputs(model, run);
  std::vector<std::vector<StepCache>> cache;
  const Eigen::VectorXd y_norm = forward_normalized(model, inputs, &cache);
  const Eigen::VectorXd t_norm = normalize_target(model, target);

  const long n = y_norm.size();
  const long layers = model.layer_count();
  const long hidden = model.hidden;
  const long steps = static_cast<long>(inputs.size());
  const double loss_value = (y_norm - t_norm).squaredNorm() / n;

  // dL/dy in normalized space.
  const Eigen::VectorXd dy = 2.0 / n * (y_norm - t_norm);
  grads.head_w += dy * cache[steps - 1][layers - 1].h.matrix().transpose();
  grads.head_b += dy;

  std::vector<Eigen::ArrayXd> dh_next(layers, Eigen::ArrayXd::Zero(hidden));
  std::vector<Eigen::ArrayXd> dc_next(layers, Eigen::ArrayXd::Zero(hidden));
  dh_next[layers - 1] = (model.params.head_w.transpose() * dy).array();

  for (long t = steps - 1; t >= 0; --t) {
    Eigen::VectorXd dx_above;  // gradient w.r.t. the layer below's h
    for (long l = layers - 1; l >= 0; --l) {
      const StepCache& sc = cache[t][l];
      const CellParams& cell = model.params.layers[l];
      const Eigen::ArrayXd c_prev =
          t > 0 ? cache[t - 1][l].c : Eigen::ArrayXd::Zero(hidden);
      const Eigen::ArrayXd h_prev =
          t > 0 ? cache[t - 1][l].h : Eigen::ArrayXd::Zero(hidden);

      Eigen::ArrayXd dh = dh_next[l];
      if (l < layers - 1) dh += dx_above.array();

      const Eigen::ArrayXd go = sc.gate[kOutput];
      const Eigen::ArrayXd dc =
          dh * go * (1.0 - sc.tanh_c.square()) + dc_next[l];

      Eigen::ArrayXd dpre[kNumGates];
      {
        const Eigen::ArrayXd gi = sc.gate[kInput];
        const Eigen::ArrayXd gf = sc.gate[kForget];
        const Eigen::ArrayXd gg = sc.gate[kCandidate];
        dpre[kInput] = dc * gg * gi * (1.0 - gi);
        dpre[kForget] = dc * c_prev * gf * (1.0 - gf);
        dpre[kCandidate] = dc * gi * (1.0 - gg.square());
        dpre[kOutput] = dh * sc.tanh_c * go * (1.0 - go);
        dc_next[l] = dc * gf;
      }

      Eigen::VectorXd dx = Eigen::VectorXd::Zero(sc.x.size());
      Eigen::ArrayXd dh_prev = Eigen::ArrayXd::Zero(hidden);
      CellParams& gcell = grads.layers[l];
      for (int g = 0; g < kNumGates; ++g) {
        const Eigen::VectorXd da = dpre[g].matrix();
        gcell.w[g] += da * sc.x.transpose();
        gcell.u[g] += da * h_prev.matrix().transpose();
        gcell.b[g] += da;
        dx += cell.w[g].transpose() * da;
        dh_prev += (cell.u[g].transpose() * da).array();
      }
      dh_next[l] = dh_prev;
      dx_above = dx;
    }
    // dx_above of layer 0 is the gradient w.r.t. the scalar input; unused.
  }
  return loss_value;
}

double grad_check(const SeqNetModel& model, const doe::CodedRun& run,
                  const oracle::ForceProfile& target, double eps,
                  std::size_t min_params, std::uint64_t seed) {
  if (!(eps > 0.0)) throw NumericError("grad_check: eps must be > 0");

  SeqNetModel probe = model;
  NetParams grads = NetParams::zeros_like(model.params);
  backward(probe, run, target, grads);

  std::vector<double*> params = flatten(probe.params);
  std::vector<double*> analytic = flatten(grads);
  std::vector<std::size_t> order(params.size());
  std::iota(order.begin(), order.end(), 0);
  if (params.size() > min_params) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(min_params);
  }

  double max_rel = 0.0;
  for (std::size_t idx : order) {
    double* p = params[idx];
    const double saved = *p;
    *p = saved + eps;
    const double lp = loss(probe, forward(probe, run), target);
    *p = saved - eps;
    const double lm = loss(probe, forward(probe, run), target);
    *p = saved;
    const double numeric = (lp - lm) / (2.0 * eps);
    const double a = *analytic[idx];
    const double rel = std::abs(a - numeric) /
                       std::max(1e-8, std::abs(a) + std::abs(numeric));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

void adam_step(NetParams& params, const NetParams& grads, AdamState& state,
               const TrainConfig& cfg) {
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  zip_blocks(params, grads, state.m, state.v,
             [&](auto& p, const auto& g, auto& m, auto& v) {
               m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
               v.array() = cfg.beta2 * v.array() + (1.0 - cfg.beta2) * g.array().square();
               const auto m_hat = m.array() / bc1;
               const auto v_hat = v.array() / bc2;
               p.array() -= cfg.learning_rate * m_hat /
                            (v_hat.sqrt() + cfg.epsilon);
             });
}

std::pair<SeqNetModel, TrainReport> train(
    SeqNetModel model,
    const std::vector<std::pair<doe::CodedRun, oracle::ForceProfile>>& dataset,
    const TrainConfig& cfg) {
  if (dataset.size() < 2) {
    throw DatasetTooSmall("train: need at least 2 samples");
  }
  if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0)) {
    throw NumericError("train: split_fraction must lie in (0, 1)");
  }

  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_train = static_cast<std::size_t>(
      std::floor(cfg.split_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());

  // Output normalization pools every point of the training profiles.
  double sum = 0.0, sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i : train_idx) {
    for (double f : dataset[i].second.force) {
      sum += f;
      sum_sq += f * f;
      ++count;
    }
  }
  const double mean = sum / count;
  const double var = std::max(0.0, sum_sq / count - mean * mean);
  model.output_norm.mean = mean;
  model.output_norm.scale = var > 0.0 ? std::sqrt(var) : 1.0;

  TrainReport report;
  for (std::size_t i : train_idx) report.train_ids.push_back(dataset[i].first.run_id);
  for (std::size_t i : test_idx) report.test_ids.push_back(dataset[i].first.run_id);

  AdamState state = AdamState::zeros_like(model.params);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    NetParams grads = NetParams::zeros_like(model.params);
    double epoch_loss = 0.0;
    for (std::size_t i : train_idx) {
      epoch_loss += backward(model, dataset[i].first, dataset[i].second, grads);
    }
    epoch_loss /= static_cast<double>(n_train);
    const double inv = 1.0 / static_cast<double>(n_train);
    for_each_block(grads, [inv](auto& block) { block *= inv; });

    report.loss_history.push_back(epoch_loss);
    report.epochs_run = epoch;
    report.final_train_loss = epoch_loss;
    if (epoch_loss <= cfg.early_stop_loss) {
      report.stopped_early = true;
      break;
    }
    adam_step(model.params, grads, state, cfg);
  }

  double mae_sum = 0.0;
  for (std::size_t i : test_idx) {
    const oracle::ForceProfile pred = forward(model, dataset[i].first);
    const oracle::ForceProfile& truth = dataset[i].second;
    double acc = 0.0;
    for (std::size_t k = 0; k < truth.force.size(); ++k) {
      acc += std::abs(pred.force[k] - truth.force[k]);
    }
    mae_sum += acc / static_cast<double>(truth.force.size());
  }
  report.test_mae = mae_sum / static_cast<double>(test_idx.size());

  return {std::move(model), std::move(report)};
}

}  // namespace snapfit::seqnet
