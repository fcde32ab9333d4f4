#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "tsbn/model.hpp"
#include "tsbn/numeric.hpp"
#include "tsbn/param_set.hpp"
#include "tsbn/sequence.hpp"

namespace tsbn {

inline constexpr int kBaselineHidden = 100;

/// Data-dependent baseline C(v_t) = w_out . tanh(A v_t + a) + b_out.
/// Blocks: A (H x M), a (H), w_out (H), b_out (1).
class BaselineParams : public ParamSet {
 public:
  BaselineParams() = default;
  explicit BaselineParams(ParamSet p) : ParamSet(std::move(p)) {}
};

BaselineParams baseline_layout(int visible_dim, int hidden = kBaselineHidden);
/// Weights N(0, 0.001^2), biases zero.
BaselineParams init_baseline(int visible_dim, RngStream& rng, int hidden = kBaselineHidden);

double baseline_forward(const BaselineParams& lambda, const Eigen::VectorXd& v_t);
/// C for every column of v.
Eigen::VectorXd baseline_forward_all(const BaselineParams& lambda, const Eigen::MatrixXd& v);
/// grad += sum_t weights[t] * dC(v_t)/dlambda.
void accumulate_baseline_grad(const BaselineParams& lambda, const Eigen::MatrixXd& v, const Eigen::VectorXd& weights,
                              ParamSet& grad);

/// Mean-square and momentum buffers for one parameter set.
struct RmsBuffers {
  ParamSet ms;
  ParamSet step;

  static RmsBuffers like(const ParamSet& p) { return {p.zeros_like(), p.zeros_like()}; }
  bool operator==(const RmsBuffers&) const = default;
};

struct TrainerState {
  double c = 0.0;
  double v = 1.0;
  double alpha = 0.8;
  double learning_rate = 1e-4;
  double ms_decay = 0.95;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double eps = 1e-8;
  std::int64_t iteration = 0;
  std::int64_t max_iterations = 100000;
  BaselineParams lambda;
  RmsBuffers theta_opt;
  RmsBuffers phi_opt;
  RmsBuffers lambda_opt;

  bool operator==(const TrainerState&) const = default;
};

/// Default hyperparameters, a freshly initialized baseline, zero buffers.
TrainerState make_trainer_state(const Model& m, RngStream& rng);

/// How the per-step learning signal is formed before centering.
enum class SignalMode {
  kPerStep,        // l_t - C(v_t)
  kWholeSequence,  // sum_t (l_t - C(v_t)), shared by every step
  kSuffix,         // sum_{tau >= t} l_tau - C(v_t)
};

std::string_view to_string(SignalMode m);
SignalMode parse_signal_mode(std::string_view s);

struct SignalStats {
  double c = 0.0;
  double v = 1.0;
};

/// c <- alpha c + (1 - alpha) mean; v <- alpha v + (1 - alpha) var.
SignalStats update_signal_stats(const SignalStats& running, double alpha, double mean, double var);

/// max(1, sqrt(v)).
double signal_divisor(double v);

struct NvilOptions {
  bool baseline = true;
  bool centering = true;
  bool normalization = true;
  SignalMode signal = SignalMode::kPerStep;
};

struct NvilStep {
  GenerativeParams d_theta;
  RecognitionParams d_phi;
  BaselineParams d_lambda;
  /// Sum of the raw lower-bound terms over the batch.
  double elbo = 0.0;
  Eigen::Index frames = 0;
  /// Running statistics after this batch.
  double c = 0.0;
  double v = 1.0;
};

/// One estimator draw over a batch of sequences: one posterior sample per
/// sequence, from `rng.substream(i)` for the i-th sequence. The returned
/// directions are ascent directions summed over the batch. `state` is not
/// modified. Throws kNonFiniteSignal when any learning signal is not finite.
NvilStep nvil_step(const Model& m, const TrainerState& state, const std::vector<const Sequence*>& batch,
                   const RngStream& rng, const NvilOptions& options = {}, int threads = 1);
NvilStep nvil_step(const Model& m, const TrainerState& state, const Sequence& v, const RngStream& rng,
                   const NvilOptions& options = {});

struct RmsConfig {
  double learning_rate = 1e-4;
  double ms_decay = 0.95;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double eps = 1e-8;
};

RmsConfig rms_config(const TrainerState& state);

/// ms <- d ms + (1-d) g^2; step <- mu step + lr g / sqrt(ms + eps);
/// p <- p + step - lr wd p (weight blocks only). Frozen blocks are untouched.
void rmsprop_update(ParamSet& params, const ParamSet& grads, RmsBuffers& buffers, const RmsConfig& config);

/// Applies one NVIL draw to the model and trainer state.
void apply_step(Model& m, TrainerState& state, const NvilStep& step);

struct TrainConfig {
  std::int64_t iterations = 100000;
  int batch_size = 1;
  int threads = 1;
  std::uint64_t seed = 0;
  NvilOptions nvil;
  std::int64_t checkpoint_every = 0;
};

struct MetricsRecord {
  std::int64_t iter = 0;
  double elbo_per_frame = 0.0;
  double c = 0.0;
  double v = 1.0;
  double seconds = 0.0;
};

using MetricsCallback = std::function<void(const MetricsRecord&)>;
using CheckpointCallback = std::function<void(const Model&, const TrainerState&)>;

/// Runs NVIL + RMSprop from `state.iteration` until `config.iterations`
/// (capped by state.max_iterations). Sequences are visited in per-epoch
/// shuffled order derived from the seed, so a resumed run sees the same
/// batches. Results are identical for every thread count.
void train(Model& m, TrainerState& state, const SequenceBatch& data, const TrainConfig& config,
           const MetricsCallback& on_metrics = {}, const CheckpointCallback& on_checkpoint = {});

/// Runs fn(0..n-1) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace tsbn
