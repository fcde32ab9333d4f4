#include "tsbn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

#include "tsbn/error.hpp"

namespace tsbn {

namespace {

constexpr std::uint64_t kTrainStream = 0x6e76696c;   // per-iteration posterior draws
constexpr std::uint64_t kShuffleStream = 0x73687566;  // per-epoch visiting order

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::int64_t epoch, std::size_t n) {
  RngStream rng = RngStream(seed, kShuffleStream).substream(static_cast<std::uint64_t>(epoch));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

Eigen::VectorXd suffix_sums(const Eigen::VectorXd& x) {
  Eigen::VectorXd out(x.size());
  double acc = 0.0;
  for (Eigen::Index t = x.size() - 1; t >= 0; --t) {
    acc += x[t];
    out[t] = acc;
  }
  return out;
}

}  // namespace

BaselineParams baseline_layout(int visible_dim, int hidden) {
  if (visible_dim < 1 || hidden < 1) throw Error(ErrorCode::kInvalidArgument, "baseline dimensions must be positive");
  ParamSet p;
  p.add("A", hidden, visible_dim, BlockRole::kWeight);
  p.add("a", hidden, 1, BlockRole::kBias);
  p.add("w_out", hidden, 1, BlockRole::kWeight);
  p.add("b_out", 1, 1, BlockRole::kBias);
  return BaselineParams(std::move(p));
}

BaselineParams init_baseline(int visible_dim, RngStream& rng, int hidden) {
  BaselineParams p = baseline_layout(visible_dim, hidden);
  for (auto& blk : p.blocks()) {
    if (blk.role != BlockRole::kWeight) continue;
    for (Eigen::Index i = 0; i < blk.value.size(); ++i) blk.value.data()[i] = 0.001 * rng.normal();
  }
  return p;
}

double baseline_forward(const BaselineParams& lambda, const Eigen::VectorXd& v_t) {
  const auto& A = lambda.at("A");
  if (v_t.size() != A.cols()) throw Error(ErrorCode::kShapeMismatch, "baseline input length differs from M");
  const Eigen::VectorXd z = (A * v_t + lambda.at("a").col(0)).array().tanh().matrix();
  return lambda.at("w_out").col(0).dot(z) + lambda.at("b_out")(0, 0);
}

Eigen::VectorXd baseline_forward_all(const BaselineParams& lambda, const Eigen::MatrixXd& v) {
  const auto& A = lambda.at("A");
  if (v.rows() != A.cols()) throw Error(ErrorCode::kShapeMismatch, "baseline input length differs from M");
  Eigen::MatrixXd z = A * v;
  z.colwise() += lambda.at("a").col(0);
  z = z.array().tanh().matrix();
  Eigen::VectorXd out = z.transpose() * lambda.at("w_out").col(0);
  out.array() += lambda.at("b_out")(0, 0);
  return out;
}

void accumulate_baseline_grad(const BaselineParams& lambda, const Eigen::MatrixXd& v, const Eigen::VectorXd& weights,
                              ParamSet& grad) {
  const auto& A = lambda.at("A");
  if (v.rows() != A.cols() || weights.size() != v.cols())
    throw Error(ErrorCode::kShapeMismatch, "baseline gradient inputs have inconsistent shapes");
  Eigen::MatrixXd z = A * v;
  z.colwise() += lambda.at("a").col(0);
  z = z.array().tanh().matrix();
  const Eigen::VectorXd& w = lambda.at("w_out").col(0);
  Eigen::MatrixXd g = (1.0 - z.array().square()).matrix();
  g = w.asDiagonal() * g * weights.asDiagonal();
  grad.at("A").noalias() += g * v.transpose();
  grad.at("a") += g.rowwise().sum();
  grad.at("w_out").noalias() += z * weights;
  grad.at("b_out")(0, 0) += weights.sum();
}

TrainerState make_trainer_state(const Model& m, RngStream& rng) {
  TrainerState s;
  s.lambda = init_baseline(m.spec.visible_dim, rng);
  s.theta_opt = RmsBuffers::like(m.theta);
  s.phi_opt = RmsBuffers::like(m.phi);
  s.lambda_opt = RmsBuffers::like(s.lambda);
  return s;
}

std::string_view to_string(SignalMode m) {
  switch (m) {
    case SignalMode::kPerStep: return "per-step";
    case SignalMode::kWholeSequence: return "whole";
    case SignalMode::kSuffix: return "suffix";
  }
  return "?";
}

SignalMode parse_signal_mode(std::string_view s) {
  if (s == "per-step") return SignalMode::kPerStep;
  if (s == "whole") return SignalMode::kWholeSequence;
  if (s == "suffix") return SignalMode::kSuffix;
  throw Error(ErrorCode::kInvalidArgument, "unknown signal mode '" + std::string(s) + "'");
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto run = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

SignalStats update_signal_stats(const SignalStats& running, double alpha, double mean, double var) {
  return {alpha * running.c + (1.0 - alpha) * mean, alpha * running.v + (1.0 - alpha) * var};
}

double signal_divisor(double v) { return std::max(1.0, std::sqrt(v)); }

NvilStep nvil_step(const Model& m, const TrainerState& state, const std::vector<const Sequence*>& batch,
                   const RngStream& rng, const NvilOptions& options, int threads) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "nvil_step needs at least one sequence");
  struct Slot {
    LatentStates states;
    Eigen::VectorXd signal;
    Eigen::VectorXd weights;
    double elbo = 0.0;
  };
  std::vector<Slot> slots(batch.size());

  parallel_for(batch.size(), threads, [&](std::size_t i) {
    const Sequence& v = *batch[i];
    RngStream r = rng.substream(i);
    Slot& slot = slots[i];
    slot.states = sample_posterior(m, v, r);
    const Eigen::VectorXd l = step_terms(m, v, slot.states).elbo();
    slot.elbo = l.sum();
    const Eigen::VectorXd base =
        options.baseline ? baseline_forward_all(state.lambda, v) : Eigen::VectorXd::Zero(v.cols());
    switch (options.signal) {
      case SignalMode::kPerStep:
        slot.signal = l - base;
        break;
      case SignalMode::kWholeSequence:
        slot.signal = Eigen::VectorXd::Constant(1, l.sum() - base.sum());
        break;
      case SignalMode::kSuffix:
        slot.signal = suffix_sums(l) - base;
        break;
    }
  });

  std::size_t count = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i].signal.allFinite()) {
      throw Error(ErrorCode::kNonFiniteSignal, "learning signal is not finite (iteration " +
                                                   std::to_string(state.iteration) + ", batch slot " +
                                                   std::to_string(i) + ")");
    }
    sum += slots[i].signal.sum();
    count += static_cast<std::size_t>(slots[i].signal.size());
  }
  const double mean = sum / static_cast<double>(count);
  double sq = 0.0;
  for (const auto& slot : slots) sq += (slot.signal.array() - mean).square().sum();
  const double var = sq / static_cast<double>(count);

  NvilStep out;
  const SignalStats stats = update_signal_stats({state.c, state.v}, state.alpha, mean, var);
  out.c = stats.c;
  out.v = stats.v;
  const double shift = options.centering ? out.c : 0.0;
  const double scale = options.normalization ? signal_divisor(out.v) : 1.0;

  std::vector<ModelGradients> grads(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    const Sequence& v = *batch[i];
    Slot& slot = slots[i];
    const Eigen::VectorXd normalized = (slot.signal.array() - shift) / scale;
    slot.weights = options.signal == SignalMode::kWholeSequence
                       ? Eigen::VectorXd::Constant(v.cols(), normalized[0])
                       : Eigen::VectorXd(normalized);
    grads[i] = gradients(m, v, slot.states, slot.weights);
  });

  out.d_theta = GenerativeParams(m.theta.zeros_like());
  out.d_phi = RecognitionParams(m.phi.zeros_like());
  out.d_lambda = BaselineParams(state.lambda.zeros_like());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.d_theta.axpy(1.0, grads[i].theta);
    out.d_phi.axpy(1.0, grads[i].phi);
    if (options.baseline) accumulate_baseline_grad(state.lambda, *batch[i], slots[i].weights, out.d_lambda);
    out.elbo += slots[i].elbo;
    out.frames += batch[i]->cols();
  }
  return out;
}

NvilStep nvil_step(const Model& m, const TrainerState& state, const Sequence& v, const RngStream& rng,
                   const NvilOptions& options) {
  return nvil_step(m, state, std::vector<const Sequence*>{&v}, rng, options, 1);
}

RmsConfig rms_config(const TrainerState& state) {
  return {state.learning_rate, state.ms_decay, state.momentum, state.weight_decay, state.eps};
}

void rmsprop_update(ParamSet& params, const ParamSet& grads, RmsBuffers& buffers, const RmsConfig& config) {
  if (!params.same_layout(grads) || !params.same_layout(buffers.ms) || !params.same_layout(buffers.step))
    throw Error(ErrorCode::kShapeMismatch, "rmsprop_update: parameter, gradient and buffer layouts differ");
  auto& blocks = params.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& blk = blocks[b];
    if (!blk.trainable) continue;
    const auto& g = grads.blocks()[b].value.array();
    auto ms = buffers.ms.blocks()[b].value.array();
    auto step = buffers.step.blocks()[b].value.array();
    ms = config.ms_decay * ms + (1.0 - config.ms_decay) * g.square();
    step = config.momentum * step + config.learning_rate * g / (ms + config.eps).sqrt();
    const Eigen::ArrayXXd decay =
        blk.role == BlockRole::kWeight ? Eigen::ArrayXXd(config.learning_rate * config.weight_decay * blk.value.array())
                                       : Eigen::ArrayXXd::Zero(blk.value.rows(), blk.value.cols());
    blk.value.array() += step - decay;
  }
}

void apply_step(Model& m, TrainerState& state, const NvilStep& step) {
  const RmsConfig cfg = rms_config(state);
  rmsprop_update(m.theta, step.d_theta, state.theta_opt, cfg);
  rmsprop_update(m.phi, step.d_phi, state.phi_opt, cfg);
  rmsprop_update(state.lambda, step.d_lambda, state.lambda_opt, cfg);
  state.c = step.c;
  state.v = step.v;
  ++state.iteration;
}

void train(Model& m, TrainerState& state, const SequenceBatch& data, const TrainConfig& config,
           const MetricsCallback& on_metrics, const CheckpointCallback& on_checkpoint) {
  if (data.dtype != data_type_for(m.spec.likelihood))
    throw Error(ErrorCode::kLikelihoodMismatch, "dataset dtype " + std::string(to_string(data.dtype)) +
                                                    " does not match likelihood " +
                                                    std::string(to_string(m.spec.likelihood)));
  if (data.dim != m.spec.visible_dim) throw Error(ErrorCode::kShapeMismatch, "dataset frame dimension differs from M");
  if (data.size() == 0) throw Error(ErrorCode::kInvalidArgument, "training set is empty");
  if (config.batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");

  const std::size_t n = data.size();
  const auto bs = static_cast<std::int64_t>(config.batch_size);
  const RngStream base(config.seed, kTrainStream);
  std::map<std::int64_t, std::vector<std::size_t>> orders;
  const std::int64_t end = std::min(config.iterations, state.max_iterations);
  const auto start = std::chrono::steady_clock::now();

  std::vector<const Sequence*> batch(static_cast<std::size_t>(bs));
  while (state.iteration < end) {
    const std::int64_t it = state.iteration;
    for (std::int64_t k = 0; k < bs; ++k) {
      const std::int64_t g = it * bs + k;
      const std::int64_t epoch = g / static_cast<std::int64_t>(n);
      auto found = orders.find(epoch);
      if (found == orders.end()) {
        orders.clear();
        found = orders.emplace(epoch, epoch_order(config.seed, epoch, n)).first;
      }
      batch[static_cast<std::size_t>(k)] = &data.sequences[found->second[static_cast<std::size_t>(g % static_cast<std::int64_t>(n))]];
    }
    const NvilStep step = nvil_step(m, state, batch, base.substream(static_cast<std::uint64_t>(it)), config.nvil,
                                    config.threads);
    apply_step(m, state, step);
    if (on_metrics) {
      MetricsRecord rec;
      rec.iter = it;
      rec.elbo_per_frame = step.elbo / static_cast<double>(step.frames);
      rec.c = state.c;
      rec.v = state.v;
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      on_metrics(rec);
    }
    if (on_checkpoint && config.checkpoint_every > 0 && state.iteration % config.checkpoint_every == 0)
      on_checkpoint(m, state);
  }
}

}  // namespace tsbn
