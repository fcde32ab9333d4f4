#include "tsbn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsbn/error.hpp"
#include "tsbn/trainer.hpp"

namespace tsbn {

namespace {

constexpr std::uint64_t kPredictStream = 0x70726564;
constexpr std::uint64_t kElboStream = 0x656c626f;

void require_samples(int samples) {
  if (samples < 1) throw Error(ErrorCode::kInvalidArgument, "the number of samples S must be >= 1");
}

}  // namespace

Eigen::MatrixXd predict_one_step(const Model& m, const Sequence& v, int samples, const RngStream& rng,
                                 PredictMode mode) {
  require_samples(samples);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(v.rows(), std::max<Eigen::Index>(v.cols() - 1, 0));
  for (int s = 0; s < samples; ++s) {
    RngStream r = rng.substream(static_cast<std::uint64_t>(s));
    const LatentStates history = sample_posterior(m, v, r);
    acc += predict_from_history(m, v, history, mode, r);
  }
  return acc / samples;
}

double pred_error(const Eigen::MatrixXd& predicted, const Sequence& v) {
  if (v.cols() < 2) throw Error(ErrorCode::kShapeMismatch, "prediction error needs at least two frames");
  if (predicted.rows() != v.rows() || predicted.cols() != v.cols() - 1)
    throw Error(ErrorCode::kShapeMismatch, "predictions must cover frames 1..T-1");
  return (predicted - v.rightCols(v.cols() - 1)).squaredNorm() / static_cast<double>(predicted.cols());
}

double repeat_last_frame_error(const Sequence& v) {
  if (v.cols() < 2) throw Error(ErrorCode::kShapeMismatch, "prediction error needs at least two frames");
  return pred_error(v.leftCols(v.cols() - 1), v);
}

PredictionReport summarize(std::vector<double> per_sequence, int samples) {
  PredictionReport r;
  r.samples = samples;
  r.per_sequence = std::move(per_sequence);
  const auto n = static_cast<double>(r.per_sequence.size());
  if (r.per_sequence.empty()) return r;
  r.mean = std::accumulate(r.per_sequence.begin(), r.per_sequence.end(), 0.0) / n;
  if (r.per_sequence.size() > 1) {
    double sq = 0.0;
    for (double e : r.per_sequence) sq += (e - r.mean) * (e - r.mean);
    r.stddev = std::sqrt(sq / (n - 1.0));
  }
  return r;
}

PredictionReport evaluate_prediction(const Model& m, const SequenceBatch& data, int samples, std::uint64_t seed,
                                     PredictMode mode, int threads) {
  require_samples(samples);
  const RngStream base(seed, kPredictStream);
  std::vector<double> errors(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const Sequence& v = data.sequences[i];
    errors[i] = pred_error(predict_one_step(m, v, samples, base.substream(i), mode), v);
  });
  return summarize(std::move(errors), samples);
}

ElboEstimate estimate_elbo(const Model& m, const Sequence& v, int samples, const RngStream& rng) {
  require_samples(samples);
  std::vector<double> draws(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    RngStream r = rng.substream(static_cast<std::uint64_t>(s));
    const LatentStates states = sample_posterior(m, v, r);
    draws[static_cast<std::size_t>(s)] = step_terms(m, v, states).elbo().sum();
  }
  ElboEstimate e;
  e.samples = samples;
  e.mean = std::accumulate(draws.begin(), draws.end(), 0.0) / samples;
  if (samples > 1) {
    double sq = 0.0;
    for (double d : draws) sq += (d - e.mean) * (d - e.mean);
    e.std_error = std::sqrt(sq / (samples - 1.0) / samples);
  }
  e.per_frame = e.mean / static_cast<double>(v.cols());
  return e;
}

ElboReport evaluate_elbo(const Model& m, const SequenceBatch& data, int samples, std::uint64_t seed, int threads) {
  const RngStream base(seed, kElboStream);
  ElboReport r;
  r.per_sequence.resize(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    r.per_sequence[i] = estimate_elbo(m, data.sequences[i], samples, base.substream(i));
  });
  for (const auto& e : r.per_sequence) r.total += e.mean;
  const auto frames = data.total_frames();
  r.per_frame = frames > 0 ? r.total / static_cast<double>(frames) : 0.0;
  return r;
}

std::vector<Eigen::Index> top_indices(const Eigen::VectorXd& x, int k) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return x[a] > x[b]; });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

double precision_at_top_m(const Eigen::VectorXd& scores, const Eigen::VectorXd& truth, int top_m) {
  if (scores.size() != truth.size()) throw Error(ErrorCode::kShapeMismatch, "scores and counts differ in length");
  if (top_m < 1 || top_m > scores.size())
    throw Error(ErrorCode::kInvalidArgument, "top-M must lie in [1, " + std::to_string(scores.size()) + "]");
  std::vector<Eigen::Index> a = top_indices(scores, top_m);
  std::vector<Eigen::Index> b = top_indices(truth, top_m);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<Eigen::Index> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return static_cast<double>(both.size()) / top_m;
}

PrecisionReport evaluate_precision(const Model& m, const Sequence& train, const Sequence& heldout, int samples,
                                   const RngStream& rng, int top_m) {
  require_samples(samples);
  if (m.spec.likelihood != Likelihood::kCount)
    throw Error(ErrorCode::kLikelihoodMismatch, "precision scoring needs a count model");
  const Eigen::Index T = train.cols();
  if (heldout.rows() != train.rows() || heldout.cols() != T + 1)
    throw Error(ErrorCode::kShapeMismatch, "held-out data must cover the training frames plus one final frame");

  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(train.rows(), T);
  for (int s = 0; s < samples; ++s) {
    RngStream r = rng.substream(static_cast<std::uint64_t>(s));
    scores += visible_expectations(m, train, sample_posterior(m, train, r));
  }
  // The final frame's prediction never reads the frame itself, so a zero
  // placeholder extends the history.
  Sequence extended = Sequence::Zero(train.rows(), T + 1);
  extended.leftCols(T) = train;
  const Eigen::MatrixXd predicted = predict_one_step(m, extended, samples, rng.substream(0xf1a1));

  PrecisionReport rep;
  rep.top_m = top_m;
  for (Eigen::Index t = 0; t < T; ++t) rep.per_frame.push_back(precision_at_top_m(scores.col(t), heldout.col(t), top_m));
  if (!rep.per_frame.empty())
    rep.mean_precision = std::accumulate(rep.per_frame.begin(), rep.per_frame.end(), 0.0) /
                         static_cast<double>(rep.per_frame.size());
  rep.predictive_precision = precision_at_top_m(predicted.col(T - 1), heldout.col(T), top_m);
  return rep;
}

}  // namespace tsbn
