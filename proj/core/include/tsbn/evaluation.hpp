#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tsbn/model.hpp"
#include "tsbn/numeric.hpp"
#include "tsbn/sequence.hpp"

namespace tsbn {

/// Averages, over S posterior draws of the history (draw s uses
/// rng.substream(s)), the one-step-ahead predictions of frames 1..T-1.
/// Returns dim x (T-1). Throws kInvalidArgument when S < 1.
Eigen::MatrixXd predict_one_step(const Model& m, const Sequence& v, int samples, const RngStream& rng,
                                 PredictMode mode = PredictMode::kMean);

/// Mean over frames 1..T-1 of the summed squared error; `predicted` holds
/// those frames in order.
double pred_error(const Eigen::MatrixXd& predicted, const Sequence& v);

/// Error of predicting every frame by the frame before it.
double repeat_last_frame_error(const Sequence& v);

struct PredictionReport {
  std::vector<double> per_sequence;
  double mean = 0.0;
  /// Sample standard deviation across sequences (0 for one sequence).
  double stddev = 0.0;
  int samples = 0;
};

/// Sequence i draws from RngStream(seed, stream).substream(i).
PredictionReport evaluate_prediction(const Model& m, const SequenceBatch& data, int samples, std::uint64_t seed,
                                     PredictMode mode = PredictMode::kMean, int threads = 1);

PredictionReport summarize(std::vector<double> per_sequence, int samples);

struct ElboEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double per_frame = 0.0;
  int samples = 0;
};

/// Monte-Carlo lower bound from S posterior draws (draw s uses rng.substream(s)).
ElboEstimate estimate_elbo(const Model& m, const Sequence& v, int samples, const RngStream& rng);

struct ElboReport {
  std::vector<ElboEstimate> per_sequence;
  /// Sum of bounds over sequences divided by the total frame count.
  double per_frame = 0.0;
  double total = 0.0;
};

ElboReport evaluate_elbo(const Model& m, const SequenceBatch& data, int samples, std::uint64_t seed, int threads = 1);

/// |top_M(scores) ∩ top_M(truth)| / M_top with ties broken toward the lower
/// index. Throws kInvalidArgument when M_top is outside [1, size].
double precision_at_top_m(const Eigen::VectorXd& scores, const Eigen::VectorXd& truth, int top_m = 50);

/// Indices of the `k` largest entries, ties toward the lower index.
std::vector<Eigen::Index> top_indices(const Eigen::VectorXd& x, int k);

struct PrecisionReport {
  /// Precision at each training frame against its held-out words.
  std::vector<double> per_frame;
  /// Mean of per_frame.
  double mean_precision = 0.0;
  /// Precision of the prediction of the frame following the training frames.
  double predictive_precision = 0.0;
  int top_m = 50;
};

/// `train` holds the training portion of frames 0..T-1; `heldout` holds the
/// held-out words of those frames plus one final fully held-out frame T.
/// Training frames are scored by the expected word distribution under S
/// posterior draws; the final frame by the one-step-ahead prediction.
PrecisionReport evaluate_precision(const Model& m, const Sequence& train, const Sequence& heldout, int samples,
                                   const RngStream& rng, int top_m = 50);

}  // namespace tsbn
