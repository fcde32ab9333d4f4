#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tsbn/numeric.hpp"
#include "tsbn/params.hpp"
#include "tsbn/sequence.hpp"

/// Deep TSBN: a stack of L hidden layers over the visible frames. The top
/// layer is stochastic binary; the middle layers are either all stochastic
/// (logistic conditionals) or all deterministic (rectified linear recurrent
/// states, one trajectory for the generative side and one for recognition).
namespace tsbn::deep {

/// Layer trajectories for one sequence.
///
/// `units[l - 1]` holds layer l (1 <= l <= L) as a J_l x T matrix. Stochastic
/// layers hold bits. Deterministic layers hold the trajectory produced by the
/// pass that created the states: the recognition states h^r for a posterior
/// draw, the generative states h^g for an ancestral sample. Every routine
/// below recomputes deterministic trajectories from the parameters, so only
/// the stochastic layers are inputs.
struct DeepStates {
  std::vector<Eigen::MatrixXd> units;
  /// Recognition log-probability over the stochastic layers only.
  double log_q = 0.0;

  const Eigen::MatrixXd& top() const { return units.back(); }
};

struct Sample {
  Sequence v;
  DeepStates states;
};

struct SampleOptions {
  int count_total = 1;
};

/// Top-down, left-to-right ancestral sampling.
Sample deep_sample(const Model& m, int T, RngStream& rng, const SampleOptions& options = {});

/// Bottom-up filtering pass of the recognition model.
DeepStates sample_posterior(const Model& m, const Sequence& v, RngStream& rng);

enum class Side { kGenerative, kRecognition };

/// Rectified-linear trajectories of the deterministic middle layers.
struct DetTrajectories {
  /// units[l - 1] for l = 1..L-1; entries are >= 0.
  std::vector<Eigen::MatrixXd> units;
  /// Preactivations matching `units`.
  std::vector<Eigen::MatrixXd> preacts;
};

/// Generative side: h^g_t from (z_t, h^g history, v history). Recognition
/// side: h^r_t from (v_t, h^r history, v history); `top` is ignored.
/// Throws kConfigurationMismatch unless the model has deterministic middles,
/// and when a top-layer cross-step block (G<L>.below / R<L>.below) is present
/// with nonzero entries.
DetTrajectories det_forward(const Model& m, const Sequence& v, const Eigen::MatrixXd& top, Side side);

double log_joint(const Model& m, const Sequence& v, const DeepStates& s);
double log_q(const Model& m, const Sequence& v, const DeepStates& s);

/// Per-step lower-bound terms: generative blocks minus recognition blocks.
Eigen::VectorXd elbo_terms(const Model& m, const Sequence& v, const DeepStates& s);

struct Gradients {
  GenerativeParams theta;   // d log p(V, states) / d theta
  RecognitionParams phi;    // sum_t w_t d log q_t / d phi
};

/// Stochastic-middle gradients. Throws kConfigurationMismatch otherwise.
Gradients grads_stochastic(const Model& m, const Sequence& v, const DeepStates& s, const Eigen::VectorXd& weights);

/// Deterministic-middle gradients via back-propagation through time at fixed
/// top-layer samples. Throws kConfigurationMismatch otherwise.
Gradients bptt_grads(const Model& m, const Sequence& v, const DeepStates& s, const Eigen::VectorXd& weights);

/// Dispatches on the middle-layer kind.
Gradients grads(const Model& m, const Sequence& v, const DeepStates& s, const Eigen::VectorXd& weights);

/// Per-step generative and recognition log-probabilities.
struct StepTerms {
  Eigen::VectorXd log_p;
  Eigen::VectorXd log_q;
};
StepTerms step_terms(const Model& m, const Sequence& v, const DeepStates& s);

/// Expected visible frame at every step given the states (M x T).
Eigen::MatrixXd visible_expectations(const Model& m, const Sequence& v, const DeepStates& s);

enum class PredictMode { kMean, kSample };

/// One-step-ahead predictions for frames 1..T-1 from one posterior draw of
/// the history; returns dim x (T-1).
Eigen::MatrixXd predict_from_history(const Model& m, const Sequence& v, const DeepStates& history, PredictMode mode,
                                     RngStream& rng);

}  // namespace tsbn::deep
