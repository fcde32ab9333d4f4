#pragma once

#include <variant>

#include <Eigen/Dense>

#include "tsbn/deep.hpp"
#include "tsbn/params.hpp"
#include "tsbn/sequence.hpp"
#include "tsbn/shallow.hpp"

/// Depth-agnostic entry points used by training and evaluation.
namespace tsbn {

using LatentStates = std::variant<shallow::HiddenStates, deep::DeepStates>;
using deep::PredictMode;

LatentStates sample_posterior(const Model& m, const Sequence& v, RngStream& rng);

double latent_log_q(const LatentStates& s);

struct StepTerms {
  Eigen::VectorXd log_p;
  Eigen::VectorXd log_q;

  Eigen::VectorXd elbo() const { return log_p - log_q; }
};

StepTerms step_terms(const Model& m, const Sequence& v, const LatentStates& s);

struct ModelGradients {
  GenerativeParams theta;  // grad log p(V, states)
  RecognitionParams phi;   // sum_t weights[t] * grad log q_t
};

ModelGradients gradients(const Model& m, const Sequence& v, const LatentStates& s, const Eigen::VectorXd& weights);

struct Generated {
  Sequence v;
  LatentStates states;
};

Generated sample_model(const Model& m, int T, RngStream& rng, int count_total = 1);

/// Expected visible frame at every step given latent states (M x T).
Eigen::MatrixXd visible_expectations(const Model& m, const Sequence& v, const LatentStates& s);

/// Predictions of frames 1..T-1 (dim x (T-1)) from one posterior draw of the
/// history: the hidden conditional at each step is formed from the sampled
/// past, then its mean (or a draw) is pushed through the visible map.
Eigen::MatrixXd predict_from_history(const Model& m, const Sequence& v, const LatentStates& history, PredictMode mode,
                                     RngStream& rng);

}  // namespace tsbn
