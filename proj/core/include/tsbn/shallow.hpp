#pragma once

#include <functional>

#include <Eigen/Dense>

#include "tsbn/numeric.hpp"
#include "tsbn/params.hpp"
#include "tsbn/sequence.hpp"

/// The order-n temporal sigmoid belief network with a single hidden layer.
///
/// Hidden states are J x T bit matrices (column t is h_t); visible sequences
/// are M x T. Frames before t = 0 are zero vectors in every window.
namespace tsbn::shallow {

struct HiddenStates {
  Eigen::MatrixXd h;
  /// Total recognition log-probability of `h`.
  double log_q = 0.0;
};

/// Parameters of p(v_t | h_t, visible history) for one frame.
struct VisibleParams {
  Likelihood likelihood = Likelihood::kBinary;
  /// Binary and count: logits. Real: the Gaussian mean.
  Eigen::VectorXd logits;
  /// Real only: log standard deviation.
  Eigen::VectorXd log_scale;
  /// Binary: sigmoid(logits). Count: softmax(logits). Real: empty.
  Eigen::VectorXd probs;
};

/// W1 * h_window + W3 * v_window + b.
Eigen::VectorXd hidden_logits(const Model& m, const Eigen::VectorXd& h_window, const Eigen::VectorXd& v_window);

VisibleParams visible_params(const Model& m, const Eigen::VectorXd& h_t, const Eigen::VectorXd& v_window);

/// U1 * h_window + U2 * v_t + U3 * v_window + d.
Eigen::VectorXd recognition_logits(const Model& m, const Eigen::VectorXd& h_window, const Eigen::VectorXd& v_t,
                                   const Eigen::VectorXd& v_window);

struct Sample {
  Sequence v;
  Eigen::MatrixXd h;
};

struct SampleOptions {
  /// Tokens drawn per frame under the count likelihood.
  int count_total = 1;
};

/// Ancestral sampling of T frames.
Sample sample_sequence(const Model& m, int T, RngStream& rng, const SampleOptions& options = {});

/// One forward filtering pass drawing h_t ~ q(h_t | h_{<t}, v_t, v_{<t}).
HiddenStates sample_posterior(const Model& m, const Sequence& v, RngStream& rng);

/// Per-timestep preactivations and residuals for one (V, H) pair.
struct Workspace {
  Eigen::MatrixXd prior_logits;        // J x T
  Eigen::MatrixXd visible_logits;      // M x T; Gaussian mean for real data
  Eigen::MatrixXd log_scale;           // M x T; real only
  Eigen::MatrixXd visible_probs;       // M x T; binary sigmoid, count softmax
  Eigen::MatrixXd posterior_logits;    // J x T
  Eigen::MatrixXd prior_residual;      // h - sigmoid(prior_logits)
  Eigen::MatrixXd visible_residual;    // d log p / d visible_logits
  Eigen::MatrixXd log_scale_residual;  // d log p / d log_scale; real only
  Eigen::MatrixXd posterior_residual;  // h - sigmoid(posterior_logits)
  Eigen::VectorXd log_p_terms;         // per-step generative log-probability
  Eigen::VectorXd log_q_terms;         // per-step recognition log-probability
};

/// Fills the generative half of the workspace.
void forward_generative(const Model& m, const Sequence& v, const Eigen::MatrixXd& h, Workspace& ws);
/// Fills the recognition half of the workspace.
void forward_recognition(const Model& m, const Sequence& v, const Eigen::MatrixXd& h, Workspace& ws);
Workspace forward(const Model& m, const Sequence& v, const Eigen::MatrixXd& h);

double log_joint(const Model& m, const Sequence& v, const Eigen::MatrixXd& h);
double log_q(const Model& m, const Sequence& v, const Eigen::MatrixXd& h);

/// l_t = log p(v_t, h_t | history) - log q(h_t | history); sums to
/// log_joint - log_q.
Eigen::VectorXd elbo_terms(const Model& m, const Sequence& v, const Eigen::MatrixXd& h);

GenerativeParams grad_log_joint(const Model& m, const Sequence& v, const Eigen::MatrixXd& h);
GenerativeParams grad_log_joint(const Model& m, const Sequence& v, const Eigen::MatrixXd& h, const Workspace& ws);

RecognitionParams grad_log_q(const Model& m, const Sequence& v, const Eigen::MatrixXd& h);
/// sum_t weights[t] * grad log q(h_t | history).
RecognitionParams grad_log_q_weighted(const Model& m, const Sequence& v, const Eigen::MatrixXd& h,
                                      const Eigen::VectorXd& weights);
RecognitionParams grad_log_q_weighted(const Model& m, const Sequence& v, const Eigen::MatrixXd& h,
                                      const Eigen::VectorXd& weights, const Workspace& ws);

/// Hard cap on J * T for the enumeration routines below.
inline constexpr int kMaxEnumeratedBits = 20;

/// Visits all 2^(J*T) hidden configurations.
void for_each_hidden_configuration(int J, int T, const std::function<void(const Eigen::MatrixXd&)>& visit);

/// log p(V) by summing the joint over every hidden configuration.
double exact_log_marginal(const Model& m, const Sequence& v);

/// E_q[log p(V, H) - log q(H | V)] by enumeration.
double exact_elbo(const Model& m, const Sequence& v);

}  // namespace tsbn::shallow
