#include "tsbn/shallow.hpp"

#include <cmath>

#include "tsbn/error.hpp"
#include "tsbn/window.hpp"
#include "visible_family.hpp"

namespace tsbn::shallow {

using detail::accumulate_window_grad;
using detail::add_window_product;
using detail::add_window_product_all;

namespace {

void require_shallow(const Model& m) {
  if (m.spec.is_deep()) throw Error(ErrorCode::kConfigurationMismatch, "shallow routine called on a deep model");
}

int hidden_dim(const Model& m) { return m.spec.layer_dims[0]; }

void check_vector(const Eigen::VectorXd& x, Eigen::Index expected, const char* what) {
  if (x.size() != expected) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": expected length " + std::to_string(expected) +
                                               ", got " + std::to_string(x.size()));
  }
}

void check_sequence(const Model& m, const Sequence& v, const Eigen::MatrixXd& h) {
  require_shallow(m);
  if (v.rows() != m.spec.visible_dim) throw Error(ErrorCode::kShapeMismatch, "visible frame dimension differs from M");
  if (h.rows() != hidden_dim(m)) throw Error(ErrorCode::kShapeMismatch, "hidden state dimension differs from J");
  if (h.cols() != v.cols()) throw Error(ErrorCode::kShapeMismatch, "hidden and visible lengths differ");
  if (v.cols() < 1) throw Error(ErrorCode::kShapeMismatch, "sequence must have at least one frame");
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const double x = h.data()[i];
    if (x != 0.0 && x != 1.0) throw Error(ErrorCode::kInvalidValue, "hidden state entry outside {0,1}");
  }
  validate_frames(v, m.spec.likelihood);
}

}  // namespace

Eigen::VectorXd hidden_logits(const Model& m, const Eigen::VectorXd& h_window, const Eigen::VectorXd& v_window) {
  require_shallow(m);
  const auto& W1 = m.theta.at("W1");
  const auto& W3 = m.theta.at("W3");
  check_vector(h_window, W1.cols(), "hidden_logits h_window");
  check_vector(v_window, W3.cols(), "hidden_logits v_window");
  return W1 * h_window + W3 * v_window + m.theta.at("b").col(0);
}

VisibleParams visible_params(const Model& m, const Eigen::VectorXd& h_t, const Eigen::VectorXd& v_window) {
  require_shallow(m);
  const auto& W2 = m.theta.at("W2");
  const auto& W4 = m.theta.at("W4");
  check_vector(h_t, W2.cols(), "visible_params h_t");
  check_vector(v_window, W4.cols(), "visible_params v_window");
  VisibleParams out;
  out.likelihood = m.spec.likelihood;
  out.logits = W2 * h_t + W4 * v_window + m.theta.at("c").col(0);
  switch (m.spec.likelihood) {
    case Likelihood::kBinary:
    case Likelihood::kCount:
      out.probs = detail::visible_expectation(m.spec.likelihood, out.logits);
      break;
    case Likelihood::kReal:
      out.log_scale = m.theta.at("W2p") * h_t + m.theta.at("W4p") * v_window + m.theta.at("cp").col(0);
      break;
  }
  return out;
}

Eigen::VectorXd recognition_logits(const Model& m, const Eigen::VectorXd& h_window, const Eigen::VectorXd& v_t,
                                   const Eigen::VectorXd& v_window) {
  require_shallow(m);
  const auto& U1 = m.phi.at("U1");
  const auto& U2 = m.phi.at("U2");
  const auto& U3 = m.phi.at("U3");
  check_vector(h_window, U1.cols(), "recognition_logits h_window");
  check_vector(v_t, U2.cols(), "recognition_logits v_t");
  check_vector(v_window, U3.cols(), "recognition_logits v_window");
  return U1 * h_window + U2 * v_t + U3 * v_window + m.phi.at("d").col(0);
}

Sample sample_sequence(const Model& m, int T, RngStream& rng, const SampleOptions& options) {
  require_shallow(m);
  if (T < 1) throw Error(ErrorCode::kInvalidArgument, "sample_sequence: T must be >= 1");
  const int J = hidden_dim(m);
  const int M = m.spec.visible_dim;
  const int n = m.spec.order;
  const auto& W1 = m.theta.at("W1");
  const auto& W2 = m.theta.at("W2");
  const auto& W3 = m.theta.at("W3");
  const auto& W4 = m.theta.at("W4");
  const auto b = m.theta.at("b").col(0);
  const auto c = m.theta.at("c").col(0);

  Sample s{Sequence::Zero(M, T), Eigen::MatrixXd::Zero(J, T)};
  Eigen::VectorXd psi(J);
  Eigen::VectorXd eta(M);
  Eigen::VectorXd tau(M);
  for (int t = 0; t < T; ++t) {
    psi = b;
    add_window_product(psi, W1, s.h, t, n);
    add_window_product(psi, W3, s.v, t, n);
    for (int j = 0; j < J; ++j) s.h(j, t) = rng.bernoulli(sigmoid(psi[j])) ? 1.0 : 0.0;

    eta.noalias() = W2 * s.h.col(t);
    eta += c;
    add_window_product(eta, W4, s.v, t, n);
    if (m.spec.likelihood == Likelihood::kReal) {
      tau.noalias() = m.theta.at("W2p") * s.h.col(t);
      tau += m.theta.at("cp").col(0);
      add_window_product(tau, m.theta.at("W4p"), s.v, t, n);
    }
    detail::sample_visible(m.spec.likelihood, eta, tau, options.count_total, rng, s.v.col(t));
  }
  return s;
}

HiddenStates sample_posterior(const Model& m, const Sequence& v, RngStream& rng) {
  require_shallow(m);
  if (v.rows() != m.spec.visible_dim) throw Error(ErrorCode::kShapeMismatch, "visible frame dimension differs from M");
  const int J = hidden_dim(m);
  const int n = m.spec.order;
  const Eigen::Index T = v.cols();
  const auto& U1 = m.phi.at("U1");

  // Everything except the hidden-history term is known up front.
  Eigen::MatrixXd psi = m.phi.at("U2") * v;
  psi.colwise() += m.phi.at("d").col(0);
  add_window_product_all(psi, m.phi.at("U3"), v, n);

  HiddenStates out{Eigen::MatrixXd::Zero(J, T), 0.0};
  for (Eigen::Index t = 0; t < T; ++t) {
    auto col = psi.col(t);
    add_window_product(col, U1, out.h, static_cast<int>(t), n);
    for (int j = 0; j < J; ++j) {
      const double x = rng.bernoulli(sigmoid(col[j])) ? 1.0 : 0.0;
      out.h(j, t) = x;
      out.log_q += bernoulli_logpmf(x, col[j]);
    }
  }
  return out;
}

void forward_generative(const Model& m, const Sequence& v, const Eigen::MatrixXd& h, Workspace& ws) {
  check_sequence(m, v, h);
  const int n = m.spec.order;
  const Eigen::Index T = v.cols();

  ws.prior_logits.setZero(h.rows(), T);
  ws.prior_logits.colwise() += m.theta.at("b").col(0);
  add_window_product_all(ws.prior_logits, m.theta.at("W1"), h, n);
  add_window_product_all(ws.prior_logits, m.theta.at("W3"), v, n);
  ws.prior_residual = h - sigmoid(ws.prior_logits);

  ws.visible_logits.noalias() = m.theta.at("W2") * h;
  ws.visible_logits.colwise() += m.theta.at("c").col(0);
  add_window_product_all(ws.visible_logits, m.theta.at("W4"), v, n);

  ws.log_p_terms = Eigen::VectorXd::Zero(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < h.rows(); ++j) acc += bernoulli_logpmf(h(j, t), ws.prior_logits(j, t));
    ws.log_p_terms[t] = acc;
  }

  if (m.spec.likelihood == Likelihood::kReal) {
    ws.log_scale.noalias() = m.theta.at("W2p") * h;
    ws.log_scale.colwise() += m.theta.at("cp").col(0);
    add_window_product_all(ws.log_scale, m.theta.at("W4p"), v, n);
  }
  detail::VisibleTerms vis;
  detail::visible_terms(m.spec.likelihood, v, ws.visible_logits, ws.log_scale, vis);
  ws.visible_probs = std::move(vis.probs);
  ws.visible_residual = std::move(vis.residual);
  ws.log_scale_residual = std::move(vis.log_scale_residual);
  ws.log_p_terms += vis.log_p;
}

void forward_recognition(const Model& m, const Sequence& v, const Eigen::MatrixXd& h, Workspace& ws) {
  check_sequence(m, v, h);
  const int n = m.spec.order;
  const Eigen::Index T = v.cols();
  ws.posterior_logits.noalias() = m.phi.at("U2") * v;
  ws.posterior_logits.colwise() += m.phi.at("d").col(0);
  add_window_product_all(ws.posterior_logits, m.phi.at("U1"), h, n);
  add_window_product_all(ws.posterior_logits, m.phi.at("U3"), v, n);
  ws.posterior_residual = h - sigmoid(ws.posterior_logits);
  ws.log_q_terms = Eigen::VectorXd::Zero(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < h.rows(); ++j) acc += bernoulli_logpmf(h(j, t), ws.posterior_logits(j, t));
    ws.log_q_terms[t] = acc;
  }
}

Workspace forward(const Model& m, const Sequence& v, const Eigen::MatrixXd& h) {
  Workspace ws;
  forward_generative(m, v, h, ws);
  forward_recognition(m, v, h, ws);
  return ws;
}

double log_joint(const Model& m, const Sequence& v, const Eigen::MatrixXd& h) {
  Workspace ws;
  forward_generative(m, v, h, ws);
  return ws.log_p_terms.sum();
}

double log_q(const Model& m, const Sequence& v, const Eigen::MatrixXd& h) {
  Workspace ws;
  forward_recognition(m, v, h, ws);
  return ws.log_q_terms.sum();
}

Eigen::VectorXd elbo_terms(const Model& m, const Sequence& v, const Eigen::MatrixXd& h) {
  const Workspace ws = forward(m, v, h);
  return ws.log_p_terms - ws.log_q_terms;
}

GenerativeParams grad_log_joint(const Model& m, const Sequence& v, const Eigen::MatrixXd& h) {
  Workspace ws;
  forward_generative(m, v, h, ws);
  return grad_log_joint(m, v, h, ws);
}

GenerativeParams grad_log_joint(const Model& m, const Sequence& v, const Eigen::MatrixXd& h, const Workspace& ws) {
  const int n = m.spec.order;
  GenerativeParams g(m.theta.zeros_like());
  accumulate_window_grad(g.at("W1"), ws.prior_residual, h, n);
  accumulate_window_grad(g.at("W3"), ws.prior_residual, v, n);
  g.at("b") = ws.prior_residual.rowwise().sum();
  g.at("W2").noalias() = ws.visible_residual * h.transpose();
  accumulate_window_grad(g.at("W4"), ws.visible_residual, v, n);
  g.at("c") = ws.visible_residual.rowwise().sum();
  if (m.spec.likelihood == Likelihood::kReal) {
    g.at("W2p").noalias() = ws.log_scale_residual * h.transpose();
    accumulate_window_grad(g.at("W4p"), ws.log_scale_residual, v, n);
    g.at("cp") = ws.log_scale_residual.rowwise().sum();
  }
  g.mask_frozen();
  return g;
}

RecognitionParams grad_log_q(const Model& m, const Sequence& v, const Eigen::MatrixXd& h) {
  return grad_log_q_weighted(m, v, h, Eigen::VectorXd::Ones(v.cols()));
}

RecognitionParams grad_log_q_weighted(const Model& m, const Sequence& v, const Eigen::MatrixXd& h,
                                      const Eigen::VectorXd& weights) {
  Workspace ws;
  forward_recognition(m, v, h, ws);
  return grad_log_q_weighted(m, v, h, weights, ws);
}

RecognitionParams grad_log_q_weighted(const Model& m, const Sequence& v, const Eigen::MatrixXd& h,
                                      const Eigen::VectorXd& weights, const Workspace& ws) {
  if (weights.size() != v.cols()) throw Error(ErrorCode::kShapeMismatch, "one weight per time step is required");
  const int n = m.spec.order;
  const Eigen::MatrixXd residual = ws.posterior_residual * weights.asDiagonal();
  RecognitionParams g(m.phi.zeros_like());
  accumulate_window_grad(g.at("U1"), residual, h, n);
  g.at("U2").noalias() = residual * v.transpose();
  accumulate_window_grad(g.at("U3"), residual, v, n);
  g.at("d") = residual.rowwise().sum();
  g.mask_frozen();
  return g;
}

void for_each_hidden_configuration(int J, int T, const std::function<void(const Eigen::MatrixXd&)>& visit) {
  const int bits = J * T;
  if (bits > kMaxEnumeratedBits) {
    throw Error(ErrorCode::kInvalidArgument,
                "enumeration over " + std::to_string(bits) + " hidden bits exceeds the cap of " +
                    std::to_string(kMaxEnumeratedBits));
  }
  Eigen::MatrixXd h(J, T);
  const std::uint64_t count = std::uint64_t{1} << bits;
  for (std::uint64_t code = 0; code < count; ++code) {
    for (int i = 0; i < bits; ++i) h.data()[i] = static_cast<double>((code >> i) & 1u);
    visit(h);
  }
}

double exact_log_marginal(const Model& m, const Sequence& v) {
  require_shallow(m);
  std::vector<double> terms;
  for_each_hidden_configuration(hidden_dim(m), static_cast<int>(v.cols()),
                                [&](const Eigen::MatrixXd& h) { terms.push_back(log_joint(m, v, h)); });
  return log_sum_exp(terms);
}

double exact_elbo(const Model& m, const Sequence& v) {
  require_shallow(m);
  double bound = 0.0;
  for_each_hidden_configuration(hidden_dim(m), static_cast<int>(v.cols()), [&](const Eigen::MatrixXd& h) {
    const Workspace ws = forward(m, v, h);
    const double lq = ws.log_q_terms.sum();
    bound += std::exp(lq) * (ws.log_p_terms.sum() - lq);
  });
  return bound;
}

}  // namespace tsbn::shallow
