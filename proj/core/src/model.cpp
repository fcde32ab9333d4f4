#include "tsbn/model.hpp"

#include <algorithm>

#include "tsbn/error.hpp"
#include "tsbn/window.hpp"
#include "visible_family.hpp"

namespace tsbn {

namespace {

const shallow::HiddenStates& as_shallow(const Model& m, const LatentStates& s) {
  const auto* h = std::get_if<shallow::HiddenStates>(&s);
  if (m.spec.is_deep() || !h) throw Error(ErrorCode::kConfigurationMismatch, "latent states do not match model depth");
  return *h;
}

const deep::DeepStates& as_deep(const Model& m, const LatentStates& s) {
  const auto* d = std::get_if<deep::DeepStates>(&s);
  if (!m.spec.is_deep() || !d) throw Error(ErrorCode::kConfigurationMismatch, "latent states do not match model depth");
  return *d;
}

}  // namespace

LatentStates sample_posterior(const Model& m, const Sequence& v, RngStream& rng) {
  if (m.spec.is_deep()) return deep::sample_posterior(m, v, rng);
  return shallow::sample_posterior(m, v, rng);
}

double latent_log_q(const LatentStates& s) {
  return std::visit([](const auto& x) { return x.log_q; }, s);
}

StepTerms step_terms(const Model& m, const Sequence& v, const LatentStates& s) {
  if (m.spec.is_deep()) {
    deep::StepTerms st = deep::step_terms(m, v, as_deep(m, s));
    return {std::move(st.log_p), std::move(st.log_q)};
  }
  shallow::Workspace ws = shallow::forward(m, v, as_shallow(m, s).h);
  return {std::move(ws.log_p_terms), std::move(ws.log_q_terms)};
}

ModelGradients gradients(const Model& m, const Sequence& v, const LatentStates& s, const Eigen::VectorXd& weights) {
  if (m.spec.is_deep()) {
    deep::Gradients g = deep::grads(m, v, as_deep(m, s), weights);
    return {std::move(g.theta), std::move(g.phi)};
  }
  const auto& h = as_shallow(m, s).h;
  const shallow::Workspace ws = shallow::forward(m, v, h);
  return {shallow::grad_log_joint(m, v, h, ws), shallow::grad_log_q_weighted(m, v, h, weights, ws)};
}

Generated sample_model(const Model& m, int T, RngStream& rng, int count_total) {
  if (m.spec.is_deep()) {
    deep::Sample s = deep::deep_sample(m, T, rng, {count_total});
    return {std::move(s.v), std::move(s.states)};
  }
  shallow::Sample s = shallow::sample_sequence(m, T, rng, {count_total});
  return {std::move(s.v), shallow::HiddenStates{std::move(s.h), 0.0}};
}

Eigen::MatrixXd visible_expectations(const Model& m, const Sequence& v, const LatentStates& s) {
  if (m.spec.is_deep()) return deep::visible_expectations(m, v, as_deep(m, s));
  const shallow::Workspace ws = shallow::forward(m, v, as_shallow(m, s).h);
  Eigen::MatrixXd out(ws.visible_logits.rows(), ws.visible_logits.cols());
  for (Eigen::Index t = 0; t < out.cols(); ++t)
    out.col(t) = detail::visible_expectation(m.spec.likelihood, ws.visible_logits.col(t));
  return out;
}

Eigen::MatrixXd predict_from_history(const Model& m, const Sequence& v, const LatentStates& history, PredictMode mode,
                                     RngStream& rng) {
  if (m.spec.is_deep()) return deep::predict_from_history(m, v, as_deep(m, history), mode, rng);

  const Eigen::MatrixXd& h = as_shallow(m, history).h;
  if (v.rows() != m.spec.visible_dim || h.cols() != v.cols() || h.rows() != m.spec.layer_dims[0])
    throw Error(ErrorCode::kShapeMismatch, "prediction history does not match the sequence");
  const int n = m.spec.order;
  const auto& W1 = m.theta.at("W1");
  const auto& W2 = m.theta.at("W2");
  const auto& W3 = m.theta.at("W3");
  const auto& W4 = m.theta.at("W4");
  const Eigen::Index T = v.cols();
  Eigen::MatrixXd out(m.spec.visible_dim, std::max<Eigen::Index>(T - 1, 0));
  Eigen::VectorXd hidden(h.rows());
  for (Eigen::Index t = 1; t < T; ++t) {
    const int ti = static_cast<int>(t);
    Eigen::VectorXd p = m.theta.at("b").col(0);
    detail::add_window_product(p, W1, h, ti, n);
    detail::add_window_product(p, W3, v, ti, n);
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double prob = sigmoid(p[j]);
      hidden[j] = mode == PredictMode::kMean ? prob : (rng.bernoulli(prob) ? 1.0 : 0.0);
    }
    Eigen::VectorXd logits = m.theta.at("c").col(0);
    logits.noalias() += W2 * hidden;
    detail::add_window_product(logits, W4, v, ti, n);
    out.col(t - 1) = detail::visible_expectation(m.spec.likelihood, logits);
  }
  return out;
}

}  // namespace tsbn
