#include "visible_family.hpp"

#include <cmath>

namespace tsbn::detail {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
}

void visible_terms(Likelihood family, const Eigen::MatrixXd& v, const Eigen::MatrixXd& logits,
                   const Eigen::MatrixXd& log_scale, VisibleTerms& out) {
  const Eigen::Index T = v.cols();
  out.log_p = Eigen::VectorXd::Zero(T);
  switch (family) {
    case Likelihood::kBinary:
      out.probs = sigmoid(logits);
      out.residual = v - out.probs;
      for (Eigen::Index t = 0; t < T; ++t) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < v.rows(); ++i) acc += bernoulli_logpmf(v(i, t), logits(i, t));
        out.log_p[t] = acc;
      }
      break;
    case Likelihood::kReal: {
      const Eigen::ArrayXXd diff = (v - logits).array();
      const Eigen::ArrayXXd inv_var = (-2.0 * log_scale.array()).exp();
      out.residual = (diff * inv_var).matrix();
      out.log_scale_residual = (diff.square() * inv_var - 1.0).matrix();
      const Eigen::ArrayXXd term = kHalfLog2Pi + log_scale.array() + 0.5 * diff.square() * inv_var;
      out.log_p = -term.colwise().sum().matrix().transpose();
      break;
    }
    case Likelihood::kCount: {
      out.probs = softmax_columns(logits);
      const Eigen::RowVectorXd totals = v.colwise().sum();
      out.residual = v - out.probs * totals.asDiagonal();
      for (Eigen::Index t = 0; t < T; ++t) {
        out.log_p[t] = logits.col(t).dot(v.col(t)) - totals[t] * log_sum_exp(logits.col(t));
      }
      break;
    }
  }
}

Eigen::VectorXd visible_expectation(Likelihood family, const Eigen::VectorXd& logits) {
  switch (family) {
    case Likelihood::kBinary: return logits.unaryExpr([](double x) { return sigmoid(x); });
    case Likelihood::kCount: return softmax(logits);
    case Likelihood::kReal: return logits;
  }
  return logits;
}

void sample_visible(Likelihood family, const Eigen::VectorXd& logits, const Eigen::VectorXd& log_scale,
                    int count_total, RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index M = logits.size();
  switch (family) {
    case Likelihood::kBinary:
      for (Eigen::Index i = 0; i < M; ++i) out[i] = rng.bernoulli(sigmoid(logits[i])) ? 1.0 : 0.0;
      break;
    case Likelihood::kReal:
      for (Eigen::Index i = 0; i < M; ++i) out[i] = logits[i] + std::exp(log_scale[i]) * rng.normal();
      break;
    case Likelihood::kCount: {
      out.setZero();
      const Eigen::VectorXd y = softmax(logits);
      for (int k = 0; k < count_total; ++k) out[rng.categorical(y)] += 1.0;
      break;
    }
  }
}

}  // namespace tsbn::detail
