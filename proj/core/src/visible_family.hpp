#pragma once

#include <Eigen/Dense>

#include "tsbn/numeric.hpp"
#include "tsbn/params.hpp"

namespace tsbn::detail {

/// Log-likelihood and residuals of the visible frames under one family.
struct VisibleTerms {
  Eigen::MatrixXd probs;               // binary sigmoid, count softmax; empty for real
  Eigen::MatrixXd residual;            // d log p / d logits (or mean)
  Eigen::MatrixXd log_scale_residual;  // real only
  Eigen::VectorXd log_p;               // per time step
};

/// `log_scale` is read only for the real family.
void visible_terms(Likelihood family, const Eigen::MatrixXd& v, const Eigen::MatrixXd& logits,
                   const Eigen::MatrixXd& log_scale, VisibleTerms& out);

/// Expected frame under the family: sigmoid, mean, or softmax.
Eigen::VectorXd visible_expectation(Likelihood family, const Eigen::VectorXd& logits);

/// Draws one frame into `out`.
void sample_visible(Likelihood family, const Eigen::VectorXd& logits, const Eigen::VectorXd& log_scale,
                    int count_total, RngStream& rng, Eigen::Ref<Eigen::VectorXd> out);

}  // namespace tsbn::detail
