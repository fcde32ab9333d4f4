#pragma once

#include <Eigen/Dense>

namespace tsbn {

/// Concatenation of frames t-1, t-2, ..., t-n of `x` (most recent first),
/// with zero vectors standing in for frames before the sequence start.
/// `t` is the zero-based frame index, 0 <= t < x.cols().
Eigen::VectorXd window_view(const Eigen::MatrixXd& x, int t, int n);

namespace detail {

// A windowed weight W (rows x n*d) splits into n column blocks; block k-1
// multiplies frame t-k.

/// out += W * window_view(x, t, n), without materializing the window.
void add_window_product(Eigen::Ref<Eigen::VectorXd> out, const Eigen::MatrixXd& w, const Eigen::MatrixXd& x, int t,
                        int n);

/// psi.col(t) += W * window_view(x, t, n) for every t.
void add_window_product_all(Eigen::MatrixXd& psi, const Eigen::MatrixXd& w, const Eigen::MatrixXd& x, int n);

/// grad += sum_t residual.col(t) * window_view(x, t, n)^T.
void accumulate_window_grad(Eigen::MatrixXd& grad, const Eigen::MatrixXd& residual, const Eigen::MatrixXd& x, int n);

/// adj.col(t) += sum_k W_k^T delta.col(t + k): the adjoint of
/// add_window_product_all with respect to x, for a single source column t.
void add_window_adjoint(Eigen::Ref<Eigen::VectorXd> adj, const Eigen::MatrixXd& w, const Eigen::MatrixXd& delta, int t,
                        int n);

}  // namespace detail
}  // namespace tsbn
