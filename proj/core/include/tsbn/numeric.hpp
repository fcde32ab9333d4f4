#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

namespace tsbn {

// Scalar kernels. All are pure and saturate instead of overflowing.

double sigmoid(double x);

/// log(1 + e^x) as max(x, 0) + log1p(e^-|x|).
double softplus(double x);

/// log sigma(x) = -softplus(-x).
double log_sigmoid(double x);

/// log p(x | logit psi) for a Bernoulli unit: psi * x - softplus(psi).
double bernoulli_logpmf(double x, double psi);

double log_sum_exp(std::span<const double> values);
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values);

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);
Eigen::MatrixXd sigmoid(const Eigen::Ref<const Eigen::MatrixXd>& x);

/// Column-wise softmax of a matrix of logits.
Eigen::MatrixXd softmax_columns(const Eigen::Ref<const Eigen::MatrixXd>& logits);

/// Sum over all entries of psi .* x - softplus(psi).
double bernoulli_logpmf_sum(const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const Eigen::Ref<const Eigen::MatrixXd>& psi);

/// Reproducible random stream: xoshiro256** seeded from (seed, stream_id)
/// through SplitMix64. Substreams are derived by hashing a child index into
/// the stream id, so any (seed, path) pair identifies one fixed sequence.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  RngStream substream(std::uint64_t child) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Fires iff uniform() < p.
  bool bernoulli(double p) { return uniform() < p; }
  /// Index drawn from an unnormalized probability vector by inverse CDF.
  int categorical(const Eigen::Ref<const Eigen::VectorXd>& probs);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t s_[4];
};

}  // namespace tsbn
