#include "tsbn/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsbn/error.hpp"

namespace tsbn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kLikelihoodMismatch: return "likelihood mismatch";
    case ErrorCode::kConfigurationMismatch: return "configuration mismatch";
    case ErrorCode::kInvalidValue: return "invalid value";
    case ErrorCode::kIo: return "i/o failure";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kCorrupt: return "corrupt file";
    case ErrorCode::kNonFiniteSignal: return "non-finite learning signal";
    case ErrorCode::kInfeasibleConfig: return "infeasible config";
  }
  return "unknown error";
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double log_sigmoid(double x) { return -softplus(-x); }

double bernoulli_logpmf(double x, double psi) { return psi * x - softplus(psi); }

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values) {
  return log_sum_exp(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const double mx = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

Eigen::MatrixXd sigmoid(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

Eigen::MatrixXd softmax_columns(const Eigen::Ref<const Eigen::MatrixXd>& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.cols(); ++t) out.col(t) = softmax(logits.col(t));
  return out;
}

double bernoulli_logpmf_sum(const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const Eigen::Ref<const Eigen::MatrixXd>& psi) {
  double acc = 0.0;
  for (Eigen::Index c = 0; c < psi.cols(); ++c) {
    for (Eigen::Index r = 0; r < psi.rows(); ++r) acc += bernoulli_logpmf(x(r, c), psi(r, c));
  }
  return acc;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b * 0xD6E8FEB86659FD93ULL);
  return splitmix64(s);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
  std::uint64_t sm = mix64(seed, stream_id + 0x632BE59BD9B4E019ULL);
  for (auto& s : s_) s = splitmix64(sm);
}

RngStream RngStream::substream(std::uint64_t child) const {
  return RngStream(seed_, mix64(stream_id_ + 0x2545F4914F6CDD1DULL, child + 1));
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int RngStream::categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  const double total = probs.sum();
  const double u = uniform() * total;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "RngStream::below(0)");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

}  // namespace tsbn
