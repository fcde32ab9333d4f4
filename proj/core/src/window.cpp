#include "tsbn/window.hpp"

#include <cmath>

#include "tsbn/error.hpp"
#include "tsbn/sequence.hpp"

namespace tsbn {

Eigen::VectorXd window_view(const Eigen::MatrixXd& x, int t, int n) {
  if (t < 0 || t >= x.cols()) throw Error(ErrorCode::kInvalidArgument, "window_view: t out of range");
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "window_view: order must be >= 1");
  const Eigen::Index d = x.rows();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n * d);
  for (int k = 1; k <= n && t - k >= 0; ++k) out.segment((k - 1) * d, d) = x.col(t - k);
  return out;
}

namespace detail {

void add_window_product(Eigen::Ref<Eigen::VectorXd> out, const Eigen::MatrixXd& w, const Eigen::MatrixXd& x, int t,
                        int n) {
  const Eigen::Index d = x.rows();
  for (int k = 1; k <= n && t - k >= 0; ++k) out.noalias() += w.middleCols((k - 1) * d, d) * x.col(t - k);
}

void add_window_product_all(Eigen::MatrixXd& psi, const Eigen::MatrixXd& w, const Eigen::MatrixXd& x, int n) {
  const Eigen::Index d = x.rows();
  const Eigen::Index T = x.cols();
  for (int k = 1; k <= n && k < T; ++k) {
    psi.middleCols(k, T - k).noalias() += w.middleCols((k - 1) * d, d) * x.leftCols(T - k);
  }
}

void accumulate_window_grad(Eigen::MatrixXd& grad, const Eigen::MatrixXd& residual, const Eigen::MatrixXd& x, int n) {
  const Eigen::Index d = x.rows();
  const Eigen::Index T = x.cols();
  for (int k = 1; k <= n && k < T; ++k) {
    grad.middleCols((k - 1) * d, d).noalias() += residual.middleCols(k, T - k) * x.leftCols(T - k).transpose();
  }
}

void add_window_adjoint(Eigen::Ref<Eigen::VectorXd> adj, const Eigen::MatrixXd& w, const Eigen::MatrixXd& delta, int t,
                        int n) {
  const Eigen::Index d = adj.size();
  const Eigen::Index T = delta.cols();
  for (int k = 1; k <= n && t + k < T; ++k) {
    adj.noalias() += w.middleCols((k - 1) * d, d).transpose() * delta.col(t + k);
  }
}

}  // namespace detail

std::string_view to_string(DataType d) {
  switch (d) {
    case DataType::kBit: return "bit";
    case DataType::kReal: return "real";
    case DataType::kCount: return "count";
  }
  return "?";
}

DataType data_type_for(Likelihood l) {
  switch (l) {
    case Likelihood::kBinary: return DataType::kBit;
    case Likelihood::kReal: return DataType::kReal;
    case Likelihood::kCount: return DataType::kCount;
  }
  return DataType::kReal;
}

Eigen::Index SequenceBatch::total_frames() const {
  Eigen::Index n = 0;
  for (const auto& s : sequences) n += s.cols();
  return n;
}

namespace {

void check_values(const Eigen::MatrixXd& v, DataType dtype) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double x = v.data()[i];
    switch (dtype) {
      case DataType::kBit:
        if (x != 0.0 && x != 1.0) throw Error(ErrorCode::kInvalidValue, "binary frame entry outside {0,1}");
        break;
      case DataType::kCount:
        if (!(x >= 0.0) || x != std::floor(x) || x > 4294967295.0)
          throw Error(ErrorCode::kInvalidValue, "count frame entry is not a nonnegative integer");
        break;
      case DataType::kReal:
        if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidValue, "real frame entry is not finite");
        break;
    }
  }
}

}  // namespace

void SequenceBatch::validate() const {
  for (const auto& s : sequences) {
    if (s.rows() != dim) throw Error(ErrorCode::kShapeMismatch, "sequence frame dimension differs from batch dim");
    check_values(s, dtype);
  }
}

bool SequenceBatch::operator==(const SequenceBatch& other) const {
  if (dtype != other.dtype || dim != other.dim || sequences.size() != other.sequences.size()) return false;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (sequences[i].rows() != other.sequences[i].rows() || sequences[i].cols() != other.sequences[i].cols() ||
        sequences[i] != other.sequences[i])
      return false;
  }
  return true;
}

void validate_frames(const Sequence& v, Likelihood likelihood) { check_values(v, data_type_for(likelihood)); }

}  // namespace tsbn
