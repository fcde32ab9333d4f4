#include "tsbn/param_set.hpp"

#include "tsbn/error.hpp"

namespace tsbn {

Eigen::MatrixXd& ParamSet::add(std::string name, Eigen::Index rows, Eigen::Index cols, BlockRole role,
                               bool trainable) {
  if (contains(name)) throw Error(ErrorCode::kInvalidArgument, "duplicate parameter block " + name);
  blocks_.push_back(ParamBlock{std::move(name), Eigen::MatrixXd::Zero(rows, cols), role, trainable});
  return blocks_.back().value;
}

const Eigen::MatrixXd* ParamSet::find(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return &b.value;
  }
  return nullptr;
}

Eigen::MatrixXd* ParamSet::find(std::string_view name) {
  for (auto& b : blocks_) {
    if (b.name == name) return &b.value;
  }
  return nullptr;
}

const Eigen::MatrixXd& ParamSet::at(std::string_view name) const {
  const auto* m = find(name);
  if (!m) throw Error(ErrorCode::kInvalidArgument, "missing parameter block " + std::string(name));
  return *m;
}

Eigen::MatrixXd& ParamSet::at(std::string_view name) {
  auto* m = find(name);
  if (!m) throw Error(ErrorCode::kInvalidArgument, "missing parameter block " + std::string(name));
  return *m;
}

const ParamBlock& ParamSet::block(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  throw Error(ErrorCode::kInvalidArgument, "missing parameter block " + std::string(name));
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  out.blocks_.reserve(blocks_.size());
  for (const auto& b : blocks_) {
    out.blocks_.push_back(ParamBlock{b.name, Eigen::MatrixXd::Zero(b.value.rows(), b.value.cols()), b.role, b.trainable});
  }
  return out;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& a = blocks_[i];
    const auto& b = other.blocks_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) return false;
  }
  return true;
}

Eigen::Index ParamSet::num_scalars() const {
  Eigen::Index n = 0;
  for (const auto& b : blocks_) n += b.value.size();
  return n;
}

Eigen::Index ParamSet::count_non_finite() const {
  Eigen::Index n = 0;
  for (const auto& b : blocks_) n += (!b.value.array().isFinite()).count();
  return n;
}

void ParamSet::axpy(double scale, const ParamSet& other) {
  if (!same_layout(other)) throw Error(ErrorCode::kShapeMismatch, "ParamSet::axpy layout mismatch");
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].value += scale * other.blocks_[i].value;
}

void ParamSet::scale(double factor) {
  for (auto& b : blocks_) b.value *= factor;
}

void ParamSet::mask_frozen() {
  for (auto& b : blocks_) {
    if (!b.trainable) b.value.setZero();
  }
}

double& ParamSet::scalar(Eigen::Index flat_index) {
  for (auto& b : blocks_) {
    if (flat_index < b.value.size()) return b.value.data()[flat_index];
    flat_index -= b.value.size();
  }
  throw Error(ErrorCode::kInvalidArgument, "ParamSet::scalar index out of range");
}

double ParamSet::scalar(Eigen::Index flat_index) const {
  return const_cast<ParamSet*>(this)->scalar(flat_index);
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (!same_layout(other)) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].value != other.blocks_[i].value) return false;
  }
  return true;
}

}  // namespace tsbn
