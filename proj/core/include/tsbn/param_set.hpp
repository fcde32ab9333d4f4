#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace tsbn {

enum class BlockRole { kWeight, kBias };

/// One named tensor. Vectors are stored as n x 1 matrices.
struct ParamBlock {
  std::string name;
  Eigen::MatrixXd value;
  BlockRole role = BlockRole::kWeight;
  /// Frozen blocks (e.g. the visible-history weights of an HMSBN) keep their
  /// value; optimizers and gradient routines leave them at zero update.
  bool trainable = true;
};

/// Ordered collection of named tensors. Parameters, gradients, and optimizer
/// buffers all share this layout so they can be combined block by block.
class ParamSet {
 public:
  ParamSet() = default;

  Eigen::MatrixXd& add(std::string name, Eigen::Index rows, Eigen::Index cols, BlockRole role,
                       bool trainable = true);

  bool contains(std::string_view name) const { return find(name) != nullptr; }
  const Eigen::MatrixXd* find(std::string_view name) const;
  Eigen::MatrixXd* find(std::string_view name);
  const Eigen::MatrixXd& at(std::string_view name) const;
  Eigen::MatrixXd& at(std::string_view name);
  const ParamBlock& block(std::string_view name) const;

  std::vector<ParamBlock>& blocks() { return blocks_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  std::size_t size() const { return blocks_.size(); }

  /// Same names, shapes and roles; all values zero.
  ParamSet zeros_like() const;
  /// True when names, order and shapes agree.
  bool same_layout(const ParamSet& other) const;
  /// Total number of scalar entries.
  Eigen::Index num_scalars() const;
  /// Number of non-finite entries across all blocks.
  Eigen::Index count_non_finite() const;

  /// this += scale * other (layouts must agree).
  void axpy(double scale, const ParamSet& other);
  void scale(double factor);
  /// Zero every frozen block.
  void mask_frozen();

  /// Flat scalar view, in block order then column-major within a block.
  double& scalar(Eigen::Index flat_index);
  double scalar(Eigen::Index flat_index) const;

  bool operator==(const ParamSet& other) const;

 private:
  std::vector<ParamBlock> blocks_;
};

}  // namespace tsbn
