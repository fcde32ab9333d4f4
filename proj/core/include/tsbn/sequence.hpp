#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "tsbn/params.hpp"

namespace tsbn {

/// One sequence: a dim x T matrix whose column t is frame t.
using Sequence = Eigen::MatrixXd;

enum class DataType { kBit, kReal, kCount };

std::string_view to_string(DataType d);
DataType data_type_for(Likelihood l);

/// A set of variable-length sequences sharing frame dimension and dtype.
struct SequenceBatch {
  DataType dtype = DataType::kBit;
  int dim = 0;
  std::vector<Sequence> sequences;

  std::size_t size() const { return sequences.size(); }
  /// Total number of frames across sequences.
  Eigen::Index total_frames() const;
  /// Throws kInvalidValue/kShapeMismatch on entries or shapes that break the
  /// dtype's domain (bits in {0,1}, counts nonnegative integers, reals finite).
  void validate() const;

  bool operator==(const SequenceBatch& other) const;
};

/// Checks one sequence against a likelihood family's value domain.
void validate_frames(const Sequence& v, Likelihood likelihood);

}  // namespace tsbn
