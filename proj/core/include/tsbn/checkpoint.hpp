#pragma once

#include <string>

#include "tsbn/params.hpp"
#include "tsbn/trainer.hpp"

namespace tsbn {

/// Binary checkpoint: magic "TSBN-CKPT1", the model spec, then a table of
/// named float64 tensors (theta/*, phi/*, lambda/*, opt/*, trainer/scalars)
/// followed by their row-major payloads. All integers are little-endian.
struct Checkpoint {
  Model model;
  TrainerState state;

  bool operator==(const Checkpoint& other) const {
    return model.spec == other.model.spec && model.theta == other.model.theta && model.phi == other.model.phi &&
           state == other.state;
  }
};

/// Throws kIo when the file cannot be written.
void save_checkpoint(const std::string& path, const Model& model, const TrainerState& state);

/// Throws kIo, kBadMagic, kCorrupt (truncated or malformed table) or
/// kShapeMismatch (a tensor disagrees with the layout implied by the header ModelSpec).
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tsbn
