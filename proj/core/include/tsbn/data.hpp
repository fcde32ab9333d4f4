#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tsbn/numeric.hpp"
#include "tsbn/sequence.hpp"

namespace tsbn {

/// Bouncing-balls video corpus. Frames are R x R binary images flattened
/// row by row (pixel (row i, column j) is entry i * R + j).
struct BallsConfig {
  int num_balls = 3;
  int resolution = 30;
  int sequence_length = 100;
  int num_sequences = 4000;
  /// Pixels; a negative value selects 2 * resolution / 30.
  double ball_radius = -1.0;
  /// Initial speeds are uniform in [0.5, 1.5] * speed_scale pixels per step.
  double speed_scale = 1.0;
  std::uint64_t seed = 0;

  double radius() const { return ball_radius < 0.0 ? 2.0 * resolution / 30.0 : ball_radius; }
  /// Throws kInfeasibleConfig when the balls cannot fit the box.
  void validate() const;
};

/// Continuous ball states for one sequence: positions and velocities per
/// frame, each a list of (x, y) per ball.
struct BallTrajectory {
  std::vector<std::vector<Eigen::Vector2d>> positions;
  std::vector<std::vector<Eigen::Vector2d>> velocities;
};

/// Simulates sequence `index` of the corpus (its own random stream).
BallTrajectory simulate_balls(const BallsConfig& config, std::uint64_t index);

/// Lights every pixel whose center lies within some ball.
Eigen::VectorXd render_balls(const std::vector<Eigen::Vector2d>& centers, int resolution, double radius);

/// Sequences first_index .. first_index + num_sequences - 1.
SequenceBatch gen_bouncing_balls(const BallsConfig& config, std::uint64_t first_index = 0, int threads = 1);

/// Sequence container: magic "TSBN-SEQ1", u8 dtype (0 bit-packed, 1 float64,
/// 2 uint32), u32 M, u64 count, then per sequence u64 T and its T x M frames
/// in row-major order. Integers are little-endian; bits are packed LSB first.
void save_sequences(const std::string& path, const SequenceBatch& batch);
SequenceBatch load_sequences(const std::string& path);

/// Assigns every token independently to the training side with probability
/// `fraction`; returns (train, heldout) with train + heldout == counts.
std::pair<Eigen::VectorXd, Eigen::VectorXd> split_words(const Eigen::VectorXd& counts, double fraction, RngStream& rng);

/// split_words applied to every frame of a count batch.
std::pair<SequenceBatch, SequenceBatch> split_counts(const SequenceBatch& batch, double fraction, RngStream& rng);

}  // namespace tsbn
