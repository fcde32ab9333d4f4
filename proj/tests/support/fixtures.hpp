#pragma once

#include <Eigen/Dense>

#include "tsbn/deep.hpp"
#include "tsbn/numeric.hpp"
#include "tsbn/params.hpp"
#include "tsbn/sequence.hpp"

namespace tsbn::testing {

/// Every trainable entry drawn N(0, scale^2); frozen blocks stay zero.
Model random_model(const ModelSpec& spec, RngStream& rng, double scale = 0.5);

Eigen::MatrixXd random_bits(Eigen::Index rows, Eigen::Index cols, RngStream& rng);

/// Binary bits, real N(0,1) values, or counts in {0..3}.
Sequence random_sequence(Likelihood lik, int M, int T, RngStream& rng);

/// Random bits for every stochastic layer, zeros for deterministic ones.
deep::DeepStates random_deep_states(const Model& m, int T, RngStream& rng);

}  // namespace tsbn::testing
