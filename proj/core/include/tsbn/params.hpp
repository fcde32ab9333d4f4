#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tsbn/numeric.hpp"
#include "tsbn/param_set.hpp"

namespace tsbn {

enum class Likelihood { kBinary, kReal, kCount };
enum class LayerKind { kStochastic, kDeterministic };

std::string_view to_string(Likelihood l);
std::string_view to_string(LayerKind k);
Likelihood parse_likelihood(std::string_view s);
LayerKind parse_layer_kind(std::string_view s);

/// Static description of a model.
///
/// `layer_dims[0]` is the hidden layer adjacent to the visible frames and
/// `layer_dims.back()` is the top layer. A single layer is the shallow TSBN;
/// two or more layers form a deep TSBN whose middle layers are either all
/// stochastic or all deterministic (the top is always stochastic).
struct ModelSpec {
  int visible_dim = 0;
  std::vector<int> layer_dims;
  std::vector<LayerKind> layer_kinds;
  int order = 1;
  Likelihood likelihood = Likelihood::kBinary;
  /// When false the blocks that read past visible frames into the hidden and
  /// visible conditionals are frozen at zero (the Hidden Markov SBN).
  bool visible_history = true;

  static ModelSpec shallow(int visible_dim, int hidden_dim, int order = 1,
                           Likelihood likelihood = Likelihood::kBinary);
  static ModelSpec deep(int visible_dim, std::vector<int> layer_dims, LayerKind middle_kind, int order = 1,
                        Likelihood likelihood = Likelihood::kBinary);

  int num_layers() const { return static_cast<int>(layer_dims.size()); }
  bool is_deep() const { return num_layers() > 1; }
  bool deterministic_middle() const;
  /// Units in layer l, with layer 0 the visible frame.
  int dim(int layer) const { return layer == 0 ? visible_dim : layer_dims.at(static_cast<std::size_t>(layer - 1)); }

  /// Throws Error(kInvalidArgument) describing the first violated invariant.
  void validate() const;

  bool operator==(const ModelSpec&) const = default;
};

class GenerativeParams : public ParamSet {
 public:
  GenerativeParams() = default;
  explicit GenerativeParams(ParamSet p) : ParamSet(std::move(p)) {}
};

class RecognitionParams : public ParamSet {
 public:
  RecognitionParams() = default;
  explicit RecognitionParams(ParamSet p) : ParamSet(std::move(p)) {}
};

/// A model: its spec with generative (theta) and recognition (phi) parameters.
struct Model {
  ModelSpec spec;
  GenerativeParams theta;
  RecognitionParams phi;
};

/// Zero-valued parameter layouts for a spec. Block names:
///   shallow theta: W1 (J x nJ), W2 (M x J), W3 (J x nM), W4 (M x nM), b, c,
///                  real only: W2p, W4p, cp
///   shallow phi:   U1 (J x nJ), U2 (J x M), U3 (J x nM), d
///   deep theta, per layer l = 0..L (0 = visible):
///                  G<l>.down (from layer l+1 at the same step, l < L)
///                  G<l>.self (window of layer l), G<l>.below (window of layer
///                  l-1, l >= 1), G<l>.bias; real visible adds G0.*_var
///   deep phi, per layer l = 1..L:
///                  R<l>.up (layer l-1 at the same step), R<l>.self,
///                  R<l>.below, R<l>.bias
/// Deterministic-middle models omit G<L>.below and R<L>.below.
GenerativeParams generative_layout(const ModelSpec& spec);
RecognitionParams recognition_layout(const ModelSpec& spec);

/// Weights i.i.d. N(0, 0.001^2), biases and frozen blocks exactly zero.
Model init_params(const ModelSpec& spec, RngStream& rng);

/// Maps the per-equation symbols of the two-layer and shallow formulations
/// (W1..W7, b1..b3, U1..U6, c1, c2 for two layers) to block names.
std::vector<std::pair<std::string, std::string>> equation_symbols(const ModelSpec& spec);

}  // namespace tsbn
