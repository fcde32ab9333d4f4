#include "tsbn/params.hpp"

#include <algorithm>

#include "tsbn/error.hpp"

namespace tsbn {

std::string_view to_string(Likelihood l) {
  switch (l) {
    case Likelihood::kBinary: return "binary";
    case Likelihood::kReal: return "real";
    case Likelihood::kCount: return "count";
  }
  return "?";
}

std::string_view to_string(LayerKind k) {
  return k == LayerKind::kStochastic ? "stochastic" : "deterministic";
}

Likelihood parse_likelihood(std::string_view s) {
  if (s == "binary") return Likelihood::kBinary;
  if (s == "real") return Likelihood::kReal;
  if (s == "count") return Likelihood::kCount;
  throw Error(ErrorCode::kInvalidArgument, "unknown likelihood '" + std::string(s) + "'");
}

LayerKind parse_layer_kind(std::string_view s) {
  if (s == "stochastic") return LayerKind::kStochastic;
  if (s == "deterministic") return LayerKind::kDeterministic;
  throw Error(ErrorCode::kInvalidArgument, "unknown layer kind '" + std::string(s) + "'");
}

ModelSpec ModelSpec::shallow(int visible_dim, int hidden_dim, int order, Likelihood likelihood) {
  ModelSpec s;
  s.visible_dim = visible_dim;
  s.layer_dims = {hidden_dim};
  s.layer_kinds = {LayerKind::kStochastic};
  s.order = order;
  s.likelihood = likelihood;
  return s;
}

ModelSpec ModelSpec::deep(int visible_dim, std::vector<int> layer_dims, LayerKind middle_kind, int order,
                          Likelihood likelihood) {
  ModelSpec s;
  s.visible_dim = visible_dim;
  s.layer_kinds.assign(layer_dims.size(), middle_kind);
  if (!s.layer_kinds.empty()) s.layer_kinds.back() = LayerKind::kStochastic;
  s.layer_dims = std::move(layer_dims);
  s.order = order;
  s.likelihood = likelihood;
  return s;
}

bool ModelSpec::deterministic_middle() const {
  return num_layers() > 1 && layer_kinds.front() == LayerKind::kDeterministic;
}

void ModelSpec::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, "ModelSpec: " + m); };
  if (visible_dim <= 0) fail("visible_dim must be positive");
  if (layer_dims.empty()) fail("at least one hidden layer is required");
  if (layer_kinds.size() != layer_dims.size()) fail("layer_kinds and layer_dims differ in length");
  if (std::any_of(layer_dims.begin(), layer_dims.end(), [](int d) { return d <= 0; }))
    fail("layer sizes must be positive");
  if (layer_kinds.back() != LayerKind::kStochastic) fail("top layer must be stochastic");
  if (order < 1) fail("order must be >= 1");
  for (std::size_t i = 1; i + 1 < layer_kinds.size(); ++i) {
    if (layer_kinds[i] != layer_kinds.front()) fail("middle layers must all share one kind");
  }
}

namespace {

std::string gen_name(int layer, const char* part) { return "G" + std::to_string(layer) + "." + part; }
std::string rec_name(int layer, const char* part) { return "R" + std::to_string(layer) + "." + part; }

}  // namespace

GenerativeParams generative_layout(const ModelSpec& spec) {
  spec.validate();
  ParamSet p;
  const int n = spec.order;
  const int M = spec.visible_dim;
  const bool real = spec.likelihood == Likelihood::kReal;
  const bool hist = spec.visible_history;
  if (!spec.is_deep()) {
    const int J = spec.layer_dims[0];
    p.add("W1", J, n * J, BlockRole::kWeight);
    p.add("W2", M, J, BlockRole::kWeight);
    p.add("W3", J, n * M, BlockRole::kWeight, hist);
    p.add("W4", M, n * M, BlockRole::kWeight, hist);
    p.add("b", J, 1, BlockRole::kBias);
    p.add("c", M, 1, BlockRole::kBias);
    if (real) {
      p.add("W2p", M, J, BlockRole::kWeight);
      p.add("W4p", M, n * M, BlockRole::kWeight, hist);
      p.add("cp", M, 1, BlockRole::kBias);
    }
    return GenerativeParams(std::move(p));
  }
  const int L = spec.num_layers();
  const bool det = spec.deterministic_middle();
  for (int l = L; l >= 0; --l) {
    const int d = spec.dim(l);
    if (l < L) p.add(gen_name(l, "down"), d, spec.dim(l + 1), BlockRole::kWeight);
    p.add(gen_name(l, "self"), d, n * d, BlockRole::kWeight, l != 0 || hist);
    if (l >= 1 && !(det && l == L)) {
      p.add(gen_name(l, "below"), d, n * spec.dim(l - 1), BlockRole::kWeight, l != 1 || hist);
    }
    p.add(gen_name(l, "bias"), d, 1, BlockRole::kBias);
  }
  if (real) {
    p.add(gen_name(0, "down_var"), M, spec.dim(1), BlockRole::kWeight);
    p.add(gen_name(0, "self_var"), M, n * M, BlockRole::kWeight, hist);
    p.add(gen_name(0, "bias_var"), M, 1, BlockRole::kBias);
  }
  return GenerativeParams(std::move(p));
}

RecognitionParams recognition_layout(const ModelSpec& spec) {
  spec.validate();
  ParamSet p;
  const int n = spec.order;
  const int M = spec.visible_dim;
  if (!spec.is_deep()) {
    const int J = spec.layer_dims[0];
    p.add("U1", J, n * J, BlockRole::kWeight);
    p.add("U2", J, M, BlockRole::kWeight);
    p.add("U3", J, n * M, BlockRole::kWeight);
    p.add("d", J, 1, BlockRole::kBias);
    return RecognitionParams(std::move(p));
  }
  const int L = spec.num_layers();
  const bool det = spec.deterministic_middle();
  for (int l = L; l >= 1; --l) {
    const int d = spec.dim(l);
    p.add(rec_name(l, "up"), d, spec.dim(l - 1), BlockRole::kWeight);
    p.add(rec_name(l, "self"), d, n * d, BlockRole::kWeight);
    if (!(det && l == L)) p.add(rec_name(l, "below"), d, n * spec.dim(l - 1), BlockRole::kWeight);
    p.add(rec_name(l, "bias"), d, 1, BlockRole::kBias);
  }
  return RecognitionParams(std::move(p));
}

namespace {

void fill_gaussian(ParamSet& p, RngStream& rng) {
  for (auto& b : p.blocks()) {
    if (b.role != BlockRole::kWeight || !b.trainable) continue;
    for (Eigen::Index i = 0; i < b.value.size(); ++i) b.value.data()[i] = 0.001 * rng.normal();
  }
}

}  // namespace

Model init_params(const ModelSpec& spec, RngStream& rng) {
  Model m{spec, generative_layout(spec), recognition_layout(spec)};
  fill_gaussian(m.theta, rng);
  fill_gaussian(m.phi, rng);
  return m;
}

std::vector<std::pair<std::string, std::string>> equation_symbols(const ModelSpec& spec) {
  std::vector<std::pair<std::string, std::string>> out;
  auto add_all = [&out](const ParamSet& p) {
    for (const auto& b : p.blocks()) out.emplace_back(b.name, b.name);
  };
  if (!spec.is_deep()) {
    add_all(generative_layout(spec));
    add_all(recognition_layout(spec));
    return out;
  }
  if (spec.num_layers() != 2) {
    add_all(generative_layout(spec));
    add_all(recognition_layout(spec));
    return out;
  }
  const bool det = spec.deterministic_middle();
  out = {{"W1", "G2.self"}, {"W2", "G1.down"}, {"W4", "G1.self"}, {"W5", "G0.down"},
         {"W6", "G1.below"}, {"W7", "G0.self"}, {"b1", "G2.bias"}, {"b2", "G1.bias"},
         {"b3", "G0.bias"}, {"U1", "R2.self"}, {"U2", "R2.up"}, {"U4", "R1.self"},
         {"U5", "R1.up"}, {"U6", "R1.below"}, {"c1", "R2.bias"}, {"c2", "R1.bias"}};
  if (!det) {
    out.emplace_back("W3", "G2.below");
    out.emplace_back("U3", "R2.below");
  }
  if (spec.likelihood == Likelihood::kReal) {
    out.emplace_back("W5p", "G0.down_var");
    out.emplace_back("W7p", "G0.self_var");
    out.emplace_back("b3p", "G0.bias_var");
  }
  return out;
}

}  // namespace tsbn
