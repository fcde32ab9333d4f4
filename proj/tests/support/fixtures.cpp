#include "fixtures.hpp"

namespace tsbn::testing {

Model random_model(const ModelSpec& spec, RngStream& rng, double scale) {
  Model m{spec, generative_layout(spec), recognition_layout(spec)};
  for (ParamSet* p : {static_cast<ParamSet*>(&m.theta), static_cast<ParamSet*>(&m.phi)}) {
    for (auto& blk : p->blocks()) {
      if (!blk.trainable) continue;
      for (Eigen::Index i = 0; i < blk.value.size(); ++i) blk.value.data()[i] = scale * rng.normal();
    }
  }
  return m;
}

Eigen::MatrixXd random_bits(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  return x;
}

Sequence random_sequence(Likelihood lik, int M, int T, RngStream& rng) {
  Sequence v(M, T);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    switch (lik) {
      case Likelihood::kBinary: v.data()[i] = rng.bernoulli(0.5) ? 1.0 : 0.0; break;
      case Likelihood::kReal: v.data()[i] = rng.normal(); break;
      case Likelihood::kCount: v.data()[i] = static_cast<double>(rng.below(4)); break;
    }
  }
  return v;
}

deep::DeepStates random_deep_states(const Model& m, int T, RngStream& rng) {
  deep::DeepStates s;
  for (int l = 1; l <= m.spec.num_layers(); ++l) {
    const bool stochastic = m.spec.layer_kinds[static_cast<std::size_t>(l - 1)] == LayerKind::kStochastic;
    s.units.push_back(stochastic ? random_bits(m.spec.dim(l), T, rng) : Eigen::MatrixXd::Zero(m.spec.dim(l), T));
  }
  return s;
}

}  // namespace tsbn::testing
