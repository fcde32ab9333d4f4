#include "tsbn/deep.hpp"

#include <algorithm>
#include <string>

#include "tsbn/error.hpp"
#include "tsbn/window.hpp"
#include "visible_family.hpp"

namespace tsbn::deep {

using detail::accumulate_window_grad;
using detail::add_window_adjoint;
using detail::add_window_product;
using detail::add_window_product_all;

namespace {

using Units = std::vector<Eigen::MatrixXd>;  // index 0 = visible, l = hidden layer l

std::string gname(int l, const char* part) { return "G" + std::to_string(l) + "." + part; }
std::string rname(int l, const char* part) { return "R" + std::to_string(l) + "." + part; }

const Eigen::MatrixXd* gen(const Model& m, int l, const char* part) { return m.theta.find(gname(l, part)); }
const Eigen::MatrixXd* rec(const Model& m, int l, const char* part) { return m.phi.find(rname(l, part)); }

bool stochastic(const ModelSpec& spec, int l) {
  return spec.layer_kinds[static_cast<std::size_t>(l - 1)] == LayerKind::kStochastic;
}

void require_deep(const Model& m) {
  if (!m.spec.is_deep()) throw Error(ErrorCode::kConfigurationMismatch, "deep routine called on a shallow model");
}

// Subgradient convention: the derivative at exactly zero is zero.
Eigen::MatrixXd relu_grad(const Eigen::MatrixXd& x) {
  return x.unaryExpr([](double p) { return p > 0.0 ? 1.0 : 0.0; });
}

void check_states(const Model& m, const Sequence& v, const DeepStates& s) {
  require_deep(m);
  const int L = m.spec.num_layers();
  if (v.rows() != m.spec.visible_dim) throw Error(ErrorCode::kShapeMismatch, "visible frame dimension differs from M");
  if (v.cols() < 1) throw Error(ErrorCode::kShapeMismatch, "sequence must have at least one frame");
  if (static_cast<int>(s.units.size()) != L) throw Error(ErrorCode::kShapeMismatch, "one state matrix per layer");
  for (int l = 1; l <= L; ++l) {
    const auto& u = s.units[static_cast<std::size_t>(l - 1)];
    if (u.rows() != m.spec.dim(l) || u.cols() != v.cols())
      throw Error(ErrorCode::kShapeMismatch, "layer " + std::to_string(l) + " state has the wrong shape");
    if (!stochastic(m.spec, l)) continue;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double x = u.data()[i];
      if (x != 0.0 && x != 1.0) throw Error(ErrorCode::kInvalidValue, "stochastic state entry outside {0,1}");
    }
  }
  validate_frames(v, m.spec.likelihood);
}

void require_no_top_cross_blocks(const Model& m) {
  const int L = m.spec.num_layers();
  for (const auto* blk : {gen(m, L, "below"), rec(m, L, "below")}) {
    if (blk && !blk->isZero(0.0)) {
      throw Error(ErrorCode::kConfigurationMismatch,
                  "deterministic middle layers require zero top-layer cross-step weights");
    }
  }
}

// Generative preactivation of layer l for all t, given every layer's units.
Eigen::MatrixXd gen_preact(const Model& m, const Units& x, int l) {
  const int n = m.spec.order;
  const Eigen::Index T = x[0].cols();
  Eigen::MatrixXd p(m.spec.dim(l), T);
  p.colwise() = gen(m, l, "bias")->col(0);
  if (const auto* down = gen(m, l, "down")) p.noalias() += *down * x[static_cast<std::size_t>(l + 1)];
  add_window_product_all(p, *gen(m, l, "self"), x[static_cast<std::size_t>(l)], n);
  if (const auto* below = gen(m, l, "below")) add_window_product_all(p, *below, x[static_cast<std::size_t>(l - 1)], n);
  return p;
}

Eigen::MatrixXd gen_log_scale(const Model& m, const Units& x) {
  Eigen::MatrixXd p(m.spec.visible_dim, x[0].cols());
  p.colwise() = gen(m, 0, "bias_var")->col(0);
  p.noalias() += *gen(m, 0, "down_var") * x[1];
  add_window_product_all(p, *gen(m, 0, "self_var"), x[0], m.spec.order);
  return p;
}

Eigen::MatrixXd rec_preact(const Model& m, const Units& x, int l) {
  const int n = m.spec.order;
  const Eigen::Index T = x[0].cols();
  Eigen::MatrixXd p(m.spec.dim(l), T);
  p.colwise() = rec(m, l, "bias")->col(0);
  p.noalias() += *rec(m, l, "up") * x[static_cast<std::size_t>(l - 1)];
  add_window_product_all(p, *rec(m, l, "self"), x[static_cast<std::size_t>(l)], n);
  if (const auto* below = rec(m, l, "below")) add_window_product_all(p, *below, x[static_cast<std::size_t>(l - 1)], n);
  return p;
}

Eigen::VectorXd bernoulli_columns(const Eigen::MatrixXd& x, const Eigen::MatrixXd& psi) {
  Eigen::VectorXd out(x.cols());
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) acc += bernoulli_logpmf(x(i, t), psi(i, t));
    out[t] = acc;
  }
  return out;
}

// Generative-side units: stochastic layers from the states, deterministic
// middles recomputed from theta.
Units generative_units(const Model& m, const Sequence& v, const DeepStates& s, DetTrajectories* det) {
  const int L = m.spec.num_layers();
  Units x(static_cast<std::size_t>(L + 1));
  x[0] = v;
  for (int l = 1; l <= L; ++l) x[static_cast<std::size_t>(l)] = s.units[static_cast<std::size_t>(l - 1)];
  if (m.spec.deterministic_middle()) {
    DetTrajectories d = det_forward(m, v, s.top(), Side::kGenerative);
    for (int l = 1; l < L; ++l) x[static_cast<std::size_t>(l)] = d.units[static_cast<std::size_t>(l - 1)];
    if (det) *det = std::move(d);
  }
  return x;
}

Units recognition_units(const Model& m, const Sequence& v, const DeepStates& s, DetTrajectories* det) {
  const int L = m.spec.num_layers();
  Units x(static_cast<std::size_t>(L + 1));
  x[0] = v;
  for (int l = 1; l <= L; ++l) x[static_cast<std::size_t>(l)] = s.units[static_cast<std::size_t>(l - 1)];
  if (m.spec.deterministic_middle()) {
    DetTrajectories d = det_forward(m, v, s.top(), Side::kRecognition);
    for (int l = 1; l < L; ++l) x[static_cast<std::size_t>(l)] = d.units[static_cast<std::size_t>(l - 1)];
    if (det) *det = std::move(d);
  }
  return x;
}

void add_gen_grads(const Model& m, GenerativeParams& g, int l, const Eigen::MatrixXd& residual, const Units& x) {
  const int n = m.spec.order;
  if (auto* down = g.find(gname(l, "down"))) down->noalias() += residual * x[static_cast<std::size_t>(l + 1)].transpose();
  accumulate_window_grad(g.at(gname(l, "self")), residual, x[static_cast<std::size_t>(l)], n);
  if (auto* below = g.find(gname(l, "below")))
    accumulate_window_grad(*below, residual, x[static_cast<std::size_t>(l - 1)], n);
  g.at(gname(l, "bias")) += residual.rowwise().sum();
}

void add_rec_grads(const Model& m, RecognitionParams& g, int l, const Eigen::MatrixXd& residual, const Units& x) {
  const int n = m.spec.order;
  g.at(rname(l, "up")).noalias() += residual * x[static_cast<std::size_t>(l - 1)].transpose();
  accumulate_window_grad(g.at(rname(l, "self")), residual, x[static_cast<std::size_t>(l)], n);
  if (auto* below = g.find(rname(l, "below")))
    accumulate_window_grad(*below, residual, x[static_cast<std::size_t>(l - 1)], n);
  g.at(rname(l, "bias")) += residual.rowwise().sum();
}

struct VisiblePass {
  Eigen::MatrixXd logits;
  Eigen::MatrixXd log_scale;
  detail::VisibleTerms terms;
};

VisiblePass visible_pass(const Model& m, const Units& x) {
  VisiblePass out;
  out.logits = gen_preact(m, x, 0);
  if (m.spec.likelihood == Likelihood::kReal) out.log_scale = gen_log_scale(m, x);
  detail::visible_terms(m.spec.likelihood, x[0], out.logits, out.log_scale, out.terms);
  return out;
}

void add_visible_grads(const Model& m, GenerativeParams& g, const VisiblePass& vis, const Units& x) {
  add_gen_grads(m, g, 0, vis.terms.residual, x);
  if (m.spec.likelihood == Likelihood::kReal) {
    g.at(gname(0, "down_var")).noalias() += vis.terms.log_scale_residual * x[1].transpose();
    accumulate_window_grad(g.at(gname(0, "self_var")), vis.terms.log_scale_residual, x[0], m.spec.order);
    g.at(gname(0, "bias_var")) += vis.terms.log_scale_residual.rowwise().sum();
  }
}

}  // namespace

Sample deep_sample(const Model& m, int T, RngStream& rng, const SampleOptions& options) {
  require_deep(m);
  if (T < 1) throw Error(ErrorCode::kInvalidArgument, "deep_sample: T must be >= 1");
  const int L = m.spec.num_layers();
  const int n = m.spec.order;
  Units x(static_cast<std::size_t>(L + 1));
  for (int l = 0; l <= L; ++l) x[static_cast<std::size_t>(l)] = Eigen::MatrixXd::Zero(m.spec.dim(l), T);

  for (int t = 0; t < T; ++t) {
    for (int l = L; l >= 1; --l) {
      auto& xl = x[static_cast<std::size_t>(l)];
      Eigen::VectorXd p = gen(m, l, "bias")->col(0);
      if (const auto* down = gen(m, l, "down")) p.noalias() += *down * x[static_cast<std::size_t>(l + 1)].col(t);
      add_window_product(p, *gen(m, l, "self"), xl, t, n);
      if (const auto* below = gen(m, l, "below")) add_window_product(p, *below, x[static_cast<std::size_t>(l - 1)], t, n);
      if (stochastic(m.spec, l)) {
        for (Eigen::Index j = 0; j < p.size(); ++j) xl(j, t) = rng.bernoulli(sigmoid(p[j])) ? 1.0 : 0.0;
      } else {
        xl.col(t) = p.cwiseMax(0.0);
      }
    }
    Eigen::VectorXd logits = gen(m, 0, "bias")->col(0);
    logits.noalias() += *gen(m, 0, "down") * x[1].col(t);
    add_window_product(logits, *gen(m, 0, "self"), x[0], t, n);
    Eigen::VectorXd log_scale;
    if (m.spec.likelihood == Likelihood::kReal) {
      log_scale = gen(m, 0, "bias_var")->col(0);
      log_scale.noalias() += *gen(m, 0, "down_var") * x[1].col(t);
      add_window_product(log_scale, *gen(m, 0, "self_var"), x[0], t, n);
    }
    detail::sample_visible(m.spec.likelihood, logits, log_scale, options.count_total, rng, x[0].col(t));
  }

  Sample out;
  out.v = std::move(x[0]);
  for (int l = 1; l <= L; ++l) out.states.units.push_back(std::move(x[static_cast<std::size_t>(l)]));
  return out;
}

DeepStates sample_posterior(const Model& m, const Sequence& v, RngStream& rng) {
  require_deep(m);
  if (v.rows() != m.spec.visible_dim) throw Error(ErrorCode::kShapeMismatch, "visible frame dimension differs from M");
  const int L = m.spec.num_layers();
  const int n = m.spec.order;
  const Eigen::Index T = v.cols();
  Units x(static_cast<std::size_t>(L + 1));
  x[0] = v;
  for (int l = 1; l <= L; ++l) x[static_cast<std::size_t>(l)] = Eigen::MatrixXd::Zero(m.spec.dim(l), T);

  DeepStates out;
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int l = 1; l <= L; ++l) {
      auto& xl = x[static_cast<std::size_t>(l)];
      const auto& xb = x[static_cast<std::size_t>(l - 1)];
      Eigen::VectorXd p = rec(m, l, "bias")->col(0);
      p.noalias() += *rec(m, l, "up") * xb.col(t);
      add_window_product(p, *rec(m, l, "self"), xl, static_cast<int>(t), n);
      if (const auto* below = rec(m, l, "below")) add_window_product(p, *below, xb, static_cast<int>(t), n);
      if (stochastic(m.spec, l)) {
        for (Eigen::Index j = 0; j < p.size(); ++j) {
          const double bit = rng.bernoulli(sigmoid(p[j])) ? 1.0 : 0.0;
          xl(j, t) = bit;
          out.log_q += bernoulli_logpmf(bit, p[j]);
        }
      } else {
        xl.col(t) = p.cwiseMax(0.0);
      }
    }
  }
  for (int l = 1; l <= L; ++l) out.units.push_back(std::move(x[static_cast<std::size_t>(l)]));
  return out;
}

DetTrajectories det_forward(const Model& m, const Sequence& v, const Eigen::MatrixXd& top, Side side) {
  require_deep(m);
  if (!m.spec.deterministic_middle())
    throw Error(ErrorCode::kConfigurationMismatch, "det_forward requires deterministic middle layers");
  require_no_top_cross_blocks(m);
  const int L = m.spec.num_layers();
  const int n = m.spec.order;
  const Eigen::Index T = v.cols();
  if (side == Side::kGenerative && (top.rows() != m.spec.dim(L) || top.cols() != T))
    throw Error(ErrorCode::kShapeMismatch, "top-layer samples have the wrong shape");

  Units x(static_cast<std::size_t>(L + 1));
  x[0] = v;
  for (int l = 1; l < L; ++l) x[static_cast<std::size_t>(l)] = Eigen::MatrixXd::Zero(m.spec.dim(l), T);
  x[static_cast<std::size_t>(L)] = side == Side::kGenerative ? top : Eigen::MatrixXd();
  DetTrajectories out;
  out.preacts.resize(static_cast<std::size_t>(L - 1));
  for (int l = 1; l < L; ++l) out.preacts[static_cast<std::size_t>(l - 1)] = Eigen::MatrixXd::Zero(m.spec.dim(l), T);

  for (Eigen::Index t = 0; t < T; ++t) {
    const int ti = static_cast<int>(t);
    if (side == Side::kGenerative) {
      for (int l = L - 1; l >= 1; --l) {
        auto& xl = x[static_cast<std::size_t>(l)];
        auto p = out.preacts[static_cast<std::size_t>(l - 1)].col(t);
        p = gen(m, l, "bias")->col(0);
        p.noalias() += *gen(m, l, "down") * x[static_cast<std::size_t>(l + 1)].col(t);
        add_window_product(p, *gen(m, l, "self"), xl, ti, n);
        add_window_product(p, *gen(m, l, "below"), x[static_cast<std::size_t>(l - 1)], ti, n);
        xl.col(t) = p.cwiseMax(0.0);
      }
    } else {
      for (int l = 1; l < L; ++l) {
        auto& xl = x[static_cast<std::size_t>(l)];
        const auto& xb = x[static_cast<std::size_t>(l - 1)];
        auto p = out.preacts[static_cast<std::size_t>(l - 1)].col(t);
        p = rec(m, l, "bias")->col(0);
        p.noalias() += *rec(m, l, "up") * xb.col(t);
        add_window_product(p, *rec(m, l, "self"), xl, ti, n);
        add_window_product(p, *rec(m, l, "below"), xb, ti, n);
        xl.col(t) = p.cwiseMax(0.0);
      }
    }
  }
  for (int l = 1; l < L; ++l) out.units.push_back(std::move(x[static_cast<std::size_t>(l)]));
  return out;
}

StepTerms step_terms(const Model& m, const Sequence& v, const DeepStates& s) {
  check_states(m, v, s);
  const int L = m.spec.num_layers();
  StepTerms out;
  const Units xg = generative_units(m, v, s, nullptr);
  out.log_p = visible_pass(m, xg).terms.log_p;
  for (int l = 1; l <= L; ++l) {
    if (stochastic(m.spec, l)) out.log_p += bernoulli_columns(xg[static_cast<std::size_t>(l)], gen_preact(m, xg, l));
  }
  const Units xr = recognition_units(m, v, s, nullptr);
  out.log_q = Eigen::VectorXd::Zero(v.cols());
  for (int l = 1; l <= L; ++l) {
    if (stochastic(m.spec, l)) out.log_q += bernoulli_columns(xr[static_cast<std::size_t>(l)], rec_preact(m, xr, l));
  }
  return out;
}

double log_joint(const Model& m, const Sequence& v, const DeepStates& s) { return step_terms(m, v, s).log_p.sum(); }

double log_q(const Model& m, const Sequence& v, const DeepStates& s) { return step_terms(m, v, s).log_q.sum(); }

Eigen::VectorXd elbo_terms(const Model& m, const Sequence& v, const DeepStates& s) {
  const StepTerms st = step_terms(m, v, s);
  return st.log_p - st.log_q;
}

Gradients grads_stochastic(const Model& m, const Sequence& v, const DeepStates& s, const Eigen::VectorXd& weights) {
  check_states(m, v, s);
  if (m.spec.deterministic_middle())
    throw Error(ErrorCode::kConfigurationMismatch, "grads_stochastic called on a deterministic-middle model");
  if (weights.size() != v.cols()) throw Error(ErrorCode::kShapeMismatch, "one weight per time step is required");
  const int L = m.spec.num_layers();
  Gradients g{GenerativeParams(m.theta.zeros_like()), RecognitionParams(m.phi.zeros_like())};

  const Units x = generative_units(m, v, s, nullptr);
  for (int l = 1; l <= L; ++l) {
    const auto& xl = x[static_cast<std::size_t>(l)];
    add_gen_grads(m, g.theta, l, xl - sigmoid(gen_preact(m, x, l)), x);
  }
  add_visible_grads(m, g.theta, visible_pass(m, x), x);

  for (int l = 1; l <= L; ++l) {
    const auto& xl = x[static_cast<std::size_t>(l)];
    const Eigen::MatrixXd residual = (xl - sigmoid(rec_preact(m, x, l))) * weights.asDiagonal();
    add_rec_grads(m, g.phi, l, residual, x);
  }
  g.theta.mask_frozen();
  g.phi.mask_frozen();
  return g;
}

Gradients bptt_grads(const Model& m, const Sequence& v, const DeepStates& s, const Eigen::VectorXd& weights) {
  check_states(m, v, s);
  if (!m.spec.deterministic_middle())
    throw Error(ErrorCode::kConfigurationMismatch, "bptt_grads requires deterministic middle layers");
  if (weights.size() != v.cols()) throw Error(ErrorCode::kShapeMismatch, "one weight per time step is required");
  const int L = m.spec.num_layers();
  const int n = m.spec.order;
  const Eigen::Index T = v.cols();
  const auto& z = s.top();
  Gradients g{GenerativeParams(m.theta.zeros_like()), RecognitionParams(m.phi.zeros_like())};

  // Generative side: log p depends on h^g only through the visible layer.
  {
    DetTrajectories det;
    const Units x = generative_units(m, v, s, &det);
    add_gen_grads(m, g.theta, L, z - sigmoid(gen_preact(m, x, L)), x);
    const VisiblePass vis = visible_pass(m, x);
    add_visible_grads(m, g.theta, vis, x);

    // delta[l-1] = d log p / d (preactivation of layer l); the adjoint of the
    // state is assembled from the visible layer (l = 1) or the layer below,
    // the layer's own future steps, and the layer above's future steps.
    std::vector<Eigen::MatrixXd> delta(static_cast<std::size_t>(L - 1));
    std::vector<Eigen::MatrixXd> fprime(static_cast<std::size_t>(L - 1));
    for (int l = 1; l < L; ++l) {
      delta[static_cast<std::size_t>(l - 1)] = Eigen::MatrixXd::Zero(m.spec.dim(l), T);
      fprime[static_cast<std::size_t>(l - 1)] = relu_grad(det.preacts[static_cast<std::size_t>(l - 1)]);
    }
    const Eigen::MatrixXd& w_vis = *gen(m, 0, "down");
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      const int ti = static_cast<int>(t);
      for (int l = 1; l < L; ++l) {
        Eigen::VectorXd adj;
        if (l == 1) {
          adj = w_vis.transpose() * vis.terms.residual.col(t);
          if (m.spec.likelihood == Likelihood::kReal)
            adj.noalias() += gen(m, 0, "down_var")->transpose() * vis.terms.log_scale_residual.col(t);
        } else {
          adj = gen(m, l - 1, "down")->transpose() * delta[static_cast<std::size_t>(l - 2)].col(t);
        }
        add_window_adjoint(adj, *gen(m, l, "self"), delta[static_cast<std::size_t>(l - 1)], ti, n);
        if (l + 1 < L) add_window_adjoint(adj, *gen(m, l + 1, "below"), delta[static_cast<std::size_t>(l)], ti, n);
        delta[static_cast<std::size_t>(l - 1)].col(t) =
            adj.cwiseProduct(fprime[static_cast<std::size_t>(l - 1)].col(t));
      }
    }
    for (int l = 1; l < L; ++l) add_gen_grads(m, g.theta, l, delta[static_cast<std::size_t>(l - 1)], x);
  }

  // Recognition side: log q depends on h^r through the top layer's input.
  {
    DetTrajectories det;
    const Units x = recognition_units(m, v, s, &det);
    const Eigen::MatrixXd top_residual = (z - sigmoid(rec_preact(m, x, L))) * weights.asDiagonal();
    add_rec_grads(m, g.phi, L, top_residual, x);

    std::vector<Eigen::MatrixXd> delta(static_cast<std::size_t>(L - 1));
    std::vector<Eigen::MatrixXd> fprime(static_cast<std::size_t>(L - 1));
    for (int l = 1; l < L; ++l) {
      delta[static_cast<std::size_t>(l - 1)] = Eigen::MatrixXd::Zero(m.spec.dim(l), T);
      fprime[static_cast<std::size_t>(l - 1)] = relu_grad(det.preacts[static_cast<std::size_t>(l - 1)]);
    }
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      const int ti = static_cast<int>(t);
      for (int l = L - 1; l >= 1; --l) {
        Eigen::VectorXd adj;
        if (l == L - 1) {
          adj = rec(m, L, "up")->transpose() * top_residual.col(t);
        } else {
          adj = rec(m, l + 1, "up")->transpose() * delta[static_cast<std::size_t>(l)].col(t);
        }
        add_window_adjoint(adj, *rec(m, l, "self"), delta[static_cast<std::size_t>(l - 1)], ti, n);
        if (l + 1 < L) add_window_adjoint(adj, *rec(m, l + 1, "below"), delta[static_cast<std::size_t>(l)], ti, n);
        delta[static_cast<std::size_t>(l - 1)].col(t) =
            adj.cwiseProduct(fprime[static_cast<std::size_t>(l - 1)].col(t));
      }
    }
    for (int l = 1; l < L; ++l) add_rec_grads(m, g.phi, l, delta[static_cast<std::size_t>(l - 1)], x);
  }
  g.theta.mask_frozen();
  g.phi.mask_frozen();
  return g;
}

Gradients grads(const Model& m, const Sequence& v, const DeepStates& s, const Eigen::VectorXd& weights) {
  return m.spec.deterministic_middle() ? bptt_grads(m, v, s, weights) : grads_stochastic(m, v, s, weights);
}

Eigen::MatrixXd visible_expectations(const Model& m, const Sequence& v, const DeepStates& s) {
  check_states(m, v, s);
  const Units x = generative_units(m, v, s, nullptr);
  const Eigen::MatrixXd logits = gen_preact(m, x, 0);
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.cols(); ++t)
    out.col(t) = detail::visible_expectation(m.spec.likelihood, logits.col(t));
  return out;
}

Eigen::MatrixXd predict_from_history(const Model& m, const Sequence& v, const DeepStates& history, PredictMode mode,
                                     RngStream& rng) {
  check_states(m, v, history);
  const int L = m.spec.num_layers();
  const int n = m.spec.order;
  const Eigen::Index T = v.cols();
  // Windows at step t read only columns < t, so the posterior history (with
  // deterministic layers rebuilt on the generative side) is safe to reuse.
  const Units x = generative_units(m, v, history, nullptr);
  Eigen::MatrixXd out(m.spec.visible_dim, std::max<Eigen::Index>(T - 1, 0));
  std::vector<Eigen::VectorXd> cur(static_cast<std::size_t>(L + 2));
  for (Eigen::Index t = 1; t < T; ++t) {
    const int ti = static_cast<int>(t);
    for (int l = L; l >= 1; --l) {
      Eigen::VectorXd p = gen(m, l, "bias")->col(0);
      if (const auto* down = gen(m, l, "down")) p.noalias() += *down * cur[static_cast<std::size_t>(l + 1)];
      add_window_product(p, *gen(m, l, "self"), x[static_cast<std::size_t>(l)], ti, n);
      if (const auto* below = gen(m, l, "below")) add_window_product(p, *below, x[static_cast<std::size_t>(l - 1)], ti, n);
      auto& c = cur[static_cast<std::size_t>(l)];
      if (!stochastic(m.spec, l)) {
        c = p.cwiseMax(0.0);
      } else if (mode == PredictMode::kMean) {
        c = p.unaryExpr([](double a) { return sigmoid(a); });
      } else {
        c.resize(p.size());
        for (Eigen::Index j = 0; j < p.size(); ++j) c[j] = rng.bernoulli(sigmoid(p[j])) ? 1.0 : 0.0;
      }
    }
    Eigen::VectorXd logits = gen(m, 0, "bias")->col(0);
    logits.noalias() += *gen(m, 0, "down") * cur[1];
    add_window_product(logits, *gen(m, 0, "self"), v, ti, n);
    out.col(t - 1) = detail::visible_expectation(m.spec.likelihood, logits);
  }
  return out;
}

}  // namespace tsbn::deep
