#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/fisher_f.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tsbn/checkpoint.hpp"
#include "tsbn/data.hpp"
#include "tsbn/evaluation.hpp"
#include "tsbn/model.hpp"
#include "tsbn/shallow.hpp"
#include "tsbn/trainer.hpp"

namespace {

using namespace tsbn;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

constexpr Likelihood kFamilies[] = {Likelihood::kBinary, Likelihood::kReal, Likelihood::kCount};

// ---------------------------------------------------------------------------
// 1. Analytic gradients against central differences.

struct GradCase {
  std::string name;
  double worst = 0.0;
  std::string where;
  int models = 0;
};

void check_model(GradCase& c, Model m, const Sequence& v, const LatentStates& states, const Eigen::VectorXd& w,
                 const std::function<double(const Model&)>& log_p, const std::function<double(const Model&)>& wlog_q) {
  const ModelGradients g = gradients(m, v, states, w);
  const auto rt = testing::check_gradient(m.theta, g.theta, [&] { return log_p(m); });
  const auto rp = testing::check_gradient(m.phi, g.phi, [&] { return wlog_q(m); });
  for (const auto* r : {&rt, &rp}) {
    if (r->max_rel_error > c.worst) {
      c.worst = r->max_rel_error;
      c.where = r->worst;
    }
  }
  ++c.models;
}

Outcome criterion_gradients() {
  const auto t0 = Clock::now();
  RngStream rng(0x6772);
  GradCase shallow_case{"shallow", 0.0, "", 0};
  GradCase stoch_case{"deep-stochastic", 0.0, "", 0};
  GradCase det_case{"deep-deterministic", 0.0, "", 0};
  for (Likelihood lik : kFamilies) {
    for (int order : {1, 2}) {
      for (int trial = 0; trial < 6; ++trial) {
        const int J = 1 + static_cast<int>(rng.below(4));
        const int K = 1 + static_cast<int>(rng.below(4));
        const int M = 1 + static_cast<int>(rng.below(5));
        const int T = 1 + static_cast<int>(rng.below(6));
        const Sequence v = testing::random_sequence(lik, M, T, rng);
        const Eigen::VectorXd w = Eigen::VectorXd::NullaryExpr(T, [&] { return rng.normal(); });

        {
          const Model m = testing::random_model(ModelSpec::shallow(M, J, order, lik), rng);
          const Eigen::MatrixXd h = testing::random_bits(J, T, rng);
          const LatentStates s = shallow::HiddenStates{h, 0.0};
          check_model(
              shallow_case, m, v, s, w, [&](const Model& x) { return testing::shallow_loop_terms(x, v, h).sum_log_p(); },
              [&](const Model& x) {
                const auto terms = testing::shallow_loop_terms(x, v, h);
                return Eigen::Map<const Eigen::VectorXd>(terms.log_q.data(), T).dot(w);
              });
        }
        {
          const Model m = testing::random_model(ModelSpec::deep(M, {J, K}, LayerKind::kStochastic, order, lik), rng);
          const deep::DeepStates s = testing::random_deep_states(m, T, rng);
          check_model(
              stoch_case, m, v, s, w,
              [&](const Model& x) {
                return testing::two_layer_stochastic_loop_terms(x, v, s.units[0], s.units[1]).sum_log_p();
              },
              [&](const Model& x) {
                const auto terms = testing::two_layer_stochastic_loop_terms(x, v, s.units[0], s.units[1]);
                return Eigen::Map<const Eigen::VectorXd>(terms.log_q.data(), T).dot(w);
              });
        }
        {
          const Model m = testing::random_model(ModelSpec::deep(M, {J, K}, LayerKind::kDeterministic, order, lik), rng);
          const deep::DeepStates s = testing::random_deep_states(m, T, rng);
          check_model(
              det_case, m, v, s, w,
              [&](const Model& x) { return testing::two_layer_deterministic_loop_terms(x, v, s.top()).sum_log_p(); },
              [&](const Model& x) {
                const auto terms = testing::two_layer_deterministic_loop_terms(x, v, s.top());
                return Eigen::Map<const Eigen::VectorXd>(terms.log_q.data(), T).dot(w);
              });
        }
        {
          // Three hidden layers, checked against the library's own forward pass.
          for (LayerKind kind : {LayerKind::kStochastic, LayerKind::kDeterministic}) {
            const Model m = testing::random_model(ModelSpec::deep(M, {J, K, 2}, kind, order, lik), rng);
            const deep::DeepStates s = testing::random_deep_states(m, T, rng);
            check_model(
                kind == LayerKind::kStochastic ? stoch_case : det_case, m, v, s, w,
                [&](const Model& x) { return deep::step_terms(x, v, s).log_p.sum(); },
                [&](const Model& x) { return deep::step_terms(x, v, s).log_q.dot(w); });
          }
        }
      }
    }
  }
  const double elapsed = seconds_since(t0);
  bool ok = elapsed < 120.0;
  std::ostringstream d;
  for (const GradCase* c : {&shallow_case, &stoch_case, &det_case}) {
    ok = ok && c->worst < 1e-4;
    d << c->name << " max rel err " << fmt("%.2e", c->worst) << " over " << c->models << " models";
    if (c->worst >= 1e-4) d << " (" << c->where << ")";
    d << "; ";
  }
  d << fmt("tolerance 1e-4; %.1f s (limit 120 s)", elapsed);
  return {ok, d.str()};
}

// ---------------------------------------------------------------------------
// 2. Bound validity against exhaustive enumeration.

Outcome criterion_bound() {
  const auto t0 = Clock::now();
  RngStream rng(0x626e64);
  int triples = 0;
  int order_violations = 0;
  int mc_misses = 0;
  double worst_gap = -1e300;
  double worst_z = 0.0;
  for (int i = 0; i < 60; ++i) {
    const Likelihood lik = kFamilies[i % 3];
    const int J = 1 + static_cast<int>(rng.below(3));
    const int T = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(12 / J)));
    const int M = 1 + static_cast<int>(rng.below(4));
    const int order = 1 + static_cast<int>(rng.below(2));
    const Model m = testing::random_model(ModelSpec::shallow(M, J, order, lik), rng, 1.0);
    const Sequence v = testing::random_sequence(lik, M, T, rng);
    const double log_pv = testing::enumerate_log_marginal(m, v);
    const double bound = testing::enumerate_bound(m, v);
    worst_gap = std::max(worst_gap, bound - log_pv);
    if (bound > log_pv + 1e-10) ++order_violations;
    const ElboEstimate e = estimate_elbo(m, v, 10000, RngStream(0x6d63, static_cast<std::uint64_t>(i)));
    const double z = e.std_error > 0 ? std::abs(e.mean - bound) / e.std_error : std::abs(e.mean - bound) / 1e-12;
    worst_z = std::max(worst_z, z);
    if (!(std::abs(e.mean - bound) <= 3 * e.std_error + 1e-10)) ++mc_misses;
    ++triples;
  }
  const double elapsed = seconds_since(t0);
  const bool ok = triples >= 50 && order_violations == 0 && mc_misses == 0 && elapsed < 300.0;
  return {ok, fmt("%d triples; bound <= log p(V) violations %d (max bound - log p = %.2e); MC ELBO outside 3 s.e. "
                  "%d (max |z| = %.2f); %.1f s (limit 300 s)",
                  triples, order_violations, worst_gap, mc_misses, worst_z, elapsed)};
}

// ---------------------------------------------------------------------------
// 3. NVIL unbiasedness with the whole-sequence signal.

Outcome criterion_unbiased() {
  const auto t0 = Clock::now();
  RngStream rng(0x756e62);
  const Model m = testing::random_model(ModelSpec::shallow(2, 2), rng, 1.0);
  const Sequence v = testing::random_bits(2, 3, rng);
  const TrainerState state = make_trainer_state(m, rng);
  const RecognitionParams exact = testing::enumerated_bound_grad_phi(m, v);
  const NvilOptions opts{false, false, false, SignalMode::kWholeSequence};
  const int n = 200000;
  const Eigen::Index K = exact.num_scalars();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(K);
  const RngStream base(0x756e62, 1);
  for (int i = 0; i < n; ++i) {
    const NvilStep step = nvil_step(m, state, v, base.substream(static_cast<std::uint64_t>(i)), opts);
    for (Eigen::Index k = 0; k < K; ++k) {
      const double x = step.d_phi.scalar(k);
      s[k] += x;
      s2[k] += x * x;
    }
  }
  int misses = 0;
  double worst_z = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) {
    const double mean = s[k] / n;
    const double se = std::sqrt(std::max(0.0, s2[k] / n - mean * mean) / (n - 1));
    const double z = std::abs(mean - exact.scalar(k)) / std::max(se, 1e-300);
    worst_z = std::max(worst_z, z);
    if (std::abs(mean - exact.scalar(k)) > 3 * se + 1e-9) ++misses;
  }
  const double elapsed = seconds_since(t0);
  return {misses == 0 && elapsed < 600.0,
          fmt("%d draws, %ld phi entries, %d outside 3 s.e. (max |z| = %.2f); %.1f s (limit 600 s)", n,
              static_cast<long>(K), misses, worst_z, elapsed)};
}

// ---------------------------------------------------------------------------
// 4. Variance reduction on a frozen mid-training snapshot.

Outcome criterion_variance() {
  const auto t0 = Clock::now();
  RngStream rng(0x766172);
  const Model teacher = testing::random_model(ModelSpec::shallow(2, 2), rng, 1.5);
  SequenceBatch data{DataType::kBit, 2, {}};
  for (int i = 0; i < 50; ++i) data.sequences.push_back(shallow::sample_sequence(teacher, 3, rng).v);

  Model m = init_params(ModelSpec::shallow(2, 2), rng);
  TrainerState state = make_trainer_state(m, rng);
  TrainConfig cfg;
  cfg.iterations = 3000;
  cfg.seed = 0x766172;
  train(m, state, data, cfg);

  const int n = 10000;
  const auto d_draws = [&](const NvilOptions& opts, std::uint64_t stream) {
    const RngStream base(0x766172, stream);
    Eigen::MatrixXd out(2, n);
    for (int i = 0; i < n; ++i) {
      const Sequence& v = data.sequences[static_cast<std::size_t>(i) % data.size()];
      out.col(i) = nvil_step(m, state, v, base.substream(static_cast<std::uint64_t>(i)), opts).d_phi.at("d").col(0);
    }
    return out;
  };
  const Eigen::MatrixXd with = d_draws({true, true, true, SignalMode::kPerStep}, 1);
  const Eigen::MatrixXd without = d_draws({false, false, false, SignalMode::kPerStep}, 2);
  const auto variance = [&](const Eigen::MatrixXd& x, Eigen::Index j) {
    const double mean = x.row(j).mean();
    return (x.row(j).array() - mean).square().sum() / (n - 1);
  };
  const boost::math::fisher_f dist(n - 1, n - 1);
  const double critical = boost::math::quantile(dist, 0.99);
  bool ok = true;
  std::ostringstream d;
  d << fmt("snapshot after %lld iterations (c = %.3f, v = %.3f); ", static_cast<long long>(state.iteration), state.c,
           state.v);
  for (Eigen::Index j = 0; j < 2; ++j) {
    const double va = variance(with, j);
    const double vb = variance(without, j);
    const double f = vb / va;
    ok = ok && f > critical;
    d << fmt("d[%ld] var %.4g -> %.4g, F = %.3f; ", static_cast<long>(j), vb, va, f);
  }
  d << fmt("F(%d, %d) 99%% critical value %.4f; %.1f s", n - 1, n - 1, critical, seconds_since(t0));
  return {ok, d.str()};
}

// ---------------------------------------------------------------------------
// 5 and 6. Training on a small bouncing-balls corpus.

struct Corpus {
  SequenceBatch train;
  SequenceBatch test;
};

Corpus balls_corpus() {
  BallsConfig cfg;
  cfg.num_balls = 1;
  cfg.resolution = 15;
  cfg.sequence_length = 50;
  cfg.num_sequences = 64;
  Corpus c;
  c.train = gen_bouncing_balls(cfg);
  cfg.num_sequences = 16;
  c.test = gen_bouncing_balls(cfg, 64);
  return c;
}

struct RunResult {
  double elbo_start = 0.0;
  double elbo_end = 0.0;
  double pred = 0.0;
  double repeat_last = 0.0;
  double seconds = 0.0;
};

RunResult train_balls(const Corpus& c, int order, std::uint64_t seed) {
  const auto t0 = Clock::now();
  RngStream init(seed);
  Model m = init_params(ModelSpec::shallow(225, 25, order), init);
  TrainerState state = make_trainer_state(m, init);
  TrainConfig cfg;
  cfg.iterations = 5000;
  cfg.seed = seed;
  std::vector<double> elbo;
  train(m, state, c.train, cfg, [&](const MetricsRecord& r) { elbo.push_back(r.elbo_per_frame); });
  RunResult r;
  const std::size_t window = 100;
  r.elbo_start = std::accumulate(elbo.begin(), elbo.begin() + window, 0.0) / window;
  r.elbo_end = std::accumulate(elbo.end() - window, elbo.end(), 0.0) / window;
  r.pred = evaluate_prediction(m, c.test, 20, seed).mean;
  double rl = 0.0;
  for (const auto& v : c.test.sequences) rl += repeat_last_frame_error(v);
  r.repeat_last = rl / static_cast<double>(c.test.size());
  r.seconds = seconds_since(t0);
  return r;
}

Outcome criterion_training() {
  const auto t0 = Clock::now();
  const Corpus c = balls_corpus();
  const RunResult r = train_balls(c, 1, 1);
  const double gain = r.elbo_end - r.elbo_start;
  const double elapsed = seconds_since(t0);
  const bool ok = gain >= 10.0 && r.pred < r.repeat_last && elapsed < 900.0;
  return {ok, fmt("smoothed ELBO/frame %.2f -> %.2f (gain %.2f, need >= 10); test prediction error %.3f vs "
                  "repeat-last-frame %.3f; %.1f s (limit 900 s)",
                  r.elbo_start, r.elbo_end, gain, r.pred, r.repeat_last, elapsed)};
}

Outcome criterion_order() {
  const Corpus c = balls_corpus();
  int wins = 0;
  std::ostringstream d;
  for (std::uint64_t seed : {1, 2, 3}) {
    const RunResult a = train_balls(c, 1, seed);
    const RunResult b = train_balls(c, 2, seed);
    if (b.pred < a.pred) ++wins;
    d << fmt("seed %llu: order-1 %.3f, order-2 %.3f; ", static_cast<unsigned long long>(seed), a.pred, b.pred);
  }
  d << "order-2 lower on " << wins << "/3 seeds (need >= 2)";
  return {wins >= 2, d.str()};
}

// ---------------------------------------------------------------------------
// 7. Exactness constructions.

Outcome criterion_exact() {
  RngStream rng(0x657863);
  // q equal to the true posterior: hidden units independent of the data and
  // the recognition model copying the prior.
  double worst_value = 0.0;
  double worst_se = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const ModelSpec spec = ModelSpec::shallow(6, 4, 1 + trial % 2);
    Model m{spec, generative_layout(spec), recognition_layout(spec)};
    for (const char* name : {"W1", "b", "c"})
      for (Eigen::Index i = 0; i < m.theta.at(name).size(); ++i) m.theta.at(name).data()[i] = rng.normal();
    m.phi.at("U1") = m.theta.at("W1");
    m.phi.at("d") = m.theta.at("b");
    const Sequence v = testing::random_bits(6, 8, rng);
    double exact = 0.0;
    for (Eigen::Index t = 0; t < v.cols(); ++t)
      for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double psi = m.theta.at("c")(i, 0);
        exact += v(i, t) * psi - (psi > 0 ? psi + std::log1p(std::exp(-psi)) : std::log1p(std::exp(psi)));
      }
    const ElboEstimate e = estimate_elbo(m, v, 200, RngStream(static_cast<std::uint64_t>(trial)));
    worst_value = std::max(worst_value, std::abs(e.mean - exact));
    worst_se = std::max(worst_se, e.std_error);
  }
  // Copy model: the visible conditional reads the previous frame with a
  // large positive weight.
  double worst_copy = 0.0;
  int rounding_errors = 0;
  {
    const ModelSpec spec = ModelSpec::shallow(10, 3);
    Model m{spec, generative_layout(spec), recognition_layout(spec)};
    m.theta.at("W4") = 20.0 * Eigen::MatrixXd::Identity(10, 10);
    m.theta.at("c").setConstant(-10.0);
    for (int trial = 0; trial < 5; ++trial) {
      const Sequence v = testing::random_bits(10, 15, rng);
      const Eigen::MatrixXd p = predict_one_step(m, v, 10, RngStream(static_cast<std::uint64_t>(trial)));
      for (Eigen::Index t = 1; t < v.cols(); ++t)
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
          const double target = v(i, t - 1) > 0.5 ? 1.0 / (1.0 + std::exp(-10.0)) : 1.0 / (1.0 + std::exp(10.0));
          worst_copy = std::max(worst_copy, std::abs(p(i, t - 1) - target));
          if (std::round(p(i, t - 1)) != v(i, t - 1)) ++rounding_errors;
        }
    }
  }
  const bool ok = worst_value <= 1e-10 && worst_se <= 1e-10 && worst_copy <= 1e-4 && rounding_errors == 0;
  return {ok, fmt("q = posterior: max |estimate - closed form| %.2e, max s.e. %.2e (tolerance 1e-10); copy model: "
                  "max |prediction - sigmoid(+-10)| %.2e (tolerance 1e-4), %d rounded mismatches",
                  worst_value, worst_se, worst_copy, rounding_errors)};
}

// ---------------------------------------------------------------------------
// 8. Determinism and bit-exact formats.

std::string bytes_of(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Generation, training, checkpointing, sampling and evaluation into `dir`.
void pipeline(const std::filesystem::path& dir) {
  BallsConfig cfg;
  cfg.num_balls = 2;
  cfg.resolution = 12;
  cfg.sequence_length = 25;
  cfg.num_sequences = 10;
  cfg.seed = 8;
  save_sequences((dir / "train.seq").string(), gen_bouncing_balls(cfg));
  const SequenceBatch train_set = load_sequences((dir / "train.seq").string());
  for (const ModelSpec& spec : {ModelSpec::shallow(144, 10, 2), ModelSpec::deep(144, {8, 4}, LayerKind::kStochastic),
                                ModelSpec::deep(144, {8, 4}, LayerKind::kDeterministic)}) {
    const std::string tag = std::to_string(spec.num_layers()) + (spec.deterministic_middle() ? "d" : "s");
    RngStream init(21);
    Model m = init_params(spec, init);
    TrainerState state = make_trainer_state(m, init);
    TrainConfig tc;
    tc.iterations = 150;
    tc.batch_size = 2;
    tc.seed = 5;
    std::ofstream metrics(dir / ("metrics" + tag + ".txt"));
    train(m, state, train_set, tc, [&](const MetricsRecord& r) {
      metrics << r.iter << ' ' << fmt("%.17g %.17g %.17g", r.elbo_per_frame, r.c, r.v) << '\n';
    });
    save_checkpoint((dir / ("model" + tag + ".ckpt")).string(), m, state);
    const Checkpoint ck = load_checkpoint((dir / ("model" + tag + ".ckpt")).string());
    SequenceBatch samples{DataType::kBit, 144, {}};
    const RngStream sr(4);
    for (int i = 0; i < 3; ++i) {
      RngStream r = sr.substream(static_cast<std::uint64_t>(i));
      samples.sequences.push_back(sample_model(ck.model, 20, r).v);
    }
    save_sequences((dir / ("samples" + tag + ".seq")).string(), samples);
    const PredictionReport pr = evaluate_prediction(ck.model, train_set, 5, 6);
    const ElboReport er = evaluate_elbo(ck.model, train_set, 5, 7);
    std::ofstream rep(dir / ("report" + tag + ".txt"));
    for (double x : pr.per_sequence) rep << fmt("%.17g\n", x);
    rep << fmt("%.17g %.17g\n", er.total, er.per_frame);
  }
}

Outcome criterion_determinism() {
  const auto root = std::filesystem::temp_directory_path() / "tsbn_acceptance_8";
  std::filesystem::remove_all(root);
  const auto a = root / "a";
  const auto b = root / "b";
  std::filesystem::create_directories(a);
  std::filesystem::create_directories(b);
  pipeline(a);
  pipeline(b);
  int files = 0;
  int differing = 0;
  for (const auto& entry : std::filesystem::directory_iterator(a)) {
    ++files;
    if (bytes_of(entry.path()) != bytes_of(b / entry.path().filename())) ++differing;
  }

  // Container round trips for every dtype, including odd widths for bit packing.
  RngStream rng(0x666d74);
  int container_failures = 0;
  for (Likelihood lik : kFamilies) {
    for (int M : {1, 7, 8, 9, 33}) {
      SequenceBatch batch{data_type_for(lik), M, {}};
      for (int i = 0; i < 4; ++i) batch.sequences.push_back(testing::random_sequence(lik, M, 1 + 5 * i, rng));
      const auto p = (root / "rt.seq").string();
      save_sequences(p, batch);
      const std::string first = bytes_of(p);
      const SequenceBatch back = load_sequences(p);
      save_sequences(p, back);
      if (!(back == batch) || bytes_of(p) != first) ++container_failures;
    }
  }
  // Checkpoint round trips for every model family.
  int checkpoint_failures = 0;
  for (Likelihood lik : kFamilies) {
    for (const ModelSpec& spec :
         {ModelSpec::shallow(5, 3, 2, lik), ModelSpec::deep(5, {3, 2}, LayerKind::kStochastic, 1, lik),
          ModelSpec::deep(5, {4, 3, 2}, LayerKind::kDeterministic, 3, lik)}) {
      const Model m = testing::random_model(spec, rng, 3.0);
      TrainerState state = make_trainer_state(m, rng);
      state.c = rng.normal();
      state.v = std::exp(rng.normal());
      state.iteration = 12345;
      const auto p = (root / "rt.ckpt").string();
      save_checkpoint(p, m, state);
      const std::string first = bytes_of(p);
      const Checkpoint back = load_checkpoint(p);
      save_checkpoint(p, back.model, back.state);
      if (!(back == Checkpoint{m, state}) || bytes_of(p) != first) ++checkpoint_failures;
    }
  }
  std::filesystem::remove_all(root);
  const bool ok = files > 0 && differing == 0 && container_failures == 0 && checkpoint_failures == 0;
  return {ok, fmt("end-to-end: %d/%d output files byte-identical across two runs; sequence-file round trips failed %d/15; "
                  "checkpoint round trips failed %d/9",
                  files - differing, files, container_failures, checkpoint_failures)};
}

const char* kTitles[] = {"",
                         "gradient oracle suite",
                         "bound validity",
                         "NVIL unbiasedness",
                         "variance reduction",
                         "training improvement",
                         "order trend",
                         "exactness constructions",
                         "determinism and formats"};

Outcome run_criterion(int c) {
  switch (c) {
    case 1: return criterion_gradients();
    case 2: return criterion_bound();
    case 3: return criterion_unbiased();
    case 4: return criterion_variance();
    case 5: return criterion_training();
    case 6: return criterion_order();
    case 7: return criterion_exact();
    case 8: return criterion_determinism();
    default: return {false, "unknown criterion"};
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      which.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
      return 2;
    }
  }
  if (which.empty())
    for (int c = 1; c <= 8; ++c) which.push_back(c);
  bool all = true;
  for (int c : which) {
    if (c < 1 || c > 8) {
      std::fprintf(stderr, "criterion must be in 1..8\n");
      return 2;
    }
    Outcome o;
    try {
      o = run_criterion(c);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c, kTitles[c], o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
