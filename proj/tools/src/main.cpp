#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "run_config.hpp"
#include "tsbn/checkpoint.hpp"
#include "tsbn/data.hpp"
#include "tsbn/error.hpp"
#include "tsbn/evaluation.hpp"
#include "tsbn/trainer.hpp"

using nlohmann::json;

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;
constexpr std::uint64_t kSampleStream = 0x73616d70;
constexpr std::uint64_t kPrecisionStream = 0x70726563;
constexpr std::uint64_t kSplitStream = 0x73706c74;

struct GenBallsArgs {
  tsbn::BallsConfig balls;
  int train = 4000;
  int test = 200;
  std::string out_train = "train.seq";
  std::string out_test = "test.seq";
  int threads = 1;
};

struct TrainArgs {
  std::string spec = "J=100,order=1,binary";
  std::string data;
  std::string out = "model.ckpt";
  std::string metrics = "metrics.jsonl";
  std::string resume;
  std::int64_t iters = 100000;
  std::int64_t max_iters = 100000;
  int batch = 1;
  double lr = 1e-4;
  double ms_decay = 0.95;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double alpha = 0.8;
  std::string signal = "per-step";
  bool no_baseline = false;
  bool no_centering = false;
  bool no_normalization = false;
  std::int64_t checkpoint_every = 0;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct SampleArgs {
  std::string ckpt;
  std::string out = "samples.seq";
  int T = 100;
  int n = 1;
  int count_total = 1;
  std::uint64_t seed = 1;
};

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string report;
  int S = 1;
  std::string mode = "mean";
  std::uint64_t seed = 1;
  int threads = 1;
};

struct PrecisionArgs {
  std::string ckpt;
  std::string train;
  std::string heldout;
  std::string report;
  int S = 1;
  int top_m = 50;
  std::uint64_t seed = 1;
};

struct SplitArgs {
  std::string data;
  std::string out_train = "counts_train.seq";
  std::string out_heldout = "counts_heldout.seq";
  double fraction = 0.8;
  std::uint64_t seed = 1;
};

void header(const std::string& command, std::uint64_t seed) {
  std::cout << "# tsbn " << command << " seed=" << seed << "\n";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw tsbn::Error(tsbn::ErrorCode::kIo, "cannot open '" + path + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw tsbn::Error(tsbn::ErrorCode::kIo, "failed writing '" + path + "'");
}

tsbn::SequenceBatch load_for(const std::string& path, const tsbn::Model& m) {
  tsbn::SequenceBatch data = tsbn::load_sequences(path);
  if (data.dtype != tsbn::data_type_for(m.spec.likelihood))
    throw tsbn::Error(tsbn::ErrorCode::kLikelihoodMismatch,
                      "'" + path + "' holds " + std::string(tsbn::to_string(data.dtype)) + " data but the model is " +
                          std::string(tsbn::to_string(m.spec.likelihood)));
  if (data.dim != m.spec.visible_dim)
    throw tsbn::Error(tsbn::ErrorCode::kShapeMismatch, "'" + path + "' frame dimension differs from the model's M");
  return data;
}

int run_gen_balls(const GenBallsArgs& a) {
  header("gen-balls", a.balls.seed);
  tsbn::BallsConfig cfg = a.balls;
  cfg.num_sequences = a.train;
  const tsbn::SequenceBatch train = tsbn::gen_bouncing_balls(cfg, 0, a.threads);
  cfg.num_sequences = a.test;
  const tsbn::SequenceBatch test = tsbn::gen_bouncing_balls(cfg, static_cast<std::uint64_t>(a.train), a.threads);
  tsbn::save_sequences(a.out_train, train);
  tsbn::save_sequences(a.out_test, test);
  const auto lit = [](const tsbn::SequenceBatch& b) {
    return b.total_frames() > 0 ? [&] {
      double s = 0.0;
      for (const auto& v : b.sequences) s += v.sum();
      return s / static_cast<double>(b.total_frames());
    }() : 0.0;
  };
  std::cout << "M=" << train.dim << " T=" << cfg.sequence_length << " balls=" << cfg.num_balls
            << " radius=" << cfg.radius() << "\n"
            << a.out_train << ": " << train.size() << " sequences, " << lit(train) << " lit pixels/frame\n"
            << a.out_test << ": " << test.size() << " sequences, " << lit(test) << " lit pixels/frame\n";
  return 0;
}

int run_train(const TrainArgs& a) {
  header("train", a.seed);
  const tsbn::SequenceBatch data = tsbn::load_sequences(a.data);
  tsbn::Model model;
  tsbn::TrainerState state;
  if (!a.resume.empty()) {
    tsbn::Checkpoint ck = tsbn::load_checkpoint(a.resume);
    model = std::move(ck.model);
    state = std::move(ck.state);
  } else {
    const tsbn::ModelSpec spec = tsbn::cli::parse_model_spec(a.spec, data.dim);
    tsbn::RngStream init(a.seed, kInitStream);
    model = tsbn::init_params(spec, init);
    state = tsbn::make_trainer_state(model, init);
  }
  state.learning_rate = a.lr;
  state.ms_decay = a.ms_decay;
  state.momentum = a.momentum;
  state.weight_decay = a.weight_decay;
  state.alpha = a.alpha;
  state.max_iterations = a.max_iters;

  tsbn::TrainConfig cfg;
  cfg.iterations = a.iters;
  cfg.batch_size = a.batch;
  cfg.threads = a.threads;
  cfg.seed = a.seed;
  cfg.checkpoint_every = a.checkpoint_every;
  cfg.nvil.baseline = !a.no_baseline;
  cfg.nvil.centering = !a.no_centering;
  cfg.nvil.normalization = !a.no_normalization;
  cfg.nvil.signal = tsbn::parse_signal_mode(a.signal);

  std::cout << "model " << tsbn::cli::format_model_spec(model.spec) << "; " << data.size() << " sequences\n";
  std::ofstream metrics = open_out(a.metrics);
  double last = 0.0;
  tsbn::train(
      model, state, data, cfg,
      [&](const tsbn::MetricsRecord& r) {
        json rec = {{"iter", r.iter}, {"elbo_per_frame", r.elbo_per_frame}, {"c", r.c}, {"v", r.v},
                    {"seconds", r.seconds}};
        metrics << rec.dump() << "\n";
        last = r.elbo_per_frame;
      },
      [&](const tsbn::Model& m, const tsbn::TrainerState& s) { tsbn::save_checkpoint(a.out, m, s); });
  finish(metrics, a.metrics);
  tsbn::save_checkpoint(a.out, model, state);
  std::cout << "iterations=" << state.iteration << " last_elbo_per_frame=" << last << " checkpoint=" << a.out
            << "\n";
  return 0;
}

int run_sample(const SampleArgs& a) {
  header("sample", a.seed);
  const tsbn::Checkpoint ck = tsbn::load_checkpoint(a.ckpt);
  if (a.n < 0 || a.T < 1) throw tsbn::Error(tsbn::ErrorCode::kInvalidArgument, "--n must be >= 0 and --T >= 1");
  const tsbn::RngStream base(a.seed, kSampleStream);
  tsbn::SequenceBatch out{tsbn::data_type_for(ck.model.spec.likelihood), ck.model.spec.visible_dim, {}};
  for (int i = 0; i < a.n; ++i) {
    tsbn::RngStream r = base.substream(static_cast<std::uint64_t>(i));
    out.sequences.push_back(tsbn::sample_model(ck.model, a.T, r, a.count_total).v);
  }
  tsbn::save_sequences(a.out, out);
  std::cout << a.out << ": " << out.size() << " sequences of length " << a.T << "\n";
  return 0;
}

tsbn::PredictMode parse_mode(const std::string& s) {
  if (s == "mean") return tsbn::PredictMode::kMean;
  if (s == "sample") return tsbn::PredictMode::kSample;
  throw tsbn::Error(tsbn::ErrorCode::kInvalidArgument, "--mode must be 'mean' or 'sample'");
}

int run_predict(const EvalArgs& a) {
  header("predict", a.seed);
  const tsbn::Checkpoint ck = tsbn::load_checkpoint(a.ckpt);
  const tsbn::SequenceBatch data = load_for(a.data, ck.model);
  const tsbn::PredictionReport rep =
      tsbn::evaluate_prediction(ck.model, data, a.S, a.seed, parse_mode(a.mode), a.threads);
  std::vector<double> baseline;
  for (const auto& v : data.sequences) baseline.push_back(tsbn::repeat_last_frame_error(v));
  const tsbn::PredictionReport base = tsbn::summarize(baseline, 0);

  std::ostringstream lines;
  for (std::size_t i = 0; i < rep.per_sequence.size(); ++i)
    lines << json{{"record", "sequence"}, {"index", i}, {"pred_error", rep.per_sequence[i]},
                  {"repeat_last_error", baseline[i]}}
                 .dump()
          << "\n";
  lines << json{{"record", "summary"},   {"sequences", data.size()},   {"samples", rep.samples},
                {"mode", a.mode},        {"seed", a.seed},             {"mean", rep.mean},
                {"stddev", rep.stddev},  {"repeat_last_mean", base.mean}}
               .dump()
        << "\n";
  if (!a.report.empty()) {
    std::ofstream out = open_out(a.report);
    out << lines.str();
    finish(out, a.report);
  }
  std::cout << std::left << std::setw(22) << "predictor" << std::setw(14) << "mean" << "stddev\n"
            << std::setw(22) << "model" << std::setw(14) << rep.mean << rep.stddev << "\n"
            << std::setw(22) << "repeat-last-frame" << std::setw(14) << base.mean << base.stddev << "\n";
  return 0;
}

int run_elbo(const EvalArgs& a) {
  header("elbo", a.seed);
  const tsbn::Checkpoint ck = tsbn::load_checkpoint(a.ckpt);
  const tsbn::SequenceBatch data = load_for(a.data, ck.model);
  const tsbn::ElboReport rep = tsbn::evaluate_elbo(ck.model, data, a.S, a.seed, a.threads);
  std::ostringstream lines;
  for (std::size_t i = 0; i < rep.per_sequence.size(); ++i) {
    const auto& e = rep.per_sequence[i];
    lines << json{{"record", "sequence"}, {"index", i}, {"elbo", e.mean}, {"std_error", e.std_error},
                  {"elbo_per_frame", e.per_frame}}
                 .dump()
          << "\n";
  }
  lines << json{{"record", "summary"}, {"sequences", data.size()}, {"samples", a.S}, {"seed", a.seed},
                {"elbo_total", rep.total}, {"elbo_per_frame", rep.per_frame}}
               .dump()
        << "\n";
  if (!a.report.empty()) {
    std::ofstream out = open_out(a.report);
    out << lines.str();
    finish(out, a.report);
  }
  std::cout << "sequences=" << data.size() << " samples=" << a.S << " elbo_total=" << rep.total
            << " elbo_per_frame=" << rep.per_frame << "\n";
  return 0;
}

int run_eval_precision(const PrecisionArgs& a) {
  header("eval-precision", a.seed);
  const tsbn::Checkpoint ck = tsbn::load_checkpoint(a.ckpt);
  const tsbn::SequenceBatch train = load_for(a.train, ck.model);
  const tsbn::SequenceBatch held = load_for(a.heldout, ck.model);
  if (train.size() != held.size())
    throw tsbn::Error(tsbn::ErrorCode::kShapeMismatch, "training and held-out files hold different sequence counts");
  const tsbn::RngStream base(a.seed, kPrecisionStream);
  std::ostringstream lines;
  double mp = 0.0;
  double pp = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const tsbn::PrecisionReport r = tsbn::evaluate_precision(ck.model, train.sequences[i], held.sequences[i], a.S,
                                                             base.substream(i), a.top_m);
    mp += r.mean_precision;
    pp += r.predictive_precision;
    lines << json{{"record", "sequence"}, {"index", i}, {"mean_precision", r.mean_precision},
                  {"predictive_precision", r.predictive_precision}, {"per_frame", r.per_frame}}
                 .dump()
          << "\n";
  }
  const double n = train.size() > 0 ? static_cast<double>(train.size()) : 1.0;
  lines << json{{"record", "summary"}, {"sequences", train.size()}, {"samples", a.S}, {"top_m", a.top_m},
                {"seed", a.seed}, {"mean_precision", mp / n}, {"predictive_precision", pp / n}}
               .dump()
        << "\n";
  if (!a.report.empty()) {
    std::ofstream out = open_out(a.report);
    out << lines.str();
    finish(out, a.report);
  }
  std::cout << "MP=" << mp / n << " PP=" << pp / n << " (top-" << a.top_m << ")\n";
  return 0;
}

int run_split_counts(const SplitArgs& a) {
  header("split-counts", a.seed);
  const tsbn::SequenceBatch data = tsbn::load_sequences(a.data);
  if (data.dtype != tsbn::DataType::kCount)
    throw tsbn::Error(tsbn::ErrorCode::kInvalidArgument, "split-counts needs a count file");
  tsbn::SequenceBatch head{data.dtype, data.dim, {}};
  for (const auto& v : data.sequences) {
    if (v.cols() < 2) throw tsbn::Error(tsbn::ErrorCode::kShapeMismatch, "each sequence needs at least two frames");
    head.sequences.push_back(v.leftCols(v.cols() - 1));
  }
  tsbn::RngStream rng(a.seed, kSplitStream);
  auto [train, held] = tsbn::split_counts(head, a.fraction, rng);
  for (std::size_t i = 0; i < held.size(); ++i) {
    tsbn::Sequence full(data.dim, data.sequences[i].cols());
    full << held.sequences[i], data.sequences[i].rightCols(1);
    held.sequences[i] = std::move(full);
  }
  tsbn::save_sequences(a.out_train, train);
  tsbn::save_sequences(a.out_heldout, held);
  std::cout << a.out_train << ": " << train.size() << " sequences; " << a.out_heldout
            << ": held-out words plus the final frame of each sequence\n";
  return 0;
}

void add_common(CLI::App* sub) {
  sub->add_option("--config", "Read 'key = value' defaults from a file; flags override")->configurable(false);
  sub->add_flag("--print-config", "Print the effective configuration and exit")->configurable(false);
}

// Splices `--config FILE` contents in right after the subcommand name so
// explicit flags, which come later, take precedence.
std::vector<std::string> expand_config(CLI::App& app, std::vector<std::string> args) {
  if (args.empty()) return args;
  CLI::App* sub = app.get_subcommand_no_throw(args[0]);
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    std::size_t span = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      span = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      span = 1;
    } else {
      continue;
    }
    std::vector<std::string> extra = tsbn::cli::read_config_file(path);
    for (const auto& e : extra) {
      const std::string key = e.substr(2, e.find('=') - 2);
      const CLI::Option* opt = sub ? sub->get_option_no_throw("--" + key) : nullptr;
      if (!opt || !opt->get_configurable())
        throw tsbn::Error(tsbn::ErrorCode::kInvalidArgument, "unknown config key '" + key + "' in " + path);
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + span));
    args.insert(args.begin() + 1, extra.begin(), extra.end());
    break;
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal sigmoid belief networks: data generation, NVIL training, sampling and evaluation"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  GenBallsArgs gb;
  auto* gen = app.add_subcommand("gen-balls", "Generate bouncing-balls train/test SequenceFiles");
  gen->add_option("--balls", gb.balls.num_balls, "Balls per video");
  gen->add_option("--res", gb.balls.resolution, "Frame side length R (M = R*R)");
  gen->add_option("--T", gb.balls.sequence_length, "Frames per video");
  gen->add_option("--train", gb.train, "Training videos");
  gen->add_option("--test", gb.test, "Test videos");
  gen->add_option("--radius", gb.balls.ball_radius, "Ball radius in pixels (negative: 2*R/30)");
  gen->add_option("--speed", gb.balls.speed_scale, "Speed scale in pixels per step");
  gen->add_option("--seed", gb.balls.seed, "Random seed");
  gen->add_option("--out-train", gb.out_train, "Training SequenceFile");
  gen->add_option("--out-test", gb.out_test, "Test SequenceFile");
  gen->add_option("--threads", gb.threads, "Worker threads");
  add_common(gen);

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a model with NVIL and RMSprop");
  train->add_option("--spec", tr.spec, "Model description, e.g. J=20,order=2,binary or layers=100-100,kind=deterministic");
  train->add_option("--data", tr.data, "Training SequenceFile")->required();
  train->add_option("--out", tr.out, "Checkpoint path");
  train->add_option("--metrics", tr.metrics, "Metrics log (one JSON record per iteration)");
  train->add_option("--resume", tr.resume, "Continue from this checkpoint (ignores --spec)");
  train->add_option("--iters", tr.iters, "Train until this iteration count");
  train->add_option("--max-iters", tr.max_iters, "Hard iteration cap stored in the trainer state");
  train->add_option("--batch", tr.batch, "Sequences per update");
  train->add_option("--lr", tr.lr, "Learning rate");
  train->add_option("--ms-decay", tr.ms_decay, "RMSprop mean-square decay");
  train->add_option("--momentum", tr.momentum, "Momentum");
  train->add_option("--weight-decay", tr.weight_decay, "Weight decay on weight matrices");
  train->add_option("--alpha", tr.alpha, "Running-statistics decay for signal centering");
  train->add_option("--signal", tr.signal, "Learning signal: per-step, whole or suffix")
      ->check(CLI::IsMember({"per-step", "whole", "suffix"}));
  train->add_flag("--no-baseline", tr.no_baseline, "Disable the data-dependent baseline");
  train->add_flag("--no-centering", tr.no_centering, "Disable running-mean centering");
  train->add_flag("--no-normalization", tr.no_normalization, "Disable variance normalization");
  train->add_option("--checkpoint-every", tr.checkpoint_every, "Write the checkpoint every N iterations (0: end only)");
  train->add_option("--seed", tr.seed, "Random seed");
  train->add_option("--threads", tr.threads, "Worker threads");
  add_common(train);

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Draw sequences from a trained model by ancestral sampling");
  sample->add_option("--ckpt", sa.ckpt, "Checkpoint")->required();
  sample->add_option("--out", sa.out, "Output SequenceFile");
  sample->add_option("--T", sa.T, "Frames per sequence");
  sample->add_option("--n", sa.n, "Number of sequences");
  sample->add_option("--count-total", sa.count_total, "Tokens per frame (count models)");
  sample->add_option("--seed", sa.seed, "Random seed");
  add_common(sample);

  EvalArgs pr;
  auto* predict = app.add_subcommand("predict", "One-step-ahead prediction error");
  predict->add_option("--ckpt", pr.ckpt, "Checkpoint")->required();
  predict->add_option("--data", pr.data, "SequenceFile to predict")->required();
  predict->add_option("--report", pr.report, "Report path (JSON lines)");
  predict->add_option("--S", pr.S, "Posterior history samples per sequence");
  predict->add_option("--mode", pr.mode, "Hidden-state push: mean or sample")->check(CLI::IsMember({"mean", "sample"}));
  predict->add_option("--seed", pr.seed, "Random seed");
  predict->add_option("--threads", pr.threads, "Worker threads");
  add_common(predict);

  EvalArgs el;
  auto* elbo = app.add_subcommand("elbo", "Monte-Carlo variational lower bound");
  elbo->add_option("--ckpt", el.ckpt, "Checkpoint")->required();
  elbo->add_option("--data", el.data, "SequenceFile to score")->required();
  elbo->add_option("--report", el.report, "Report path (JSON lines)");
  elbo->add_option("--S", el.S, "Posterior samples per sequence");
  elbo->add_option("--seed", el.seed, "Random seed");
  elbo->add_option("--threads", el.threads, "Worker threads");
  add_common(elbo);

  PrecisionArgs pa;
  auto* prec = app.add_subcommand("eval-precision", "Precision@top-M on held-out words of count data");
  prec->add_option("--ckpt", pa.ckpt, "Checkpoint")->required();
  prec->add_option("--train", pa.train, "Training-portion SequenceFile")->required();
  prec->add_option("--heldout", pa.heldout, "Held-out SequenceFile (one extra final frame)")->required();
  prec->add_option("--report", pa.report, "Report path (JSON lines)");
  prec->add_option("--S", pa.S, "Posterior samples");
  prec->add_option("--top-m", pa.top_m, "M in precision@top-M");
  prec->add_option("--seed", pa.seed, "Random seed");
  add_common(prec);

  SplitArgs sp;
  auto* split = app.add_subcommand("split-counts", "Split count sequences into training and held-out words");
  split->add_option("--data", sp.data, "Count SequenceFile")->required();
  split->add_option("--out-train", sp.out_train, "Training-portion SequenceFile");
  split->add_option("--out-heldout", sp.out_heldout, "Held-out SequenceFile");
  split->add_option("--fraction", sp.fraction, "Training share of each frame's words");
  split->add_option("--seed", sp.seed, "Random seed");
  add_common(split);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(app, std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const tsbn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->get_option("--print-config")->as<bool>()) {
    std::cout << chosen->config_to_str(true, false);
    return 0;
  }
  try {
    if (chosen == gen) return run_gen_balls(gb);
    if (chosen == train) return run_train(tr);
    if (chosen == sample) return run_sample(sa);
    if (chosen == predict) return run_predict(pr);
    if (chosen == elbo) return run_elbo(el);
    if (chosen == prec) return run_eval_precision(pa);
    if (chosen == split) return run_split_counts(sp);
  } catch (const tsbn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
