#include <benchmark/benchmark.h>

#include <filesystem>

#include "tsbn/data.hpp"
#include "tsbn/evaluation.hpp"
#include "tsbn/model.hpp"
#include "tsbn/trainer.hpp"

namespace {

using namespace tsbn;

SequenceBatch balls(int res, int T, int n) {
  BallsConfig cfg;
  cfg.resolution = res;
  cfg.sequence_length = T;
  cfg.num_sequences = n;
  return gen_bouncing_balls(cfg);
}

ModelSpec spec_for(int kind, int M) {
  switch (kind) {
    case 0: return ModelSpec::shallow(M, 100);
    case 1: return ModelSpec::deep(M, {100, 50}, LayerKind::kStochastic);
    default: return ModelSpec::deep(M, {100, 50}, LayerKind::kDeterministic);
  }
}

// Arg: 0 shallow, 1 deep stochastic, 2 deep deterministic.
void BM_NvilStep(benchmark::State& st) {
  const SequenceBatch data = balls(30, 100, 1);
  RngStream rng(1);
  const Model m = init_params(spec_for(static_cast<int>(st.range(0)), data.dim), rng);
  const TrainerState s = make_trainer_state(m, rng);
  std::uint64_t i = 0;
  for (auto _ : st) benchmark::DoNotOptimize(nvil_step(m, s, data.sequences[0], RngStream(2, i++)));
  st.SetItemsProcessed(st.iterations() * 100);
}
BENCHMARK(BM_NvilStep)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_TrainIteration(benchmark::State& st) {
  const SequenceBatch data = balls(30, 100, 8);
  RngStream rng(1);
  Model m = init_params(ModelSpec::shallow(data.dim, 100), rng);
  TrainerState s = make_trainer_state(m, rng);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.threads = static_cast<int>(st.range(0));
  for (auto _ : st) {
    cfg.iterations = s.iteration + 1;
    train(m, s, data, cfg);
  }
}
BENCHMARK(BM_TrainIteration)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_PredictOneStep(benchmark::State& st) {
  const SequenceBatch data = balls(30, 100, 1);
  RngStream rng(1);
  const Model m = init_params(ModelSpec::shallow(data.dim, 100), rng);
  for (auto _ : st)
    benchmark::DoNotOptimize(predict_one_step(m, data.sequences[0], static_cast<int>(st.range(0)), RngStream(3)));
}
BENCHMARK(BM_PredictOneStep)->Arg(1)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_GenBalls(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(balls(30, 100, static_cast<int>(st.range(0))));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_GenBalls)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SequenceFileRoundTrip(benchmark::State& st) {
  const SequenceBatch data = balls(30, 100, 64);
  const auto path = (std::filesystem::temp_directory_path() / "tsbn_bench.seq").string();
  for (auto _ : st) {
    save_sequences(path, data);
    benchmark::DoNotOptimize(load_sequences(path));
  }
  std::filesystem::remove(path);
}
BENCHMARK(BM_SequenceFileRoundTrip)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
