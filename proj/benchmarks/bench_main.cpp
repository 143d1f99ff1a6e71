// Microbenchmarks at Yeast-like shapes: f=103, c=14, hidden 512, embed 128,
// batch 128, queue 256.
#include <benchmark/benchmark.h>

#include "mlcld/config.hpp"
#include "mlcld/dataio.hpp"
#include "mlcld/objectives.hpp"
#include "mlcld/ops.hpp"
#include "mlcld/trainer.hpp"

using namespace mlcld;
using namespace mlcld::ops;

namespace {

constexpr std::size_t kF = 103, kC = 14, kB = 128, kQueue = 256;

Matrix random(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (auto& v : m.flat()) v = rng.uniform(-1.0, 1.0);
  return m;
}

Matrix unit_rows(Matrix m) { return row_l2_normalize(m); }

Matrix binary(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (auto& v : m.flat()) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
  return m;
}

dataio::MulanDataset fake_yeast(std::size_t n) {
  Rng rng(5);
  dataio::MulanDataset ds;
  ds.features = random(rng, n, kF);
  ds.labels = binary(rng, n, kC);
  for (std::size_t j = 0; j < kC; ++j) ds.label_names.push_back("L" + std::to_string(j));
  return ds;
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix a = random(rng, kB, n), b = random(rng, n, n);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(kB * n * n));
}
BENCHMARK(BM_Matmul)->Arg(128)->Arg(512);

static void BM_TotalLoss(benchmark::State& state) {
  const auto mode = static_cast<objectives::LossMode>(state.range(0));
  Rng rng(2);
  const Matrix z = unit_rows(random(rng, kB, 128)), keys = unit_rows(random(rng, kB, 128));
  const Matrix y = binary(rng, kB, kC), d = row_softmax(random(rng, kB, kC));
  const memory::QueueSnapshot queue{unit_rows(random(rng, kQueue, 128)), binary(rng, kQueue, kC),
                                    row_softmax(random(rng, kQueue, kC))};
  const Matrix w = random(rng, 128, kC);
  objectives::Hyper hyper;
  hyper.sigma = 0.5;
  hyper.alpha = hyper.beta = 0.01;
  const auto cand = objectives::make_candidates(keys, y, d, queue);
  for (auto _ : state) benchmark::DoNotOptimize(objectives::total_loss({z, y, d}, cand, hyper, w, mode));
}
BENCHMARK(BM_TotalLoss)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

// One pretraining iteration: two views, both encoders, loss, backward,
// AdamW, EMA and enqueue.
static void BM_PretrainStep(benchmark::State& state) {
  config::RunConfig cfg;
  const auto data = fake_yeast(kB);
  Rng init(0, train::kInitStream);
  model::EncoderConfig ec;
  ec.input_dim = kF;
  ec.num_labels = kC;
  auto pair = model::init_model(ec, init);
  train::Pretrainer trainer(pair, cfg);
  Rng rng(3);
  const auto batch = dataio::make_batches(data, kB, false, rng).front();
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(batch));
}
BENCHMARK(BM_PretrainStep)->Unit(benchmark::kMillisecond);

static void BM_FinetuneStep(benchmark::State& state) {
  config::RunConfig cfg;
  const auto data = fake_yeast(kB);
  Rng init(0, train::kInitStream);
  model::EncoderConfig ec;
  ec.input_dim = kF;
  ec.num_labels = kC;
  auto pair = model::init_model(ec, init);
  train::Finetuner tuner(pair, cfg);
  Rng rng(3);
  const auto batch = dataio::make_batches(data, kB, false, rng).front();
  for (auto _ : state) benchmark::DoNotOptimize(tuner.step(batch));
}
BENCHMARK(BM_FinetuneStep)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
