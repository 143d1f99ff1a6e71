#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mlcld/config.hpp"
#include "mlcld/dataio.hpp"
#include "mlcld/memory.hpp"
#include "mlcld/model.hpp"
#include "mlcld/optim.hpp"

namespace mlcld::train {

/// Sub-stream ids derived from the run seed.
enum Stream : std::uint64_t {
  kInitStream = 1,
  kPretrainShuffle = 2,
  kPretrainAugment = 3,
  kPretrainDropout = 4,
  kFinetuneShuffle = 5,
  kFinetuneAugment = 6,
  kFinetuneDropout = 7,
};

/// Loss parts of one iteration, per anchor (sum-reduced losses are divided
/// by the batch size for logging only).
struct LossComponents {
  double total = 0.0;
  double contrastive = 0.0;
  double g = 0.0;
  double h = 0.0;
  double w_penalty = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  LossComponents mean;  ///< averaged over the epoch's iterations
  std::size_t iterations = 0;
};

/// What an observer sees after each completed pretraining iteration.
struct StepView {
  std::size_t epoch;
  std::size_t iteration;  ///< global, 0-based
  const dataio::Batch& batch;
  const model::QueryForward& forward;  ///< pre-update activations; forward.d was enqueued
  const Matrix& keys;
  const model::ModelPair& model;       ///< after the optimizer and EMA updates
  const memory::QueueSet& queue;       ///< after the enqueue
  const LossComponents& loss;
};

using StepObserver = std::function<void(const StepView&)>;

/// Contrastive pretraining loop: two masked views per batch, query and key
/// forward passes, the configured loss, an AdamW step on the query encoder
/// (and the head unless the loss is mulsupcon), the key EMA, then one
/// enqueue of (keys, labels, detached d).
class Pretrainer {
 public:
  Pretrainer(model::ModelPair& model, const config::RunConfig& cfg);

  /// One iteration at the optimizer's current learning rate.
  LossComponents step(const dataio::Batch& batch);

  /// Sets the scheduled learning rate, then runs ⌈n/batch⌉ iterations.
  EpochRecord run_epoch(const dataio::MulanDataset& data);

  void set_observer(StepObserver observer) { observer_ = std::move(observer); }

  const memory::QueueSet& queue() const noexcept { return queue_; }
  const optim::AdamW& optimizer() const noexcept { return optimizer_; }
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  model::ModelPair& model_;
  const config::RunConfig& cfg_;
  objectives::Hyper hyper_;
  optim::SgdrSchedule schedule_;
  optim::AdamW optimizer_;
  memory::QueueSet queue_;
  Rng shuffle_rng_, augment_rng_, dropout_rng_;
  std::size_t epoch_ = 0;
  std::size_t iteration_ = 0;
  StepObserver observer_;
};

struct FinetuneRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double bce = 0.0;  ///< mean batch BCE over the epoch
};

/// BCE fine-tuning of the query encoder and head on masked inputs.
class Finetuner {
 public:
  Finetuner(model::ModelPair& model, const config::RunConfig& cfg);

  double step(const dataio::Batch& batch);
  FinetuneRecord run_epoch(const dataio::MulanDataset& data);

 private:
  model::ModelPair& model_;
  const config::RunConfig& cfg_;
  optim::SgdrSchedule schedule_;
  optim::AdamW optimizer_;
  Rng shuffle_rng_, augment_rng_, dropout_rng_;
  std::size_t epoch_ = 0;
};

}  // namespace mlcld::train
