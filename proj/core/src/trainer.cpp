#include "mlcld/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mlcld/errors.hpp"
#include "mlcld/objectives.hpp"
#include "mlcld/ops.hpp"

namespace mlcld::train {
namespace {

std::vector<Param*> pretrain_params(model::ModelPair& model, objectives::LossMode mode) {
  auto params = model.trainable();
  if (mode == objectives::LossMode::mulsupcon) params.resize(6);  // head gets no gradient
  return params;
}

optim::SgdrSchedule make_schedule(double lr, const config::ScheduleConfig& s) {
  optim::SgdrSchedule out{lr, s.eta_min, s.t0, s.t_mult};
  out.validate();
  return out;
}

Rng stream(const config::RunConfig& cfg, Stream id) { return Rng(cfg.seed, id); }

[[noreturn]] void non_finite(std::size_t epoch, std::size_t iteration, const LossComponents& l) {
  std::ostringstream os;
  os << "non-finite loss at epoch " << epoch << ", iteration " << iteration << ": total=" << l.total
     << " contrastive=" << l.contrastive << " g=" << l.g << " h=" << l.h
     << " w_penalty=" << l.w_penalty;
  throw NumericalError(os.str());
}

}  // namespace

Pretrainer::Pretrainer(model::ModelPair& model, const config::RunConfig& cfg)
    : model_(model),
      cfg_(cfg),
      hyper_(cfg.hyper()),
      schedule_(make_schedule(cfg.pretrain.lr, cfg.pretrain.schedule)),
      optimizer_(pretrain_params(model, cfg.pretrain.loss_mode),
                 {cfg.pretrain.lr, 0.9, 0.999, 1e-8, cfg.pretrain.weight_decay}),
      queue_(cfg.pretrain.queue_size, model.config.embed_dim, model.config.num_labels),
      shuffle_rng_(stream(cfg, kPretrainShuffle)),
      augment_rng_(stream(cfg, kPretrainAugment)),
      dropout_rng_(stream(cfg, kPretrainDropout)) {
  hyper_.validate();
}

LossComponents Pretrainer::step(const dataio::Batch& batch) {
  const auto views = dataio::augment(batch, cfg_.pretrain.mask_rate, augment_rng_);

  model::ForwardOptions opts;
  opts.train = true;
  const model::QueryForward fwd = model::encode_query(model_, views.x0, opts, dropout_rng_);
  const Matrix keys = model::encode_key(model_, views.x1);

  const auto candidates = objectives::make_candidates(keys, batch.y, fwd.d, queue_.snapshot());
  const objectives::AnchorBatch anchors{fwd.z, batch.y, fwd.d};
  const auto mode = cfg_.pretrain.loss_mode;
  const auto loss = objectives::total_loss(anchors, candidates, hyper_, model_.head.w.value, mode);

  LossComponents parts{loss.total, loss.contrastive, loss.g, loss.h, loss.w_penalty};
  if (mode != objectives::LossMode::mulsupcon && hyper_.reduction == objectives::Reduction::sum) {
    const double inv = 1.0 / static_cast<double>(batch.size());
    parts = {parts.total * inv, parts.contrastive * inv, parts.g * inv, parts.h * inv,
             parts.w_penalty * inv};
  }
  if (!std::isfinite(loss.total)) non_finite(epoch_, iteration_, parts);

  optimizer_.zero_grad();
  model::QueryUpstream upstream;
  upstream.dz = loss.dz;
  if (mode != objectives::LossMode::mulsupcon) {
    upstream.dd = loss.dd;
    model_.head.w.grad += loss.dw;
  }
  model::backward_query(model_, fwd, upstream);
  optimizer_.step();

  const auto key_tensors = model_.key_tensors();
  const auto query_tensors = model_.query_tensors();
  optim::ema_update(key_tensors, query_tensors, cfg_.pretrain.momentum);

  queue_.enqueue_batch(keys, batch.y, fwd.d);

  if (observer_) observer_({epoch_, iteration_, batch, fwd, keys, model_, queue_, parts});
  ++iteration_;
  return parts;
}

EpochRecord Pretrainer::run_epoch(const dataio::MulanDataset& data) {
  EpochRecord rec;
  rec.epoch = epoch_;
  rec.lr = optim::sgdr_lr(schedule_, epoch_);
  optimizer_.set_lr(rec.lr);

  const auto batches = dataio::make_batches(data, cfg_.pretrain.batch_size, true, shuffle_rng_);
  for (const auto& batch : batches) {
    const auto parts = step(batch);
    rec.mean.total += parts.total;
    rec.mean.contrastive += parts.contrastive;
    rec.mean.g += parts.g;
    rec.mean.h += parts.h;
    rec.mean.w_penalty += parts.w_penalty;
    ++rec.iterations;
  }
  const double inv = 1.0 / static_cast<double>(rec.iterations);
  rec.mean = {rec.mean.total * inv, rec.mean.contrastive * inv, rec.mean.g * inv, rec.mean.h * inv,
              rec.mean.w_penalty * inv};
  ++epoch_;
  return rec;
}

Finetuner::Finetuner(model::ModelPair& model, const config::RunConfig& cfg)
    : model_(model),
      cfg_(cfg),
      schedule_(make_schedule(cfg.finetune.lr, cfg.finetune.schedule)),
      optimizer_(model.trainable(), {cfg.finetune.lr, 0.9, 0.999, 1e-8, cfg.finetune.weight_decay}),
      shuffle_rng_(stream(cfg, kFinetuneShuffle)),
      augment_rng_(stream(cfg, kFinetuneAugment)),
      dropout_rng_(stream(cfg, kFinetuneDropout)) {}

double Finetuner::step(const dataio::Batch& batch) {
  const auto masked = ops::bernoulli_mask(batch.x, cfg_.finetune.mask_rate, augment_rng_);

  model::ForwardOptions opts;
  opts.train = true;
  opts.need_embedding = false;
  opts.need_distribution = false;
  const auto fwd = model::encode_query(model_, masked.values, opts, dropout_rng_);

  model::QueryUpstream upstream;
  double loss = 0.0;
  if (cfg_.finetune.head_activation == model::ScoreActivation::sigmoid) {
    auto bce = objectives::bce_loss(fwd.logits, batch.y);
    loss = bce.loss;
    upstream.dlogits = std::move(bce.dlogits);
  } else {
    // BCE on softmax probabilities, clamped away from 0 and 1.
    constexpr double eps = 1e-12;
    const Matrix p = ops::row_softmax(fwd.logits);
    Matrix dp(p.rows(), p.cols());
    const double inv = 1.0 / static_cast<double>(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double q = std::clamp(p.data()[k], eps, 1.0 - eps);
      const double t = batch.y.data()[k];
      loss -= (t * std::log(q) + (1.0 - t) * std::log(1.0 - q)) * inv;
      dp.data()[k] = (-t / q + (1.0 - t) / (1.0 - q)) * inv;
    }
    upstream.dlogits = ops::row_softmax_backward(p, dp);
  }
  if (!std::isfinite(loss)) {
    throw NumericalError("non-finite BCE at finetune epoch " + std::to_string(epoch_));
  }

  optimizer_.zero_grad();
  model::backward_query(model_, fwd, upstream);
  optimizer_.step();
  return loss;
}

FinetuneRecord Finetuner::run_epoch(const dataio::MulanDataset& data) {
  FinetuneRecord rec;
  rec.epoch = epoch_;
  rec.lr = optim::sgdr_lr(schedule_, epoch_);
  optimizer_.set_lr(rec.lr);
  const auto batches = dataio::make_batches(data, cfg_.finetune.batch_size, true, shuffle_rng_);
  for (const auto& batch : batches) rec.bce += step(batch);
  rec.bce /= static_cast<double>(batches.size());
  ++epoch_;
  return rec;
}

}  // namespace mlcld::train
