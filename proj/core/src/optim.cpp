#include "mlcld/optim.hpp"

#include <cmath>
#include <numbers>

#include "mlcld/errors.hpp"

namespace mlcld::optim {

void adamw_step(Param& param, AdamWState& state, const AdamWHyper& hyper) {
  require_same_shape(param.value, param.grad, "adamw_step grad");
  require_same_shape(param.value, state.m, "adamw_step first moment");
  require_same_shape(param.value, state.v, "adamw_step second moment");

  ++state.t;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(hyper.beta1, t);
  const double bc2 = 1.0 - std::pow(hyper.beta2, t);

  double* theta = param.value.data();
  const double* g = param.grad.data();
  double* m = state.m.data();
  double* v = state.v.data();
  for (std::size_t i = 0; i < param.value.size(); ++i) {
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    const double decay = hyper.lr * hyper.weight_decay * theta[i];
    theta[i] = theta[i] - hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon) - decay;
  }
}

AdamW::AdamW(std::vector<Param*> params, AdamWHyper hyper)
    : params_(std::move(params)), hyper_(hyper) {
  states_.reserve(params_.size());
  for (const Param* p : params_) states_.emplace_back(p->value);
}

void AdamW::zero_grad() {
  for (Param* p : params_) p->zero_grad();
}

void AdamW::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) adamw_step(*params_[i], states_[i], hyper_);
}

void SgdrSchedule::validate() const {
  if (t0 < 1) throw ParameterError("sgdr: t0 must be >= 1");
  if (t_mult < 1) throw ParameterError("sgdr: t_mult must be >= 1");
  if (!(eta_min >= 0.0 && eta_min <= eta_max)) {
    throw ParameterError("sgdr: require 0 <= eta_min <= eta_max");
  }
}

SgdrPosition sgdr_locate(const SgdrSchedule& schedule, std::uint64_t epoch) {
  schedule.validate();
  SgdrPosition pos{0, epoch, schedule.t0};
  if (schedule.t_mult == 1) {
    pos.cycle = epoch / schedule.t0;
    pos.offset = epoch % schedule.t0;
    return pos;
  }
  while (pos.offset >= pos.length) {
    pos.offset -= pos.length;
    pos.length *= schedule.t_mult;
    ++pos.cycle;
  }
  return pos;
}

double sgdr_lr(const SgdrSchedule& schedule, std::uint64_t epoch) {
  const SgdrPosition pos = sgdr_locate(schedule, epoch);
  const double frac = static_cast<double>(pos.offset) / static_cast<double>(pos.length);
  return schedule.eta_min +
         0.5 * (schedule.eta_max - schedule.eta_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

void ema_update(std::span<Matrix* const> key, std::span<const Matrix* const> query,
                double momentum) {
  if (key.size() != query.size()) throw DimensionError("ema_update: tensor counts differ");
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw ParameterError("ema_update: momentum must lie in [0, 1]");
  }
  for (std::size_t t = 0; t < key.size(); ++t) require_same_shape(*key[t], *query[t], "ema_update");
  for (std::size_t t = 0; t < key.size(); ++t) {
    double* k = key[t]->data();
    const double* q = query[t]->data();
    for (std::size_t i = 0; i < key[t]->size(); ++i) k[i] = momentum * k[i] + (1.0 - momentum) * q[i];
  }
}

}  // namespace mlcld::optim
