#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mlcld/matrix.hpp"

namespace mlcld::optim {

struct AdamWHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

/// Moment estimates for one parameter tensor.
struct AdamWState {
  Matrix m;
  Matrix v;
  std::uint64_t t = 0;

  AdamWState() = default;
  explicit AdamWState(const Matrix& like) : m(like.rows(), like.cols()), v(like.rows(), like.cols()) {}
};

/// One decoupled-weight-decay Adam step:
///   m ← β1·m + (1−β1)·g,  v ← β2·v + (1−β2)·g²
///   θ ← θ − lr·m̂/(√v̂ + ε) − lr·λ·θ
/// with bias-corrected m̂, v̂. The decay term uses θ before the update.
void adamw_step(Param& param, AdamWState& state, const AdamWHyper& hyper);

/// AdamW over a fixed list of parameters; moments persist across learning
/// rate restarts.
class AdamW {
 public:
  AdamW(std::vector<Param*> params, AdamWHyper hyper);

  void set_lr(double lr) noexcept { hyper_.lr = lr; }
  double lr() const noexcept { return hyper_.lr; }
  const AdamWHyper& hyper() const noexcept { return hyper_; }

  void zero_grad();
  void step();

  std::span<Param* const> params() const noexcept { return params_; }
  const AdamWState& state(std::size_t i) const { return states_.at(i); }

 private:
  std::vector<Param*> params_;
  std::vector<AdamWState> states_;
  AdamWHyper hyper_;
};

/// Cosine annealing with warm restarts. Cycle k lasts t0·t_mult^k epochs.
struct SgdrSchedule {
  double eta_max = 1e-3;
  double eta_min = 0.0;
  std::uint64_t t0 = 1;
  std::uint64_t t_mult = 1;

  /// Throws ParameterError unless t0 ≥ 1, t_mult ≥ 1 and 0 ≤ eta_min ≤ eta_max.
  void validate() const;
};

struct SgdrPosition {
  std::uint64_t cycle = 0;
  std::uint64_t offset = 0;  ///< epochs into the current cycle
  std::uint64_t length = 0;  ///< length of the current cycle
};

SgdrPosition sgdr_locate(const SgdrSchedule& schedule, std::uint64_t epoch);

/// eta_min + ½(eta_max − eta_min)(1 + cos(π·T_cur/T_k)).
double sgdr_lr(const SgdrSchedule& schedule, std::uint64_t epoch);

/// key ← m·key + (1−m)·query, elementwise over every tensor.
void ema_update(std::span<Matrix* const> key, std::span<const Matrix* const> query,
                double momentum);

}  // namespace mlcld::optim
