#pragma once

#include "mlcld/objectives.hpp"
#include "oracle.hpp"
#include "support.hpp"

namespace mlcld::test {

/// Random loss instance: unit-norm anchors/keys/queue rows, binary labels,
/// simplex distributions.
inline oracle::Instance random_instance(Rng& rng, std::size_t b, std::size_t queue, std::size_t e,
                                        std::size_t c) {
  oracle::Instance in;
  in.z = random_unit_rows(rng, b, e);
  in.y = random_binary(rng, b, c);
  in.d = random_simplex(rng, b, c);
  in.keys = random_unit_rows(rng, b, e);
  in.qz = random_unit_rows(rng, queue, e);
  in.qy = random_binary(rng, queue, c);
  in.qd = random_simplex(rng, queue, c);
  in.w = random_matrix(rng, e, c);
  in.tau = rng.uniform(0.1, 1.0);
  in.sigma = rng.uniform(0.3, 1.0);
  in.alpha = rng.uniform(0.0, 1.0);
  in.beta = rng.uniform(0.0, 0.5);
  return in;
}

inline objectives::CandidateSet candidates_of(const oracle::Instance& in) {
  memory::QueueSnapshot snap{in.qz, in.qy, in.qd};
  if (in.qz.rows() == 0) snap = {Matrix(0, in.z.cols()), Matrix(0, in.c()), Matrix(0, in.c())};
  return objectives::make_candidates(in.keys, in.y, in.d, snap);
}

inline objectives::Hyper hyper_of(const oracle::Instance& in) {
  objectives::Hyper h;
  h.tau = in.tau;
  h.sigma = in.sigma;
  h.alpha = in.alpha;
  h.beta = in.beta;
  h.positive_mode = in.all_mode ? objectives::PositiveMode::all : objectives::PositiveMode::any;
  h.cld_raw_log_weight = in.raw_log;
  h.w_penalty_per_anchor = in.per_anchor_w;
  h.reduction = in.mean ? objectives::Reduction::mean : objectives::Reduction::sum;
  return h;
}

inline objectives::LossResult library_total(const oracle::Instance& in, objectives::LossMode mode) {
  const auto cand = candidates_of(in);
  return objectives::total_loss({in.z, in.y, in.d}, cand, hyper_of(in), in.w, mode);
}

/// Oracle value for a loss mode.
inline double oracle_total(const oracle::Instance& in, objectives::LossMode mode) {
  switch (mode) {
    case objectives::LossMode::mulsupcon:
      return oracle::mulsupcon(in);
    case objectives::LossMode::rld:
      return oracle::total(in, true);
    case objectives::LossMode::cld:
      return oracle::total(in, false);
  }
  return 0.0;
}

}  // namespace mlcld::test
