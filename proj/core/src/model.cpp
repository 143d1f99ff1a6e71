#include "mlcld/model.hpp"

#include <cmath>

#include "mlcld/errors.hpp"
#include "mlcld/ops.hpp"

namespace mlcld::model {
namespace {

Param uniform_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Matrix w(fan_in, fan_out);
  for (double& v : w.flat()) v = rng.uniform(-bound, bound);
  return Param(std::move(w));
}

Param zero_bias(std::size_t n) { return Param(Matrix(1, n)); }

}  // namespace

void EncoderConfig::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || embed_dim < 1 || num_labels < 1) {
    throw ParameterError("encoder dimensions must all be >= 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
}

bool operator==(const EncoderWeights& a, const EncoderWeights& b) {
  const auto pa = a.params();
  const auto pb = b.params();
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (!(pa[i]->value == pb[i]->value)) return false;
  return true;
}

std::vector<Param*> ModelPair::trainable() {
  std::vector<Param*> out;
  for (Param* p : query.params()) out.push_back(p);
  out.push_back(&head.w);
  out.push_back(&head.b);
  return out;
}

std::vector<Matrix*> ModelPair::key_tensors() {
  std::vector<Matrix*> out;
  for (Param* p : key.params()) out.push_back(&p->value);
  return out;
}

std::vector<const Matrix*> ModelPair::query_tensors() const {
  std::vector<const Matrix*> out;
  for (const Param* p : query.params()) out.push_back(&p->value);
  return out;
}

ModelPair init_model(const EncoderConfig& config, Rng& rng) {
  config.validate();
  ModelPair pair;
  pair.config = config;
  const auto f = config.input_dim, h = config.hidden_dim, e = config.embed_dim,
             c = config.num_labels;
  pair.query.w1 = uniform_weight(f, h, rng);
  pair.query.b1 = zero_bias(h);
  pair.query.w2 = uniform_weight(h, h, rng);
  pair.query.b2 = zero_bias(h);
  pair.query.w3 = uniform_weight(h, e, rng);
  pair.query.b3 = zero_bias(e);
  pair.key = pair.query;
  pair.head.w = uniform_weight(e, c, rng);
  pair.head.b = zero_bias(c);
  return pair;
}

QueryForward encode_query(const ModelPair& pair, const Matrix& x, const ForwardOptions& opts,
                          Rng& rng) {
  const auto& cfg = pair.config;
  if (x.cols() != cfg.input_dim) {
    throw DimensionError("encode_query: input has " + std::to_string(x.cols()) +
                         " features, model expects " + std::to_string(cfg.input_dim));
  }
  if (!x.all_finite()) throw NumericalError("encode_query: non-finite input");

  const auto& q = pair.query;
  QueryForward out;
  out.train = opts.train;
  out.x = x;

  auto drop = [&](const Matrix& a, Matrix& mask, Matrix& p) {
    if (opts.train && cfg.dropout > 0.0) {
      auto m = ops::dropout(a, cfg.dropout, rng);
      p = std::move(m.values);
      mask = std::move(m.mask);
    } else {
      p = a;
      mask = Matrix();
    }
  };

  out.a1 = ops::affine(x, q.w1.value, q.b1.value);
  drop(out.a1, out.mask1, out.p1);
  out.r1 = ops::relu(out.p1);
  out.a2 = ops::affine(out.r1, q.w2.value, q.b2.value);
  drop(out.a2, out.mask2, out.p2);
  out.r2 = ops::relu(out.p2);
  out.h = ops::affine(out.r2, q.w3.value, q.b3.value);

  const bool head_on_z = cfg.head_input == HeadInput::normalized;
  if (opts.need_embedding || head_on_z) out.z = ops::row_l2_normalize(out.h);
  out.logits = ops::affine(head_on_z ? out.z : out.h, pair.head.w.value, pair.head.b.value);
  if (opts.need_distribution) out.d = ops::row_softmax(out.logits);
  return out;
}

void backward_query(ModelPair& pair, const QueryForward& fwd, const QueryUpstream& up) {
  auto& q = pair.query;
  const bool head_on_z = pair.config.head_input == HeadInput::normalized;

  Matrix dlogits = up.dlogits.empty() ? Matrix(fwd.logits.rows(), fwd.logits.cols()) : up.dlogits;
  if (!up.dd.empty()) {
    if (fwd.d.empty()) throw DimensionError("backward_query: distribution was not computed");
    dlogits += ops::row_softmax_backward(fwd.d, up.dd);
  }

  Matrix dz = up.dz.empty() ? Matrix(fwd.h.rows(), fwd.h.cols()) : up.dz;
  Matrix dh(fwd.h.rows(), fwd.h.cols());
  Matrix dhead_in;
  ops::affine_backward_accumulate(head_on_z ? fwd.z : fwd.h, pair.head.w.value, dlogits,
                                  &dhead_in, pair.head.w.grad, pair.head.b.grad);
  if (head_on_z) {
    dz += dhead_in;
  } else {
    dh += dhead_in;
  }
  if (!up.dz.empty() || head_on_z) dh += ops::row_l2_normalize_backward(fwd.h, fwd.z, dz);

  auto undrop = [](const Matrix& mask, Matrix g) {
    return mask.empty() ? g : ops::hadamard(g, mask);
  };

  Matrix dr2;
  ops::affine_backward_accumulate(fwd.r2, q.w3.value, dh, &dr2, q.w3.grad, q.b3.grad);
  Matrix da2 = undrop(fwd.mask2, ops::relu_backward(fwd.p2, dr2));
  Matrix dr1;
  ops::affine_backward_accumulate(fwd.r1, q.w2.value, da2, &dr1, q.w2.grad, q.b2.grad);
  Matrix da1 = undrop(fwd.mask1, ops::relu_backward(fwd.p1, dr1));
  ops::affine_backward_accumulate(fwd.x, q.w1.value, da1, nullptr, q.w1.grad, q.b1.grad);
}

Matrix encode_key(const ModelPair& pair, const Matrix& x) {
  if (x.cols() != pair.config.input_dim) throw DimensionError("encode_key: feature count mismatch");
  const auto& k = pair.key;
  Matrix r1 = ops::relu(ops::affine(x, k.w1.value, k.b1.value));
  Matrix r2 = ops::relu(ops::affine(r1, k.w2.value, k.b2.value));
  return ops::row_l2_normalize(ops::affine(r2, k.w3.value, k.b3.value));
}

Matrix predict_scores(const ModelPair& pair, const Matrix& x, ScoreActivation activation) {
  Rng unused(0);
  ForwardOptions opts;
  opts.train = false;
  opts.need_embedding = false;
  opts.need_distribution = false;
  const QueryForward fwd = encode_query(pair, x, opts, unused);
  return activation == ScoreActivation::sigmoid ? ops::sigmoid(fwd.logits)
                                                : ops::row_softmax(fwd.logits);
}

}  // namespace mlcld::model
