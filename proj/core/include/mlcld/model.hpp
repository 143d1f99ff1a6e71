#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mlcld/matrix.hpp"
#include "mlcld/rng.hpp"

namespace mlcld::model {

/// Which representation feeds the distribution head.
enum class HeadInput { backbone, normalized };

struct EncoderConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 512;
  std::size_t embed_dim = 128;
  std::size_t num_labels = 0;
  double dropout = 0.2;
  HeadInput head_input = HeadInput::backbone;

  /// Throws ParameterError unless all dims ≥ 1 and 0 ≤ dropout < 1.
  void validate() const;
};

/// Three affine layers: f→h, h→h, h→e.
struct EncoderWeights {
  Param w1, b1, w2, b2, w3, b3;

  std::array<Param*, 6> params() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
  std::array<const Param*, 6> params() const { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
  friend bool operator==(const EncoderWeights& a, const EncoderWeights& b);
};

/// The label-distribution head (e×c weight W and 1×c bias).
struct DistHead {
  Param w, b;
};

/// Query encoder, its momentum (key) copy, and the distribution head. The
/// key encoder is never given gradients; it changes only through EMA.
struct ModelPair {
  EncoderConfig config;
  EncoderWeights query;
  EncoderWeights key;
  DistHead head;

  /// Query encoder weights followed by the head (W, bias).
  std::vector<Param*> trainable();
  std::vector<Matrix*> key_tensors();
  std::vector<const Matrix*> query_tensors() const;
};

/// Weights ~ U(−√(6/fan_in), √(6/fan_in)), biases zero, key := query.
ModelPair init_model(const EncoderConfig& config, Rng& rng);

/// Activations of one query-branch forward pass, kept for backward.
struct QueryForward {
  Matrix x;
  Matrix a1, mask1, p1;  ///< affine1 output, dropout multiplier, post-dropout pre-relu
  Matrix r1;
  Matrix a2, mask2, p2;
  Matrix r2;
  Matrix h;  ///< backbone output, b×e
  Matrix z;  ///< row-normalized h (empty when not requested)
  Matrix logits;
  Matrix d;  ///< row softmax of logits (empty when not requested)
  bool train = false;
};

struct ForwardOptions {
  bool train = false;
  bool need_embedding = true;      ///< compute z (throws on a degenerate h row)
  bool need_distribution = true;   ///< compute d = softmax(logits)
};

/// Query branch: h = affine3(relu(dropout(affine2(relu(dropout(affine1(x))))))),
/// z = normalize(h), d = softmax(head(h or z)). Dropout only when training.
QueryForward encode_query(const ModelPair& pair, const Matrix& x, const ForwardOptions& opts,
                          Rng& rng);

/// Upstream gradients of a loss with respect to query-branch outputs. Any
/// may be left empty.
struct QueryUpstream {
  Matrix dz;
  Matrix dd;
  Matrix dlogits;
};

/// Accumulates parameter gradients of the query encoder and head.
void backward_query(ModelPair& pair, const QueryForward& fwd, const QueryUpstream& upstream);

/// Key branch in eval mode; returns unit rows. No activations are kept.
Matrix encode_key(const ModelPair& pair, const Matrix& x);

enum class ScoreActivation { sigmoid, softmax };

/// Eval-mode label scores in [0, 1] from the query encoder and head.
Matrix predict_scores(const ModelPair& pair, const Matrix& x, ScoreActivation activation);

// ---- checkpoints ----------------------------------------------------------

enum class Phase : std::uint8_t { pretrained = 0, finetuned = 1 };

struct CheckpointMeta {
  std::vector<std::string> label_names;
  Phase phase = Phase::pretrained;
  std::uint64_t seed = 0;
};

struct Checkpoint {
  ModelPair model;
  CheckpointMeta meta;
};

inline constexpr std::uint8_t kCheckpointVersion = 1;

/// Binary layout (little-endian): "MLCLD", version byte, u32 f,h,e,c, query
/// W1,b1,W2,b2,W3,b3, key (same order), W_dist, b_dist as row-major f64,
/// label names as u32-length-prefixed UTF-8, phase byte, u64 seed.
std::vector<std::uint8_t> serialize_checkpoint(const ModelPair& pair, const CheckpointMeta& meta);
/// Validates magic, version, and size arithmetic before building anything;
/// throws LoadError.
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const ModelPair& pair, const CheckpointMeta& meta,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mlcld::model
