#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mlcld/errors.hpp"
#include "mlcld/model.hpp"

namespace mlcld::model {
namespace {

constexpr char kMagic[5] = {'M', 'L', 'C', 'L', 'D'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void matrix(const Matrix& m) {
    for (double v : m.flat()) u64(std::bit_cast<std::uint64_t>(v));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  std::size_t remaining() const { return in_.size() - pos_; }
  void need(std::size_t n) const {
    if (remaining() < n) throw LoadError(LoadError::Kind::truncated, "checkpoint is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  Matrix matrix(std::size_t rows, std::size_t cols) {
    need(rows * cols * 8);
    Matrix m(rows, cols);
    for (double& v : m.flat()) v = std::bit_cast<double>(u64());
    return m;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

std::uint32_t dim_u32(std::size_t v) {
  if (v > UINT32_MAX) throw DimensionError("checkpoint: dimension exceeds u32");
  return static_cast<std::uint32_t>(v);
}

void write_encoder(Writer& w, const EncoderWeights& enc) {
  for (const Param* p : enc.params()) w.matrix(p->value);
}

EncoderWeights read_encoder(Reader& r, std::size_t f, std::size_t h, std::size_t e) {
  EncoderWeights enc;
  enc.w1 = Param(r.matrix(f, h));
  enc.b1 = Param(r.matrix(1, h));
  enc.w2 = Param(r.matrix(h, h));
  enc.b2 = Param(r.matrix(1, h));
  enc.w3 = Param(r.matrix(h, e));
  enc.b3 = Param(r.matrix(1, e));
  return enc;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelPair& pair, const CheckpointMeta& meta) {
  const auto& cfg = pair.config;
  if (meta.label_names.size() != cfg.num_labels) {
    throw DimensionError("checkpoint: label name count does not match num_labels");
  }
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u8(kCheckpointVersion);
  w.u32(dim_u32(cfg.input_dim));
  w.u32(dim_u32(cfg.hidden_dim));
  w.u32(dim_u32(cfg.embed_dim));
  w.u32(dim_u32(cfg.num_labels));
  write_encoder(w, pair.query);
  write_encoder(w, pair.key);
  w.matrix(pair.head.w.value);
  w.matrix(pair.head.b.value);
  for (const auto& name : meta.label_names) {
    w.u32(dim_u32(name.size()));
    w.bytes(name.data(), name.size());
  }
  w.u8(static_cast<std::uint8_t>(meta.phase));
  w.u64(meta.seed);
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw LoadError(LoadError::Kind::bad_magic, "not a checkpoint (bad magic)");
  }
  Reader r(bytes);
  r.str(sizeof kMagic);
  const std::uint8_t version = r.u8();
  if (version != kCheckpointVersion) {
    throw LoadError(LoadError::Kind::version_mismatch,
                    "checkpoint version " + std::to_string(version) + " unsupported (expected " +
                        std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t f = r.u32(), h = r.u32(), e = r.u32(), c = r.u32();
  if (f == 0 || h == 0 || e == 0 || c == 0) {
    throw LoadError(LoadError::Kind::shape_inconsistent, "checkpoint has a zero dimension");
  }
  // Every weight block plus one length prefix per label, a phase byte and the seed.
  const std::size_t encoder = f * h + h + h * h + h + h * e + e;
  const std::size_t floats = 2 * encoder + e * c + c;
  const std::size_t minimum = floats * 8 + c * 4 + 1 + 8;
  if (r.remaining() < minimum) {
    throw LoadError(LoadError::Kind::truncated, "checkpoint is truncated");
  }

  Checkpoint ck;
  auto& cfg = ck.model.config;
  cfg.input_dim = f;
  cfg.hidden_dim = h;
  cfg.embed_dim = e;
  cfg.num_labels = c;
  ck.model.query = read_encoder(r, f, h, e);
  ck.model.key = read_encoder(r, f, h, e);
  ck.model.head.w = Param(r.matrix(e, c));
  ck.model.head.b = Param(r.matrix(1, c));
  for (std::size_t i = 0; i < c; ++i) ck.meta.label_names.push_back(r.str(r.u32()));
  const std::uint8_t phase = r.u8();
  if (phase > 1) throw LoadError(LoadError::Kind::shape_inconsistent, "unknown phase tag");
  ck.meta.phase = static_cast<Phase>(phase);
  ck.meta.seed = r.u64();
  if (r.remaining() != 0) {
    throw LoadError(LoadError::Kind::shape_inconsistent, "trailing bytes after checkpoint");
  }
  return ck;
}

void save_checkpoint(const ModelPair& pair, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(pair, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(LoadError::Kind::io, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw LoadError(LoadError::Kind::io, "write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadError::Kind::io, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace mlcld::model
