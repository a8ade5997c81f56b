#include <bit>
#include <cstring>

#include "unet/io.hpp"

namespace unet {

namespace {

class Writer {
 public:
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError("checkpoint: truncated");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint32_t to_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffULL) throw PreconditionError(std::string("checkpoint: ") + what + " too large");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::uint64_t checksum64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& d) {
  Writer w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(to_u32(d.config.depth, "depth"));
  w.u32(to_u32(d.config.base_channels, "base_channels"));
  w.u32(to_u32(d.config.in_channels, "in_channels"));
  w.u32(to_u32(d.config.num_classes, "num_classes"));
  w.f32(static_cast<float>(d.config.dropout_rate));
  w.u32(to_u32(d.tensors.size(), "tensor count"));
  for (const NamedTensor& t : d.tensors) {
    w.u32(to_u32(t.name.size(), "name"));
    w.bytes(t.name);
    const Shape& s = t.values.shape();
    w.u32(4);
    for (std::size_t dim : {s.n, s.c, s.h, s.w}) w.u32(to_u32(dim, "dimension"));
    for (float v : t.values.values()) w.f32(v);
  }
  w.u64(checksum64(w.data()));
  return std::move(w.data());
}

CheckpointData decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kCheckpointMagic.size() + 8) throw FormatError("checkpoint: truncated");
  const auto body = bytes.first(bytes.size() - 8);
  Reader tail(bytes.last(8));
  if (tail.u64() != checksum64(body)) throw FormatError("checkpoint: checksum mismatch");

  Reader r(body);
  if (r.bytes(kCheckpointMagic.size()) != kCheckpointMagic) throw FormatError("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  CheckpointData d;
  d.config.depth = r.u32();
  d.config.base_channels = r.u32();
  d.config.in_channels = r.u32();
  d.config.num_classes = r.u32();
  d.config.dropout_rate = r.f32();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.bytes(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank != 4) throw FormatError("checkpoint: tensor '" + t.name + "' has rank " + std::to_string(rank));
    Shape s{r.u32(), r.u32(), r.u32(), r.u32()};
    if (s.n == 0 || s.c == 0 || s.h == 0 || s.w == 0 || s.size() > r.remaining() / 4) {
      throw FormatError("checkpoint: bad dimensions for tensor '" + t.name + "'");
    }
    std::vector<float> values(s.size());
    for (float& v : values) v = r.f32();
    t.values = Tensor<float>(s, std::move(values));
    d.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  return d;
}

}  // namespace unet
