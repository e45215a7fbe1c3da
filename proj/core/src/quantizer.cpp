#include "ttkv/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace ttkv {
namespace {

std::size_t packed_bytes(std::size_t count, unsigned bits) {
  if (bits == 16) return count * sizeof(float);  // raw float payload
  return (count * bits + 7) / 8;
}

std::size_t modeled_bytes(std::size_t count, unsigned bits) {
  if (bits == 16) return count * 2;  // modeled as FP16 storage
  return (count * bits + 7) / 8;
}

void pack_codes(const std::vector<std::uint16_t>& codes, unsigned bits,
                std::vector<std::uint8_t>& out) {
  out.assign(packed_bytes(codes.size(), bits), 0);
  std::size_t bitpos = 0;
  for (std::uint16_t code : codes) {
    for (unsigned b = 0; b < bits; ++b) {
      if (code & (1u << b)) out[(bitpos + b) / 8] |= 1u << ((bitpos + b) % 8);
    }
    bitpos += bits;
  }
}

std::vector<std::uint16_t> unpack_codes(const std::vector<std::uint8_t>& in,
                                        std::size_t count, unsigned bits) {
  std::vector<std::uint16_t> codes(count, 0);
  std::size_t bitpos = 0;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint16_t code = 0;
    for (unsigned b = 0; b < bits; ++b) {
      if (in[(bitpos + b) / 8] & (1u << ((bitpos + b) % 8))) code |= 1u << b;
    }
    codes[i] = code;
    bitpos += bits;
  }
  return codes;
}

// Asymmetric per-channel min-max affine quantization of a token_count x dim
// matrix; channels are columns. Rounding is half-away-from-zero.
void quantize_tensor(const std::vector<float>& data, std::size_t rows,
                     std::size_t dim, unsigned bits,
                     std::vector<QuantParams>& params,
                     std::vector<std::uint8_t>& packed) {
  if (bits == 16) {
    params.clear();
    packed.resize(data.size() * sizeof(float));
    std::memcpy(packed.data(), data.data(), packed.size());
    return;
  }

  const double levels = static_cast<double>((1u << bits) - 1);
  params.resize(dim);
  std::vector<std::uint16_t> codes(rows * dim, 0);
  for (std::size_t c = 0; c < dim; ++c) {
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (std::size_t r = 0; r < rows; ++r) {
      const float x = data[r * dim + c];
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    if (hi == lo) {
      params[c] = {1.0f, lo};  // constant channel: exact round-trip
      continue;
    }
    const float scale =
        static_cast<float>((static_cast<double>(hi) - lo) / levels);
    params[c] = {scale, lo};
    for (std::size_t r = 0; r < rows; ++r) {
      const double q =
          std::round((static_cast<double>(data[r * dim + c]) - lo) / scale);
      codes[r * dim + c] = static_cast<std::uint16_t>(
          std::clamp(q, 0.0, levels));
    }
  }
  pack_codes(codes, bits, packed);
}

void dequantize_tensor(const std::vector<std::uint8_t>& packed,
                       std::size_t rows, std::size_t dim, unsigned bits,
                       const std::vector<QuantParams>& params,
                       std::vector<float>& out) {
  out.resize(rows * dim);
  if (bits == 16) {
    if (packed.size() != out.size() * sizeof(float))
      throw IntegrityError("dequantize: passthrough payload size mismatch");
    std::memcpy(out.data(), packed.data(), packed.size());
    return;
  }
  if (packed.size() != packed_bytes(rows * dim, bits))
    throw IntegrityError("dequantize: packed payload size mismatch");
  if (params.size() != dim)
    throw IntegrityError("dequantize: parameter count mismatch");
  const auto codes = unpack_codes(packed, rows * dim, bits);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      const QuantParams& p = params[c];
      out[r * dim + c] = static_cast<float>(
          static_cast<double>(codes[r * dim + c]) * p.scale + p.zero_point);
    }
  }
}

}  // namespace

std::size_t QuantizedBlock::modeled_payload_bytes() const {
  const std::size_t nk = std::size_t(token_count) * d_k;
  const std::size_t nv = std::size_t(token_count) * d_v;
  std::size_t bytes = modeled_bytes(nk, key_bits) + modeled_bytes(nv, value_bits);
  if (key_bits != 16) bytes += 4 * d_k;
  if (value_bits != 16) bytes += 4 * d_v;
  return bytes;
}

QuantizedBlock quantize_block(const KvBlock& block, const TierConfig& config) {
  if (block.keys.size() != block.token_count * block.d_k ||
      block.values.size() != block.token_count * block.d_v)
    throw ShapeError("quantize_block: tensor sizes inconsistent");

  QuantizedBlock q;
  q.block_id = block.block_id;
  q.first_position = block.first_position;
  q.last_position = block.last_position;
  q.token_count = static_cast<std::uint32_t>(block.token_count);
  q.d_k = static_cast<std::uint32_t>(block.d_k);
  q.d_v = static_cast<std::uint32_t>(block.d_v);
  q.key_bits = config.key_bits;
  q.value_bits = config.value_bits;

  // Centroid from the full-precision keys, before any quantization.
  q.key_centroid.resize(block.d_k);
  for (std::size_t c = 0; c < block.d_k; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < block.token_count; ++r)
      sum += block.keys[r * block.d_k + c];
    q.key_centroid[c] = static_cast<float>(sum / block.token_count);
  }

  quantize_tensor(block.keys, block.token_count, block.d_k, config.key_bits,
                  q.key_params, q.packed_keys);
  quantize_tensor(block.values, block.token_count, block.d_v,
                  config.value_bits, q.value_params, q.packed_values);
  return q;
}

KvBlock dequantize_block(const QuantizedBlock& qblock) {
  KvBlock block;
  block.block_id = qblock.block_id;
  block.first_position = qblock.first_position;
  block.last_position = qblock.last_position;
  block.token_count = qblock.token_count;
  block.d_k = qblock.d_k;
  block.d_v = qblock.d_v;
  dequantize_tensor(qblock.packed_keys, qblock.token_count, qblock.d_k,
                    qblock.key_bits, qblock.key_params, block.keys);
  dequantize_tensor(qblock.packed_values, qblock.token_count, qblock.d_v,
                    qblock.value_bits, qblock.value_params, block.values);
  return block;
}

std::size_t modeled_block_bytes(const TierConfig& config) {
  const std::size_t nk = config.block_size * config.d_k;
  const std::size_t nv = config.block_size * config.d_v;
  std::size_t bytes =
      modeled_bytes(nk, config.key_bits) + modeled_bytes(nv, config.value_bits);
  if (config.key_bits != 16) bytes += 4 * config.d_k;
  if (config.value_bits != 16) bytes += 4 * config.d_v;
  return bytes;
}

double compressed_bytes_per_token(const TierConfig& config) {
  return static_cast<double>(modeled_block_bytes(config)) /
         static_cast<double>(config.block_size);
}

namespace {

constexpr char kBlockMagic[4] = {'T', 'T', 'K', 'V'};
constexpr std::uint16_t kFormatVersion = 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
void put_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(out, v);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint16_t u16() { return static_cast<std::uint16_t>(u(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(u(4)); }
  std::uint64_t u64() { return u(8); }
  float f32() {
    std::uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  std::vector<std::uint8_t> blob(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(bytes_.begin() + pos_,
                                  bytes_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::uint64_t u(int n) {
    need(n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size())
      throw IntegrityError("deserialize: truncated payload");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_block(const QuantizedBlock& q) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kBlockMagic, kBlockMagic + 4);
  put_u16(out, kFormatVersion);
  put_u64(out, q.block_id);
  put_u64(out, q.first_position);
  put_u64(out, q.last_position);
  put_u32(out, q.token_count);
  put_u32(out, q.d_k);
  put_u32(out, q.d_v);
  put_u16(out, static_cast<std::uint16_t>(q.key_bits));
  put_u16(out, static_cast<std::uint16_t>(q.value_bits));
  for (const QuantParams& p : q.key_params) {
    put_f32(out, p.scale);
    put_f32(out, p.zero_point);
  }
  for (const QuantParams& p : q.value_params) {
    put_f32(out, p.scale);
    put_f32(out, p.zero_point);
  }
  for (float c : q.key_centroid) put_f32(out, c);
  put_u64(out, q.packed_keys.size());
  out.insert(out.end(), q.packed_keys.begin(), q.packed_keys.end());
  put_u64(out, q.packed_values.size());
  out.insert(out.end(), q.packed_values.begin(), q.packed_values.end());
  return out;
}

QuantizedBlock deserialize_block(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.blob(4);
  if (std::memcmp(magic.data(), kBlockMagic, 4) != 0)
    throw IntegrityError("deserialize: bad magic");
  if (r.u16() != kFormatVersion)
    throw IntegrityError("deserialize: unsupported version");

  QuantizedBlock q;
  q.block_id = r.u64();
  q.first_position = r.u64();
  q.last_position = r.u64();
  q.token_count = r.u32();
  q.d_k = r.u32();
  q.d_v = r.u32();
  q.key_bits = r.u16();
  q.value_bits = r.u16();

  auto valid_bits = [](std::uint32_t b) { return (b >= 2 && b <= 8) || b == 16; };
  if (!valid_bits(q.key_bits) || !valid_bits(q.value_bits))
    throw IntegrityError("deserialize: bad bit widths");

  const std::size_t n_key_params = q.key_bits == 16 ? 0 : q.d_k;
  const std::size_t n_value_params = q.value_bits == 16 ? 0 : q.d_v;
  q.key_params.resize(n_key_params);
  for (auto& p : q.key_params) {
    p.scale = r.f32();
    p.zero_point = r.f32();
  }
  q.value_params.resize(n_value_params);
  for (auto& p : q.value_params) {
    p.scale = r.f32();
    p.zero_point = r.f32();
  }
  q.key_centroid.resize(q.d_k);
  for (auto& c : q.key_centroid) c = r.f32();

  const std::size_t key_len = r.u64();
  if (key_len != packed_bytes(std::size_t(q.token_count) * q.d_k, q.key_bits))
    throw IntegrityError("deserialize: key payload length mismatch");
  q.packed_keys = r.blob(key_len);
  const std::size_t value_len = r.u64();
  if (value_len !=
      packed_bytes(std::size_t(q.token_count) * q.d_v, q.value_bits))
    throw IntegrityError("deserialize: value payload length mismatch");
  q.packed_values = r.blob(value_len);
  return q;
}

void dump_slow_tier(const std::vector<QuantizedBlock>& blocks,
                    const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  std::vector<std::uint8_t> header;
  header.insert(header.end(), {'T', 'T', 'K', 'V', 'T', 'I', 'E', 'R'});
  put_u16(header, kFormatVersion);
  put_u64(header, blocks.size());
  os.write(reinterpret_cast<const char*>(header.data()), header.size());
  for (const auto& b : blocks) {
    const auto bytes = serialize_block(b);
    std::vector<std::uint8_t> len;
    put_u64(len, bytes.size());
    os.write(reinterpret_cast<const char*>(len.data()), len.size());
    os.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  }
  if (!os) throw IoError("write failed: " + path.string());
}

std::vector<QuantizedBlock> load_slow_tier(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> all((std::istreambuf_iterator<char>(is)),
                                std::istreambuf_iterator<char>());
  Reader r(all);
  const auto magic = r.blob(8);
  const char expect[8] = {'T', 'T', 'K', 'V', 'T', 'I', 'E', 'R'};
  if (std::memcmp(magic.data(), expect, 8) != 0)
    throw IntegrityError("slow-tier file: bad magic");
  if (r.u16() != kFormatVersion)
    throw IntegrityError("slow-tier file: unsupported version");
  const std::uint64_t count = r.u64();
  std::vector<QuantizedBlock> blocks;
  blocks.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t len = r.u64();
    blocks.push_back(deserialize_block(r.blob(len)));
  }
  if (!r.done()) throw IntegrityError("slow-tier file: trailing bytes");
  return blocks;
}

}  // namespace ttkv
