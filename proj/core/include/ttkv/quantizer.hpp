#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ttkv/config.hpp"
#include "ttkv/kv_types.hpp"

namespace ttkv {

/// Per-channel-per-block affine parameters: x_hat = code * scale + zero_point.
/// Constant channels use scale = 1, zero_point = value, all codes 0.
struct QuantParams {
  float scale = 1.0f;
  float zero_point = 0.0f;
};

/// Bit-packed slow-tier block. Keys and values are packed LSB-first within a
/// byte (for 4-bit codes the low nibble holds the even element index). A
/// bit width of 16 is a lossless passthrough: the payload holds raw float32
/// and no per-channel parameters are stored; accounting models it at 2 B per
/// element.
struct QuantizedBlock {
  BlockId block_id = 0;
  Position first_position = 0;
  Position last_position = 0;
  std::uint32_t token_count = 0;
  std::uint32_t d_k = 0;
  std::uint32_t d_v = 0;
  std::uint32_t key_bits = 8;
  std::uint32_t value_bits = 4;

  std::vector<std::uint8_t> packed_keys;
  std::vector<std::uint8_t> packed_values;
  std::vector<QuantParams> key_params;    // d_k entries, empty for 16-bit
  std::vector<QuantParams> value_params;  // d_v entries, empty for 16-bit

  // Mean of the block's full-precision keys, taken before quantization.
  // Stays resident in fast memory for relevance scoring.
  std::vector<float> key_centroid;

  /// Modeled transfer size: packed payload plus 4 B per quantized channel.
  std::size_t modeled_payload_bytes() const;
};

QuantizedBlock quantize_block(const KvBlock& block, const TierConfig& config);
KvBlock dequantize_block(const QuantizedBlock& qblock);

/// Modeled bytes of one slow-tier block under `config` (payload + params).
std::size_t modeled_block_bytes(const TierConfig& config);

/// Modeled bytes per slow-tier token, parameter overhead amortized.
double compressed_bytes_per_token(const TierConfig& config);

// Versioned little-endian binary layout for dump/reload of slow tiers.
std::vector<std::uint8_t> serialize_block(const QuantizedBlock& qblock);
QuantizedBlock deserialize_block(std::span<const std::uint8_t> bytes);

void dump_slow_tier(const std::vector<QuantizedBlock>& blocks,
                    const std::filesystem::path& path);
std::vector<QuantizedBlock> load_slow_tier(const std::filesystem::path& path);

}  // namespace ttkv
