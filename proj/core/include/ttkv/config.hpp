#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "ttkv/errors.hpp"

namespace ttkv {

/// All engine tunables. The fast tier stores full-precision KV for the most
/// recent tokens inside `hbm_budget_bytes`; older tokens live in the slow
/// tier as bit-packed blocks of `block_size` tokens.
struct TierConfig {
  std::size_t hbm_budget_bytes = 0;

  // Per-token feature dimensions. d_kv = d_k + d_v.
  std::size_t d_k = 64;
  std::size_t d_v = 64;

  // Bytes per element in the fast tier (FP16 by default).
  std::size_t bytes_full_precision = 2;

  // Tokens per slow-tier block.
  std::size_t block_size = 128;

  // Slow-tier bit widths. 2..8 are affine-quantized; 16 is a lossless
  // passthrough accounted at full precision.
  unsigned key_bits = 8;
  unsigned value_bits = 4;

  // Fraction of slow-tier blocks fetched per decode step, unless an absolute
  // count is given.
  double fetch_fraction = 0.45;
  std::optional<std::size_t> top_k_blocks;

  // Latency-model rates.
  double hbm_bandwidth = 2.0e12;    // bytes/s
  double pcie_bandwidth = 3.2e10;   // bytes/s
  double transfer_latency = 1.0e-5; // s per transfer initiation
  double compute_rate = 4.0e11;     // attention elements/s

  std::size_t d_kv() const { return d_k + d_v; }

  std::size_t block_bytes_full_precision() const {
    return block_size * d_kv() * bytes_full_precision;
  }

  // Block sizes outside the supported ablation grid still run but are
  // reported with a warning.
  bool nonstandard_block_size() const {
    return block_size != 32 && block_size != 64 && block_size != 128 &&
           block_size != 256;
  }

  void validate() const {
    if (d_k == 0 || d_v == 0) throw ConfigError("d_k and d_v must be positive");
    if (block_size == 0) throw ConfigError("block_size must be positive");
    if (bytes_full_precision == 0)
      throw ConfigError("bytes_full_precision must be positive");
    auto valid_bits = [](unsigned b) { return (b >= 2 && b <= 8) || b == 16; };
    if (!valid_bits(key_bits) || !valid_bits(value_bits))
      throw ConfigError("bit widths must be in [2,8] or 16");
    if (key_bits < value_bits)
      throw ConfigError("key_bits must be >= value_bits");
    if (hbm_budget_bytes < block_bytes_full_precision())
      throw ConfigError("HBM budget smaller than one full-precision block");
    if (!(fetch_fraction > 0.0 && fetch_fraction <= 1.0) && !top_k_blocks)
      throw ConfigError("fetch_fraction must be in (0, 1]");
    if (hbm_bandwidth <= 0 || pcie_bandwidth <= 0 || compute_rate <= 0)
      throw ConfigError("bandwidths and compute_rate must be positive");
    if (transfer_latency < 0)
      throw ConfigError("transfer_latency must be non-negative");
  }
};

}  // namespace ttkv
