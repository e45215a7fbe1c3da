#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ttkv/kv_types.hpp"

namespace ttkv {

/// Token span of a planted needle, independent of the store's block size so
/// recall is comparable across block-size sweeps.
inline constexpr std::size_t kNeedleSpanTokens = 128;

struct WorkloadSpec {
  enum class Kind { Gaussian, PlantedNeedle };

  Kind kind = Kind::Gaussian;
  std::size_t context_length = 4096;
  std::size_t decode_steps = 32;
  std::size_t d_k = 64;
  std::size_t d_v = 64;
  std::uint64_t seed = 0;

  // Needle workload only. The needle occupies tokens
  // [needle_block_position * 128, needle_block_position * 128 + 128). Its keys
  // are drawn around a fixed unit direction u with per-key mean
  // (strength / sqrt(128)) * u, so the needle's centroid sits `strength`
  // centroid-noise standard deviations from the isotropic blocks at block
  // size 128. Decode queries equal u.
  std::size_t needle_block_position = 2;
  double needle_alignment_strength = 3.0;

  void validate() const;
};

struct DecodeInput {
  TokenKV kv;
  std::vector<float> query;
};

struct WorkloadStream {
  std::vector<TokenKV> prefill;
  std::vector<DecodeInput> decode;
  std::vector<float> needle_direction;  // empty for gaussian workloads
};

/// Deterministic given the seed: identical spec -> bit-identical stream.
WorkloadStream generate_workload(const WorkloadSpec& spec);

namespace detail {

/// Box-Muller over mt19937_64 uniforms; avoids the implementation-defined
/// std::normal_distribution so streams are reproducible across standard
/// libraries.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : gen_(seed) {}
  double next();
  float nextf() { return static_cast<float>(next()); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace detail
}  // namespace ttkv
