#include "ttkv/workload.hpp"

#include <cmath>
#include <numbers>

#include "ttkv/errors.hpp"

namespace ttkv {

namespace detail {

double GaussianSource::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // (0,1] uniforms from the top 53 bits keep log() finite.
  const double inv = 0x1.0p-53;
  const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * inv;
  const double u2 = static_cast<double>(gen_() >> 11) * inv;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace detail

void WorkloadSpec::validate() const {
  if (context_length < 1) throw ConfigError("context_length must be >= 1");
  if (d_k == 0 || d_v == 0) throw ConfigError("d_k and d_v must be positive");
  if (kind == Kind::PlantedNeedle) {
    const std::size_t start = needle_block_position * kNeedleSpanTokens;
    if (start + kNeedleSpanTokens > context_length)
      throw ConfigError("needle span extends past the context");
    if (needle_alignment_strength <= 0)
      throw ConfigError("needle_alignment_strength must be positive");
  }
}

WorkloadStream generate_workload(const WorkloadSpec& spec) {
  spec.validate();
  detail::GaussianSource rng(spec.seed);

  WorkloadStream stream;
  const bool needle = spec.kind == WorkloadSpec::Kind::PlantedNeedle;

  std::vector<float> u;
  if (needle) {
    u.assign(spec.d_k, 1.0f / std::sqrt(static_cast<float>(spec.d_k)));
    stream.needle_direction = u;
  }
  const std::size_t needle_first = spec.needle_block_position * kNeedleSpanTokens;
  const std::size_t needle_last = needle_first + kNeedleSpanTokens;  // exclusive
  // Per-key mean magnitude giving a centroid separation of
  // needle_alignment_strength centroid-noise sigmas at the reference span.
  const double mean_mag =
      spec.needle_alignment_strength /
      std::sqrt(static_cast<double>(kNeedleSpanTokens));

  auto draw_token = [&](Position pos) {
    TokenKV kv;
    kv.position = pos;
    kv.key.resize(spec.d_k);
    kv.value.resize(spec.d_v);
    const bool in_needle = needle && pos >= needle_first && pos < needle_last;
    for (std::size_t i = 0; i < spec.d_k; ++i) {
      double x = rng.next();
      if (in_needle) x += mean_mag * u[i];
      kv.key[i] = static_cast<float>(x);
    }
    for (std::size_t i = 0; i < spec.d_v; ++i)
      kv.value[i] = rng.nextf();
    return kv;
  };

  stream.prefill.reserve(spec.context_length);
  for (Position p = 0; p < spec.context_length; ++p)
    stream.prefill.push_back(draw_token(p));

  stream.decode.reserve(spec.decode_steps);
  for (std::size_t s = 0; s < spec.decode_steps; ++s) {
    DecodeInput in;
    in.kv = draw_token(spec.context_length + s);
    if (needle) {
      in.query = u;  // decode queries aligned with the planted direction
    } else {
      in.query.resize(spec.d_k);
      for (auto& q : in.query) q = rng.nextf();
    }
    stream.decode.push_back(std::move(in));
  }
  return stream;
}

}  // namespace ttkv
