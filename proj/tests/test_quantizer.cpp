#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "ttkv/quantizer.hpp"

using namespace ttkv;

namespace {

KvBlock make_block(std::size_t tokens, std::size_t d_k, std::size_t d_v) {
  KvBlock b;
  b.block_id = 7;
  b.first_position = 100;
  b.last_position = 100 + tokens - 1;
  b.token_count = tokens;
  b.d_k = d_k;
  b.d_v = d_v;
  b.keys.resize(tokens * d_k);
  b.values.resize(tokens * d_v);
  return b;
}

TierConfig bits_config(unsigned kb, unsigned vb) {
  TierConfig c;
  c.key_bits = kb;
  c.value_bits = vb;
  return c;
}

}  // namespace

TEST_CASE("4-bit codes pack LSB-first, low nibble first") {
  // One channel, values 0..15 at scale 1: codes equal the values.
  KvBlock b = make_block(4, 1, 1);
  b.keys = {0.0f, 5.0f, 10.0f, 15.0f};
  b.values = {2.0f, 2.0f, 2.0f, 2.0f};

  const QuantizedBlock q = quantize_block(b, bits_config(4, 4));
  REQUIRE(q.packed_keys.size() == 2);
  CHECK(q.packed_keys[0] == 0x50);  // codes 0, 5
  CHECK(q.packed_keys[1] == 0xfa);  // codes 10, 15
  CHECK(q.key_params[0].scale == doctest::Approx(1.0));
  CHECK(q.key_params[0].zero_point == doctest::Approx(0.0));

  const KvBlock back = dequantize_block(q);
  for (std::size_t i = 0; i < b.keys.size(); ++i)
    CHECK(back.keys[i] == b.keys[i]);
}

TEST_CASE("2-bit packing crosses byte boundaries") {
  KvBlock b = make_block(5, 1, 1);
  b.keys = {1.0f, 2.0f, 3.0f, 0.0f, 3.0f};  // range [0,3], scale 1
  b.values.assign(5, 0.0f);

  const QuantizedBlock q = quantize_block(b, bits_config(2, 2));
  REQUIRE(q.packed_keys.size() == 2);
  CHECK(q.packed_keys[0] == 0x39);  // 1 | 2<<2 | 3<<4 | 0<<6
  CHECK(q.packed_keys[1] == 0x03);
  const KvBlock back = dequantize_block(q);
  for (std::size_t i = 0; i < b.keys.size(); ++i)
    CHECK(back.keys[i] == b.keys[i]);
}

TEST_CASE("constant channels round-trip exactly") {
  KvBlock b = make_block(16, 3, 2);
  for (std::size_t r = 0; r < 16; ++r) {
    b.keys[r * 3 + 0] = -4.25f;
    b.keys[r * 3 + 1] = 0.0f;
    b.keys[r * 3 + 2] = 1e-20f;
    b.values[r * 2 + 0] = 123.5f;
    b.values[r * 2 + 1] = -0.125f;
  }
  const QuantizedBlock q = quantize_block(b, bits_config(8, 4));
  const KvBlock back = dequantize_block(q);
  CHECK(back.keys == b.keys);
  CHECK(back.values == b.values);
}

TEST_CASE("random blocks stay inside the affine error bound") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<float> dist(-3.0f, 3.0f);
  for (int trial = 0; trial < 200; ++trial) {
    const unsigned bits = trial % 2 ? 4 : 8;
    KvBlock b = make_block(24, 6, 6);
    for (auto& x : b.keys) x = dist(gen);
    for (auto& x : b.values) x = dist(gen);
    const QuantizedBlock q = quantize_block(b, bits_config(bits, bits));
    const KvBlock back = dequantize_block(q);

    const double levels = (1u << bits) - 1;
    for (std::size_t c = 0; c < b.d_k; ++c) {
      float lo = b.keys[c], hi = b.keys[c];
      for (std::size_t r = 0; r < b.token_count; ++r) {
        lo = std::min(lo, b.keys[r * b.d_k + c]);
        hi = std::max(hi, b.keys[r * b.d_k + c]);
      }
      const double bound = (double(hi) - lo) / (2.0 * levels) +
                           4.0 * double(hi - lo) * 1.19209290e-07;
      for (std::size_t r = 0; r < b.token_count; ++r) {
        const double err =
            std::abs(double(back.keys[r * b.d_k + c]) - b.keys[r * b.d_k + c]);
        CHECK(err <= bound);
      }
    }
  }
}

TEST_CASE("16-bit passthrough is lossless and keeps no parameters") {
  std::mt19937 gen(3);
  std::uniform_real_distribution<float> dist(-10.0f, 10.0f);
  KvBlock b = make_block(32, 8, 8);
  for (auto& x : b.keys) x = dist(gen);
  for (auto& x : b.values) x = dist(gen);

  const QuantizedBlock q = quantize_block(b, bits_config(16, 16));
  CHECK(q.key_params.empty());
  CHECK(q.value_params.empty());
  const KvBlock back = dequantize_block(q);
  CHECK(back.keys == b.keys);
  CHECK(back.values == b.values);
  // Modeled as two bytes per element, no parameter overhead.
  CHECK(q.modeled_payload_bytes() == 32 * 8 * 2 * 2);
}

TEST_CASE("modeled block bytes") {
  TierConfig c;
  c.d_k = 128;
  c.d_v = 128;
  c.block_size = 128;
  c.key_bits = 8;
  c.value_bits = 4;
  // 16384 key bytes + 8192 value bytes + 4 B per channel of parameters.
  CHECK(modeled_block_bytes(c) == 25600);
  CHECK(compressed_bytes_per_token(c) == doctest::Approx(200.0));

  c.key_bits = 16;
  c.value_bits = 16;
  CHECK(modeled_block_bytes(c) == 65536);
}

TEST_CASE("centroid is the pre-quantization key mean") {
  KvBlock b = make_block(4, 2, 1);
  b.keys = {1.0f, 0.0f, 2.0f, 4.0f, 3.0f, 0.0f, 6.0f, 4.0f};
  b.values.assign(4, 0.0f);
  const QuantizedBlock q = quantize_block(b, bits_config(4, 4));
  CHECK(q.key_centroid[0] == doctest::Approx(3.0));
  CHECK(q.key_centroid[1] == doctest::Approx(2.0));
}

TEST_CASE("block serialization round-trips") {
  std::mt19937 gen(5);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  KvBlock b = make_block(16, 5, 3);
  for (auto& x : b.keys) x = dist(gen);
  for (auto& x : b.values) x = dist(gen);
  const QuantizedBlock q = quantize_block(b, bits_config(8, 4));

  const auto bytes = serialize_block(q);
  const QuantizedBlock back = deserialize_block(bytes);
  CHECK(back.block_id == q.block_id);
  CHECK(back.first_position == q.first_position);
  CHECK(back.last_position == q.last_position);
  CHECK(back.token_count == q.token_count);
  CHECK(back.key_bits == q.key_bits);
  CHECK(back.value_bits == q.value_bits);
  CHECK(back.packed_keys == q.packed_keys);
  CHECK(back.packed_values == q.packed_values);
  CHECK(back.key_centroid == q.key_centroid);
  REQUIRE(back.key_params.size() == q.key_params.size());
  for (std::size_t i = 0; i < q.key_params.size(); ++i) {
    CHECK(back.key_params[i].scale == q.key_params[i].scale);
    CHECK(back.key_params[i].zero_point == q.key_params[i].zero_point);
  }

  SUBCASE("bad magic") {
    auto bad = bytes;
    bad[0] ^= 0xff;
    CHECK_THROWS_AS(deserialize_block(bad), IntegrityError);
  }
  SUBCASE("unsupported version") {
    auto bad = bytes;
    bad[4] = 0xee;
    CHECK_THROWS_AS(deserialize_block(bad), IntegrityError);
  }
  SUBCASE("truncated payload") {
    auto bad = bytes;
    bad.resize(bad.size() - 3);
    CHECK_THROWS_AS(deserialize_block(bad), IntegrityError);
  }
}

TEST_CASE("slow-tier dump and reload") {
  std::mt19937 gen(9);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<QuantizedBlock> blocks;
  for (int i = 0; i < 3; ++i) {
    KvBlock b = make_block(8, 4, 4);
    b.block_id = i;
    for (auto& x : b.keys) x = dist(gen);
    for (auto& x : b.values) x = dist(gen);
    blocks.push_back(quantize_block(b, bits_config(8, 4)));
  }

  const auto path = std::filesystem::temp_directory_path() / "ttkv_tier.bin";
  dump_slow_tier(blocks, path);
  const auto back = load_slow_tier(path);
  REQUIRE(back.size() == blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    CHECK(back[i].block_id == blocks[i].block_id);
    CHECK(back[i].packed_keys == blocks[i].packed_keys);
    CHECK(back[i].packed_values == blocks[i].packed_values);
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_slow_tier(path), IoError);
}
