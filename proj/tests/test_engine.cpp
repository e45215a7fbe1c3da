#include <doctest.h>

#include <string>

#include "ttkv/engine.hpp"
#include "ttkv/reference.hpp"

using namespace ttkv;

namespace {

TierConfig engine_config(unsigned kb, unsigned vb) {
  TierConfig c;
  c.d_k = 16;
  c.d_v = 16;
  c.block_size = 32;
  c.hbm_budget_bytes = 128 * c.d_kv() * c.bytes_full_precision;  // 128 tokens
  c.key_bits = kb;
  c.value_bits = vb;
  return c;
}

WorkloadSpec engine_spec() {
  WorkloadSpec s;
  s.context_length = 512;
  s.decode_steps = 6;
  s.d_k = 16;
  s.d_v = 16;
  s.seed = 13;
  return s;
}

}  // namespace

TEST_CASE("lossless fetch-all decode matches dense attention") {
  Engine engine(engine_config(16, 16), SelectionPolicy{std::nullopt, 1.0});
  const auto stream = generate_workload(engine_spec());
  engine.prefill(stream.prefill);

  std::vector<TokenKV> history = stream.prefill;
  for (const DecodeInput& in : stream.decode) {
    const auto report = engine.decode_step(in.query, in.kv);
    history.push_back(in.kv);
    const auto oracle = reference::dense_attention(in.query, history);
    CHECK(reference::relative_error(report.output, oracle) < 1e-12);
    CHECK(report.blocks_fetched == report.blocks_scored);
  }
}

TEST_CASE("quantized decode stays close to dense attention") {
  Engine engine(engine_config(8, 4), SelectionPolicy{std::nullopt, 1.0});
  const auto stream = generate_workload(engine_spec());
  engine.prefill(stream.prefill);

  std::vector<TokenKV> history = stream.prefill;
  for (const DecodeInput& in : stream.decode) {
    const auto report = engine.decode_step(in.query, in.kv);
    history.push_back(in.kv);
    const auto oracle = reference::dense_attention(in.query, history);
    CHECK(reference::relative_error(report.output, oracle) < 0.2);
  }
}

TEST_CASE("step report accounting") {
  const TierConfig cfg = engine_config(8, 4);
  Engine engine(cfg, SelectionPolicy{std::nullopt, 0.45});
  const auto stream = generate_workload(engine_spec());
  engine.prefill(stream.prefill);

  const std::size_t slow_blocks = engine.store().slow_blocks().size();
  const auto& in = stream.decode.front();
  const auto report = engine.decode_step(in.query, in.kv);

  CHECK(report.blocks_scored == slow_blocks);
  CHECK(report.blocks_fetched ==
        engine.policy().resolve(slow_blocks));
  CHECK(report.bytes_transferred ==
        doctest::Approx(double(report.blocks_fetched) *
                        double(modeled_block_bytes(cfg))));

  // One compute item for the fast tier plus one compute/transfer pair per
  // fetched block, labels matching block ids in prefetch order.
  REQUIRE(report.workload.compute_items.size() ==
          report.blocks_fetched + 1);
  REQUIRE(report.workload.transfer_items.size() == report.blocks_fetched);
  CHECK(report.workload.compute_items.front().label == "fast");
  for (std::size_t i = 0; i < report.blocks_fetched; ++i) {
    const std::string label =
        "blk" + std::to_string(report.fetched_blocks[i]);
    CHECK(report.workload.compute_items[i + 1].label == label);
    CHECK(report.workload.transfer_items[i].label == label);
  }
}

TEST_CASE("evictions settle at the end of the step") {
  const TierConfig cfg = engine_config(8, 4);
  Engine engine(cfg, SelectionPolicy{std::nullopt, 0.45});
  auto spec = engine_spec();
  spec.context_length = 160;  // leaves the fast tier exactly full
  const auto stream = generate_workload(spec);
  engine.prefill(stream.prefill);
  CHECK(!engine.store().eviction_pending());

  const auto report =
      engine.decode_step(stream.decode[0].query, stream.decode[0].kv);
  CHECK(report.eviction_occurred);
  CHECK(!engine.store().eviction_pending());
  // 129 tokens were resident; one block of 32 moved to the slow tier.
  CHECK(engine.store().fast_token_count() == 97);
}

TEST_CASE("literal additive merge is not the exact merge") {
  const auto stream = generate_workload(engine_spec());
  Engine exact(engine_config(16, 16), SelectionPolicy{std::nullopt, 1.0});
  Engine literal(engine_config(16, 16), SelectionPolicy{std::nullopt, 1.0},
                 EngineOptions{true});
  exact.prefill(stream.prefill);
  literal.prefill(stream.prefill);

  const auto& in = stream.decode.front();
  const auto a = exact.decode_step(in.query, in.kv);
  const auto b = literal.decode_step(in.query, in.kv);
  CHECK(reference::relative_error(b.output, a.output) > 0.01);
}

TEST_CASE("query dimension is checked") {
  Engine engine(engine_config(8, 4), SelectionPolicy{});
  std::vector<float> bad_query(7, 0.0f);
  TokenKV kv;
  kv.position = 0;
  kv.key.assign(16, 0.0f);
  kv.value.assign(16, 0.0f);
  CHECK_THROWS_AS(engine.decode_step(bad_query, kv), ShapeError);
}
