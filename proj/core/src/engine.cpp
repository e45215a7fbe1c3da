#include "ttkv/engine.hpp"

#include <cmath>
#include <string>

#include "ttkv/attention.hpp"
#include "ttkv/quantizer.hpp"

namespace ttkv {

Engine::Engine(TierConfig config, SelectionPolicy policy,
               EngineOptions options)
    : store_(std::move(config)), policy_(policy), options_(options) {}

void Engine::prefill(std::span<const TokenKV> tokens) {
  for (const TokenKV& tok : tokens) {
    store_.append_token(tok);
    while (store_.eviction_pending()) store_.evict_and_compress();
  }
}

DecodeStepReport Engine::decode_step(std::span<const float> query,
                                     TokenKV kv) {
  const TierConfig& cfg = store_.config();
  if (query.size() != cfg.d_k)
    throw ShapeError("decode_step: query dimension mismatch");

  store_.append_token(std::move(kv));

  const double softmax_scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_k));
  AttentionAccumulator<double> acc(cfg.d_v, softmax_scale);

  DecodeStepReport report;

  // Fast-tier attention, the newly appended token included.
  std::size_t fast_rows = 0;
  for (const TokenKV& tok : store_.fast_tokens()) {
    acc.absorb(query, tok.key.data(), tok.value.data(), 1, cfg.d_k);
    ++fast_rows;
  }
  report.workload.compute_items.push_back(
      {"fast", static_cast<double>(fast_rows * cfg.d_kv())});

  std::vector<double> literal_sum;
  if (options_.literal_additive_merge) {
    literal_sum = acc.finalize();
    acc = AttentionAccumulator<double>(cfg.d_v, softmax_scale);
  }

  // Score every slow block against the query via its resident centroid.
  const auto& slow = store_.slow_blocks();
  std::vector<BlockScore> scores;
  scores.reserve(slow.size());
  for (const QuantizedBlock& b : slow)
    scores.push_back({b.block_id, score_block(query, b.key_centroid)});
  report.blocks_scored = scores.size();

  report.fetched_blocks = select_top_k(std::move(scores), policy_);
  report.blocks_fetched = report.fetched_blocks.size();

  for (BlockId id : report.fetched_blocks) {
    const QuantizedBlock& qb = slow[id - slow.front().block_id];
    report.bytes_transferred +=
        static_cast<double>(qb.modeled_payload_bytes());
    const KvBlock block = dequantize_block(qb);

    if (options_.literal_additive_merge) {
      AttentionAccumulator<double> part(cfg.d_v, softmax_scale);
      part.absorb(query, block.keys.data(), block.values.data(),
                  block.token_count, cfg.d_k);
      const auto out = part.finalize();
      for (std::size_t i = 0; i < cfg.d_v; ++i) literal_sum[i] += out[i];
    } else {
      acc.absorb(query, block.keys.data(), block.values.data(),
                 block.token_count, cfg.d_k);
    }

    const std::string label = "blk" + std::to_string(id);
    report.workload.compute_items.push_back(
        {label, static_cast<double>(block.token_count * cfg.d_kv())});
    report.workload.transfer_items.push_back(
        {label, static_cast<double>(qb.modeled_payload_bytes())});
  }

  report.output =
      options_.literal_additive_merge ? literal_sum : acc.finalize();

  while (store_.eviction_pending()) {
    store_.evict_and_compress();
    report.eviction_occurred = true;
  }
  return report;
}

std::vector<DecodeStepReport> Engine::decode_sequence(
    std::span<const DecodeInput> inputs) {
  std::vector<DecodeStepReport> reports;
  reports.reserve(inputs.size());
  for (const DecodeInput& in : inputs)
    reports.push_back(decode_step(in.query, in.kv));
  return reports;
}

}  // namespace ttkv
