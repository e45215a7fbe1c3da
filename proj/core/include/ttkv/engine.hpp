#pragma once

#include <span>
#include <vector>

#include "ttkv/config.hpp"
#include "ttkv/relevance.hpp"
#include "ttkv/sim.hpp"
#include "ttkv/tier_store.hpp"
#include "ttkv/workload.hpp"

namespace ttkv {

struct EngineOptions {
  /// Adds each partition's independently normalized softmax output instead
  /// of the exact online-softmax merge. Kept for A/B demonstration only; it
  /// is not consistent with dense attention.
  bool literal_additive_merge = false;
};

struct DecodeStepReport {
  std::vector<double> output;  // d_v
  std::size_t blocks_scored = 0;
  std::size_t blocks_fetched = 0;
  std::vector<BlockId> fetched_blocks;  // prefetch-schedule order
  double bytes_transferred = 0.0;
  bool eviction_occurred = false;
  StepWorkload workload;
};

/// One logical KV stream executing streaming attention per decode step:
/// absorb the fast tier, score and fetch top-k slow blocks, merge, then
/// settle any pending eviction.
class Engine {
 public:
  Engine(TierConfig config, SelectionPolicy policy, EngineOptions options = {});

  /// Appends prompt tokens through the regular append/evict path. No
  /// attention is computed and no slow-tier traffic is recorded.
  void prefill(std::span<const TokenKV> tokens);

  DecodeStepReport decode_step(std::span<const float> query, TokenKV kv);
  std::vector<DecodeStepReport> decode_sequence(
      std::span<const DecodeInput> inputs);

  TierStore& store() { return store_; }
  const TierStore& store() const { return store_; }
  const TierConfig& config() const { return store_.config(); }
  const SelectionPolicy& policy() const { return policy_; }

 private:
  TierStore store_;
  SelectionPolicy policy_;
  EngineOptions options_;
};

}  // namespace ttkv
