#pragma once

#include <deque>
#include <optional>
#include <utility>
#include <vector>

#include "ttkv/config.hpp"
#include "ttkv/kv_types.hpp"
#include "ttkv/quantizer.hpp"

namespace ttkv {

/// idx: slow-tier token position -> block identifier, plus the inverse
/// block -> position range. Ranges are disjoint and ordered by block_id.
class BlockIndex {
 public:
  void append_block(BlockId id, Position first, Position last);
  std::optional<BlockId> find(Position p) const;
  std::pair<Position, Position> range(BlockId id) const;
  std::size_t size() const { return ranges_.size(); }

 private:
  struct Range {
    BlockId id;
    Position first;
    Position last;
  };
  std::vector<Range> ranges_;
};

/// Largest L_fast with L_fast * d_kv * bytes_full_precision <= budget,
/// rounded down to a multiple of block_size. Throws ConfigError when the
/// budget cannot hold one block.
std::size_t fast_capacity(const TierConfig& config);

/// The two-tier KV cache: a full-precision fast tier holding the contiguous
/// suffix of recent tokens, and an ordered slow tier of quantized blocks.
/// Single-writer; mutating calls must be serialized by the caller.
class TierStore {
 public:
  explicit TierStore(TierConfig config);

  /// Appends the next token to the fast tier. Emits one EvictBlock event when
  /// occupancy runs past capacity; the caller settles it with
  /// evict_and_compress before the next observation point.
  std::vector<CacheEvent> append_token(TokenKV kv);

  bool eviction_pending() const;

  /// Compresses and moves the oldest block_size fast-tier tokens into the
  /// slow tier. Precondition: eviction_pending().
  BlockId evict_and_compress();

  Location locate(Position p) const;

  const std::deque<TokenKV>& fast_tokens() const { return fast_; }
  const std::vector<QuantizedBlock>& slow_blocks() const { return slow_; }
  const BlockIndex& block_index() const { return index_; }
  const TierConfig& config() const { return config_; }

  std::size_t fast_token_count() const { return fast_.size(); }
  std::size_t slow_token_count() const;
  std::size_t appended_count() const { return next_position_; }
  std::size_t l_fast_capacity() const { return l_fast_; }

 private:
  TierConfig config_;
  std::size_t l_fast_;
  Position next_position_ = 0;
  std::deque<TokenKV> fast_;
  std::vector<QuantizedBlock> slow_;
  BlockIndex index_;
  BlockId next_block_id_ = 0;
};

}  // namespace ttkv
