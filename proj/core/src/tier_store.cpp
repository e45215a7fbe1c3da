#include "ttkv/tier_store.hpp"

#include <algorithm>
#include <string>

namespace ttkv {

void BlockIndex::append_block(BlockId id, Position first, Position last) {
  if (!ranges_.empty()) {
    const Range& prev = ranges_.back();
    if (first != prev.last + 1 || id <= prev.id)
      throw Error("BlockIndex: blocks must be appended in order");
  }
  ranges_.push_back({id, first, last});
}

std::optional<BlockId> BlockIndex::find(Position p) const {
  auto it = std::upper_bound(
      ranges_.begin(), ranges_.end(), p,
      [](Position pos, const Range& r) { return pos < r.first; });
  if (it == ranges_.begin()) return std::nullopt;
  --it;
  if (p > it->last) return std::nullopt;
  return it->id;
}

std::pair<Position, Position> BlockIndex::range(BlockId id) const {
  auto it = std::lower_bound(
      ranges_.begin(), ranges_.end(), id,
      [](const Range& r, BlockId b) { return r.id < b; });
  if (it == ranges_.end() || it->id != id)
    throw Error("BlockIndex: unknown block " + std::to_string(id));
  return {it->first, it->last};
}

std::size_t fast_capacity(const TierConfig& config) {
  config.validate();
  const std::size_t per_token = config.d_kv() * config.bytes_full_precision;
  std::size_t tokens = config.hbm_budget_bytes / per_token;
  tokens -= tokens % config.block_size;
  if (tokens < config.block_size)
    throw ConfigError("HBM budget holds fewer tokens than one block");
  return tokens;
}

TierStore::TierStore(TierConfig config)
    : config_(std::move(config)), l_fast_(fast_capacity(config_)) {}

std::vector<CacheEvent> TierStore::append_token(TokenKV kv) {
  if (kv.position != next_position_)
    throw SequencingError("append_token: expected position " +
                          std::to_string(next_position_) + ", got " +
                          std::to_string(kv.position));
  if (kv.key.size() != config_.d_k || kv.value.size() != config_.d_v)
    throw ShapeError("append_token: key/value dimension mismatch");

  fast_.push_back(std::move(kv));
  ++next_position_;

  std::vector<CacheEvent> events;
  if (fast_.size() > l_fast_) {
    const Position first = fast_.front().position;
    events.push_back({CacheEvent::Type::EvictBlock, first,
                      first + config_.block_size - 1});
  }
  return events;
}

bool TierStore::eviction_pending() const { return fast_.size() > l_fast_; }

BlockId TierStore::evict_and_compress() {
  if (!eviction_pending())
    throw Error("evict_and_compress: no eviction pending");

  const std::size_t n = config_.block_size;
  KvBlock block;
  block.block_id = next_block_id_;
  block.first_position = fast_.front().position;
  block.last_position = block.first_position + n - 1;
  block.token_count = n;
  block.d_k = config_.d_k;
  block.d_v = config_.d_v;
  block.keys.resize(n * config_.d_k);
  block.values.resize(n * config_.d_v);
  for (std::size_t r = 0; r < n; ++r) {
    const TokenKV& tok = fast_[r];
    std::copy(tok.key.begin(), tok.key.end(),
              block.keys.begin() + r * config_.d_k);
    std::copy(tok.value.begin(), tok.value.end(),
              block.values.begin() + r * config_.d_v);
  }

  slow_.push_back(quantize_block(block, config_));
  index_.append_block(block.block_id, block.first_position,
                      block.last_position);
  fast_.erase(fast_.begin(), fast_.begin() + n);
  return next_block_id_++;
}

Location TierStore::locate(Position p) const {
  if (p >= next_position_) return Location::absent();
  if (!fast_.empty() && p >= fast_.front().position) return Location::fast();
  if (auto id = index_.find(p)) return Location::slow(*id);
  return Location::absent();
}

std::size_t TierStore::slow_token_count() const {
  return slow_.size() * config_.block_size;
}

}  // namespace ttkv
