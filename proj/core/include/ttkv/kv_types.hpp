#pragma once

#include <cstdint>
#include <vector>

namespace ttkv {

using Position = std::uint64_t;
using BlockId = std::uint64_t;

/// One token's key/value vectors.
struct TokenKV {
  Position position = 0;
  std::vector<float> key;    // d_k
  std::vector<float> value;  // d_v
};

/// A full-precision run of block_size consecutive tokens, row-major.
struct KvBlock {
  BlockId block_id = 0;
  Position first_position = 0;
  Position last_position = 0;
  std::size_t token_count = 0;
  std::size_t d_k = 0;
  std::size_t d_v = 0;
  std::vector<float> keys;    // token_count x d_k
  std::vector<float> values;  // token_count x d_v
};

/// Result of a position lookup.
struct Location {
  enum class Where { Fast, Slow, Absent };
  Where where = Where::Absent;
  BlockId block_id = 0;  // valid when where == Slow

  static Location fast() { return {Where::Fast, 0}; }
  static Location slow(BlockId id) { return {Where::Slow, id}; }
  static Location absent() { return {Where::Absent, 0}; }

  bool operator==(const Location&) const = default;
};

/// Emitted by append_token when the fast tier runs past capacity.
struct CacheEvent {
  enum class Type { EvictBlock };
  Type type = Type::EvictBlock;
  Position first_position = 0;
  Position last_position = 0;
};

}  // namespace ttkv
