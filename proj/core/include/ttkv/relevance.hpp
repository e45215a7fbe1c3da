#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ttkv/kv_types.hpp"

namespace ttkv {

struct BlockScore {
  BlockId block_id = 0;
  double score = 0.0;
};

/// How many slow-tier blocks to fetch per decode step. An absolute count
/// wins over the fraction; both are clamped to the block count.
struct SelectionPolicy {
  std::optional<std::size_t> top_k;
  double fetch_fraction = 0.45;

  std::size_t resolve(std::size_t block_count) const;
};

/// Query relevance of a block: inner product with its key centroid.
double score_block(std::span<const float> query,
                   std::span<const float> centroid);

/// The k highest-scoring block ids, ordered by descending score then
/// descending block_id (ties break toward recency). The returned order is
/// the prefetch schedule.
std::vector<BlockId> select_top_k(std::vector<BlockScore> scores,
                                  const SelectionPolicy& policy);

}  // namespace ttkv
