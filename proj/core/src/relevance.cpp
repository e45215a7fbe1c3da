#include "ttkv/relevance.hpp"

#include <algorithm>
#include <cmath>

#include "ttkv/errors.hpp"

namespace ttkv {

std::size_t SelectionPolicy::resolve(std::size_t block_count) const {
  if (top_k) return std::min(*top_k, block_count);
  if (!(fetch_fraction > 0.0 && fetch_fraction <= 1.0))
    throw ConfigError("fetch_fraction must be in (0, 1]");
  const auto k = static_cast<std::size_t>(
      std::ceil(fetch_fraction * static_cast<double>(block_count)));
  return std::min(k, block_count);
}

double score_block(std::span<const float> query,
                   std::span<const float> centroid) {
  if (query.size() != centroid.size())
    throw ShapeError("score_block: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < query.size(); ++i)
    s += static_cast<double>(query[i]) * centroid[i];
  return s;
}

std::vector<BlockId> select_top_k(std::vector<BlockScore> scores,
                                  const SelectionPolicy& policy) {
  const std::size_t k = policy.resolve(scores.size());
  // Descending score, ties toward the newer (larger) block id. The sorted
  // prefix is the prefetch schedule.
  std::stable_sort(scores.begin(), scores.end(),
                   [](const BlockScore& a, const BlockScore& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.block_id > b.block_id;
                   });
  std::vector<BlockId> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(scores[i].block_id);
  return out;
}

}  // namespace ttkv
