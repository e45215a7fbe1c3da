#pragma once

#include <span>
#include <vector>

#include "ttkv/kv_types.hpp"

namespace ttkv {
namespace reference {

/// Single-pass dense softmax attention in double precision over the full
/// token history. Used by the harness to report output error against an
/// exact full-precision computation.
std::vector<double> dense_attention(std::span<const float> query,
                                    std::span<const TokenKV> history);

/// L2 relative error |a - b| / |b|.
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace reference
}  // namespace ttkv
