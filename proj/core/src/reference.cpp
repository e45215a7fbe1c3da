#include "ttkv/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ttkv/errors.hpp"

namespace ttkv {
namespace reference {

std::vector<double> dense_attention(std::span<const float> query,
                                    std::span<const TokenKV> history) {
  if (history.empty()) throw Error("dense_attention: empty history");
  const std::size_t d_k = query.size();
  const std::size_t d_v = history.front().value.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));

  std::vector<double> logits(history.size());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < history.size(); ++i) {
    const TokenKV& tok = history[i];
    if (tok.key.size() != d_k || tok.value.size() != d_v)
      throw ShapeError("dense_attention: inconsistent history shapes");
    double s = 0.0;
    for (std::size_t j = 0; j < d_k; ++j)
      s += static_cast<double>(query[j]) * tok.key[j];
    logits[i] = s * scale;
    max_logit = std::max(max_logit, logits[i]);
  }

  std::vector<double> out(d_v, 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double w = std::exp(logits[i] - max_logit);
    denom += w;
    for (std::size_t j = 0; j < d_v; ++j) out[j] += w * history[i].value[j];
  }
  for (double& x : out) x /= denom;
  return out;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("relative_error: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace reference
}  // namespace ttkv
