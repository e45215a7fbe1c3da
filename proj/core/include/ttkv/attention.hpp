#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ttkv/errors.hpp"

namespace ttkv {

/// Online-softmax accumulator. Partitions of the key set can be absorbed in
/// any order; the finalized output matches single-pass dense softmax
/// attention up to floating-point rounding.
template <typename T>
class AttentionAccumulator {
 public:
  AttentionAccumulator(std::size_t d_v, T softmax_scale)
      : d_v_(d_v),
        scale_(softmax_scale),
        running_max_(-std::numeric_limits<T>::infinity()),
        denominator_(0),
        weighted_values_(d_v, T(0)) {}

  /// Absorbs `rows` key/value pairs. keys is rows x d_k, values rows x d_v,
  /// both row-major.
  void absorb(std::span<const float> query, const float* keys,
              const float* values, std::size_t rows, std::size_t d_k) {
    if (rows == 0) return;
    for (std::size_t r = 0; r < rows; ++r) {
      T s = 0;
      const float* k = keys + r * d_k;
      for (std::size_t i = 0; i < d_k; ++i) s += T(query[i]) * T(k[i]);
      s *= scale_;

      if (s > running_max_) {
        const T rescale = std::exp(running_max_ - s);
        denominator_ *= rescale;
        for (std::size_t i = 0; i < d_v_; ++i) weighted_values_[i] *= rescale;
        running_max_ = s;
      }
      const T w = std::exp(s - running_max_);
      denominator_ += w;
      const float* v = values + r * d_v_;
      for (std::size_t i = 0; i < d_v_; ++i) weighted_values_[i] += w * T(v[i]);
      absorbed_ += 1;
    }
  }

  /// Normalized attention output. Finalizing before any key was absorbed is
  /// an error: there is no defined "no context" result.
  std::vector<T> finalize() const {
    if (absorbed_ == 0)
      throw Error("finalize on empty attention accumulator");
    std::vector<T> out(d_v_);
    for (std::size_t i = 0; i < d_v_; ++i)
      out[i] = weighted_values_[i] / denominator_;
    return out;
  }

  std::size_t absorbed() const { return absorbed_; }
  T running_max() const { return running_max_; }
  T denominator() const { return denominator_; }

 private:
  std::size_t d_v_;
  T scale_;
  T running_max_;
  T denominator_;
  std::vector<T> weighted_values_;
  std::size_t absorbed_ = 0;
};

/// Absorbs one partition into `acc`. Shapes: query d_k, keys rows x d_k,
/// values rows x d_v.
template <typename T>
void attend_partition(std::span<const float> query,
                      std::span<const float> keys,
                      std::span<const float> values, std::size_t rows,
                      std::size_t d_k, std::size_t d_v,
                      AttentionAccumulator<T>& acc) {
  if (keys.size() != rows * d_k || values.size() != rows * d_v ||
      query.size() != d_k)
    throw ShapeError("attend_partition: inconsistent shapes");
  acc.absorb(query, keys.data(), values.data(), rows, d_k);
}

}  // namespace ttkv
