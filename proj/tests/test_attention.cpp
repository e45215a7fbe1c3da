#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ttkv/attention.hpp"
#include "ttkv/kv_types.hpp"
#include "ttkv/reference.hpp"

using namespace ttkv;

namespace {

struct Dense {
  std::vector<float> query;
  std::vector<float> keys;    // rows x d_k
  std::vector<float> values;  // rows x d_v
  std::size_t rows, d_k, d_v;
};

Dense random_history(std::mt19937& gen, std::size_t rows, std::size_t d_k,
                     std::size_t d_v) {
  std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
  Dense h{{}, {}, {}, rows, d_k, d_v};
  h.query.resize(d_k);
  h.keys.resize(rows * d_k);
  h.values.resize(rows * d_v);
  for (auto& x : h.query) x = dist(gen);
  for (auto& x : h.keys) x = dist(gen);
  for (auto& x : h.values) x = dist(gen);
  return h;
}

template <typename T>
std::vector<T> stream_in_chunks(const Dense& h,
                                const std::vector<std::size_t>& chunks) {
  AttentionAccumulator<T> acc(h.d_v, T(1) / std::sqrt(T(h.d_k)));
  std::size_t row = 0;
  for (std::size_t n : chunks) {
    acc.absorb(h.query, h.keys.data() + row * h.d_k,
               h.values.data() + row * h.d_v, n, h.d_k);
    row += n;
  }
  return acc.finalize();
}

}  // namespace

TEST_CASE("streaming attention matches the dense oracle") {
  std::mt19937 gen(23);
  for (int trial = 0; trial < 50; ++trial) {
    const Dense h = random_history(gen, 64 + trial * 3, 16, 8);
    std::vector<TokenKV> history(h.rows);
    for (std::size_t r = 0; r < h.rows; ++r) {
      history[r].key.assign(h.keys.begin() + r * h.d_k,
                            h.keys.begin() + (r + 1) * h.d_k);
      history[r].value.assign(h.values.begin() + r * h.d_v,
                              h.values.begin() + (r + 1) * h.d_v);
    }
    const auto oracle = reference::dense_attention(h.query, history);
    const auto streamed = stream_in_chunks<float>(
        h, {h.rows / 3, h.rows / 3, h.rows - 2 * (h.rows / 3)});
    std::vector<double> got(streamed.begin(), streamed.end());
    CHECK(reference::relative_error(got, oracle) < 1e-5);
  }
}

TEST_CASE("partition order does not change the result") {
  std::mt19937 gen(31);
  const Dense h = random_history(gen, 120, 12, 12);
  const auto one = stream_in_chunks<double>(h, {120});
  const auto many = stream_in_chunks<double>(h, {1, 7, 30, 82});
  for (std::size_t i = 0; i < one.size(); ++i)
    CHECK(many[i] == doctest::Approx(one[i]).epsilon(1e-12));
}

TEST_CASE("finalizing an empty accumulator is an error") {
  AttentionAccumulator<double> acc(4, 1.0);
  CHECK_THROWS_AS(acc.finalize(), Error);
}

TEST_CASE("attend_partition validates shapes") {
  AttentionAccumulator<double> acc(2, 1.0);
  const std::vector<float> q{1.0f, 0.0f};
  const std::vector<float> keys{1.0f, 2.0f, 3.0f};  // not rows * d_k
  const std::vector<float> values{1.0f, 2.0f, 3.0f, 4.0f};
  CHECK_THROWS_AS(attend_partition<double>(q, keys, values, 2, 2, 2, acc),
                  ShapeError);
}
