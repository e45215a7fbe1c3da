// Microbenchmarks for the hot paths: block quantization, streaming
// attention absorption, top-k selection, and the pipeline simulator.

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "ttkv/attention.hpp"
#include "ttkv/quantizer.hpp"
#include "ttkv/relevance.hpp"
#include "ttkv/sim.hpp"

using namespace ttkv;

namespace {

KvBlock random_block(std::size_t tokens, std::size_t dim) {
  std::mt19937 gen(1);
  std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
  KvBlock b;
  b.token_count = tokens;
  b.d_k = dim;
  b.d_v = dim;
  b.keys.resize(tokens * dim);
  b.values.resize(tokens * dim);
  for (auto& x : b.keys) x = dist(gen);
  for (auto& x : b.values) x = dist(gen);
  return b;
}

TierConfig bench_config(unsigned kb, unsigned vb) {
  TierConfig c;
  c.d_k = 128;
  c.d_v = 128;
  c.key_bits = kb;
  c.value_bits = vb;
  return c;
}

void BM_QuantizeBlock(benchmark::State& state) {
  const KvBlock b = random_block(128, 128);
  const TierConfig cfg =
      bench_config(static_cast<unsigned>(state.range(0)),
                   static_cast<unsigned>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(quantize_block(b, cfg));
  }
  state.SetItemsProcessed(state.iterations() * 128 * 256);
}
BENCHMARK(BM_QuantizeBlock)->Args({8, 4})->Args({8, 8})->Args({16, 16});

void BM_DequantizeBlock(benchmark::State& state) {
  const KvBlock b = random_block(128, 128);
  const QuantizedBlock q = quantize_block(b, bench_config(8, 4));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dequantize_block(q));
  }
  state.SetItemsProcessed(state.iterations() * 128 * 256);
}
BENCHMARK(BM_DequantizeBlock);

void BM_AttentionAbsorb(benchmark::State& state) {
  const std::size_t rows = state.range(0);
  const KvBlock b = random_block(rows, 128);
  std::vector<float> q(128, 0.1f);
  for (auto _ : state) {
    AttentionAccumulator<double> acc(128, 0.088);
    acc.absorb(q, b.keys.data(), b.values.data(), rows, 128);
    benchmark::DoNotOptimize(acc.finalize());
  }
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_AttentionAbsorb)->Arg(128)->Arg(1024);

void BM_SelectTopK(benchmark::State& state) {
  std::mt19937 gen(2);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<BlockScore> scores(state.range(0));
  for (std::size_t i = 0; i < scores.size(); ++i)
    scores[i] = {i, dist(gen)};
  const SelectionPolicy policy{std::nullopt, 0.45};
  for (auto _ : state) {
    auto copy = scores;
    benchmark::DoNotOptimize(select_top_k(std::move(copy), policy));
  }
}
BENCHMARK(BM_SelectTopK)->Arg(128)->Arg(1024);

void BM_SimulatePipelined(benchmark::State& state) {
  StepWorkload w;
  w.compute_items.push_back({"fast", 131072.0});
  for (int i = 0; i < state.range(0); ++i) {
    const std::string label = "blk" + std::to_string(i);
    w.compute_items.push_back({label, 32768.0});
    w.transfer_items.push_back({label, 25600.0});
  }
  const LinkModel link{3.2e10, 1e-5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_pipelined(w, link, 4e11));
  }
}
BENCHMARK(BM_SimulatePipelined)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
