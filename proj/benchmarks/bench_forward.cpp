// Forward-pass wall time and attention footprint, full vs chunked, over the
// sequence lengths used in the reports.

#include <benchmark/benchmark.h>

#include <random>

#include "chunkformer/bench.hpp"
#include "chunkformer/chunkformer.hpp"

namespace {

cf::ChunkFormerModel make_model(std::size_t L,
                                std::vector<std::size_t> chunks) {
  cf::ChunkFormerConfig cfg;
  cfg.stage_chunk_sizes = std::move(chunks);
  cfg.L = L;
  cfg.d_model = 32;
  cfg.heads = 4;
  cfg.d_ff = 64;
  cfg.dropout = 0;
  return cf::ChunkFormerModel(cfg, {{"event", 16, 4}, {"value", 64, 4}}, 7);
}

cf::EncodedWindow make_window(std::size_t L) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::size_t> e(1, 15), v(1, 63);
  cf::EncodedWindow w;
  for (std::size_t t = 0; t < L; ++t) w.ids.push_back({e(rng), v(rng)});
  w.labels = {1};
  return w;
}

void BM_forward_full(benchmark::State& state) {
  const std::size_t L = static_cast<std::size_t>(state.range(0));
  auto model = make_model(L, {L});
  auto w = make_window(L);
  for (auto _ : state)
    benchmark::DoNotOptimize(model.forward(w, false).item());
  state.counters["score_elems_peak"] =
      static_cast<double>(cf::attention_footprint(model.config()).peak);
}

void BM_forward_chunked(benchmark::State& state) {
  const std::size_t L = static_cast<std::size_t>(state.range(0));
  auto model = make_model(L, {3, 4});
  auto w = make_window(L);
  for (auto _ : state)
    benchmark::DoNotOptimize(model.forward(w, false).item());
  state.counters["score_elems_peak"] =
      static_cast<double>(cf::attention_footprint(model.config()).peak);
}

}  // namespace

BENCHMARK(BM_forward_full)->Arg(180)->Arg(240)->Arg(480)->Arg(720)
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_forward_chunked)->Arg(180)->Arg(240)->Arg(480)->Arg(720)
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
