// Serial reference vs OpenMP kernels on synthetic matching workloads.

#include <benchmark/benchmark.h>

#include <vector>

#include "sqdmap/embedding.hpp"
#include "sqdmap/matching.hpp"
#include "sqdmap/noising.hpp"
#include "sqdmap/reference.hpp"
#include "sqdmap/rng.hpp"
#include "sqdmap/streaming.hpp"

namespace {

using namespace sqdmap;

std::vector<MapElement> random_elements(int count, int n_points, RngState& rng) {
  std::vector<MapElement> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double cx = rng.uniform(-25.0, 25.0);
    const double cy = rng.uniform(-12.0, 12.0);
    const double len = rng.uniform(4.0, 20.0);
    std::vector<Point2> pts;
    for (int p = 0; p < n_points; ++p) {
      const double t = static_cast<double>(p) / (n_points - 1);
      pts.push_back({cx + (t - 0.5) * len, cy + rng.uniform(-0.5, 0.5)});
    }
    out.push_back({static_cast<int>(rng.uniform_below(3)), Polyline(std::move(pts))});
  }
  return out;
}

void BM_MatchSerial(benchmark::State& state) {
  RngState rng(11);
  const int n = static_cast<int>(state.range(0));
  const auto prev = random_elements(n, 20, rng);
  const auto cur = random_elements(n, 20, rng);
  const MatchParams params{0.1};
  for (auto _ : state) {
    auto results = reference::adaptive_temporal_match(prev, cur, params);
    benchmark::DoNotOptimize(results);
  }
}

void BM_MatchParallel(benchmark::State& state) {
  RngState rng(11);
  const int n = static_cast<int>(state.range(0));
  const auto prev = random_elements(n, 20, rng);
  const auto cur = random_elements(n, 20, rng);
  const MatchParams params{0.1};
  for (auto _ : state) {
    auto results = adaptive_temporal_match(prev, cur, params);
    benchmark::DoNotOptimize(results);
  }
}

DnBatch make_batch(int num_elements, const StreamConfig& cfg, RngState& rng) {
  const auto gt = random_elements(num_elements, cfg.n_points, rng);
  RngState batch_rng = rng.split();
  return assemble_dn_batch(gt, {}, {}, cfg, batch_rng);
}

void BM_QueriesSerial(benchmark::State& state) {
  RngState rng(23);
  StreamConfig cfg;
  cfg.dn_query_budget = static_cast<int>(state.range(0));
  const NetworkBundle nets = NetworkBundle::seeded(EmbeddingConfig{}, 7);
  const DnBatch batch = make_batch(12, cfg, rng);
  for (auto _ : state) {
    auto queries = reference::build_denoise_queries(batch, nets);
    benchmark::DoNotOptimize(queries);
  }
}

void BM_QueriesParallel(benchmark::State& state) {
  RngState rng(23);
  StreamConfig cfg;
  cfg.dn_query_budget = static_cast<int>(state.range(0));
  const NetworkBundle nets = NetworkBundle::seeded(EmbeddingConfig{}, 7);
  const DnBatch batch = make_batch(12, cfg, rng);
  for (auto _ : state) {
    auto queries = build_denoise_queries(batch, nets);
    benchmark::DoNotOptimize(queries);
  }
}

}  // namespace

BENCHMARK(BM_MatchSerial)->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(BM_MatchParallel)->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(BM_QueriesSerial)->Arg(60)->Arg(240)->Arg(960);
BENCHMARK(BM_QueriesParallel)->Arg(60)->Arg(240)->Arg(960);

BENCHMARK_MAIN();
