// Serial reference vs OpenMP kernels on one sampled graph per size.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <map>
#include <vector>

#include "dbm/kernels.hpp"
#include "dbm/model.hpp"

namespace {

using dbm::kernels::Block;

const dbm::DbmSample& sample_for(std::int64_t n) {
  static std::map<std::int64_t, dbm::DbmSample> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    const auto params = dbm::DbmParams::symmetric_erased(n, 20, 10, 0.3, true);
    it = cache.emplace(n, dbm::sample_dbm(params, 11)).first;
  }
  return it->second;
}

template <void (*Multiply)(const dbm::Graph&, const Block&, Block&)>
void bm_multiply(benchmark::State& state) {
  const auto& g = sample_for(state.range(0)).graph;
  const Block x = Block::Random(static_cast<Eigen::Index>(g.num_vertices()), 6);
  Block y(x.rows(), x.cols());
  for (auto _ : state) {
    Multiply(g, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * g.num_edges()));
}

template <std::size_t (*Sweep)(const dbm::Graph&, std::span<const dbm::Label>, std::span<const dbm::Label>,
                               const dbm::kernels::MapScorer&, std::span<dbm::Label>)>
void bm_sweep(benchmark::State& state) {
  const auto n = state.range(0);
  const auto& s = sample_for(n);
  const auto params = dbm::DbmParams::symmetric_erased(n, 20, 10, 0.3, true);
  std::size_t max_degree = 0;
  for (std::size_t v = 0; v < s.graph.num_vertices(); ++v) {
    max_degree = std::max(max_degree, s.graph.degree(static_cast<dbm::Vertex>(v)));
  }
  const dbm::kernels::MapScorer scorer(params, true, params.log_n(), {}, max_degree);
  std::vector<dbm::Label> next(s.labels.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(Sweep(s.graph, s.labels, s.attributes, scorer, next));
  }
  state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(bm_multiply<dbm::kernels::serial::adjacency_multiply>)->Name("multiply/serial")->Arg(1000)->Arg(10000);
BENCHMARK(bm_multiply<dbm::kernels::omp::adjacency_multiply>)->Name("multiply/omp")->Arg(1000)->Arg(10000);
BENCHMARK(bm_sweep<dbm::kernels::serial::map_sweep>)->Name("map_sweep/serial")->Arg(1000)->Arg(10000);
BENCHMARK(bm_sweep<dbm::kernels::omp::map_sweep>)->Name("map_sweep/omp")->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
