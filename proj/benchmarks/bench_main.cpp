#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "cosmig/diagnostics.hpp"
#include "cosmig/model.hpp"
#include "cosmig/ops.hpp"
#include "cosmig/planted.hpp"
#include "cosmig/rng.hpp"
#include "cosmig/subgraph.hpp"

namespace {

using namespace cosmig;

const InteractionGraph& planted_graph() {
  static const InteractionGraph g = [] {
    PlantedConfig cfg;
    cfg.num_drugs = 300;
    cfg.num_genes = 400;
    const auto data = make_planted(cfg);
    return InteractionGraph::from_interactions(data.interactions, data.vocab.size());
  }();
  return g;
}

void BM_RwrScores(benchmark::State& state) {
  const auto& g = planted_graph();
  RwrConfig cfg;
  cfg.hop_limit = static_cast<std::uint32_t>(state.range(0));
  std::uint32_t start = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rwr_scores(g, start, cfg));
    start = (start + 1) % static_cast<std::uint32_t>(g.num_nodes());
  }
}
BENCHMARK(BM_RwrScores)->Arg(1)->Arg(3)->Arg(5);

void BM_Extract(benchmark::State& state) {
  const auto& g = planted_graph();
  ExtractionConfig cfg;
  cfg.method = state.range(0) ? ExtractionMethod::kEnclosing : ExtractionMethod::kRwr;
  cfg.rwr.hop_limit = 3;
  cfg.rwr.max_nodes_per_seed = static_cast<std::size_t>(state.range(1));
  std::size_t k = 0;
  for (auto _ : state) {
    const Edge& e = g.edges()[k++ % g.num_edges()];
    benchmark::DoNotOptimize(extract(g, e.drug, e.gene, cfg));
  }
}
BENCHMARK(BM_Extract)->Args({0, 20})->Args({0, 100})->Args({1, 0});

void BM_ForwardBackward(benchmark::State& state) {
  Rng rng(3);
  ModelConfig cfg;
  cfg.embed_dim = static_cast<std::size_t>(state.range(0));
  cfg.depth = 4;
  cfg.num_relations = 4;
  cfg.edge_dropout = 0.0;
  ParamStore params = init_params(cfg, rng);
  const Subgraph sub = random_subgraph(rng, 40, cfg.num_relations);
  for (auto _ : state) {
    params.zero_grad();
    Tensor out = forward(sub, params, cfg, Mode::kTrain, &rng);
    out.backward();
    benchmark::DoNotOptimize(out.item());
  }
  state.counters["edges"] = static_cast<double>(sub.edges.size());
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  std::vector<double> a(n * n), b(n * n);
  for (double& v : a) v = rng.normal();
  for (double& v : b) v = rng.normal();
  const Tensor x(n, n, a), y(n, n, b);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(x, y));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 2 * n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 128);

}  // namespace

BENCHMARK_MAIN();
