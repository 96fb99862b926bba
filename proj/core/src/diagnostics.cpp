#include "cosmig/diagnostics.hpp"

#include <algorithm>

#include "cosmig/error.hpp"

namespace cosmig {

namespace {

Tensor sub_tensor(const Tensor& x, double value) {
  return sub(x, Tensor::full(x.rows(), x.cols(), value));
}

}  // namespace

Subgraph random_subgraph(Rng& rng, std::size_t num_nodes, std::size_t num_relations,
                         std::uint32_t hop_limit) {
  if (num_nodes < 3) throw Error("random_subgraph: need at least 3 nodes");
  if (num_relations == 0) throw Error("random_subgraph: need at least one relation");
  Subgraph sub;
  sub.num_relations = num_relations;
  sub.hop_limit = hop_limit;
  sub.nodes.push_back({0, NodeKind::kDrug, 0, 0});
  sub.nodes.push_back({1, NodeKind::kGene, 0, 1});
  std::vector<std::uint32_t> drugs{0}, genes{1};
  for (std::uint32_t i = 2; i < num_nodes; ++i) {
    // Alternate kinds for the first two extra nodes so both sides have a
    // non-target partner, then draw at random.
    const bool drug = i == 2 ? false : i == 3 ? true : rng.bernoulli(0.5);
    const auto hop = static_cast<std::uint32_t>(1 + rng.below(hop_limit));
    const NodeKind kind = drug ? NodeKind::kDrug : NodeKind::kGene;
    sub.nodes.push_back({i, kind, hop, 2 * hop + (drug ? 0u : 1u)});
    (drug ? drugs : genes).push_back(i);
  }
  auto relation = [&] { return static_cast<std::uint32_t>(1 + rng.below(num_relations)); };
  // Targets each get one edge to a non-target partner.
  sub.edges.push_back({0, genes[1], relation()});
  sub.edges.push_back({drugs[1], 1, relation()});
  for (std::uint32_t d : drugs) {
    for (std::uint32_t g : genes) {
      if (d == 0 && g == 1) continue;  // the target pair itself stays unlinked
      const bool present = std::any_of(sub.edges.begin(), sub.edges.end(),
                                       [&](const SubgraphEdge& e) { return e.head == d && e.tail == g; });
      if (!present && rng.bernoulli(0.4)) sub.edges.push_back({d, g, relation()});
    }
  }
  std::sort(sub.edges.begin(), sub.edges.end(), [](const SubgraphEdge& a, const SubgraphEdge& b) {
    return a.head != b.head ? a.head < b.head : a.tail < b.tail;
  });
  sub.target_relation = relation();
  return sub;
}

std::vector<GradSuiteCase> run_grad_suite(const GradSuiteOptions& options) {
  if (options.relation_counts.empty() || options.depths.empty()) {
    throw Error("gradient suite needs relation counts and depths");
  }
  if (options.min_nodes < 3 || options.max_nodes < options.min_nodes) {
    throw Error("gradient suite node range is invalid");
  }
  std::vector<GradSuiteCase> cases;
  for (std::size_t c = 0; c < options.cases; ++c) {
    Rng rng(Rng::derive(options.seed, {c}));
    const std::size_t combos = options.relation_counts.size() * options.depths.size();
    GradSuiteCase out;
    out.relations = options.relation_counts[(c % combos) / options.depths.size()];
    out.depth = options.depths[c % options.depths.size()];
    out.nodes = options.min_nodes + rng.below(options.max_nodes - options.min_nodes + 1);
    const Subgraph sub = random_subgraph(rng, out.nodes, out.relations);
    out.edges = sub.edges.size();

    ModelConfig cfg;
    cfg.embed_dim = options.embed_dim;
    cfg.depth = out.depth;
    cfg.num_relations = out.relations;
    cfg.num_labels = sub.num_labels();
    cfg.edge_dropout = 0.0;
    ParamStore params = init_params(cfg, rng);
    // A target within one unit of the initial prediction keeps the loss O(1),
    // so rounding in the loss value stays far below the differences measured.
    const double target = score(sub, params, cfg) + rng.uniform(-1.0, 1.0);
    out.result = grad_check(
        params,
        [&] {
          const Tensor diff = sub_tensor(forward(sub, params, cfg, Mode::kEval), target);
          return mean(mul(diff, diff));
        },
        options.check);
    cases.push_back(std::move(out));
  }
  return cases;
}

}  // namespace cosmig
