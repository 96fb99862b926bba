#include <gtest/gtest.h>

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <set>

#include "cosmig/error.hpp"
#include "cosmig/planted.hpp"
#include "cosmig/subgraph.hpp"
#include "oracles.hpp"

namespace cosmig {
namespace {

constexpr std::uint32_t kFar = std::numeric_limits<std::uint32_t>::max();

InteractionGraph planted_graph() {
  const auto data = make_planted({});
  return InteractionGraph::from_interactions(data.interactions, data.vocab.size());
}

// BFS distances that ignore every edge between the target pair.
std::vector<std::uint32_t> distances_without_pair(const InteractionGraph& g, std::uint32_t start,
                                                  std::uint32_t d, std::uint32_t t) {
  std::vector<std::uint32_t> dist(g.num_nodes(), kFar);
  std::deque<std::uint32_t> queue{start};
  dist[start] = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (std::uint32_t e : g.incident_edges(u)) {
      const Edge& edge = g.edge(e);
      if (g.drug_node(edge.drug) == d && g.gene_node(edge.gene) == t) continue;
      const auto v = g.other_end(e, u);
      if (dist[v] == kFar) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

TEST(Rwr, TwoNodeClosedForm) {
  const auto g = InteractionGraph::from_interactions(std::vector<Interaction>{{"a", "x", 1}}, 1);
  RwrConfig cfg;
  cfg.restart_continuation = 0.5;
  const auto p = rwr_scores(g, 0, cfg);
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-10);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-10);
}

TEST(Rwr, MatchesDenseSolveWithParallelEdges) {
  const std::vector<Interaction> edges{{"a", "x", 1}, {"a", "x", 2}, {"a", "y", 1},
                                       {"b", "y", 2}, {"b", "z", 1}, {"c", "z", 2}};
  const auto g = InteractionGraph::from_interactions(edges, 2);
  for (double c : {0.2, 0.5, 0.8, 0.95}) {
    RwrConfig cfg;
    cfg.restart_continuation = c;
    cfg.tolerance = 1e-14;
    for (std::uint32_t start = 0; start < g.num_nodes(); ++start) {
      const auto p = rwr_scores(g, start, cfg);
      const auto ref = testing::dense_rwr(g, start, c);
      for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], ref[i], 1e-10);
      EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-10);
    }
  }
}

TEST(Rwr, RandomGraphsMatchDenseSolve) {
  Rng rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = testing::random_bipartite(rng, 12, 3);
    RwrConfig cfg;
    cfg.restart_continuation = rng.uniform(0.1, 0.9);
    const auto start = static_cast<std::uint32_t>(rng.below(g.num_nodes()));
    const auto p = rwr_scores(g, start, cfg);
    const auto ref = testing::dense_rwr(g, start, cfg.restart_continuation);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], ref[i], 1e-8);
  }
}

TEST(Rwr, IsolatedStartAndBadConfig) {
  const std::vector<Interaction> edges{{"a", "x", 1}, {"b", "y", 1}};
  const auto g = InteractionGraph::from_interactions(edges, 1);
  try {
    rwr_scores(g, 0, {}, RemovedPair{0, g.gene_node(0)});
    FAIL();
  } catch (const ExtractionError& e) {
    EXPECT_EQ(e.kind(), ExtractionError::Kind::kIsolatedStart);
  }
  RwrConfig even;
  even.hop_limit = 2;
  EXPECT_THROW(even.validate(), Error);
  RwrConfig bad_c;
  bad_c.restart_continuation = 1.0;
  EXPECT_THROW(bad_c.validate(), Error);
}

TEST(Extract, TargetsLabelsAndNoLeak) {
  const auto g = planted_graph();
  const ExtractionConfig cfg;
  for (std::size_t i = 0; i < g.num_edges(); i += 37) {
    const Edge& target = g.edge(i);
    const Subgraph sub = extract(g, target.drug, target.gene, cfg);
    ASSERT_GE(sub.nodes.size(), 2u);
    EXPECT_EQ(sub.nodes[0].graph_node, g.drug_node(target.drug));
    EXPECT_EQ(sub.nodes[0].label, 0u);
    EXPECT_EQ(sub.nodes[1].graph_node, g.gene_node(target.gene));
    EXPECT_EQ(sub.nodes[1].label, 1u);
    const auto dd = distances_without_pair(g, sub.nodes[0].graph_node, sub.nodes[0].graph_node, sub.nodes[1].graph_node);
    const auto dg = distances_without_pair(g, sub.nodes[1].graph_node, sub.nodes[0].graph_node, sub.nodes[1].graph_node);
    for (const auto& n : sub.nodes) {
      EXPECT_EQ(n.hop, std::min(dd[n.graph_node], dg[n.graph_node]));
      EXPECT_LE(n.hop, cfg.rwr.hop_limit);
      EXPECT_EQ(n.label, 2 * n.hop + static_cast<std::uint32_t>(n.kind));
    }
    for (const auto& e : sub.edges) {
      EXPECT_EQ(sub.nodes[e.head].kind, NodeKind::kDrug);
      EXPECT_EQ(sub.nodes[e.tail].kind, NodeKind::kGene);
      EXPECT_FALSE(e.head == 0 && e.tail == 1) << "target edge leaked into its subgraph";
    }
  }
}

TEST(Extract, KeepTargetEdgeLeaks) {
  const auto g = planted_graph();
  ExtractionConfig cfg;
  cfg.keep_target_edge = true;
  const Edge& target = g.edge(0);
  const Subgraph sub = extract(g, target.drug, target.gene, cfg);
  const bool has_target = std::any_of(sub.edges.begin(), sub.edges.end(), [&](const SubgraphEdge& e) {
    return e.head == 0 && e.tail == 1 && e.relation == target.relation;
  });
  EXPECT_TRUE(has_target);
}

TEST(Extract, EnclosingIsBfsUnionAndInducesAllEdges) {
  const auto g = planted_graph();
  const Edge& target = g.edge(5);
  const auto d = g.drug_node(target.drug), t = g.gene_node(target.gene);
  for (std::uint32_t hop : {1u, 3u}) {
    const Subgraph sub = extract_enclosing(g, target.drug, target.gene, hop);
    const auto dd = distances_without_pair(g, d, d, t);
    const auto dg = distances_without_pair(g, t, d, t);
    std::set<std::uint32_t> expected;
    for (std::uint32_t u = 0; u < g.num_nodes(); ++u) {
      if (std::min(dd[u], dg[u]) <= hop) expected.insert(u);
    }
    std::set<std::uint32_t> got;
    for (const auto& n : sub.nodes) got.insert(n.graph_node);
    EXPECT_EQ(got, expected);
    std::size_t induced = 0;
    for (const Edge& e : g.edges()) {
      if (g.drug_node(e.drug) == d && g.gene_node(e.gene) == t) continue;
      induced += got.contains(g.drug_node(e.drug)) && got.contains(g.gene_node(e.gene));
    }
    EXPECT_EQ(sub.edges.size(), induced);
  }
}

TEST(Extract, RwrWithUnboundedBudgetEqualsEnclosing) {
  const auto g = planted_graph();
  ExtractionConfig rwr;
  rwr.rwr.max_nodes_per_seed = g.num_nodes();
  for (std::size_t i = 0; i < g.num_edges(); i += 53) {
    const Edge& target = g.edge(i);
    const Subgraph a = extract(g, target.drug, target.gene, rwr);
    const Subgraph b = extract_enclosing(g, target.drug, target.gene, rwr.rwr.hop_limit);
    EXPECT_EQ(a.nodes, b.nodes);
    EXPECT_EQ(a.edges, b.edges);
  }
}

TEST(Extract, TiedScoresAreKeptTogether) {
  // Drug a reaches genes x1..x4 symmetrically; with a budget of one node per
  // seed the four tied genes still enter together.
  std::vector<Interaction> edges{{"a", "t", 1}, {"b", "t", 1}};
  for (int i = 1; i <= 4; ++i) edges.push_back({"a", "x" + std::to_string(i), 1});
  const auto g = InteractionGraph::from_interactions(edges, 1);
  RwrConfig cfg;
  cfg.hop_limit = 1;
  cfg.max_nodes_per_seed = 1;
  const Subgraph sub = extract_rwr(g, *g.find_drug("a"), *g.find_gene("t"), cfg);
  std::set<std::string> ids;
  for (const auto& n : sub.nodes) ids.insert(g.node_id(n.graph_node));
  EXPECT_EQ(ids, (std::set<std::string>{"a", "t", "b", "x1", "x2", "x3", "x4"}));
}

TEST(Extract, ErrorsForUnknownAndContextFreePairs) {
  const std::vector<Interaction> edges{{"a", "x", 1}, {"a", "y", 1}, {"b", "y", 1}, {"b", "z", 1}};
  const auto g = InteractionGraph::from_interactions(edges, 1);
  const ExtractionConfig cfg;
  auto kind_of = [&](const std::string& d, const std::string& t) {
    try {
      extract(g, d, t, cfg);
    } catch (const ExtractionError& e) {
      return static_cast<int>(e.kind());
    }
    return -1;
  };
  EXPECT_EQ(kind_of("zz", "x"), static_cast<int>(ExtractionError::Kind::kUnknownNode));
  EXPECT_EQ(kind_of("a", "zz"), static_cast<int>(ExtractionError::Kind::kUnknownNode));
  // x has only the target edge.
  EXPECT_EQ(kind_of("a", "x"), static_cast<int>(ExtractionError::Kind::kNoContext));
  EXPECT_EQ(kind_of("b", "y"), -1);
}

TEST(Extract, IncidenceMatricesAndPermutation) {
  const auto g = planted_graph();
  const Subgraph sub = extract(g, 0u, g.edge(0).gene, ExtractionConfig{});
  const Incidence inc = build_incidence(sub);
  ASSERT_EQ(inc.node_edge.rows(), sub.nodes.size());
  ASSERT_EQ(inc.node_edge.cols(), sub.edges.size());
  ASSERT_EQ(inc.relation_edge.rows(), g.num_relations());
  for (std::size_t k = 0; k < sub.edges.size(); ++k) {
    EXPECT_EQ(inc.node_edge.column_sum(k), 2u);
    EXPECT_TRUE(inc.node_edge.at(sub.edges[k].head, k));
    EXPECT_TRUE(inc.node_edge.at(sub.edges[k].tail, k));
    EXPECT_EQ(inc.relation_edge.column_sum(k), 1u);
    EXPECT_TRUE(inc.relation_edge.at(sub.edges[k].relation - 1, k));
  }

  std::vector<std::uint32_t> order(sub.nodes.size());
  std::iota(order.begin(), order.end(), 0u);
  std::reverse(order.begin(), order.end());
  const Subgraph p = sub.permuted(order);
  EXPECT_EQ(p.nodes[p.target_drug].graph_node, sub.nodes[0].graph_node);
  EXPECT_EQ(p.nodes[p.target_gene].graph_node, sub.nodes[1].graph_node);
  EXPECT_EQ(p.edges.size(), sub.edges.size());
}

TEST(Extract, JsonDumpHasTargetsNodesAndEdges) {
  const auto data = make_planted({});
  const auto g = InteractionGraph::from_interactions(data.interactions, data.vocab.size());
  const Subgraph sub = extract(g, 0u, g.edge(0).gene, ExtractionConfig{});
  const std::string text = subgraph_to_json(sub, g, &data.vocab);
  EXPECT_NE(text.find("\"targets\""), std::string::npos);
  EXPECT_NE(text.find("\"nodes\""), std::string::npos);
  EXPECT_NE(text.find("\"edges\""), std::string::npos);
  EXPECT_NE(text.find("\"" + g.drug_id(0) + "\""), std::string::npos);
}

}  // namespace
}  // namespace cosmig
