#include "cosmig/subgraph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "cosmig/error.hpp"
#include "json.hpp"

namespace cosmig {

namespace {

constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();

bool is_removed(const InteractionGraph& g, std::size_t edge_index,
                const std::optional<RemovedPair>& removed) {
  if (!removed) return false;
  const Edge& e = g.edge(edge_index);
  return g.drug_node(e.drug) == removed->drug_node &&
         g.gene_node(e.gene) == removed->gene_node;
}

std::size_t usable_degree(const InteractionGraph& g, std::uint32_t node,
                          const std::optional<RemovedPair>& removed) {
  if (!removed) return g.degree(node);
  std::size_t d = 0;
  for (std::uint32_t e : g.incident_edges(node)) d += is_removed(g, e, removed) ? 0 : 1;
  return d;
}

std::vector<std::uint32_t> bfs_distances(const InteractionGraph& g,
                                         std::uint32_t source, std::uint32_t limit,
                                         const std::optional<RemovedPair>& removed) {
  std::vector<std::uint32_t> dist(g.num_nodes(), kUnreached);
  std::deque<std::uint32_t> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const std::uint32_t u = queue.front();
    queue.pop_front();
    if (dist[u] == limit) continue;
    for (std::uint32_t e : g.incident_edges(u)) {
      if (is_removed(g, e, removed)) continue;
      const std::uint32_t v = g.other_end(e, u);
      if (dist[v] == kUnreached) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

struct Context {
  std::uint32_t drug_node;
  std::uint32_t gene_node;
  std::optional<RemovedPair> removed;
  std::vector<std::uint32_t> dist_drug;
  std::vector<std::uint32_t> dist_gene;
};

Context prepare(const InteractionGraph& g, std::uint32_t drug, std::uint32_t gene,
                std::uint32_t hop_limit, bool keep_target_edge) {
  if (drug >= g.num_drugs() || gene >= g.num_genes()) {
    throw ExtractionError(ExtractionError::Kind::kUnknownNode,
                          "target pair is not in the graph");
  }
  Context ctx;
  ctx.drug_node = g.drug_node(drug);
  ctx.gene_node = g.gene_node(gene);
  if (!keep_target_edge) ctx.removed = RemovedPair{ctx.drug_node, ctx.gene_node};
  for (std::uint32_t node : {ctx.drug_node, ctx.gene_node}) {
    if (usable_degree(g, node, ctx.removed) == 0) {
      throw ExtractionError(ExtractionError::Kind::kNoContext,
                            "'" + g.node_id(node) +
                                "' has no interactions besides the target pair");
    }
  }
  ctx.dist_drug = bfs_distances(g, ctx.drug_node, hop_limit, ctx.removed);
  ctx.dist_gene = bfs_distances(g, ctx.gene_node, hop_limit, ctx.removed);
  return ctx;
}

Subgraph assemble(const InteractionGraph& g, const Context& ctx,
                  std::vector<std::uint32_t> kept, std::uint32_t hop_limit) {
  Subgraph sub;
  sub.num_relations = g.num_relations();
  sub.hop_limit = hop_limit;

  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  std::vector<SubgraphNode> nodes;
  nodes.reserve(kept.size());
  for (std::uint32_t node : kept) {
    SubgraphNode n;
    n.graph_node = node;
    n.kind = g.kind(node);
    n.hop = std::min(ctx.dist_drug[node], ctx.dist_gene[node]);
    n.label = 2 * n.hop + static_cast<std::uint32_t>(n.kind);
    nodes.push_back(n);
  }
  std::sort(nodes.begin(), nodes.end(), [](const SubgraphNode& a, const SubgraphNode& b) {
    return a.label != b.label ? a.label < b.label : a.graph_node < b.graph_node;
  });
  std::vector<std::uint32_t> local(g.num_nodes(), kUnreached);
  for (std::uint32_t i = 0; i < nodes.size(); ++i) local[nodes[i].graph_node] = i;

  for (const SubgraphNode& n : nodes) {
    if (n.kind != NodeKind::kDrug) continue;
    for (std::uint32_t e : g.incident_edges(n.graph_node)) {
      if (is_removed(g, e, ctx.removed)) continue;
      const std::uint32_t other = g.other_end(e, n.graph_node);
      if (local[other] == kUnreached) continue;
      sub.edges.push_back({local[n.graph_node], local[other], g.edge(e).relation});
    }
  }
  std::sort(sub.edges.begin(), sub.edges.end(), [](const SubgraphEdge& a, const SubgraphEdge& b) {
    if (a.head != b.head) return a.head < b.head;
    if (a.tail != b.tail) return a.tail < b.tail;
    return a.relation < b.relation;
  });
  sub.nodes = std::move(nodes);
  sub.target_drug = local[ctx.drug_node];
  sub.target_gene = local[ctx.gene_node];
  if (sub.edges.empty()) {
    throw ExtractionError(ExtractionError::Kind::kEmptyContext,
                          "empty context: subgraph around ('" + g.node_id(ctx.drug_node) +
                              "', '" + g.node_id(ctx.gene_node) + "') has no edges");
  }
  return sub;
}

}  // namespace

void RwrConfig::validate() const {
  if (!(restart_continuation > 0.0 && restart_continuation < 1.0)) {
    throw Error("restart continuation must be in (0, 1)");
  }
  if (hop_limit < 1 || hop_limit % 2 == 0) throw Error("hop limit must be an odd number >= 1");
  if (!(tolerance > 0.0)) throw Error("RWR tolerance must be positive");
  if (max_iterations == 0) throw Error("RWR max_iterations must be positive");
  if (tie_tolerance < 0.0) throw Error("RWR tie tolerance must be non-negative");
}

std::vector<double> rwr_scores(const InteractionGraph& g, std::uint32_t start,
                               const RwrConfig& cfg,
                               std::optional<RemovedPair> removed) {
  if (!(cfg.restart_continuation > 0.0 && cfg.restart_continuation < 1.0)) {
    throw Error("restart continuation must be in (0, 1)");
  }
  if (start >= g.num_nodes()) {
    throw ExtractionError(ExtractionError::Kind::kUnknownNode, "RWR start node out of range");
  }
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_degree(n, 0.0);
  for (std::uint32_t u = 0; u < n; ++u) {
    const std::size_t d = usable_degree(g, u, removed);
    if (d > 0) inv_degree[u] = 1.0 / static_cast<double>(d);
  }
  if (inv_degree[start] == 0.0) {
    throw ExtractionError(ExtractionError::Kind::kIsolatedStart,
                          "RWR start node '" + g.node_id(start) + "' is isolated");
  }
  const double c = cfg.restart_continuation;
  std::vector<double> p(n, 0.0), next(n, 0.0);
  p[start] = 1.0;
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::uint32_t u = 0; u < n; ++u) {
      if (p[u] == 0.0 || inv_degree[u] == 0.0) continue;
      const double share = c * p[u] * inv_degree[u];
      for (std::uint32_t e : g.incident_edges(u)) {
        if (is_removed(g, e, removed)) continue;
        next[g.other_end(e, u)] += share;
      }
    }
    next[start] += 1.0 - c;
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) delta += std::abs(next[i] - p[i]);
    p.swap(next);
    if (delta < cfg.tolerance) break;
  }
  return p;
}

std::vector<std::uint32_t> Subgraph::labels() const {
  std::vector<std::uint32_t> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.label);
  return out;
}

std::vector<std::uint32_t> Subgraph::heads() const {
  std::vector<std::uint32_t> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back(e.head);
  return out;
}

std::vector<std::uint32_t> Subgraph::tails() const {
  std::vector<std::uint32_t> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back(e.tail);
  return out;
}

std::vector<std::uint32_t> Subgraph::relation_rows() const {
  std::vector<std::uint32_t> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back(e.relation - 1);
  return out;
}

Subgraph Subgraph::with_edges(const std::vector<char>& keep) const {
  if (keep.size() != edges.size()) throw DimensionError("edge mask size mismatch");
  Subgraph out = *this;
  out.edges.clear();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (keep[k]) out.edges.push_back(edges[k]);
  }
  return out;
}

Subgraph Subgraph::permuted(const std::vector<std::uint32_t>& new_index) const {
  if (new_index.size() != nodes.size()) throw DimensionError("permutation size mismatch");
  Subgraph out = *this;
  for (std::size_t i = 0; i < nodes.size(); ++i) out.nodes[new_index[i]] = nodes[i];
  for (auto& e : out.edges) {
    e.head = new_index[e.head];
    e.tail = new_index[e.tail];
  }
  out.target_drug = new_index[target_drug];
  out.target_gene = new_index[target_gene];
  return out;
}

Incidence build_incidence(const Subgraph& sub) {
  std::vector<std::vector<std::uint32_t>> node_cols, rel_cols;
  node_cols.reserve(sub.edges.size());
  rel_cols.reserve(sub.edges.size());
  for (const auto& e : sub.edges) {
    node_cols.push_back({e.head, e.tail});
    rel_cols.push_back({e.relation - 1});
  }
  return {BinaryMatrix(sub.nodes.size(), sub.edges.size(), node_cols),
          BinaryMatrix(sub.num_relations, sub.edges.size(), rel_cols)};
}

const char* to_string(ExtractionMethod method) {
  return method == ExtractionMethod::kRwr ? "rwr" : "enclosing";
}

ExtractionMethod parse_extraction_method(const std::string& s) {
  if (s == "rwr") return ExtractionMethod::kRwr;
  if (s == "enclosing") return ExtractionMethod::kEnclosing;
  throw Error("unknown extraction method '" + s + "'");
}

Subgraph extract_rwr(const InteractionGraph& g, std::uint32_t drug,
                     std::uint32_t gene, const RwrConfig& cfg,
                     bool keep_target_edge) {
  cfg.validate();
  const Context ctx = prepare(g, drug, gene, cfg.hop_limit, keep_target_edge);

  std::vector<std::uint32_t> candidates;
  for (std::uint32_t u = 0; u < g.num_nodes(); ++u) {
    if (u == ctx.drug_node || u == ctx.gene_node) continue;
    if (std::min(ctx.dist_drug[u], ctx.dist_gene[u]) <= cfg.hop_limit) {
      candidates.push_back(u);
    }
  }

  std::vector<std::uint32_t> kept{ctx.drug_node, ctx.gene_node};
  for (std::uint32_t seed : {ctx.drug_node, ctx.gene_node}) {
    const auto p = rwr_scores(g, seed, cfg, ctx.removed);
    std::vector<std::uint32_t> ranked;
    for (std::uint32_t u : candidates) {
      if (p[u] > 0.0) ranked.push_back(u);
    }
    std::sort(ranked.begin(), ranked.end(), [&p](std::uint32_t a, std::uint32_t b) {
      return p[a] != p[b] ? p[a] > p[b] : a < b;
    });
    std::size_t take = std::min(cfg.max_nodes_per_seed, ranked.size());
    while (take > 0 && take < ranked.size() &&
           p[ranked[take - 1]] - p[ranked[take]] <= cfg.tie_tolerance) {
      ++take;
    }
    kept.insert(kept.end(), ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return assemble(g, ctx, std::move(kept), cfg.hop_limit);
}

Subgraph extract_enclosing(const InteractionGraph& g, std::uint32_t drug,
                           std::uint32_t gene, std::uint32_t hop_limit,
                           bool keep_target_edge) {
  if (hop_limit < 1) throw Error("hop limit must be >= 1");
  const Context ctx = prepare(g, drug, gene, hop_limit, keep_target_edge);
  std::vector<std::uint32_t> kept;
  for (std::uint32_t u = 0; u < g.num_nodes(); ++u) {
    if (std::min(ctx.dist_drug[u], ctx.dist_gene[u]) <= hop_limit) kept.push_back(u);
  }
  return assemble(g, ctx, std::move(kept), hop_limit);
}

Subgraph extract(const InteractionGraph& g, std::uint32_t drug,
                 std::uint32_t gene, const ExtractionConfig& cfg) {
  if (cfg.method == ExtractionMethod::kEnclosing) {
    return extract_enclosing(g, drug, gene, cfg.rwr.hop_limit, cfg.keep_target_edge);
  }
  return extract_rwr(g, drug, gene, cfg.rwr, cfg.keep_target_edge);
}

Subgraph extract(const InteractionGraph& g, const std::string& drug,
                 const std::string& gene, const ExtractionConfig& cfg) {
  const auto d = g.find_drug(drug);
  if (!d) {
    throw ExtractionError(ExtractionError::Kind::kUnknownNode,
                          "drug '" + drug + "' is not in the graph");
  }
  const auto ge = g.find_gene(gene);
  if (!ge) {
    throw ExtractionError(ExtractionError::Kind::kUnknownNode,
                          "gene '" + gene + "' is not in the graph");
  }
  return extract(g, *d, *ge, cfg);
}

std::string subgraph_to_json(const Subgraph& sub, const InteractionGraph& g,
                             const RelationVocab* vocab) {
  using json = nlohmann::json;
  json j;
  j["targets"] = {{"drug", g.node_id(sub.nodes[sub.target_drug].graph_node)},
                  {"gene", g.node_id(sub.nodes[sub.target_gene].graph_node)},
                  {"drug_local", sub.target_drug},
                  {"gene_local", sub.target_gene}};
  j["hop_limit"] = sub.hop_limit;
  json nodes = json::array();
  for (const auto& n : sub.nodes) {
    nodes.push_back({{"id", g.node_id(n.graph_node)},
                     {"kind", n.kind == NodeKind::kDrug ? "drug" : "gene"},
                     {"hop", n.hop},
                     {"label", n.label}});
  }
  j["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& e : sub.edges) {
    json row = {{"head", e.head}, {"tail", e.tail}, {"relation", e.relation}};
    if (vocab) row["relation_name"] = vocab->name(e.relation);
    edges.push_back(std::move(row));
  }
  j["edges"] = std::move(edges);
  return j.dump(2) + "\n";
}

}  // namespace cosmig
