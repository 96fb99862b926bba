#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cosmig/graph.hpp"
#include "cosmig/ops.hpp"

namespace cosmig {

// Random walk with restart settings. `restart_continuation` is the c in
// p = c * A * D^-1 * p + (1 - c) * e, the probability of stepping to a
// neighbour instead of jumping back to the start.
struct RwrConfig {
  double restart_continuation = 0.8;
  std::uint32_t hop_limit = 3;  // odd
  std::size_t max_nodes_per_seed = 100;
  double tolerance = 1e-10;
  std::size_t max_iterations = 10000;
  // Candidates whose scores differ by at most this much rank as tied.
  double tie_tolerance = 1e-9;

  void validate() const;  // throws Error
};

// Edges between this drug and gene are invisible to walks and extraction.
struct RemovedPair {
  std::uint32_t drug_node;
  std::uint32_t gene_node;
};

// Stationary RWR distribution from `start` by power iteration, stopping once
// the L1 change drops below cfg.tolerance (or after max_iterations). Edge
// multiplicity counts in A. Throws ExtractionError(kIsolatedStart) when the
// start node has no usable edge.
std::vector<double> rwr_scores(const InteractionGraph& g, std::uint32_t start,
                               const RwrConfig& cfg,
                               std::optional<RemovedPair> removed = std::nullopt);

struct SubgraphNode {
  std::uint32_t graph_node = 0;
  NodeKind kind = NodeKind::kDrug;
  std::uint32_t hop = 0;
  std::uint32_t label = 0;  // 2 * hop + kind

  bool operator==(const SubgraphNode&) const = default;
};

// head is the drug-side endpoint, tail the gene-side endpoint.
struct SubgraphEdge {
  std::uint32_t head = 0;
  std::uint32_t tail = 0;
  std::uint32_t relation = 0;

  bool operator==(const SubgraphEdge&) const = default;
};

// Labelled local graph around one (drug, gene) pair. The target drug is local
// node 0 (label 0) and the target gene local node 1 (label 1).
struct Subgraph {
  std::vector<SubgraphNode> nodes;
  std::vector<SubgraphEdge> edges;
  std::uint32_t target_drug = 0;
  std::uint32_t target_gene = 1;
  std::uint32_t target_relation = 0;  // 0 when unknown
  std::size_t num_relations = 0;
  std::uint32_t hop_limit = 0;

  std::size_t num_labels() const { return 2 * static_cast<std::size_t>(hop_limit) + 2; }
  std::vector<std::uint32_t> labels() const;
  std::vector<std::uint32_t> heads() const;
  std::vector<std::uint32_t> tails() const;
  std::vector<std::uint32_t> relation_rows() const;  // relation - 1

  // Same nodes, only the edges with keep[k] != 0.
  Subgraph with_edges(const std::vector<char>& keep) const;
  // Reorders local nodes; new local index of old node i is order[i]. Used by
  // permutation tests, targets follow their nodes.
  Subgraph permuted(const std::vector<std::uint32_t>& new_index) const;
};

// Node-to-edge (n x e) and relation-to-edge (R x e) 0/1 incidence matrices.
struct Incidence {
  BinaryMatrix node_edge;
  BinaryMatrix relation_edge;
};

Incidence build_incidence(const Subgraph& sub);

enum class ExtractionMethod { kRwr, kEnclosing };

const char* to_string(ExtractionMethod method);
ExtractionMethod parse_extraction_method(const std::string& s);

struct ExtractionConfig {
  ExtractionMethod method = ExtractionMethod::kRwr;
  RwrConfig rwr;
  // Leaves the target edge in the subgraph. Only meant for leakage tests.
  bool keep_target_edge = false;
};

// Subgraph from RWR scores: candidates are nodes within hop_limit of either
// target (target edge removed); for each target, the max_nodes_per_seed
// candidates with the highest score from that target are kept. A run of tied
// scores straddling the cut is kept whole. Both targets are always kept and
// all edges among kept nodes are induced. Hop number of a node is its smaller
// BFS distance to the two targets.
Subgraph extract_rwr(const InteractionGraph& g, std::uint32_t drug,
                     std::uint32_t gene, const RwrConfig& cfg,
                     bool keep_target_edge = false);

// Union of the hop-limit BFS neighbourhoods of both targets, no sampling.
Subgraph extract_enclosing(const InteractionGraph& g, std::uint32_t drug,
                           std::uint32_t gene, std::uint32_t hop_limit,
                           bool keep_target_edge = false);

Subgraph extract(const InteractionGraph& g, std::uint32_t drug,
                 std::uint32_t gene, const ExtractionConfig& cfg);
// Looks the pair up by entity id; unknown ids raise kUnknownNode.
Subgraph extract(const InteractionGraph& g, const std::string& drug,
                 const std::string& gene, const ExtractionConfig& cfg);

// JSON dump for inspection: nodes (id, kind, hop, label), edges (head, tail,
// relation), targets. `vocab` adds relation names when given.
std::string subgraph_to_json(const Subgraph& sub, const InteractionGraph& g,
                             const RelationVocab* vocab = nullptr);

}  // namespace cosmig
