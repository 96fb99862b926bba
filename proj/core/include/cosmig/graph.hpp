#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace cosmig {

// Relation-type names with codes 1..R in first-appearance order.
class RelationVocab {
 public:
  RelationVocab() = default;
  explicit RelationVocab(std::vector<std::string> names);

  // Returns the code of `name`, adding it when new.
  std::uint32_t intern(const std::string& name);
  std::uint32_t code(const std::string& name) const;  // throws DataError
  std::optional<std::uint32_t> find(const std::string& name) const;
  const std::string& name(std::uint32_t code) const;

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool operator==(const RelationVocab& other) const {
    return names_ == other.names_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> codes_;
};

enum class NodeKind : std::uint8_t { kDrug = 0, kGene = 1 };

// A typed drug-gene interaction addressed by entity ids.
struct Interaction {
  std::string drug;
  std::string gene;
  std::uint32_t relation = 0;  // 1..R

  bool operator==(const Interaction&) const = default;
};

// Edge between dense drug and gene indices.
struct Edge {
  std::uint32_t drug = 0;
  std::uint32_t gene = 0;
  std::uint32_t relation = 0;

  bool operator==(const Edge&) const = default;
};

// Immutable bipartite multi-relational graph. Drugs and genes get dense
// indices in first-appearance order. A unified node index is used by walk and
// extraction code: drug i -> i, gene j -> num_drugs() + j.
class InteractionGraph {
 public:
  InteractionGraph() = default;

  // Builds a graph from interactions. Duplicate triples are dropped (first
  // occurrence wins). `num_relations` bounds relation codes.
  static InteractionGraph from_interactions(
      std::span<const Interaction> interactions, std::size_t num_relations,
      std::size_t* duplicates_dropped = nullptr);

  std::size_t num_drugs() const noexcept { return drug_ids_.size(); }
  std::size_t num_genes() const noexcept { return gene_ids_.size(); }
  std::size_t num_nodes() const noexcept { return num_drugs() + num_genes(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::size_t num_relations() const noexcept { return num_relations_; }

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(std::size_t i) const { return edges_[i]; }
  Interaction interaction(std::size_t i) const;
  std::vector<Interaction> interactions() const;

  const std::string& drug_id(std::uint32_t d) const { return drug_ids_[d]; }
  const std::string& gene_id(std::uint32_t g) const { return gene_ids_[g]; }
  const std::vector<std::string>& drug_ids() const noexcept { return drug_ids_; }
  const std::vector<std::string>& gene_ids() const noexcept { return gene_ids_; }
  std::optional<std::uint32_t> find_drug(const std::string& id) const;
  std::optional<std::uint32_t> find_gene(const std::string& id) const;
  std::optional<std::size_t> find_edge(const Interaction& e) const;

  std::uint32_t drug_node(std::uint32_t d) const noexcept { return d; }
  std::uint32_t gene_node(std::uint32_t g) const noexcept {
    return static_cast<std::uint32_t>(num_drugs()) + g;
  }
  NodeKind kind(std::uint32_t node) const noexcept {
    return node < num_drugs() ? NodeKind::kDrug : NodeKind::kGene;
  }
  const std::string& node_id(std::uint32_t node) const;

  // Edge indices incident to a unified node.
  std::span<const std::uint32_t> incident_edges(std::uint32_t node) const {
    return {adjacency_.data() + adjacency_start_[node],
            adjacency_start_[node + 1] - adjacency_start_[node]};
  }
  std::size_t degree(std::uint32_t node) const {
    return adjacency_start_[node + 1] - adjacency_start_[node];
  }
  // The endpoint of `edge_index` that is not `node`.
  std::uint32_t other_end(std::size_t edge_index, std::uint32_t node) const {
    const Edge& e = edges_[edge_index];
    const std::uint32_t d = drug_node(e.drug);
    return node == d ? gene_node(e.gene) : d;
  }

  // Graph made of a subset of edges; only entities touched by those edges are
  // kept, in the order they first appear.
  InteractionGraph restrict_to(std::span<const std::size_t> edge_indices) const;

  // Consistency checks (bipartite, no duplicate triples, adjacency matches the
  // edge list, relation codes in range). Returns human-readable violations.
  std::vector<std::string> audit() const;

  bool operator==(const InteractionGraph& other) const {
    return drug_ids_ == other.drug_ids_ && gene_ids_ == other.gene_ids_ &&
           edges_ == other.edges_ && num_relations_ == other.num_relations_;
  }

  // 64-bit FNV-1a over the interaction list; identifies a graph in manifests.
  std::uint64_t fingerprint() const;

 private:
  void build_adjacency();

  std::vector<std::string> drug_ids_;
  std::vector<std::string> gene_ids_;
  std::unordered_map<std::string, std::uint32_t> drug_index_;
  std::unordered_map<std::string, std::uint32_t> gene_index_;
  std::vector<Edge> edges_;
  std::size_t num_relations_ = 0;
  std::vector<std::size_t> adjacency_start_{0};
  std::vector<std::uint32_t> adjacency_;
  std::unordered_map<std::uint64_t, std::uint32_t> edge_lookup_;
};

enum class FilterMode { kFixpoint, kSinglePass };

struct IngestOptions {
  std::size_t min_degree = 5;
  FilterMode filter_mode = FilterMode::kFixpoint;
};

struct IngestStats {
  std::size_t rows = 0;
  std::size_t duplicates = 0;
  std::size_t edges_removed_by_degree = 0;
  bool header_detected = false;
};

struct IngestResult {
  InteractionGraph graph;
  RelationVocab vocab;
  IngestStats stats;
};

// Reads drug_id<TAB>gene_id<TAB>relation_name rows. Lines starting with '#'
// and blank lines are skipped; a first row whose first two columns start with
// "drug" and "gene" (any case) is taken as a header. Duplicates are removed,
// then drugs and genes with degree < min_degree are dropped. Relation codes
// follow first appearance among the retained rows.
// Throws DataError (with file:line) on malformed rows or an empty result.
IngestResult ingest(const std::string& path, const IngestOptions& options = {});
IngestResult ingest_stream(std::istream& in, const std::string& source_name,
                           const IngestOptions& options = {});

struct AugmentResult {
  InteractionGraph graph;
  std::size_t skipped_duplicates = 0;
};

// Train graph plus context edges; the input graph is not modified. New
// entities get fresh indices after the existing ones.
AugmentResult augment_with_context(const InteractionGraph& train,
                                   std::span<const Interaction> context);

}  // namespace cosmig
