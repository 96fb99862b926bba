#include "cosmig/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "cosmig/error.hpp"

namespace cosmig {

namespace {

constexpr std::uint32_t kMaxEntities = 1u << 24;
constexpr std::uint32_t kMaxRelations = 1u << 16;

std::uint64_t edge_key(const Edge& e) {
  return (static_cast<std::uint64_t>(e.drug) << 40) |
         (static_cast<std::uint64_t>(e.gene) << 16) | e.relation;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

RelationVocab::RelationVocab(std::vector<std::string> names) {
  for (auto& n : names) {
    if (codes_.contains(n)) throw DataError("duplicate relation name '" + n + "'");
    intern(n);
  }
}

std::uint32_t RelationVocab::intern(const std::string& name) {
  auto it = codes_.find(name);
  if (it != codes_.end()) return it->second;
  names_.push_back(name);
  const auto code = static_cast<std::uint32_t>(names_.size());
  codes_.emplace(name, code);
  return code;
}

std::uint32_t RelationVocab::code(const std::string& name) const {
  auto it = codes_.find(name);
  if (it == codes_.end()) throw DataError("unknown relation '" + name + "'");
  return it->second;
}

std::optional<std::uint32_t> RelationVocab::find(const std::string& name) const {
  auto it = codes_.find(name);
  if (it == codes_.end()) return std::nullopt;
  return it->second;
}

const std::string& RelationVocab::name(std::uint32_t code) const {
  if (code == 0 || code > names_.size()) {
    throw DataError("relation code " + std::to_string(code) + " out of range 1.." +
                    std::to_string(names_.size()));
  }
  return names_[code - 1];
}

InteractionGraph InteractionGraph::from_interactions(
    std::span<const Interaction> interactions, std::size_t num_relations,
    std::size_t* duplicates_dropped) {
  if (num_relations >= kMaxRelations) throw DataError("too many relation types");
  InteractionGraph g;
  g.num_relations_ = num_relations;
  std::size_t dups = 0;
  for (const Interaction& it : interactions) {
    if (it.relation == 0 || it.relation > num_relations) {
      throw DataError("relation code " + std::to_string(it.relation) +
                      " outside 1.." + std::to_string(num_relations));
    }
    auto [d, new_drug] = g.drug_index_.try_emplace(
        it.drug, static_cast<std::uint32_t>(g.drug_ids_.size()));
    if (new_drug) g.drug_ids_.push_back(it.drug);
    auto [ge, new_gene] = g.gene_index_.try_emplace(
        it.gene, static_cast<std::uint32_t>(g.gene_ids_.size()));
    if (new_gene) g.gene_ids_.push_back(it.gene);
    if (g.drug_ids_.size() >= kMaxEntities || g.gene_ids_.size() >= kMaxEntities) {
      throw DataError("too many entities for the graph index");
    }
    const Edge e{d->second, ge->second, it.relation};
    if (g.edge_lookup_.try_emplace(edge_key(e),
                                   static_cast<std::uint32_t>(g.edges_.size()))
            .second) {
      g.edges_.push_back(e);
    } else {
      ++dups;
    }
  }
  if (duplicates_dropped) *duplicates_dropped = dups;
  g.build_adjacency();
  return g;
}

void InteractionGraph::build_adjacency() {
  const std::size_t n = num_nodes();
  std::vector<std::size_t> counts(n + 1, 0);
  for (const Edge& e : edges_) {
    ++counts[drug_node(e.drug) + 1];
    ++counts[gene_node(e.gene) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) counts[i + 1] += counts[i];
  adjacency_start_ = counts;
  adjacency_.assign(2 * edges_.size(), 0);
  std::vector<std::size_t> cursor(counts.begin(), counts.end() - 1);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    adjacency_[cursor[drug_node(e.drug)]++] = static_cast<std::uint32_t>(i);
    adjacency_[cursor[gene_node(e.gene)]++] = static_cast<std::uint32_t>(i);
  }
}

Interaction InteractionGraph::interaction(std::size_t i) const {
  const Edge& e = edges_.at(i);
  return {drug_ids_[e.drug], gene_ids_[e.gene], e.relation};
}

std::vector<Interaction> InteractionGraph::interactions() const {
  std::vector<Interaction> out;
  out.reserve(edges_.size());
  for (std::size_t i = 0; i < edges_.size(); ++i) out.push_back(interaction(i));
  return out;
}

std::optional<std::uint32_t> InteractionGraph::find_drug(const std::string& id) const {
  auto it = drug_index_.find(id);
  if (it == drug_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> InteractionGraph::find_gene(const std::string& id) const {
  auto it = gene_index_.find(id);
  if (it == gene_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> InteractionGraph::find_edge(const Interaction& e) const {
  const auto d = find_drug(e.drug);
  const auto g = find_gene(e.gene);
  if (!d || !g) return std::nullopt;
  auto it = edge_lookup_.find(edge_key(Edge{*d, *g, e.relation}));
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

const std::string& InteractionGraph::node_id(std::uint32_t node) const {
  return kind(node) == NodeKind::kDrug ? drug_ids_[node]
                                       : gene_ids_[node - num_drugs()];
}

InteractionGraph InteractionGraph::restrict_to(
    std::span<const std::size_t> edge_indices) const {
  std::vector<Interaction> subset;
  subset.reserve(edge_indices.size());
  for (std::size_t i : edge_indices) subset.push_back(interaction(i));
  return from_interactions(subset, num_relations_);
}

std::vector<std::string> InteractionGraph::audit() const {
  std::vector<std::string> problems;
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (e.drug >= num_drugs() || e.gene >= num_genes()) {
      problems.push_back("edge " + std::to_string(i) + " endpoint out of range");
      continue;
    }
    if (e.relation == 0 || e.relation > num_relations_) {
      problems.push_back("edge " + std::to_string(i) + " relation out of range");
    }
    if (!seen.insert(edge_key(e)).second) {
      problems.push_back("edge " + std::to_string(i) + " duplicates a triple");
    }
  }
  if (adjacency_start_.size() != num_nodes() + 1 ||
      adjacency_.size() != 2 * edges_.size()) {
    problems.push_back("adjacency size does not match edge list");
    return problems;
  }
  for (std::uint32_t node = 0; node < num_nodes(); ++node) {
    for (std::uint32_t ei : incident_edges(node)) {
      const Edge& e = edges_[ei];
      const bool touches = kind(node) == NodeKind::kDrug
                               ? e.drug == node
                               : gene_node(e.gene) == node;
      if (!touches) {
        problems.push_back("adjacency of node " + std::to_string(node) +
                           " lists non-incident edge " + std::to_string(ei));
      }
    }
  }
  return problems;
}

std::uint64_t InteractionGraph::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  for (const Edge& e : edges_) {
    feed(drug_ids_[e.drug]);
    feed(gene_ids_[e.gene]);
    feed(std::to_string(e.relation));
  }
  return h;
}

IngestResult ingest(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return ingest_stream(in, path, options);
}

IngestResult ingest_stream(std::istream& in, const std::string& source_name,
                           const IngestOptions& options) {
  struct Row {
    std::string drug, gene, relation;
  };
  IngestResult result;
  std::vector<Row> rows;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool first_data_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    auto cols = split_tabs(line);
    if (first_data_row) {
      first_data_row = false;
      if (cols.size() >= 2 && lower(cols[0]).starts_with("drug") &&
          lower(cols[1]).starts_with("gene")) {
        result.stats.header_detected = true;
        continue;
      }
    }
    if (cols.size() < 3) {
      throw DataError(source_name, line_no,
                      "expected 3 tab-separated columns, found " +
                          std::to_string(cols.size()));
    }
    for (int c = 0; c < 3; ++c) {
      if (cols[c].empty()) {
        throw DataError(source_name, line_no,
                        "empty column " + std::to_string(c + 1));
      }
    }
    ++result.stats.rows;
    std::string key = cols[0] + '\t' + cols[1] + '\t' + cols[2];
    if (!seen.insert(std::move(key)).second) {
      ++result.stats.duplicates;
      continue;
    }
    rows.push_back({cols[0], cols[1], cols[2]});
  }

  std::vector<char> alive(rows.size(), 1);
  std::size_t removed = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::string, std::size_t> drug_deg, gene_deg;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!alive[i]) continue;
      ++drug_deg[rows[i].drug];
      ++gene_deg[rows[i].gene];
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!alive[i]) continue;
      if (drug_deg[rows[i].drug] < options.min_degree ||
          gene_deg[rows[i].gene] < options.min_degree) {
        alive[i] = 0;
        ++removed;
        changed = true;
      }
    }
    if (options.filter_mode == FilterMode::kSinglePass) break;
  }
  result.stats.edges_removed_by_degree = removed;

  std::vector<Interaction> interactions;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!alive[i]) continue;
    interactions.push_back(
        {rows[i].drug, rows[i].gene, result.vocab.intern(rows[i].relation)});
  }
  if (interactions.empty()) {
    throw DataError(source_name + ": no interactions left after filtering (min degree " +
                    std::to_string(options.min_degree) + ")");
  }
  result.graph =
      InteractionGraph::from_interactions(interactions, result.vocab.size());
  return result;
}

AugmentResult augment_with_context(const InteractionGraph& train,
                                   std::span<const Interaction> context) {
  std::vector<Interaction> all = train.interactions();
  all.insert(all.end(), context.begin(), context.end());
  AugmentResult result;
  result.graph = InteractionGraph::from_interactions(all, train.num_relations(),
                                                     &result.skipped_duplicates);
  return result;
}

}  // namespace cosmig
