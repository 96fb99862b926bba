#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cosmig/graph.hpp"
#include "cosmig/rng.hpp"

namespace cosmig::testing {

// RWR stationary vector from a dense LU solve of (I - c A D^-1) p = (1 - c) e.
// Columns of nodes without edges are zero. Edge multiplicity counts in A.
std::vector<double> dense_rwr(const InteractionGraph& g, std::uint32_t start, double c);

// Random bipartite multigraph-free graph with at most `max_nodes` entities,
// every entity having at least one edge.
InteractionGraph random_bipartite(Rng& rng, std::size_t max_nodes, std::size_t num_relations);

// Same graph with drug and gene ids renamed and every list (entities, edges)
// shuffled, so all global indices change. When given, `drug_names[i]` and
// `gene_names[i]` receive the new id of old drug i and gene i.
InteractionGraph relabelled(const InteractionGraph& g, Rng& rng,
                            std::vector<std::string>* drug_names = nullptr,
                            std::vector<std::string>* gene_names = nullptr);

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace cosmig::testing
