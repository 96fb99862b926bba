#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cosmig/graph.hpp"

namespace cosmig {

// Synthetic drug-gene graph with a known labelling rule. Every drug and gene
// carries a hidden binary type; an edge's relation is 2 * type(drug) +
// type(gene) + 1, so the relations of the other edges around a pair
// determine its own relation.
struct PlantedConfig {
  std::size_t num_drugs = 60;
  std::size_t num_genes = 80;
  std::size_t gene_degree = 5;
  std::uint64_t seed = 1;
};

struct PlantedDataset {
  std::vector<Interaction> interactions;
  RelationVocab vocab;  // codes 1..4 in rule order
  std::vector<std::uint8_t> drug_type;
  std::vector<std::uint8_t> gene_type;
};

PlantedDataset make_planted(const PlantedConfig& cfg);

// drug_id<TAB>gene_id<TAB>relation rows with a header line.
std::string planted_tsv(const PlantedDataset& data);

}  // namespace cosmig
