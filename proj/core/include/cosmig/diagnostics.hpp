#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cosmig/grad_check.hpp"
#include "cosmig/model.hpp"
#include "cosmig/rng.hpp"
#include "cosmig/subgraph.hpp"

namespace cosmig {

// Random labelled subgraph with `num_nodes` nodes: local node 0 is the target
// drug, node 1 the target gene, the rest get random kinds and hops (1..hop
// limit). Edges join random drug/gene pairs and each target has at least one.
Subgraph random_subgraph(Rng& rng, std::size_t num_nodes, std::size_t num_relations,
                         std::uint32_t hop_limit = 3);

struct GradSuiteOptions {
  std::size_t cases = 24;
  std::uint64_t seed = 1;
  std::size_t min_nodes = 6;
  std::size_t max_nodes = 12;
  std::vector<std::size_t> relation_counts{2, 14};
  std::vector<std::size_t> depths{2, 4};
  std::size_t embed_dim = 8;
  GradCheckOptions check;
};

struct GradSuiteCase {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t relations = 0;
  std::size_t depth = 0;
  GradCheckResult result;
};

// Full-model finite-difference check of the squared error of r-hat on random
// subgraphs, cycling through every (relation count, depth) combination.
std::vector<GradSuiteCase> run_grad_suite(const GradSuiteOptions& options);

}  // namespace cosmig
