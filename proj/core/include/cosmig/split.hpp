#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cosmig/graph.hpp"

namespace cosmig {

enum class SplitMode { kTransductive, kInductive };
// Which entity kind an inductive split holds out. kDrugs is the standard
// protocol; the other two are extensions for unseen-gene evaluation.
enum class Holdout { kDrugs, kGenes, kBoth };

const char* to_string(SplitMode mode);
const char* to_string(Holdout holdout);
SplitMode parse_split_mode(const std::string& s);
Holdout parse_holdout(const std::string& s);

// Partition of a graph's edges (by edge index). All four lists are sorted and
// pairwise disjoint, and together cover every edge.
struct DatasetSplit {
  SplitMode mode = SplitMode::kTransductive;
  Holdout holdout = Holdout::kDrugs;
  std::uint64_t seed = 0;
  double train_frac = 0.0;    // transductive: per-drug train share
  double val_frac = 0.0;      // share of the train pool moved to validation
  double entity_frac = 0.0;   // inductive: share of entities kept for training
  double context_frac = 0.0;  // inductive: share of a held-out entity's edges
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::vector<std::size_t> context;
  // Held-out entities with too few edges to leave anything to evaluate.
  std::size_t entities_without_test = 0;
  // Test edges moved into the training pool so their gene is seen.
  std::size_t moved_to_train = 0;
  std::size_t edge_count = 0;
  std::uint64_t graph_fingerprint = 0;

  bool operator==(const DatasetSplit&) const = default;
};

// Per-drug stratified split: ceil(train_frac * degree) of each drug's edges
// form the train pool, the rest the test set; val_frac of the pool is then
// moved to validation, drawn globally at random. Test edges whose gene has no
// pool edge are moved to the pool, and validation never takes the last train
// edge of a drug or gene.
DatasetSplit split_transductive(const InteractionGraph& g, double train_frac,
                                double val_frac, std::uint64_t seed);

// Entity holdout: ceil(entity_frac * count) entities keep all their edges in
// the train pool. For each held-out entity, floor(context_frac * edges)
// (at least 1) of its edges become context and the rest test. Validation is
// carved from the pool as in the transductive split.
DatasetSplit split_inductive(const InteractionGraph& g, double entity_frac,
                             double context_frac, double val_frac,
                             std::uint64_t seed,
                             Holdout holdout = Holdout::kDrugs);

// Disjointness and coverage violations, empty when the split is well-formed.
std::vector<std::string> check_split(const InteractionGraph& g,
                                     const DatasetSplit& split);

std::vector<Interaction> select(const InteractionGraph& g,
                                const std::vector<std::size_t>& edge_indices);

// Manifest (JSON) text for a split; deterministic byte-for-byte.
std::string split_to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const std::string& text);
void save_split(const DatasetSplit& split, const std::string& path);
// Throws DataError if the manifest does not belong to `g`.
DatasetSplit load_split(const std::string& path, const InteractionGraph& g);

}  // namespace cosmig
