#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "cosmig/graph.hpp"
#include "cosmig/model.hpp"
#include "cosmig/param_store.hpp"
#include "cosmig/subgraph.hpp"

namespace cosmig {

// What the model saw during training: entity ids and the relation histogram.
struct TrainingSummary {
  std::unordered_set<std::string> drugs;
  std::unordered_set<std::string> genes;
  std::vector<std::size_t> relation_counts;  // index code - 1

  static TrainingSummary of(const InteractionGraph& train);
  // Most frequent training relation, lowest code on ties.
  std::uint32_t majority_relation() const;
};

// Seen/unseen cells, in this order.
enum class PairGroup : std::uint8_t {
  kSeenDrugSeenGene = 0,
  kSeenDrugUnseenGene = 1,
  kUnseenDrugSeenGene = 2,
  kUnseenDrugUnseenGene = 3,
};
const char* to_string(PairGroup group);
PairGroup classify(const TrainingSummary& seen, const std::string& drug,
                   const std::string& gene);

struct AccuracyCell {
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy() const { return count ? static_cast<double>(correct) / count : 0.0; }
};

struct PairPrediction {
  Interaction pair;
  double score = 0.0;
  std::uint32_t predicted = 0;
  PairGroup group = PairGroup::kSeenDrugSeenGene;
};

struct EvalReport {
  AccuracyCell overall;
  std::vector<AccuracyCell> per_relation;  // index code - 1, by true relation
  std::array<AccuracyCell, 4> groups;
  std::size_t skipped = 0;  // pairs without usable context
  std::uint32_t majority_relation = 1;
  double majority_baseline = 0.0;  // accuracy of always predicting majority
  double uniform_baseline = 0.0;   // 1 / R
  std::vector<PairPrediction> predictions;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t n = 0;
};
MeanSd mean_sd(std::span<const double> values);

// A pair with its extracted subgraph, or the reason it could not be used.
struct PreparedPair {
  Interaction pair;
  std::optional<Subgraph> subgraph;
  std::string skip_reason;
};

// Extracts a subgraph for every pair from `context` (target edges removed).
// Work is spread over `threads` threads; output order follows the input.
std::vector<PreparedPair> prepare_pairs(const InteractionGraph& context,
                                        std::span<const Interaction> pairs,
                                        const ExtractionConfig& extraction,
                                        std::size_t threads = 1);

// Eval-mode scores; nullopt for skipped pairs.
std::vector<std::optional<double>> score_pairs(std::span<const PreparedPair> pairs,
                                               const ParamStore& params,
                                               const ModelConfig& model,
                                               std::size_t threads = 1);

// Builds the report from scores. Pairs with no score count as skipped.
EvalReport tally(std::span<const Interaction> pairs,
                 std::span<const std::optional<double>> scores,
                 std::size_t num_relations, const TrainingSummary& seen);

EvalReport evaluate(const ParamStore& params, const ModelConfig& model,
                    const ExtractionConfig& extraction,
                    const InteractionGraph& context,
                    std::span<const Interaction> pairs,
                    const TrainingSummary& seen, std::size_t threads = 1);

// JSON object (without per-pair predictions unless asked) and a text table.
std::string report_to_json(const EvalReport& report,
                           const RelationVocab* vocab = nullptr,
                           bool include_predictions = false);
std::string report_to_table(const EvalReport& report,
                            const RelationVocab* vocab = nullptr);

// Runs `fn(i)` for i in [0, n) on up to `threads` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn);

}  // namespace cosmig

#include "cosmig/detail/parallel.hpp"
