#include "cosmig/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "cosmig/error.hpp"
#include "json.hpp"

namespace cosmig {

TrainingSummary TrainingSummary::of(const InteractionGraph& train) {
  TrainingSummary s;
  s.drugs.insert(train.drug_ids().begin(), train.drug_ids().end());
  s.genes.insert(train.gene_ids().begin(), train.gene_ids().end());
  s.relation_counts.assign(train.num_relations(), 0);
  for (const Edge& e : train.edges()) ++s.relation_counts[e.relation - 1];
  return s;
}

std::uint32_t TrainingSummary::majority_relation() const {
  if (relation_counts.empty()) return 1;
  const auto it = std::max_element(relation_counts.begin(), relation_counts.end());
  return static_cast<std::uint32_t>(it - relation_counts.begin()) + 1;
}

const char* to_string(PairGroup group) {
  switch (group) {
    case PairGroup::kSeenDrugSeenGene: return "seen_drug_seen_gene";
    case PairGroup::kSeenDrugUnseenGene: return "seen_drug_unseen_gene";
    case PairGroup::kUnseenDrugSeenGene: return "unseen_drug_seen_gene";
    case PairGroup::kUnseenDrugUnseenGene: return "unseen_drug_unseen_gene";
  }
  return "?";
}

PairGroup classify(const TrainingSummary& seen, const std::string& drug,
                   const std::string& gene) {
  const int index = (seen.drugs.contains(drug) ? 0 : 2) + (seen.genes.contains(gene) ? 0 : 1);
  return static_cast<PairGroup>(index);
}

MeanSd mean_sd(std::span<const double> values) {
  MeanSd out;
  out.n = values.size();
  if (values.empty()) return out;
  double total = 0.0;
  for (double v : values) total += v;
  out.mean = total / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

std::vector<PreparedPair> prepare_pairs(const InteractionGraph& context,
                                        std::span<const Interaction> pairs,
                                        const ExtractionConfig& extraction,
                                        std::size_t threads) {
  std::vector<PreparedPair> out(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    out[i].pair = pairs[i];
    try {
      out[i].subgraph = extract(context, pairs[i].drug, pairs[i].gene, extraction);
      out[i].subgraph->target_relation = pairs[i].relation;
    } catch (const ExtractionError& e) {
      out[i].skip_reason = e.what();
    }
  });
  return out;
}

std::vector<std::optional<double>> score_pairs(std::span<const PreparedPair> pairs,
                                               const ParamStore& params,
                                               const ModelConfig& model,
                                               std::size_t threads) {
  std::vector<std::optional<double>> out(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    if (pairs[i].subgraph) out[i] = score(*pairs[i].subgraph, params, model);
  });
  return out;
}

EvalReport tally(std::span<const Interaction> pairs,
                 std::span<const std::optional<double>> scores,
                 std::size_t num_relations, const TrainingSummary& seen) {
  if (pairs.size() != scores.size()) throw DimensionError("tally: pairs and scores differ in length");
  EvalReport report;
  report.per_relation.assign(num_relations, {});
  report.majority_relation = seen.majority_relation();
  report.uniform_baseline = num_relations ? 1.0 / static_cast<double>(num_relations) : 0.0;
  std::size_t majority_hits = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!scores[i]) {
      ++report.skipped;
      continue;
    }
    const Interaction& pair = pairs[i];
    PairPrediction p{pair, *scores[i], predict_relation(*scores[i], num_relations),
                     classify(seen, pair.drug, pair.gene)};
    const bool hit = p.predicted == pair.relation;
    for (AccuracyCell* cell : {&report.overall, &report.per_relation.at(pair.relation - 1),
                               &report.groups[static_cast<std::size_t>(p.group)]}) {
      ++cell->count;
      cell->correct += hit;
    }
    majority_hits += pair.relation == report.majority_relation;
    report.predictions.push_back(std::move(p));
  }
  if (report.overall.count) {
    report.majority_baseline =
        static_cast<double>(majority_hits) / static_cast<double>(report.overall.count);
  }
  return report;
}

EvalReport evaluate(const ParamStore& params, const ModelConfig& model,
                    const ExtractionConfig& extraction,
                    const InteractionGraph& context,
                    std::span<const Interaction> pairs,
                    const TrainingSummary& seen, std::size_t threads) {
  const auto prepared = prepare_pairs(context, pairs, extraction, threads);
  const auto scores = score_pairs(prepared, params, model, threads);
  return tally(pairs, scores, model.num_relations, seen);
}

namespace {

std::string relation_label(std::size_t code, const RelationVocab* vocab) {
  if (vocab && code >= 1 && code <= vocab->size()) return vocab->name(static_cast<std::uint32_t>(code));
  return std::to_string(code);
}

nlohmann::json cell_json(const AccuracyCell& cell) {
  return {{"count", cell.count}, {"correct", cell.correct}, {"accuracy", cell.accuracy()}};
}

}  // namespace

std::string report_to_json(const EvalReport& report, const RelationVocab* vocab,
                           bool include_predictions) {
  nlohmann::ordered_json j;
  j["evaluated"] = report.overall.count;
  j["skipped"] = report.skipped;
  j["accuracy"] = report.overall.accuracy();
  j["majority_relation"] = relation_label(report.majority_relation, vocab);
  j["majority_baseline"] = report.majority_baseline;
  j["uniform_baseline"] = report.uniform_baseline;
  auto per_relation = nlohmann::ordered_json::object();
  for (std::size_t r = 0; r < report.per_relation.size(); ++r) {
    per_relation[relation_label(r + 1, vocab)] = cell_json(report.per_relation[r]);
  }
  j["per_relation"] = std::move(per_relation);
  auto groups = nlohmann::ordered_json::object();
  for (std::size_t gi = 0; gi < report.groups.size(); ++gi) {
    groups[to_string(static_cast<PairGroup>(gi))] = cell_json(report.groups[gi]);
  }
  j["groups"] = std::move(groups);
  if (include_predictions) {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& p : report.predictions) {
      rows.push_back({{"drug", p.pair.drug},
                      {"gene", p.pair.gene},
                      {"relation", relation_label(p.pair.relation, vocab)},
                      {"predicted", relation_label(p.predicted, vocab)},
                      {"score", p.score},
                      {"group", to_string(p.group)}});
    }
    j["predictions"] = std::move(rows);
  }
  return j.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report, const RelationVocab* vocab) {
  std::ostringstream out;
  out << fmt::format("{:<28} {:>8} {:>8} {:>8}\n", "cell", "count", "correct", "acc");
  auto row = [&out](const std::string& name, const AccuracyCell& c) {
    out << fmt::format("{:<28} {:>8} {:>8} {:>8.4f}\n", name, c.count, c.correct, c.accuracy());
  };
  row("overall", report.overall);
  for (std::size_t r = 0; r < report.per_relation.size(); ++r) {
    row("relation " + relation_label(r + 1, vocab), report.per_relation[r]);
  }
  for (std::size_t gi = 0; gi < report.groups.size(); ++gi) {
    row(to_string(static_cast<PairGroup>(gi)), report.groups[gi]);
  }
  out << fmt::format("skipped (no context): {}\n", report.skipped);
  out << fmt::format("majority baseline ({}): {:.4f}\n",
                     relation_label(report.majority_relation, vocab), report.majority_baseline);
  out << fmt::format("uniform baseline: {:.4f}\n", report.uniform_baseline);
  return out.str();
}

}  // namespace cosmig
