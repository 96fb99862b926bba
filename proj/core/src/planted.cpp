#include "cosmig/planted.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "cosmig/error.hpp"
#include "cosmig/rng.hpp"

namespace cosmig {

namespace {

std::string padded(const char* prefix, std::size_t i) {
  std::string digits = std::to_string(i);
  return prefix + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
}

}  // namespace

PlantedDataset make_planted(const PlantedConfig& cfg) {
  if (cfg.num_drugs < 2 || cfg.num_genes < 2) throw Error("planted graph needs at least 2 drugs and 2 genes");
  if (cfg.gene_degree == 0 || cfg.gene_degree > cfg.num_drugs) {
    throw Error("gene degree must be in [1, num_drugs]");
  }
  Rng rng(cfg.seed);
  PlantedDataset data;
  data.vocab = RelationVocab({"rel1", "rel2", "rel3", "rel4"});

  auto draw_types = [&rng](std::size_t n) {
    std::vector<std::uint8_t> types(n);
    for (std::size_t i = 0; i < n; ++i) types[i] = static_cast<std::uint8_t>(i % 2);
    rng.shuffle(std::span<std::uint8_t>(types));
    return types;
  };
  data.drug_type = draw_types(cfg.num_drugs);
  data.gene_type = draw_types(cfg.num_genes);

  // Each gene links to its gene_degree least-loaded drugs (random tie-break),
  // which keeps drug degrees within one of each other.
  std::vector<std::size_t> degree(cfg.num_drugs, 0);
  std::vector<std::size_t> drugs(cfg.num_drugs);
  for (std::size_t g = 0; g < cfg.num_genes; ++g) {
    std::iota(drugs.begin(), drugs.end(), 0);
    rng.shuffle(std::span<std::size_t>(drugs));
    std::stable_sort(drugs.begin(), drugs.end(),
                     [&degree](std::size_t a, std::size_t b) { return degree[a] < degree[b]; });
    for (std::size_t k = 0; k < cfg.gene_degree; ++k) {
      const std::size_t d = drugs[k];
      ++degree[d];
      const auto relation = static_cast<std::uint32_t>(2 * data.drug_type[d] + data.gene_type[g] + 1);
      data.interactions.push_back({padded("D", d), padded("G", g), relation});
    }
  }
  rng.shuffle(std::span<Interaction>(data.interactions));
  // First appearance order of relations matches their codes, so a round trip
  // through ingest keeps the codes.
  std::size_t front = 0;
  for (std::uint32_t r = 1; r <= 4; ++r) {
    auto it = std::find_if(data.interactions.begin() + static_cast<std::ptrdiff_t>(front),
                           data.interactions.end(),
                           [r](const Interaction& e) { return e.relation == r; });
    if (it == data.interactions.end()) continue;
    std::rotate(data.interactions.begin() + static_cast<std::ptrdiff_t>(front), it, it + 1);
    ++front;
  }
  return data;
}

std::string planted_tsv(const PlantedDataset& data) {
  std::ostringstream out;
  out << "drug_id\tgene_id\trelation\n";
  for (const auto& e : data.interactions) {
    out << e.drug << '\t' << e.gene << '\t' << data.vocab.name(e.relation) << '\n';
  }
  return out.str();
}

}  // namespace cosmig
