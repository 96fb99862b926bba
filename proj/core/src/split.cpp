#include "cosmig/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cosmig/error.hpp"
#include "cosmig/rng.hpp"
#include "json.hpp"

namespace cosmig {

namespace {

using json = nlohmann::json;

// ceil/floor with slack for products like 0.7 * 10 = 7.000000000000001.
std::size_t ceil_share(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n) - 1e-9));
}
std::size_t floor_share(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

std::vector<std::size_t> incident_sorted(const InteractionGraph& g,
                                         std::uint32_t node) {
  const auto inc = g.incident_edges(node);
  std::vector<std::size_t> out(inc.begin(), inc.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Moves up to round(val_frac * |pool|) pool edges to validation, visiting the
// pool in random order and skipping edges that hold the last train edge of
// their drug or gene.
void carve_validation(const InteractionGraph& g, double val_frac, Rng& rng,
                      std::vector<std::size_t>& pool,
                      std::vector<std::size_t>& validation) {
  std::sort(pool.begin(), pool.end());
  const auto target = static_cast<std::size_t>(
      std::llround(val_frac * static_cast<double>(pool.size())));
  if (target == 0) return;
  std::vector<std::size_t> drug_count(g.num_drugs(), 0), gene_count(g.num_genes(), 0);
  for (std::size_t e : pool) {
    ++drug_count[g.edge(e).drug];
    ++gene_count[g.edge(e).gene];
  }
  std::vector<std::size_t> order = pool;
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<char> moved(g.num_edges(), 0);
  std::size_t taken = 0;
  for (std::size_t e : order) {
    if (taken == target) break;
    const Edge& edge = g.edge(e);
    if (drug_count[edge.drug] <= 1 || gene_count[edge.gene] <= 1) continue;
    --drug_count[edge.drug];
    --gene_count[edge.gene];
    moved[e] = 1;
    validation.push_back(e);
    ++taken;
  }
  std::erase_if(pool, [&](std::size_t e) { return moved[e] != 0; });
  std::sort(validation.begin(), validation.end());
}

void finish(DatasetSplit& s, const InteractionGraph& g) {
  for (auto* v : {&s.train, &s.validation, &s.test, &s.context}) {
    std::sort(v->begin(), v->end());
  }
  s.edge_count = g.num_edges();
  s.graph_fingerprint = g.fingerprint();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

const char* to_string(SplitMode mode) {
  return mode == SplitMode::kTransductive ? "transductive" : "inductive";
}

const char* to_string(Holdout holdout) {
  switch (holdout) {
    case Holdout::kDrugs:
      return "drugs";
    case Holdout::kGenes:
      return "genes";
    case Holdout::kBoth:
      return "both";
  }
  return "?";
}

SplitMode parse_split_mode(const std::string& s) {
  if (s == "transductive") return SplitMode::kTransductive;
  if (s == "inductive") return SplitMode::kInductive;
  throw Error("unknown split mode '" + s + "'");
}

Holdout parse_holdout(const std::string& s) {
  if (s == "drugs") return Holdout::kDrugs;
  if (s == "genes") return Holdout::kGenes;
  if (s == "both") return Holdout::kBoth;
  throw Error("unknown holdout '" + s + "'");
}

DatasetSplit split_transductive(const InteractionGraph& g, double train_frac,
                                double val_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw Error("train_frac must be in (0, 1), got " + std::to_string(train_frac));
  }
  if (!(val_frac >= 0.0 && val_frac < 1.0)) {
    throw Error("val_frac must be in [0, 1), got " + std::to_string(val_frac));
  }
  DatasetSplit s;
  s.mode = SplitMode::kTransductive;
  s.seed = seed;
  s.train_frac = train_frac;
  s.val_frac = val_frac;
  Rng rng(seed);

  std::vector<std::size_t> pool;
  for (std::uint32_t d = 0; d < g.num_drugs(); ++d) {
    auto edges = incident_sorted(g, g.drug_node(d));
    rng.shuffle(std::span<std::size_t>(edges));
    const std::size_t n_train =
        std::clamp<std::size_t>(ceil_share(train_frac, edges.size()), 1, edges.size());
    pool.insert(pool.end(), edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.insert(s.test.end(), edges.begin() + static_cast<std::ptrdiff_t>(n_train), edges.end());
  }

  // Every test gene must be seen in training.
  std::sort(s.test.begin(), s.test.end());
  std::vector<std::size_t> gene_pool(g.num_genes(), 0);
  for (std::size_t e : pool) ++gene_pool[g.edge(e).gene];
  std::vector<std::size_t> kept_test;
  for (std::size_t e : s.test) {
    const auto gene = g.edge(e).gene;
    if (gene_pool[gene] == 0) {
      pool.push_back(e);
      ++gene_pool[gene];
      ++s.moved_to_train;
    } else {
      kept_test.push_back(e);
    }
  }
  s.test = std::move(kept_test);

  carve_validation(g, val_frac, rng, pool, s.validation);
  s.train = std::move(pool);
  finish(s, g);
  return s;
}

DatasetSplit split_inductive(const InteractionGraph& g, double entity_frac,
                             double context_frac, double val_frac,
                             std::uint64_t seed, Holdout holdout) {
  if (!(entity_frac > 0.0 && entity_frac < 1.0)) {
    throw Error("entity fraction must be in (0, 1), got " + std::to_string(entity_frac));
  }
  if (!(context_frac > 0.0 && context_frac < 1.0)) {
    throw Error("context_frac must be in (0, 1), got " + std::to_string(context_frac));
  }
  if (!(val_frac >= 0.0 && val_frac < 1.0)) {
    throw Error("val_frac must be in [0, 1), got " + std::to_string(val_frac));
  }
  DatasetSplit s;
  s.mode = SplitMode::kInductive;
  s.holdout = holdout;
  s.seed = seed;
  s.entity_frac = entity_frac;
  s.context_frac = context_frac;
  s.val_frac = val_frac;
  Rng rng(seed);

  auto pick_held_out = [&](std::size_t count) {
    if (count < 2) throw Error("inductive split needs at least two entities per held-out kind");
    std::vector<std::uint32_t> order(count);
    for (std::uint32_t i = 0; i < count; ++i) order[i] = i;
    rng.shuffle(std::span<std::uint32_t>(order));
    const std::size_t keep = std::clamp<std::size_t>(ceil_share(entity_frac, count), 1, count - 1);
    std::vector<char> held(count, 0);
    for (std::size_t i = keep; i < count; ++i) held[order[i]] = 1;
    return held;
  };
  std::vector<char> drug_held(g.num_drugs(), 0), gene_held(g.num_genes(), 0);
  if (holdout != Holdout::kGenes) drug_held = pick_held_out(g.num_drugs());
  if (holdout != Holdout::kDrugs) gene_held = pick_held_out(g.num_genes());

  // Each non-train edge is owned by its held-out drug, else its held-out gene.
  std::vector<std::vector<std::size_t>> owned_by_drug(g.num_drugs()),
      owned_by_gene(g.num_genes());
  std::vector<std::size_t> pool;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Edge& edge = g.edge(e);
    if (drug_held[edge.drug]) {
      owned_by_drug[edge.drug].push_back(e);
    } else if (gene_held[edge.gene]) {
      owned_by_gene[edge.gene].push_back(e);
    } else {
      pool.push_back(e);
    }
  }
  auto assign = [&](std::vector<std::size_t>& edges) {
    if (edges.empty()) return;
    rng.shuffle(std::span<std::size_t>(edges));
    std::size_t n_ctx = std::max<std::size_t>(1, floor_share(context_frac, edges.size()));
    n_ctx = std::min(n_ctx, edges.size());
    s.context.insert(s.context.end(), edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_ctx));
    s.test.insert(s.test.end(), edges.begin() + static_cast<std::ptrdiff_t>(n_ctx), edges.end());
    if (n_ctx == edges.size()) ++s.entities_without_test;
  };
  for (auto& edges : owned_by_drug) assign(edges);
  for (auto& edges : owned_by_gene) assign(edges);

  carve_validation(g, val_frac, rng, pool, s.validation);
  s.train = std::move(pool);
  finish(s, g);
  return s;
}

std::vector<std::string> check_split(const InteractionGraph& g,
                                     const DatasetSplit& split) {
  std::vector<std::string> problems;
  std::vector<int> owner(g.num_edges(), -1);
  const std::vector<std::size_t>* parts[] = {&split.train, &split.validation,
                                             &split.test, &split.context};
  const char* names[] = {"train", "validation", "test", "context"};
  for (int p = 0; p < 4; ++p) {
    for (std::size_t e : *parts[p]) {
      if (e >= g.num_edges()) {
        problems.push_back(std::string(names[p]) + " edge index out of range");
        continue;
      }
      if (owner[e] != -1) {
        problems.push_back("edge " + std::to_string(e) + " in both " +
                           names[owner[e]] + " and " + names[p]);
      }
      owner[e] = p;
    }
  }
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    if (owner[e] == -1) problems.push_back("edge " + std::to_string(e) + " unassigned");
  }
  if (!problems.empty()) return problems;

  std::vector<char> train_drug(g.num_drugs(), 0), train_gene(g.num_genes(), 0);
  for (std::size_t e : split.train) {
    train_drug[g.edge(e).drug] = 1;
    train_gene[g.edge(e).gene] = 1;
  }
  for (std::size_t e : split.test) {
    const Edge& edge = g.edge(e);
    if (split.mode == SplitMode::kTransductive) {
      if (!train_drug[edge.drug] || !train_gene[edge.gene]) {
        problems.push_back("test edge " + std::to_string(e) + " has an unseen endpoint");
      }
    } else {
      const bool drug_seen = train_drug[edge.drug] != 0;
      const bool gene_seen = train_gene[edge.gene] != 0;
      const bool leak = split.holdout == Holdout::kDrugs   ? drug_seen
                        : split.holdout == Holdout::kGenes ? gene_seen
                                                           : drug_seen && gene_seen;
      if (leak) {
        problems.push_back("test edge " + std::to_string(e) +
                           " held-out entity appears in train");
      }
    }
  }
  return problems;
}

std::vector<Interaction> select(const InteractionGraph& g,
                                const std::vector<std::size_t>& edge_indices) {
  std::vector<Interaction> out;
  out.reserve(edge_indices.size());
  for (std::size_t e : edge_indices) out.push_back(g.interaction(e));
  return out;
}

std::string split_to_json(const DatasetSplit& s) {
  json j;
  j["format"] = "cosmig-split";
  j["version"] = 1;
  j["mode"] = to_string(s.mode);
  j["holdout"] = to_string(s.holdout);
  j["seed"] = s.seed;
  j["train_frac"] = s.train_frac;
  j["val_frac"] = s.val_frac;
  j["entity_frac"] = s.entity_frac;
  j["context_frac"] = s.context_frac;
  j["edge_count"] = s.edge_count;
  j["graph_fingerprint"] = hex64(s.graph_fingerprint);
  j["entities_without_test"] = s.entities_without_test;
  j["moved_to_train"] = s.moved_to_train;
  j["train"] = s.train;
  j["validation"] = s.validation;
  j["test"] = s.test;
  j["context"] = s.context;
  return j.dump(1) + "\n";
}

DatasetSplit split_from_json(const std::string& text) {
  DatasetSplit s;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "cosmig-split") throw DataError("not a split manifest");
    if (j.at("version") != 1) throw DataError("unsupported split manifest version");
    s.mode = parse_split_mode(j.at("mode").get<std::string>());
    s.holdout = parse_holdout(j.at("holdout").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train_frac = j.at("train_frac").get<double>();
    s.val_frac = j.at("val_frac").get<double>();
    s.entity_frac = j.at("entity_frac").get<double>();
    s.context_frac = j.at("context_frac").get<double>();
    s.edge_count = j.at("edge_count").get<std::size_t>();
    s.graph_fingerprint =
        std::stoull(j.at("graph_fingerprint").get<std::string>(), nullptr, 16);
    s.entities_without_test = j.at("entities_without_test").get<std::size_t>();
    s.moved_to_train = j.at("moved_to_train").get<std::size_t>();
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.validation = j.at("validation").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
    s.context = j.at("context").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed split manifest: ") + e.what());
  }
  return s;
}

void save_split(const DatasetSplit& split, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << split_to_json(split);
}

DatasetSplit load_split(const std::string& path, const InteractionGraph& g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  DatasetSplit s = split_from_json(buf.str());
  if (s.edge_count != g.num_edges() || s.graph_fingerprint != g.fingerprint()) {
    throw DataError(path + ": split manifest was made for a different graph (edge count or fingerprint differs)");
  }
  if (auto problems = check_split(g, s); !problems.empty()) {
    throw DataError(path + ": invalid split: " + problems.front());
  }
  return s;
}

}  // namespace cosmig
