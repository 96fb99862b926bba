#include "cosmig/model.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "cosmig/error.hpp"

namespace cosmig {

namespace {

struct ParamSpec {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  bool normal_init;
};

std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
  const std::size_t f = cfg.embed_dim;
  std::vector<ParamSpec> specs{
      {param_names::kNodeEmbed, cfg.num_labels, f, false},
      {param_names::kEdgeEmbed, cfg.num_relations, f, false},
  };
  for (std::size_t k = 1; k <= cfg.depth; ++k) {
    specs.push_back({param_names::attention_hidden(k), 3 * f, cfg.attention_width(), false});
    specs.push_back({param_names::attention_out(k), cfg.attention_width(), 1, false});
    specs.push_back({param_names::node_weight(k), f, f, false});
    if (k < cfg.depth) {
      specs.push_back({param_names::edge_weight(k), f, f, false});
      if (cfg.per_layer_relations) {
        specs.push_back({param_names::relation(k, cfg), cfg.num_relations, f, true});
      }
    }
  }
  if (!cfg.per_layer_relations && cfg.depth > 1) {
    specs.push_back({param_names::kRelation, cfg.num_relations, f, true});
  }
  specs.push_back({param_names::kHeadHidden, cfg.pooled_width(), cfg.head_width(), false});
  specs.push_back({param_names::kHeadOut, cfg.head_width(), 1, false});
  return specs;
}

Tensor hidden(const Tensor& x, const ModelConfig& cfg) {
  return activate(x, cfg.hidden_activation, cfg.leaky_slope);
}

}  // namespace

const char* to_string(Pooling pooling) {
  switch (pooling) {
    case Pooling::kConcatTargets: return "concat_targets";
    case Pooling::kSum: return "sum";
    case Pooling::kAvg: return "avg";
  }
  return "?";
}

Pooling parse_pooling(const std::string& s) {
  if (s == "concat_targets" || s == "concat") return Pooling::kConcatTargets;
  if (s == "sum") return Pooling::kSum;
  if (s == "avg" || s == "mean") return Pooling::kAvg;
  throw Error("unknown pooling '" + s + "' (expected concat_targets, sum or avg)");
}

void ModelConfig::validate() const {
  if (embed_dim == 0) throw Error("embed_dim must be positive");
  if (depth == 0) throw Error("depth must be at least 1");
  if (num_relations == 0) throw Error("num_relations must be positive");
  if (num_labels < 2) throw Error("num_labels must be at least 2");
  if (!(edge_dropout >= 0.0 && edge_dropout < 1.0)) {
    throw Error("edge_dropout must be in [0, 1)");
  }
  if (!std::isfinite(leaky_slope)) throw Error("leaky_slope must be finite");
}

namespace param_names {
std::string attention_hidden(std::size_t layer) {
  return "layer" + std::to_string(layer) + ".attn_hidden";
}
std::string attention_out(std::size_t layer) {
  return "layer" + std::to_string(layer) + ".attn_out";
}
std::string node_weight(std::size_t layer) {
  return "layer" + std::to_string(layer) + ".node";
}
std::string edge_weight(std::size_t layer) {
  return "layer" + std::to_string(layer) + ".edge";
}
std::string relation(std::size_t layer, const ModelConfig& cfg) {
  if (!cfg.per_layer_relations) return kRelation;
  return "layer" + std::to_string(layer) + ".relation";
}
}  // namespace param_names

ParamStore init_params(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ParamStore params;
  for (const ParamSpec& spec : param_specs(cfg)) {
    std::vector<double> values(spec.rows * spec.cols);
    if (spec.normal_init) {
      for (double& v : values) v = 0.1 * rng.normal();
    } else {
      const double limit = std::sqrt(6.0 / static_cast<double>(spec.rows + spec.cols));
      for (double& v : values) v = rng.uniform(-limit, limit);
    }
    params.add(spec.name, Tensor(spec.rows, spec.cols, std::move(values)));
  }
  return params;
}

void check_params(const ParamStore& params, const ModelConfig& cfg) {
  const auto specs = param_specs(cfg);
  for (const ParamSpec& spec : specs) {
    if (!params.contains(spec.name)) throw Error("missing parameter '" + spec.name + "'");
    const Tensor& t = params.get(spec.name);
    if (t.rows() != spec.rows || t.cols() != spec.cols) {
      throw Error("parameter '" + spec.name + "' has shape " + t.shape_string() +
                  ", expected " + std::to_string(spec.rows) + "x" +
                  std::to_string(spec.cols));
    }
  }
  if (params.size() != specs.size()) throw Error("parameter set has unexpected entries");
}

Embeddings init_embeddings(const Subgraph& sub, const ParamStore& params,
                           const ModelConfig& cfg) {
  const Tensor labels = one_hot(sub.labels(), cfg.num_labels);
  const Tensor relations = one_hot(sub.relation_rows(), cfg.num_relations);
  return {hidden(matmul(labels, params.get(param_names::kNodeEmbed)), cfg),
          hidden(matmul(relations, params.get(param_names::kEdgeEmbed)), cfg)};
}

Tensor edge_attention(const Tensor& nodes, const Tensor& edges,
                      const Subgraph& sub, const ParamStore& params,
                      const ModelConfig& cfg, std::size_t k) {
  const auto heads = sub.heads();
  const auto tails = sub.tails();
  const std::array<Tensor, 3> parts{gather_rows(nodes, heads), gather_rows(nodes, tails), edges};
  const Tensor joined = concat_cols(parts);
  const Tensor inner = hidden(matmul(joined, params.get(param_names::attention_hidden(k))), cfg);
  return activate(matmul(inner, params.get(param_names::attention_out(k))),
                  cfg.gate_activation, cfg.leaky_slope);
}

Tensor node_update(const Tensor& nodes, const Tensor& edges,
                   const Tensor& attention, const Incidence& inc,
                   const ParamStore& params, const ModelConfig& cfg,
                   std::size_t k) {
  const Tensor gated = scale_rows(edges, attention);
  const Tensor aggregated = spmm(inc.node_edge, gated);
  return hidden(matmul(add(aggregated, nodes), params.get(param_names::node_weight(k))), cfg);
}

Tensor edge_update(const Tensor& edges, const Tensor& nodes,
                   const Incidence& inc, const ParamStore& params,
                   const ModelConfig& cfg, std::size_t k,
                   const Tensor& initial_edges) {
  if (k == 0 || k >= cfg.depth) {
    throw Error("edge_update: layer " + std::to_string(k) + " out of range");
  }
  const Tensor& relation_table = params.get(param_names::relation(k, cfg));
  const Tensor aggregated = add(spmm_transposed(inc.node_edge, nodes),
                                spmm_transposed(inc.relation_edge, relation_table));
  const Tensor mixed = hidden(add(edges, hidden(aggregated, cfg)), cfg);
  return hidden(add(matmul(mixed, params.get(param_names::edge_weight(k))), initial_edges),
                cfg);
}

std::vector<char> sample_edge_mask(const Subgraph& sub, double p, Rng& rng) {
  std::vector<char> keep(sub.edges.size(), 1);
  std::size_t drug_edges = 0, gene_edges = 0;
  for (const auto& e : sub.edges) {
    drug_edges += e.head == sub.target_drug;
    gene_edges += e.tail == sub.target_gene;
  }
  for (std::size_t k = 0; k < sub.edges.size(); ++k) {
    if (!rng.bernoulli(p)) continue;
    const auto& e = sub.edges[k];
    const bool at_drug = e.head == sub.target_drug;
    const bool at_gene = e.tail == sub.target_gene;
    if ((at_drug && drug_edges == 1) || (at_gene && gene_edges == 1)) continue;
    keep[k] = 0;
    drug_edges -= at_drug;
    gene_edges -= at_gene;
  }
  return keep;
}

Tensor forward(const Subgraph& sub, const ParamStore& params,
               const ModelConfig& cfg, Mode mode, Rng* rng) {
  if (sub.edges.empty()) throw ExtractionError(ExtractionError::Kind::kEmptyContext, "empty context");
  const Subgraph* graph = &sub;
  Subgraph dropped;
  if (mode == Mode::kTrain && cfg.edge_dropout > 0.0) {
    if (rng == nullptr) throw Error("forward: train mode with dropout needs an rng");
    dropped = sub.with_edges(sample_edge_mask(sub, cfg.edge_dropout, *rng));
    graph = &dropped;
  }
  const Incidence inc = build_incidence(*graph);
  const Embeddings initial = init_embeddings(*graph, params, cfg);

  Tensor nodes = initial.nodes;
  Tensor edges = initial.edges;
  for (std::size_t k = 1; k <= cfg.depth; ++k) {
    const Tensor attention = edge_attention(nodes, edges, *graph, params, cfg, k);
    nodes = node_update(nodes, edges, attention, inc, params, cfg, k);
    if (k < cfg.depth) edges = edge_update(edges, nodes, inc, params, cfg, k, initial.edges);
  }

  Tensor pooled;
  switch (cfg.pooling) {
    case Pooling::kConcatTargets: {
      const std::array<std::uint32_t, 1> drug{graph->target_drug};
      const std::array<std::uint32_t, 1> gene{graph->target_gene};
      const std::array<Tensor, 2> parts{gather_rows(nodes, drug), gather_rows(nodes, gene)};
      pooled = concat_cols(parts);
      break;
    }
    case Pooling::kSum: pooled = sum_rows(nodes); break;
    case Pooling::kAvg: pooled = mean_rows(nodes); break;
  }
  const Tensor head = hidden(matmul(pooled, params.get(param_names::kHeadHidden)), cfg);
  return matmul(head, params.get(param_names::kHeadOut));
}

double score(const Subgraph& sub, const ParamStore& params, const ModelConfig& cfg) {
  NoGradGuard guard;
  return forward(sub, params, cfg, Mode::kEval).item();
}

std::uint32_t predict_relation(double score, std::size_t num_relations) {
  if (!std::isfinite(score)) throw NumericError("predict_relation: score is not finite");
  if (num_relations == 0) throw Error("predict_relation: no relations");
  const double rounded = std::round(score);
  if (rounded < 1.0) return 1;
  if (rounded > static_cast<double>(num_relations)) {
    return static_cast<std::uint32_t>(num_relations);
  }
  return static_cast<std::uint32_t>(rounded);
}

}  // namespace cosmig
