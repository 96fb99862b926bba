#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cosmig/ops.hpp"
#include "cosmig/param_store.hpp"
#include "cosmig/rng.hpp"
#include "cosmig/subgraph.hpp"

namespace cosmig {

enum class Pooling { kConcatTargets, kSum, kAvg };

const char* to_string(Pooling pooling);
Pooling parse_pooling(const std::string& s);

struct ModelConfig {
  std::size_t embed_dim = 32;
  std::size_t depth = 4;
  std::size_t num_relations = 0;
  std::size_t num_labels = 8;
  Pooling pooling = Pooling::kConcatTargets;
  ActivationKind hidden_activation = ActivationKind::kLeakyRelu;
  ActivationKind gate_activation = ActivationKind::kSigmoid;
  double leaky_slope = 0.01;
  double edge_dropout = 0.1;
  std::size_t attention_dim = 0;  // 0: embed_dim
  std::size_t head_dim = 0;       // 0: embed_dim
  // One relation table per edge-update layer instead of a shared one.
  bool per_layer_relations = false;

  std::size_t attention_width() const { return attention_dim ? attention_dim : embed_dim; }
  std::size_t head_width() const { return head_dim ? head_dim : embed_dim; }
  std::size_t pooled_width() const {
    return pooling == Pooling::kConcatTargets ? 2 * embed_dim : embed_dim;
  }

  void validate() const;  // throws Error
  bool operator==(const ModelConfig&) const = default;
};

// Parameter names used by the model.
namespace param_names {
inline constexpr const char* kNodeEmbed = "embed.node";
inline constexpr const char* kEdgeEmbed = "embed.edge";
inline constexpr const char* kRelation = "relation";
inline constexpr const char* kHeadHidden = "head.hidden";
inline constexpr const char* kHeadOut = "head.out";
std::string attention_hidden(std::size_t layer);
std::string attention_out(std::size_t layer);
std::string node_weight(std::size_t layer);
std::string edge_weight(std::size_t layer);
std::string relation(std::size_t layer, const ModelConfig& cfg);
}  // namespace param_names

// Fresh parameters: Glorot-uniform matrices, relation table ~ N(0, 0.1^2).
ParamStore init_params(const ModelConfig& cfg, Rng& rng);

// Throws Error when `params` lacks a parameter or has a wrong shape.
void check_params(const ParamStore& params, const ModelConfig& cfg);

struct Embeddings {
  Tensor nodes;  // n x f
  Tensor edges;  // e x f
};

Embeddings init_embeddings(const Subgraph& sub, const ParamStore& params,
                           const ModelConfig& cfg);

// Attention weight in (0, 1) per edge (e x 1), for layer k >= 1.
Tensor edge_attention(const Tensor& nodes, const Tensor& edges,
                      const Subgraph& sub, const ParamStore& params,
                      const ModelConfig& cfg, std::size_t k);

Tensor node_update(const Tensor& nodes, const Tensor& edges,
                   const Tensor& attention, const Incidence& inc,
                   const ParamStore& params, const ModelConfig& cfg,
                   std::size_t k);

// Only defined for k <= depth - 1.
Tensor edge_update(const Tensor& edges, const Tensor& nodes,
                   const Incidence& inc, const ParamStore& params,
                   const ModelConfig& cfg, std::size_t k,
                   const Tensor& initial_edges);

enum class Mode { kTrain, kEval };

// Edge keep-mask for dropout: each edge is dropped with probability p unless
// that would leave a target without edges.
std::vector<char> sample_edge_mask(const Subgraph& sub, double p, Rng& rng);

// Predicted relation score r-hat as a 1 x 1 tensor. Train mode applies edge
// dropout drawn from `rng` (required when edge_dropout > 0).
Tensor forward(const Subgraph& sub, const ParamStore& params,
               const ModelConfig& cfg, Mode mode = Mode::kEval,
               Rng* rng = nullptr);

// Eval-mode score without recording a graph.
double score(const Subgraph& sub, const ParamStore& params,
             const ModelConfig& cfg);

// Rounds half away from zero and clamps to [1, num_relations].
std::uint32_t predict_relation(double score, std::size_t num_relations);

}  // namespace cosmig
