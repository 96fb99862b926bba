#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "cosmig/diagnostics.hpp"
#include "cosmig/error.hpp"
#include "cosmig/grad_check.hpp"
#include "cosmig/model.hpp"

namespace cosmig {
namespace {

using Mat = Eigen::MatrixXd;

Mat dense(const Tensor& t) {
  Mat m(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m(r, c) = t.at(r, c);
  }
  return m;
}

Mat leaky(const Mat& x, double slope) {
  return x.unaryExpr([slope](double v) { return v > 0 ? v : slope * v; });
}

Mat logistic(const Mat& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

// Straight dense-matrix statement of the scoring function with leaky-relu
// hidden units and a sigmoid gate, written independently of the tape code.
double reference_score(const Subgraph& sub, const ParamStore& p, const ModelConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(sub.nodes.size());
  const auto e = static_cast<Eigen::Index>(sub.edges.size());
  const auto R = static_cast<Eigen::Index>(cfg.num_relations);
  Mat label_onehot = Mat::Zero(n, cfg.num_labels);
  for (Eigen::Index i = 0; i < n; ++i) label_onehot(i, sub.nodes[i].label) = 1.0;
  Mat rel_onehot = Mat::Zero(e, R);
  Mat node_edge = Mat::Zero(n, e);
  for (Eigen::Index k = 0; k < e; ++k) {
    rel_onehot(k, sub.edges[k].relation - 1) = 1.0;
    node_edge(sub.edges[k].head, k) = 1.0;
    node_edge(sub.edges[k].tail, k) = 1.0;
  }
  const Mat relation_edge = rel_onehot.transpose();
  const double s = cfg.leaky_slope;

  Mat nodes = leaky(label_onehot * dense(p.get(param_names::kNodeEmbed)), s);
  const Mat edges0 = leaky(rel_onehot * dense(p.get(param_names::kEdgeEmbed)), s);
  Mat edges = edges0;
  for (std::size_t k = 1; k <= cfg.depth; ++k) {
    Mat joined(e, 3 * cfg.embed_dim);
    for (Eigen::Index j = 0; j < e; ++j) {
      joined.row(j) << nodes.row(sub.edges[j].head), nodes.row(sub.edges[j].tail), edges.row(j);
    }
    const Mat alpha = logistic(leaky(joined * dense(p.get(param_names::attention_hidden(k))), s) *
                               dense(p.get(param_names::attention_out(k))));
    const Mat gated = alpha.col(0).asDiagonal() * edges;
    nodes = leaky((node_edge * gated + nodes) * dense(p.get(param_names::node_weight(k))), s);
    if (k < cfg.depth) {
      const Mat agg = node_edge.transpose() * nodes +
                      relation_edge.transpose() * dense(p.get(param_names::relation(k, cfg)));
      const Mat mixed = leaky(edges + leaky(agg, s), s);
      edges = leaky(mixed * dense(p.get(param_names::edge_weight(k))) + edges0, s);
    }
  }
  Mat pooled;
  if (cfg.pooling == Pooling::kConcatTargets) {
    pooled.resize(1, 2 * cfg.embed_dim);
    pooled << nodes.row(sub.target_drug), nodes.row(sub.target_gene);
  } else if (cfg.pooling == Pooling::kSum) {
    pooled = nodes.colwise().sum();
  } else {
    pooled = nodes.colwise().mean();
  }
  const Mat out = leaky(pooled * dense(p.get(param_names::kHeadHidden)), s) *
                  dense(p.get(param_names::kHeadOut));
  return out(0, 0);
}

ModelConfig small_config(std::size_t relations, std::size_t depth, Pooling pooling = Pooling::kConcatTargets) {
  ModelConfig cfg;
  cfg.embed_dim = 6;
  cfg.depth = depth;
  cfg.num_relations = relations;
  cfg.num_labels = 8;
  cfg.pooling = pooling;
  return cfg;
}

TEST(Model, ParameterShapesAndGlorotRange) {
  const auto cfg = small_config(5, 3);
  Rng rng(1);
  const ParamStore p = init_params(cfg, rng);
  EXPECT_NO_THROW(check_params(p, cfg));
  EXPECT_EQ(p.get(param_names::kNodeEmbed).rows(), 8u);
  EXPECT_EQ(p.get(param_names::kEdgeEmbed).rows(), 5u);
  EXPECT_EQ(p.get(param_names::attention_hidden(1)).rows(), 18u);
  EXPECT_EQ(p.get(param_names::kHeadHidden).rows(), 12u);
  EXPECT_TRUE(p.contains(param_names::edge_weight(2)));
  EXPECT_FALSE(p.contains(param_names::edge_weight(3)));
  for (const auto& [name, t] : p) {
    if (name.find("relation") != std::string::npos) continue;
    const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    for (double v : t.values()) EXPECT_LE(std::abs(v), limit) << name;
  }

  ParamStore missing = p.clone();
  ParamStore wrong;
  for (const auto& [name, t] : p) {
    if (name != param_names::kHeadOut) wrong.add(name, t.clone());
  }
  wrong.add(param_names::kHeadOut, Tensor::zeros(3, 1));
  EXPECT_THROW(check_params(wrong, cfg), Error);
  missing.add("stray", Tensor::zeros(1, 1));
  EXPECT_THROW(check_params(missing, cfg), Error);
}

TEST(Model, PerLayerRelationTables) {
  auto cfg = small_config(3, 4);
  cfg.per_layer_relations = true;
  Rng rng(2);
  const ParamStore p = init_params(cfg, rng);
  EXPECT_NE(param_names::relation(1, cfg), param_names::relation(2, cfg));
  for (std::size_t k = 1; k < 4; ++k) EXPECT_TRUE(p.contains(param_names::relation(k, cfg)));
}

TEST(Model, ForwardMatchesDenseReference) {
  Rng rng(3);
  for (Pooling pooling : {Pooling::kConcatTargets, Pooling::kSum, Pooling::kAvg}) {
    for (std::size_t depth : {1u, 2u, 4u}) {
      const auto cfg = small_config(4, depth, pooling);
      const Subgraph sub = random_subgraph(rng, 9, 4);
      const ParamStore p = init_params(cfg, rng);
      const double got = forward(sub, p, cfg, Mode::kEval).item();
      EXPECT_NEAR(got, reference_score(sub, p, cfg), 1e-12 * std::max(1.0, std::abs(got)))
          << to_string(pooling) << " depth " << depth;
      EXPECT_DOUBLE_EQ(score(sub, p, cfg), got);
    }
  }
}

TEST(Model, NodePermutationLeavesScoreUnchanged) {
  Rng rng(4);
  const auto cfg = small_config(3, 4);
  for (int trial = 0; trial < 10; ++trial) {
    const Subgraph sub = random_subgraph(rng, 10, 3);
    const ParamStore p = init_params(cfg, rng);
    std::vector<std::uint32_t> order(sub.nodes.size());
    std::iota(order.begin(), order.end(), 0u);
    rng.shuffle(std::span<std::uint32_t>(order));
    EXPECT_NEAR(score(sub, p, cfg), score(sub.permuted(order), p, cfg), 1e-12);
  }
}

TEST(Model, EdgeDropoutMask) {
  Rng rng(5);
  const Subgraph sub = random_subgraph(rng, 12, 2);
  const auto all = sample_edge_mask(sub, 0.0, rng);
  EXPECT_EQ(std::count(all.begin(), all.end(), 1), static_cast<long>(sub.edges.size()));
  for (int trial = 0; trial < 200; ++trial) {
    const auto keep = sample_edge_mask(sub, 0.99, rng);
    bool drug = false, gene = false;
    for (std::size_t k = 0; k < keep.size(); ++k) {
      if (!keep[k]) continue;
      drug |= sub.edges[k].head == sub.target_drug;
      gene |= sub.edges[k].tail == sub.target_gene;
    }
    EXPECT_TRUE(drug && gene);
  }
  auto cfg = small_config(2, 2);
  const ParamStore p = init_params(cfg, rng);
  EXPECT_THROW(forward(sub, p, cfg, Mode::kTrain, nullptr), Error);
  cfg.edge_dropout = 0.0;
  EXPECT_DOUBLE_EQ(forward(sub, p, cfg, Mode::kTrain, nullptr).item(), score(sub, p, cfg));
}

TEST(Model, PredictRelationRoundsAndClamps) {
  EXPECT_EQ(predict_relation(2.5, 4), 3u);
  EXPECT_EQ(predict_relation(2.49, 4), 2u);
  EXPECT_EQ(predict_relation(1.5, 4), 2u);
  EXPECT_EQ(predict_relation(-7.0, 4), 1u);
  EXPECT_EQ(predict_relation(0.2, 4), 1u);
  EXPECT_EQ(predict_relation(9.7, 4), 4u);
  EXPECT_THROW(predict_relation(std::nan(""), 4), NumericError);
}

TEST(Model, ConfigValidation) {
  auto cfg = small_config(2, 2);
  EXPECT_NO_THROW(cfg.validate());
  cfg.edge_dropout = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small_config(0, 2);
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_EQ(parse_pooling("mean"), Pooling::kAvg);
  EXPECT_THROW(parse_pooling("max"), Error);
}

TEST(Model, SmallGradientSuite) {
  GradSuiteOptions opts;
  opts.cases = 4;
  opts.seed = 9;
  for (const auto& c : run_grad_suite(opts)) {
    EXPECT_LT(c.result.max_rel_error, 1e-4) << c.result.worst_param;
    EXPECT_GT(c.result.coordinates, 0u);
  }
}

}  // namespace
}  // namespace cosmig
