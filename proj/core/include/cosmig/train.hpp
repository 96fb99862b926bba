#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cosmig/evaluate.hpp"
#include "cosmig/graph.hpp"
#include "cosmig/model.hpp"
#include "cosmig/param_store.hpp"
#include "cosmig/split.hpp"
#include "cosmig/subgraph.hpp"

namespace cosmig {

// Mean of (target - prediction)^2 over the batch; predictions are 1 x 1.
Tensor mse_loss(std::span<const Tensor> predictions,
                std::span<const std::uint32_t> targets);

struct TrainConfig {
  std::size_t epochs = 80;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::size_t runs = 5;
  // Stop after this many epochs without a validation improvement; 0 = never.
  std::size_t patience = 0;
  std::size_t threads = 1;

  void validate() const;  // throws Error
};

// Seed of run r: the base seed itself for r = 0, derived streams after that.
std::uint64_t run_seed(std::uint64_t base, std::size_t run);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_acc = 0.0;   // NaN without validation edges
  double val_loss = 0.0;  // validation MSE, NaN without validation edges
  double wall_seconds = 0.0;
};

struct TrainResult {
  ParamStore params;  // from the best validation epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  std::size_t skipped_train = 0;
  std::size_t skipped_validation = 0;
  std::uint64_t seed = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// The graph made of the split's training edges.
InteractionGraph training_graph(const InteractionGraph& g, const DatasetSplit& split);
// Graph used to answer test queries: every edge that is not a test edge.
InteractionGraph evaluation_context(const InteractionGraph& g, const DatasetSplit& split);

// Trains one model on split.train, selecting the epoch with the best accuracy
// on split.validation (lower validation MSE breaks ties). Subgraphs are
// extracted once from the training graph and reused across epochs. Throws NumericError naming epoch, batch and edge
// when the loss stops being finite.
TrainResult train(const InteractionGraph& g, const DatasetSplit& split,
                  const ModelConfig& model, const ExtractionConfig& extraction,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct SweepCell {
  std::size_t embed_dim = 0;
  double learning_rate = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> val_acc;
  MeanSd summary;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::size_t best = 0;  // highest mean validation accuracy
};

// Trains every (embed_dim, learning_rate) cell cfg.runs times with seeds
// run_seed(cfg.seed, r).
SweepResult sweep(const InteractionGraph& g, const DatasetSplit& split,
                  const ModelConfig& model, const ExtractionConfig& extraction,
                  const TrainConfig& cfg, std::span<const std::size_t> embed_dims,
                  std::span<const double> learning_rates,
                  const std::function<void(const SweepCell&)>& on_cell = {});

// Header: embed_dim,lr,val_acc_mean,val_acc_sd,seeds (seeds ';'-joined).
std::string sweep_csv(const SweepResult& result);

}  // namespace cosmig
