#include "cosmig/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "cosmig/error.hpp"
#include "cosmig/optim.hpp"
#include "cosmig/rng.hpp"

namespace cosmig {

namespace {

enum Stream : std::uint64_t { kInit = 1, kShuffle = 2, kDropout = 3 };

void check_compatible(const InteractionGraph& g, const ModelConfig& model,
                      const ExtractionConfig& extraction) {
  model.validate();
  if (model.num_relations != g.num_relations()) {
    throw Error(fmt::format("model has {} relations but the graph has {}",
                            model.num_relations, g.num_relations()));
  }
  const std::size_t labels = 2 * static_cast<std::size_t>(extraction.rwr.hop_limit) + 2;
  if (model.num_labels != labels) {
    throw Error(fmt::format("model expects {} node labels but hop limit {} produces {}",
                            model.num_labels, extraction.rwr.hop_limit, labels));
  }
}

}  // namespace

Tensor mse_loss(std::span<const Tensor> predictions,
                std::span<const std::uint32_t> targets) {
  if (predictions.empty()) throw Error("mse_loss: empty batch");
  if (predictions.size() != targets.size()) {
    throw DimensionError(fmt::format("mse_loss: {} predictions for {} targets",
                                     predictions.size(), targets.size()));
  }
  std::vector<double> target_values(targets.begin(), targets.end());
  const Tensor stacked = concat_rows(predictions);
  if (stacked.cols() != 1) throw DimensionError("mse_loss: predictions must be 1 x 1");
  const Tensor diff = sub(stacked, Tensor(targets.size(), 1, std::move(target_values)));
  return mean(mul(diff, diff));
}

void TrainConfig::validate() const {
  if (epochs == 0) throw Error("epochs must be at least 1");
  if (batch_size == 0) throw Error("batch_size must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error("learning_rate must be positive");
  }
  if (runs == 0) throw Error("runs must be at least 1");
}

std::uint64_t run_seed(std::uint64_t base, std::size_t run) {
  return run == 0 ? base : Rng::derive(base, {0x72756eULL, run});
}

InteractionGraph training_graph(const InteractionGraph& g, const DatasetSplit& split) {
  const auto edges = select(g, split.train);
  return InteractionGraph::from_interactions(edges, g.num_relations());
}

InteractionGraph evaluation_context(const InteractionGraph& g, const DatasetSplit& split) {
  std::vector<std::size_t> visible;
  visible.reserve(split.train.size() + split.validation.size() + split.context.size());
  for (const auto* part : {&split.train, &split.validation, &split.context}) {
    visible.insert(visible.end(), part->begin(), part->end());
  }
  std::sort(visible.begin(), visible.end());
  return InteractionGraph::from_interactions(select(g, visible), g.num_relations());
}

TrainResult train(const InteractionGraph& g, const DatasetSplit& split,
                  const ModelConfig& model, const ExtractionConfig& extraction,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  check_compatible(g, model, extraction);

  const InteractionGraph train_graph = training_graph(g, split);
  const auto train_pairs = select(g, split.train);
  const auto val_pairs = select(g, split.validation);
  const auto train_prepared = prepare_pairs(train_graph, train_pairs, extraction, cfg.threads);
  const auto val_prepared = prepare_pairs(train_graph, val_pairs, extraction, cfg.threads);
  const TrainingSummary seen = TrainingSummary::of(train_graph);

  TrainResult result;
  result.seed = cfg.seed;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < train_prepared.size(); ++i) {
    if (train_prepared[i].subgraph) {
      order.push_back(i);
    } else {
      ++result.skipped_train;
    }
  }
  if (order.empty()) throw Error("no training edge has a usable subgraph");
  for (const auto& p : val_prepared) result.skipped_validation += p.subgraph ? 0 : 1;
  const bool has_validation = result.skipped_validation < val_prepared.size();

  Rng init_rng(Rng::derive(cfg.seed, {kInit}));
  ParamStore params = init_params(model, init_rng);
  OptimizerState optimizer;
  optimizer.learning_rate = cfg.learning_rate;

  result.best_val_acc = -std::numeric_limits<double>::infinity();
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::derive(cfg.seed, {kShuffle, epoch}));
    Rng dropout_rng(Rng::derive(cfg.seed, {kDropout, epoch}));
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    double squared_error = 0.0;
    for (std::size_t begin = 0, batch = 1; begin < order.size(); begin += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const double weight = 1.0 / static_cast<double>(end - begin);
      params.zero_grad();
      for (std::size_t i = begin; i < end; ++i) {
        const PreparedPair& item = train_prepared[order[i]];
        try {
          const Tensor prediction = forward(*item.subgraph, params, model, Mode::kTrain, &dropout_rng);
          const std::uint32_t target = item.pair.relation;
          const Tensor loss = mse_loss(std::span(&prediction, 1), std::span(&target, 1));
          squared_error += loss.item();
          scale(loss, weight).backward();
        } catch (const NumericError& e) {
          throw NumericError(fmt::format("non-finite value at epoch {}, batch {}, edge ({}, {}): {}",
                                         epoch, batch, item.pair.drug, item.pair.gene, e.what()));
        }
      }
      adam_step(params, optimizer);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = squared_error / static_cast<double>(order.size());
    record.val_acc = std::numeric_limits<double>::quiet_NaN();
    record.val_loss = std::numeric_limits<double>::quiet_NaN();
    if (has_validation) {
      const auto scores = score_pairs(val_prepared, params, model, cfg.threads);
      record.val_acc = tally(val_pairs, scores, model.num_relations, seen).overall.accuracy();
      double total = 0.0;
      std::size_t counted = 0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!scores[i]) continue;
        const double diff = *scores[i] - static_cast<double>(val_pairs[i].relation);
        total += diff * diff;
        ++counted;
      }
      record.val_loss = total / static_cast<double>(counted);
    }
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);

    if (!has_validation) {
      result.params = params.clone();
      result.best_epoch = epoch;
      result.best_val_acc = record.val_acc;
      continue;
    }
    if (record.val_acc > result.best_val_acc ||
        (record.val_acc == result.best_val_acc && record.val_loss < best_val_loss)) {
      result.best_val_acc = record.val_acc;
      best_val_loss = record.val_loss;
      result.best_epoch = epoch;
      result.params = params.clone();
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

SweepResult sweep(const InteractionGraph& g, const DatasetSplit& split,
                  const ModelConfig& model, const ExtractionConfig& extraction,
                  const TrainConfig& cfg, std::span<const std::size_t> embed_dims,
                  std::span<const double> learning_rates,
                  const std::function<void(const SweepCell&)>& on_cell) {
  if (embed_dims.empty() || learning_rates.empty()) throw Error("sweep grid is empty");
  SweepResult result;
  for (std::size_t dim : embed_dims) {
    for (double lr : learning_rates) {
      SweepCell cell;
      cell.embed_dim = dim;
      cell.learning_rate = lr;
      ModelConfig cell_model = model;
      cell_model.embed_dim = dim;
      TrainConfig cell_cfg = cfg;
      cell_cfg.learning_rate = lr;
      for (std::size_t r = 0; r < cfg.runs; ++r) {
        cell_cfg.seed = run_seed(cfg.seed, r);
        cell.seeds.push_back(cell_cfg.seed);
        cell.val_acc.push_back(train(g, split, cell_model, extraction, cell_cfg).best_val_acc);
      }
      cell.summary = mean_sd(cell.val_acc);
      if (on_cell) on_cell(cell);
      result.cells.push_back(std::move(cell));
    }
  }
  for (std::size_t i = 1; i < result.cells.size(); ++i) {
    if (result.cells[i].summary.mean > result.cells[result.best].summary.mean) result.best = i;
  }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "embed_dim,lr,val_acc_mean,val_acc_sd,seeds\n";
  for (const SweepCell& cell : result.cells) {
    std::string seeds;
    for (std::size_t i = 0; i < cell.seeds.size(); ++i) {
      seeds += (i ? ";" : "") + std::to_string(cell.seeds[i]);
    }
    out << fmt::format("{},{:g},{:.6f},{:.6f},{}\n", cell.embed_dim, cell.learning_rate,
                       cell.summary.mean, cell.summary.sd, seeds);
  }
  return out.str();
}

}  // namespace cosmig
