#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cosmig/graph.hpp"
#include "cosmig/model.hpp"
#include "cosmig/split.hpp"
#include "cosmig/subgraph.hpp"
#include "cosmig/train.hpp"

namespace cosmig::cli {

// Every knob a command can take. Each subcommand registers the subset it uses.
struct RunOptions {
  // Inputs and outputs.
  std::string data;
  std::string split_path;
  std::string checkpoint;
  std::string out = ".";
  std::string output;  // single-file output of split, extract, predict, synth
  std::string records;
  std::string resolved_config;
  bool quiet = false;

  // Ingestion.
  std::size_t min_degree = 5;
  std::string filter_mode = "fixpoint";

  // Splitting.
  std::string mode = "transductive";
  std::string holdout = "drugs";
  double train_frac = 0.8;
  double val_frac = 0.1;
  double entity_frac = 0.8;
  double context_frac = 0.2;

  // Extraction.
  std::string method = "rwr";
  std::uint32_t hop = 3;
  double restart = 0.8;
  std::size_t max_nodes = 100;
  double rwr_tolerance = 1e-10;
  std::size_t rwr_max_iterations = 10000;
  bool keep_target_edge = false;

  // Model.
  std::size_t embed_dim = 32;
  std::size_t depth = 4;
  std::string pooling = "concat_targets";
  std::string hidden_activation = "leaky_relu";
  std::string gate_activation = "sigmoid";
  double leaky_slope = 0.01;
  double edge_dropout = 0.1;
  bool per_layer_relations = false;

  // Training.
  std::size_t epochs = 80;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::size_t runs = 5;
  std::size_t patience = 0;
  std::size_t threads = 1;

  // Sweep.
  std::vector<std::size_t> embed_dims{16, 32, 64, 128};
  std::vector<double> learning_rates{1e-3, 1e-4, 1e-5};

  // Evaluation, prediction, external evaluation.
  std::string eval_set = "test";
  std::string drug;
  std::string gene;
  std::size_t top = 10;
  bool include_known = false;
  std::vector<double> thresholds{0.01, 0.05, 0.1};
  bool one_sided = false;

  // Gradient check.
  std::size_t grad_cases = 24;
  double grad_eps = 1e-5;
  std::size_t grad_embed_dim = 8;

  // Synthetic data.
  std::size_t synth_drugs = 60;
  std::size_t synth_genes = 80;
  std::size_t synth_gene_degree = 5;
};

void add_data_options(CLI::App& cmd, RunOptions& o, bool required = true);
void add_split_options(CLI::App& cmd, RunOptions& o);
void add_extraction_options(CLI::App& cmd, RunOptions& o);
void add_model_options(CLI::App& cmd, RunOptions& o);
void add_train_options(CLI::App& cmd, RunOptions& o);
// --out (artifact directory) and --resolved-config.
void add_output_options(CLI::App& cmd, RunOptions& o);

IngestOptions ingest_options(const RunOptions& o);
ExtractionConfig extraction_config(const RunOptions& o);
ModelConfig model_config(const RunOptions& o, std::size_t num_relations);
TrainConfig train_config(const RunOptions& o);
// Loads --split when given, otherwise splits with the split options.
DatasetSplit load_or_make_split(const RunOptions& o, const InteractionGraph& g);

// Path of an artifact inside --out; creates the directory.
std::string output_path(const RunOptions& o, const std::string& name);

// Writes the resolved configuration of `cmd` as JSON (command, argv, every
// option with its effective value) and as an INI file that `--config` accepts
// for a replay. Paths default to <out>/<command>.resolved_config.{json,ini}.
void write_resolved_config(const CLI::App& cmd, const RunOptions& o,
                           const std::vector<std::string>& argv);

}  // namespace cosmig::cli
