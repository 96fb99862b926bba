#include "options.hpp"

#include <filesystem>
#include <fstream>

#include "cosmig/error.hpp"
#include "json.hpp"

namespace cosmig::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kActivations{"relu", "leaky_relu", "sigmoid", "tanh"};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

}  // namespace

void add_data_options(CLI::App& cmd, RunOptions& o, bool required) {
  auto* data = cmd.add_option("--data", o.data, "interaction TSV (drug, gene, relation)");
  if (required) data->required();
  cmd.add_option("--min-degree", o.min_degree, "drop drugs and genes with fewer edges");
  cmd.add_option("--filter-mode", o.filter_mode, "degree filter: fixpoint or single-pass")
      ->check(CLI::IsMember({"fixpoint", "single-pass"}));
}

void add_split_options(CLI::App& cmd, RunOptions& o) {
  cmd.add_option("--split", o.split_path, "split manifest; split on the fly when absent");
  cmd.add_option("--mode", o.mode, "transductive or inductive")
      ->check(CLI::IsMember({"transductive", "inductive"}));
  cmd.add_option("--holdout", o.holdout, "inductive holdout: drugs, genes or both")
      ->check(CLI::IsMember({"drugs", "genes", "both"}));
  cmd.add_option("--train-frac", o.train_frac, "transductive per-drug train share");
  cmd.add_option("--val-frac", o.val_frac, "share of the train pool used for validation");
  cmd.add_option("--entity-frac", o.entity_frac, "inductive share of entities kept for training");
  cmd.add_option("--context-frac", o.context_frac, "inductive share of a held-out entity's edges given as context");
  cmd.add_option("--seed", o.seed, "random seed");
}

void add_extraction_options(CLI::App& cmd, RunOptions& o) {
  cmd.add_option("--method", o.method, "subgraph extraction: rwr or enclosing")
      ->check(CLI::IsMember({"rwr", "enclosing"}));
  cmd.add_option("--hop", o.hop, "hop limit (odd)");
  cmd.add_option("--restart", o.restart, "RWR continuation probability c in (0, 1)");
  cmd.add_option("--max-nodes", o.max_nodes, "nodes kept per target by RWR");
  cmd.add_option("--rwr-tol", o.rwr_tolerance, "RWR L1 convergence tolerance");
  cmd.add_option("--rwr-max-iter", o.rwr_max_iterations, "RWR iteration cap");
  cmd.add_flag("--keep-target-edge", o.keep_target_edge,
               "leave the target edge in its subgraph (leaks the label)");
}

void add_model_options(CLI::App& cmd, RunOptions& o) {
  cmd.add_option("--embed-dim", o.embed_dim, "embedding width");
  cmd.add_option("--depth", o.depth, "message-passing layers");
  cmd.add_option("--pooling", o.pooling, "concat_targets, sum or avg")
      ->check(CLI::IsMember({"concat_targets", "sum", "avg"}));
  cmd.add_option("--hidden-activation", o.hidden_activation)->check(CLI::IsMember(kActivations));
  cmd.add_option("--gate-activation", o.gate_activation)->check(CLI::IsMember(kActivations));
  cmd.add_option("--leaky-slope", o.leaky_slope);
  cmd.add_option("--edge-dropout", o.edge_dropout, "training edge dropout probability");
  cmd.add_flag("--per-layer-relations", o.per_layer_relations,
               "separate relation table per edge-update layer");
}

void add_train_options(CLI::App& cmd, RunOptions& o) {
  cmd.add_option("--epochs", o.epochs);
  cmd.add_option("--batch-size", o.batch_size);
  cmd.add_option("--lr", o.learning_rate, "Adam learning rate");
  cmd.add_option("--runs", o.runs, "independent training runs");
  cmd.add_option("--patience", o.patience, "early stop after this many epochs without improvement, 0 = off");
  cmd.add_option("--threads", o.threads, "worker threads for extraction and scoring");
}

void add_output_options(CLI::App& cmd, RunOptions& o) {
  cmd.add_option("--out", o.out, "directory for artifacts");
  cmd.add_option("--resolved-config", o.resolved_config,
                 "where to write the resolved configuration (JSON; an .ini copy goes next to it)");
  cmd.add_flag("-q,--quiet", o.quiet, "less console output");
}

IngestOptions ingest_options(const RunOptions& o) {
  IngestOptions opts;
  opts.min_degree = o.min_degree;
  opts.filter_mode = o.filter_mode == "single-pass" ? FilterMode::kSinglePass : FilterMode::kFixpoint;
  return opts;
}

ExtractionConfig extraction_config(const RunOptions& o) {
  ExtractionConfig cfg;
  cfg.method = parse_extraction_method(o.method);
  cfg.rwr.hop_limit = o.hop;
  cfg.rwr.restart_continuation = o.restart;
  cfg.rwr.max_nodes_per_seed = o.max_nodes;
  cfg.rwr.tolerance = o.rwr_tolerance;
  cfg.rwr.max_iterations = o.rwr_max_iterations;
  cfg.keep_target_edge = o.keep_target_edge;
  cfg.rwr.validate();
  return cfg;
}

ModelConfig model_config(const RunOptions& o, std::size_t num_relations) {
  ModelConfig cfg;
  cfg.embed_dim = o.embed_dim;
  cfg.depth = o.depth;
  cfg.num_relations = num_relations;
  cfg.num_labels = 2 * static_cast<std::size_t>(o.hop) + 2;
  cfg.pooling = parse_pooling(o.pooling);
  cfg.hidden_activation = parse_activation(o.hidden_activation);
  cfg.gate_activation = parse_activation(o.gate_activation);
  cfg.leaky_slope = o.leaky_slope;
  cfg.edge_dropout = o.edge_dropout;
  cfg.per_layer_relations = o.per_layer_relations;
  cfg.validate();
  return cfg;
}

TrainConfig train_config(const RunOptions& o) {
  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.learning_rate = o.learning_rate;
  cfg.seed = o.seed;
  cfg.runs = o.runs;
  cfg.patience = o.patience;
  cfg.threads = o.threads;
  cfg.validate();
  return cfg;
}

DatasetSplit load_or_make_split(const RunOptions& o, const InteractionGraph& g) {
  if (!o.split_path.empty()) return load_split(o.split_path, g);
  if (parse_split_mode(o.mode) == SplitMode::kTransductive) {
    return split_transductive(g, o.train_frac, o.val_frac, o.seed);
  }
  return split_inductive(g, o.entity_frac, o.context_frac, o.val_frac, o.seed,
                         parse_holdout(o.holdout));
}

std::string output_path(const RunOptions& o, const std::string& name) {
  const fs::path dir(o.out.empty() ? "." : o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return (dir / name).string();
}

void write_resolved_config(const CLI::App& cmd, const RunOptions& o,
                           const std::vector<std::string>& argv) {
  const std::string json_path = o.resolved_config.empty()
                                    ? output_path(o, cmd.get_name() + ".resolved_config.json")
                                    : o.resolved_config;
  if (!o.resolved_config.empty()) {
    const auto parent = fs::path(json_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
  }

  nlohmann::ordered_json j;
  j["command"] = cmd.get_name();
  j["argv"] = argv;
  j["seed"] = o.seed;
  auto options = nlohmann::ordered_json::object();
  for (const CLI::Option* opt : cmd.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "resolved-config") continue;
    std::vector<std::string> values = opt->count() ? opt->as<std::vector<std::string>>()
                                                   : std::vector<std::string>{};
    std::string value;
    if (opt->count() == 0) {
      value = opt->get_default_str();
    } else if (opt->get_type_size() == 0) {
      value = "true";
    } else {
      for (std::size_t i = 0; i < values.size(); ++i) value += (i ? "," : "") + values[i];
    }
    options[name] = value;
  }
  j["options"] = std::move(options);
  write_text(json_path, j.dump(2) + "\n");

  fs::path ini_path(json_path);
  ini_path.replace_extension(".ini");
  write_text(ini_path.string(), "[" + cmd.get_name() + "]\n" + cmd.config_to_str(true, false));
}

}  // namespace cosmig::cli
