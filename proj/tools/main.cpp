#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "cosmig/checkpoint.hpp"
#include "cosmig/diagnostics.hpp"
#include "cosmig/error.hpp"
#include "cosmig/evaluate.hpp"
#include "cosmig/planted.hpp"
#include "cosmig/split.hpp"
#include "cosmig/subgraph.hpp"
#include "cosmig/train.hpp"
#include "cosmig/ttest.hpp"
#include "json.hpp"
#include "options.hpp"

namespace {

using namespace cosmig;
using cli::RunOptions;

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path + "'");
}

// Console notes go to stderr so stdout stays machine-readable.
template <typename... Args>
void note(const RunOptions& o, fmt::format_string<Args...> format, Args&&... args) {
  if (!o.quiet) fmt::print(stderr, format, std::forward<Args>(args)...);
}

IngestResult load_data(const RunOptions& o) {
  IngestResult data = ingest(o.data, cli::ingest_options(o));
  note(o, "{}: {} drugs, {} genes, {} edges, {} relations\n", o.data, data.graph.num_drugs(),
       data.graph.num_genes(), data.graph.num_edges(), data.vocab.size());
  return data;
}

int run_ingest(const RunOptions& o) {
  const IngestResult data = load_data(o);
  const auto& g = data.graph;
  nlohmann::ordered_json j;
  j["rows"] = data.stats.rows;
  j["header"] = data.stats.header_detected;
  j["duplicates"] = data.stats.duplicates;
  j["edges_removed_by_degree"] = data.stats.edges_removed_by_degree;
  j["drugs"] = g.num_drugs();
  j["genes"] = g.num_genes();
  j["edges"] = g.num_edges();
  auto relations = nlohmann::ordered_json::object();
  std::vector<std::size_t> counts(g.num_relations(), 0);
  for (const Edge& e : g.edges()) ++counts[e.relation - 1];
  for (std::uint32_t r = 1; r <= data.vocab.size(); ++r) relations[data.vocab.name(r)] = counts[r - 1];
  j["relations"] = std::move(relations);
  j["fingerprint"] = fmt::format("{:016x}", g.fingerprint());
  const auto problems = g.audit();
  j["audit"] = problems;
  std::cout << j.dump(2) << "\n";
  write_file(cli::output_path(o, "ingest.json"), j.dump(2) + "\n");
  return problems.empty() ? 0 : kExitData;
}

int run_split(const RunOptions& o) {
  const IngestResult data = load_data(o);
  const DatasetSplit split = cli::load_or_make_split(o, data.graph);
  const auto problems = check_split(data.graph, split);
  if (!problems.empty()) throw Error("split is inconsistent: " + problems.front());
  const std::string path = o.output.empty() ? cli::output_path(o, "split.json") : o.output;
  save_split(split, path);
  fmt::print("{} split: {} train, {} validation, {} test, {} context -> {}\n", to_string(split.mode),
             split.train.size(), split.validation.size(), split.test.size(), split.context.size(),
             path);
  return 0;
}

int run_extract(const RunOptions& o) {
  const IngestResult data = load_data(o);
  const ExtractionConfig ext = cli::extraction_config(o);
  InteractionGraph context = data.graph;
  if (!o.split_path.empty()) context = training_graph(data.graph, load_split(o.split_path, data.graph));
  const Subgraph sub = extract(context, o.drug, o.gene, ext);
  const std::string text = subgraph_to_json(sub, context, &data.vocab);
  if (o.output.empty()) {
    std::cout << text;
  } else {
    write_file(o.output, text);
    note(o, "{} nodes, {} edges -> {}\n", sub.nodes.size(), sub.edges.size(), o.output);
  }
  return 0;
}

std::string format_number(double v) {
  return std::isnan(v) ? std::string("nan") : fmt::format("{:.17g}", v);
}

int run_train(const RunOptions& o) {
  const IngestResult data = load_data(o);
  const InteractionGraph& g = data.graph;
  const DatasetSplit split = cli::load_or_make_split(o, g);
  save_split(split, cli::output_path(o, "split.json"));
  const ExtractionConfig ext = cli::extraction_config(o);
  const ModelConfig model = cli::model_config(o, g.num_relations());
  const TrainConfig base = cli::train_config(o);

  const InteractionGraph test_context = evaluation_context(g, split);
  const TrainingSummary seen = TrainingSummary::of(training_graph(g, split));
  const auto test_pairs = select(g, split.test);
  note(o, "split: {} train, {} validation, {} test\n", split.train.size(), split.validation.size(),
       split.test.size());

  std::ofstream epochs_csv(cli::output_path(o, "epochs.csv"), std::ios::binary);
  if (!epochs_csv) throw DataError("cannot write epochs.csv in '" + o.out + "'");
  epochs_csv << "run,epoch,train_loss,val_acc,val_loss,wall_seconds\n";

  auto runs_json = nlohmann::ordered_json::array();
  std::vector<double> test_acc;
  std::vector<EvalReport> reports;
  std::size_t best_run = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  Checkpoint best{model, ext, data.vocab, {}};

  for (std::size_t r = 0; r < base.runs; ++r) {
    TrainConfig cfg = base;
    cfg.seed = run_seed(base.seed, r);
    TrainResult result = train(g, split, model, ext, cfg, [&](const EpochRecord& rec) {
      epochs_csv << fmt::format("{},{},{},{},{},{:.3f}\n", r, rec.epoch,
                                format_number(rec.train_loss), format_number(rec.val_acc),
                                format_number(rec.val_loss), rec.wall_seconds);
      epochs_csv.flush();
      note(o, "run {} epoch {:>3}: loss {:.4f}  val acc {:.4f}  ({:.1f}s)\n", r, rec.epoch,
           rec.train_loss, rec.val_acc, rec.wall_seconds);
    });
    // Evaluate with exactly the precision the checkpoint keeps.
    round_to_stored_precision(result.params);
    EvalReport report = evaluate(result.params, model, ext, test_context, test_pairs, seen, o.threads);
    test_acc.push_back(report.overall.accuracy());
    note(o, "run {}: best epoch {}, val acc {:.4f}, test acc {:.4f}\n", r, result.best_epoch,
         result.best_val_acc, report.overall.accuracy());
    runs_json.push_back({{"run", r},
                         {"seed", cfg.seed},
                         {"best_epoch", result.best_epoch},
                         {"best_val_acc", result.best_val_acc},
                         {"test_acc", report.overall.accuracy()},
                         {"skipped_train", result.skipped_train},
                         {"skipped_validation", result.skipped_validation},
                         {"skipped_test", report.skipped}});
    if (r == 0 || result.best_val_acc > best_val) {
      best_val = result.best_val_acc;
      best_run = r;
      best.params = std::move(result.params);
    }
    reports.push_back(std::move(report));
  }

  const std::string checkpoint_path =
      o.checkpoint.empty() ? cli::output_path(o, "model.csmg") : o.checkpoint;
  save_checkpoint(best, checkpoint_path);

  const MeanSd summary = mean_sd(test_acc);
  nlohmann::ordered_json j;
  j["split"] = {{"mode", to_string(split.mode)},
                {"train", split.train.size()},
                {"validation", split.validation.size()},
                {"test", split.test.size()},
                {"context", split.context.size()}};
  j["runs"] = std::move(runs_json);
  j["test_acc_mean"] = summary.mean;
  j["test_acc_sd"] = summary.sd;
  j["best_run"] = best_run;
  j["checkpoint"] = checkpoint_path;
  j["best_run_report"] = nlohmann::ordered_json::parse(report_to_json(reports[best_run], &data.vocab));
  write_file(cli::output_path(o, "report.json"), j.dump(2) + "\n");

  std::string table = report_to_table(reports[best_run], &data.vocab);
  table += fmt::format("test accuracy over {} run(s): {:.4f} +- {:.4f}\n", summary.n, summary.mean,
                       summary.sd);
  write_file(cli::output_path(o, "report.txt"), table);
  std::cout << table;
  return 0;
}

int run_evaluate(const RunOptions& o) {
  const IngestResult data = load_data(o);
  const Checkpoint cp = load_checkpoint(o.checkpoint);
  check_compatible(cp, data.graph, data.vocab);
  const DatasetSplit split = cli::load_or_make_split(o, data.graph);
  const InteractionGraph train_graph = training_graph(data.graph, split);
  const bool on_test = o.eval_set == "test";
  const InteractionGraph context = on_test ? evaluation_context(data.graph, split) : train_graph;
  const auto pairs = select(data.graph, on_test ? split.test : split.validation);
  const EvalReport report = evaluate(cp.params, cp.model, cp.extraction, context, pairs,
                                     TrainingSummary::of(train_graph), o.threads);
  write_file(cli::output_path(o, "eval_report.json"), report_to_json(report, &data.vocab, true));
  std::cout << report_to_table(report, &data.vocab);
  return 0;
}

struct RankedPair {
  std::string drug;
  std::string gene;
  double score = 0.0;
  double confidence = 0.0;
  std::uint32_t predicted = 0;
  bool known = false;
};

int run_predict(const RunOptions& o) {
  if (o.drug.empty() == o.gene.empty()) throw CLI::ValidationError("give exactly one of --drug and --gene");
  const IngestResult data = load_data(o);
  const InteractionGraph& g = data.graph;
  const Checkpoint cp = load_checkpoint(o.checkpoint);
  check_compatible(cp, g, data.vocab);

  const bool by_drug = !o.drug.empty();
  if (by_drug ? !g.find_drug(o.drug) : !g.find_gene(o.gene)) {
    throw DataError(fmt::format("unknown {} '{}'", by_drug ? "drug" : "gene", by_drug ? o.drug : o.gene));
  }
  std::vector<Interaction> candidates;
  for (const std::string& partner : by_drug ? g.gene_ids() : g.drug_ids()) {
    candidates.push_back(by_drug ? Interaction{o.drug, partner, 0} : Interaction{partner, o.gene, 0});
  }
  std::map<std::pair<std::string, std::string>, bool> known;
  for (const Interaction& e : g.interactions()) known[{e.drug, e.gene}] = true;

  const auto prepared = prepare_pairs(g, candidates, cp.extraction, o.threads);
  const auto scores = score_pairs(prepared, cp.params, cp.model, o.threads);
  std::vector<RankedPair> ranked;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const bool is_known = known.contains({candidates[i].drug, candidates[i].gene});
    if (is_known && !o.include_known) continue;
    if (!scores[i]) {
      ++skipped;
      continue;
    }
    const double s = *scores[i];
    ranked.push_back({candidates[i].drug, candidates[i].gene, s, -std::abs(s - std::round(s)),
                      predict_relation(s, cp.model.num_relations), is_known});
  }
  std::sort(ranked.begin(), ranked.end(), [&](const RankedPair& a, const RankedPair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return by_drug ? a.gene < b.gene : a.drug < b.drug;
  });
  if (o.top > 0 && ranked.size() > o.top) ranked.resize(o.top);

  std::string tsv = "rank\tdrug\tgene\tscore\tconfidence\tpredicted\tknown\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const RankedPair& p = ranked[i];
    tsv += fmt::format("{}\t{}\t{}\t{:.6f}\t{:.6f}\t{}\t{}\n", i + 1, p.drug, p.gene, p.score,
                       p.confidence, data.vocab.name(p.predicted), p.known ? "yes" : "no");
  }
  write_file(o.output.empty() ? cli::output_path(o, "predictions.tsv") : o.output, tsv);
  std::cout << tsv;
  if (skipped) note(o, "{} candidate pair(s) had no usable context\n", skipped);
  return 0;
}

int run_sweep(const RunOptions& o) {
  const IngestResult data = load_data(o);
  const DatasetSplit split = cli::load_or_make_split(o, data.graph);
  const ExtractionConfig ext = cli::extraction_config(o);
  const ModelConfig model = cli::model_config(o, data.graph.num_relations());
  const TrainConfig cfg = cli::train_config(o);
  const SweepResult result = sweep(data.graph, split, model, ext, cfg, o.embed_dims,
                                   o.learning_rates, [&](const SweepCell& cell) {
                                     note(o, "embed_dim {:>4} lr {:<8g} val acc {:.4f} +- {:.4f}\n",
                                          cell.embed_dim, cell.learning_rate, cell.summary.mean,
                                          cell.summary.sd);
                                   });
  const std::string csv = sweep_csv(result);
  write_file(cli::output_path(o, "sweep.csv"), csv);
  std::cout << csv;
  const SweepCell& best = result.cells[result.best];
  fmt::print("best: embed_dim {} lr {:g} (val acc {:.4f})\n", best.embed_dim, best.learning_rate,
             best.summary.mean);
  return 0;
}

int run_external_eval(const RunOptions& o) {
  const IngestResult data = load_data(o);
  const Checkpoint cp = load_checkpoint(o.checkpoint);
  check_compatible(cp, data.graph, data.vocab);
  const auto records = read_expression_records(o.records);
  const InteractionGraph seen_graph =
      o.split_path.empty() ? data.graph : training_graph(data.graph, load_split(o.split_path, data.graph));
  const ExternalEvalResult result =
      external_eval(cp.params, cp.model, cp.extraction, data.graph, data.vocab,
                    TrainingSummary::of(seen_graph), records, o.thresholds,
                    o.one_sided ? Tail::kOneSided : Tail::kTwoSided, o.threads);
  write_file(cli::output_path(o, "external_eval.json"), external_eval_to_json(result, data.vocab));
  std::cout << external_eval_to_table(result);
  return 0;
}

int run_gradcheck(const RunOptions& o) {
  GradSuiteOptions opts;
  opts.cases = o.grad_cases;
  opts.seed = o.seed;
  opts.embed_dim = o.grad_embed_dim;
  opts.check.eps = o.grad_eps;
  const auto cases = run_grad_suite(opts);
  double worst = 0.0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    worst = std::max(worst, c.result.max_rel_error);
    note(o, "case {:>3}: {:>2} nodes {:>2} edges R={:<2} L={}  max rel err {:.3e} ({})\n", i,
         c.nodes, c.edges, c.relations, c.depth, c.result.max_rel_error, c.result.worst_param);
  }
  constexpr double kTolerance = 1e-4;
  const bool ok = worst < kTolerance;
  fmt::print("gradcheck: {} cases, max relative error {:.3e} ({} {:.0e})\n", cases.size(), worst,
             ok ? "<" : ">=", kTolerance);
  return ok ? 0 : kExitData;
}

int run_synth(const RunOptions& o) {
  PlantedConfig cfg;
  cfg.num_drugs = o.synth_drugs;
  cfg.num_genes = o.synth_genes;
  cfg.gene_degree = o.synth_gene_degree;
  cfg.seed = o.seed;
  const PlantedDataset data = make_planted(cfg);
  const std::string path = o.output.empty() ? cli::output_path(o, "planted.tsv") : o.output;
  write_file(path, planted_tsv(data));
  fmt::print("{} interactions over {} drugs and {} genes -> {}\n", data.interactions.size(),
             cfg.num_drugs, cfg.num_genes, path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunOptions o;
  CLI::App app{"Inductive drug-gene relation prediction from local subgraphs", "cosmig"};
  app.set_config("--config", "", "INI file with option values; command-line flags win");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto* ingest_cmd = app.add_subcommand("ingest", "read a TSV, filter by degree and print graph statistics");
  cli::add_data_options(*ingest_cmd, o);

  auto* split_cmd = app.add_subcommand("split", "write a split manifest");
  cli::add_data_options(*split_cmd, o);
  cli::add_split_options(*split_cmd, o);
  split_cmd->add_option("--output", o.output, "manifest path (default <out>/split.json)");

  auto* extract_cmd = app.add_subcommand("extract", "dump the subgraph of one drug-gene pair as JSON");
  cli::add_data_options(*extract_cmd, o);
  cli::add_extraction_options(*extract_cmd, o);
  extract_cmd->add_option("--drug", o.drug)->required();
  extract_cmd->add_option("--gene", o.gene)->required();
  extract_cmd->add_option("--split", o.split_path, "extract from this split's training graph");
  extract_cmd->add_option("--output", o.output, "write JSON here instead of stdout");

  auto* train_cmd = app.add_subcommand("train", "train, evaluate on the test split and save the best run");
  cli::add_data_options(*train_cmd, o);
  cli::add_split_options(*train_cmd, o);
  cli::add_extraction_options(*train_cmd, o);
  cli::add_model_options(*train_cmd, o);
  cli::add_train_options(*train_cmd, o);
  train_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint path (default <out>/model.csmg)");

  auto* eval_cmd = app.add_subcommand("evaluate", "score a split with a checkpoint");
  cli::add_data_options(*eval_cmd, o);
  cli::add_split_options(*eval_cmd, o);
  eval_cmd->add_option("--checkpoint", o.checkpoint)->required();
  eval_cmd->add_option("--set", o.eval_set, "test or validation")
      ->check(CLI::IsMember({"test", "validation"}));
  eval_cmd->add_option("--threads", o.threads);

  auto* predict_cmd = app.add_subcommand("predict", "rank candidate partners of a drug or a gene");
  cli::add_data_options(*predict_cmd, o);
  predict_cmd->add_option("--checkpoint", o.checkpoint)->required();
  predict_cmd->add_option("--drug", o.drug, "rank genes for this drug");
  predict_cmd->add_option("--gene", o.gene, "rank drugs for this gene");
  predict_cmd->add_option("--top", o.top, "rows to emit, 0 = all");
  predict_cmd->add_flag("--include-known", o.include_known, "also rank pairs already in the data");
  predict_cmd->add_option("--threads", o.threads);
  predict_cmd->add_option("--output", o.output, "TSV path (default <out>/predictions.tsv)");

  auto* sweep_cmd = app.add_subcommand("sweep", "grid search over embedding width and learning rate");
  cli::add_data_options(*sweep_cmd, o);
  cli::add_split_options(*sweep_cmd, o);
  cli::add_extraction_options(*sweep_cmd, o);
  cli::add_model_options(*sweep_cmd, o);
  cli::add_train_options(*sweep_cmd, o);
  sweep_cmd->add_option("--embed-dims", o.embed_dims)->delimiter(',');
  sweep_cmd->add_option("--lrs", o.learning_rates)->delimiter(',');

  auto* external_cmd = app.add_subcommand("external-eval", "evaluate against t-test labelled expression records");
  cli::add_data_options(*external_cmd, o);
  external_cmd->add_option("--checkpoint", o.checkpoint)->required();
  external_cmd->add_option("--records", o.records, "drug, gene, comma-separated samples")->required();
  external_cmd->add_option("--split", o.split_path, "split whose training graph defines seen entities");
  external_cmd->add_option("--thresholds", o.thresholds, "p-value thresholds")->delimiter(',');
  external_cmd->add_flag("--one-sided", o.one_sided, "one-sided p-values");
  external_cmd->add_option("--threads", o.threads);

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of the full model");
  grad_cmd->add_option("--cases", o.grad_cases);
  grad_cmd->add_option("--eps", o.grad_eps);
  grad_cmd->add_option("--embed-dim", o.grad_embed_dim);
  grad_cmd->add_option("--seed", o.seed);

  auto* synth_cmd = app.add_subcommand("synth", "write a planted-rule synthetic dataset");
  synth_cmd->add_option("--drugs", o.synth_drugs);
  synth_cmd->add_option("--genes", o.synth_genes);
  synth_cmd->add_option("--gene-degree", o.synth_gene_degree);
  synth_cmd->add_option("--seed", o.seed);
  synth_cmd->add_option("--output", o.output, "TSV path (default <out>/planted.tsv)");

  for (CLI::App* cmd : app.get_subcommands({})) cli::add_output_options(*cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fmt::print(stderr, "error: {}\n\n", e.what());
    CLI::App* shown = &app;
    for (CLI::App* cmd : app.get_subcommands()) shown = cmd;
    std::cerr << shown->help();
    return kExitUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::vector<std::string> args(argv, argv + argc);
  try {
    cli::write_resolved_config(*cmd, o, args);
    const std::string& name = cmd->get_name();
    if (name == "ingest") return run_ingest(o);
    if (name == "split") return run_split(o);
    if (name == "extract") return run_extract(o);
    if (name == "train") return run_train(o);
    if (name == "evaluate") return run_evaluate(o);
    if (name == "predict") return run_predict(o);
    if (name == "sweep") return run_sweep(o);
    if (name == "external-eval") return run_external_eval(o);
    if (name == "gradcheck") return run_gradcheck(o);
    if (name == "synth") return run_synth(o);
  } catch (const CLI::ValidationError& e) {
    fmt::print(stderr, "error: {}\n\n", e.what());
    std::cerr << cmd->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
