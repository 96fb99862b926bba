#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>
#include <string>

#include "json.hpp"
#include "oracles.hpp"

#ifndef COSMIG_CLI
#error "COSMIG_CLI must name the cosmig executable"
#endif

namespace cosmig {
namespace {

struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliRun run_cli(const testing::TempDir& dir, const std::string& args) {
  const std::string out = dir.file("stdout.txt"), err = dir.file("stderr.txt");
  const std::string cmd = "cd '" + dir.path().string() + "' && '" COSMIG_CLI "' " + args + " >'" + out +
                          "' 2>'" + err + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testing::read_file(out);
  r.err = testing::read_file(err);
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { ASSERT_EQ(run_cli(dir_, "synth --out . -q").exit_code, 0); }
  testing::TempDir dir_{"cli"};
};

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli(dir_, "").exit_code, 2);
  EXPECT_EQ(run_cli(dir_, "frobnicate").exit_code, 2);
  const CliRun r = run_cli(dir_, "split --data planted.tsv --no-such-flag");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run_cli(dir_, "split --data planted.tsv --mode sideways").exit_code, 2);
  EXPECT_EQ(run_cli(dir_, "--help").exit_code, 0);
}

TEST_F(Cli, DataErrorsExitOneWithLocation) {
  EXPECT_EQ(run_cli(dir_, "ingest --data missing.tsv").exit_code, 1);
  testing::write_file(dir_.file("bad.tsv"), "d1\tg1\tr\nd2\tg2\n");
  const CliRun r = run_cli(dir_, "ingest --data bad.tsv --min-degree 1");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("bad.tsv:2"), std::string::npos) << r.err;
}

TEST_F(Cli, SplitManifestsAreByteIdentical) {
  const std::string args = "split --data planted.tsv --mode transductive --train-frac 0.8 --val-frac 0.1 --seed 7";
  ASSERT_EQ(run_cli(dir_, args + " --output a.json").exit_code, 0);
  ASSERT_EQ(run_cli(dir_, args + " --output b.json").exit_code, 0);
  EXPECT_EQ(testing::read_file(dir_.file("a.json")), testing::read_file(dir_.file("b.json")));
}

TEST_F(Cli, ResolvedConfigRecordsDefaultsAndReplays) {
  ASSERT_EQ(run_cli(dir_, "split --data planted.tsv --seed 11 --output s1.json -q").exit_code, 0);
  const auto cfg = nlohmann::json::parse(testing::read_file(dir_.file("split.resolved_config.json")));
  EXPECT_EQ(cfg["command"], "split");
  EXPECT_EQ(cfg["seed"], 11);
  EXPECT_EQ(cfg["options"]["train-frac"], "0.8");
  EXPECT_EQ(cfg["options"]["seed"], "11");

  // Replaying the INI snapshot gives the same manifest; a flag overrides the file.
  ASSERT_EQ(run_cli(dir_, "--config split.resolved_config.ini split --output s2.json -q").exit_code, 0);
  EXPECT_EQ(testing::read_file(dir_.file("s1.json")), testing::read_file(dir_.file("s2.json")));
  ASSERT_EQ(run_cli(dir_, "--config split.resolved_config.ini split --seed 12 --output s3.json -q").exit_code, 0);
  EXPECT_NE(testing::read_file(dir_.file("s1.json")), testing::read_file(dir_.file("s3.json")));
}

TEST_F(Cli, TrainEvaluatePredictPipeline) {
  const CliRun train = run_cli(dir_, "train --data planted.tsv --epochs 2 --runs 1 --embed-dim 8 "
                                  "--depth 2 --max-nodes 10 --out run -q");
  ASSERT_EQ(train.exit_code, 0) << train.err;
  for (const char* f : {"run/epochs.csv", "run/model.csmg", "run/report.json", "run/split.json",
                        "run/train.resolved_config.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir_.path() / f)) << f;
  }
  const auto report = nlohmann::json::parse(testing::read_file(dir_.file("run/report.json")));

  const CliRun eval = run_cli(dir_, "evaluate --data planted.tsv --split run/split.json "
                                 "--checkpoint run/model.csmg --out ev -q");
  ASSERT_EQ(eval.exit_code, 0) << eval.err;
  const auto eval_report = nlohmann::json::parse(testing::read_file(dir_.file("ev/eval_report.json")));
  EXPECT_EQ(eval_report["accuracy"], report["best_run_report"]["accuracy"]);

  const CliRun predict = run_cli(dir_, "predict --data planted.tsv --checkpoint run/model.csmg "
                                    "--drug D003 --top 10 --out pr -q");
  ASSERT_EQ(predict.exit_code, 0) << predict.err;
  std::istringstream rows(predict.out);
  std::string line;
  std::getline(rows, line);
  EXPECT_EQ(line.rfind("rank\tdrug\tgene\tscore\tconfidence", 0), 0u);
  std::vector<std::pair<double, double>> keys;
  while (std::getline(rows, line)) {
    std::istringstream cols(line);
    std::string rank, drug, gene;
    double score = 0, confidence = 0;
    cols >> rank >> drug >> gene >> score >> confidence;
    EXPECT_EQ(drug, "D003");
    keys.emplace_back(score, confidence);
  }
  ASSERT_EQ(keys.size(), 10u);
  for (std::size_t i = 1; i < keys.size(); ++i) EXPECT_FALSE(keys[i - 1] < keys[i]) << "row " << i;

  testing::write_file(dir_.file("other.tsv"), "a\tx\tp\na\ty\tq\nb\tx\tq\nb\ty\tp\n");
  const CliRun mismatch = run_cli(dir_, "predict --data other.tsv --min-degree 1 --checkpoint run/model.csmg --drug a");
  EXPECT_EQ(mismatch.exit_code, 1);
  EXPECT_NE(mismatch.err.find("relations"), std::string::npos) << mismatch.err;
}

TEST_F(Cli, GradcheckPassesOnDefaults) {
  const CliRun r = run_cli(dir_, "gradcheck -q");
  EXPECT_EQ(r.exit_code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("max relative error"), std::string::npos);
}

}  // namespace
}  // namespace cosmig
