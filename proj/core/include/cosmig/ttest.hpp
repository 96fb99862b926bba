#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cosmig/evaluate.hpp"
#include "cosmig/graph.hpp"
#include "cosmig/model.hpp"
#include "cosmig/param_store.hpp"
#include "cosmig/subgraph.hpp"

namespace cosmig {

// Regularized incomplete beta I_x(a, b), by continued fraction.
double incomplete_beta(double a, double b, double x);
// P(T <= t) for Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

enum class Direction { kIncreased, kDecreased, kInconclusive };
enum class Tail { kTwoSided, kOneSided };

const char* to_string(Direction direction);

struct TTestResult {
  Direction label = Direction::kInconclusive;
  double p_value = 1.0;
  double t = 0.0;
  double mean = 0.0;
  std::size_t n = 0;
};

// One-sample t-test of the mean against 0 (sample sd, n - 1 df). The
// two-sided p-value is the default; kOneSided tests in the direction of the
// observed mean. Zero variance gives p = 0 for a nonzero mean and an
// inconclusive label for a zero mean. Throws Error when n < 2 or the
// threshold is outside (0, 1].
TTestResult ttest_label(std::span<const double> samples, double p_threshold,
                        Tail tail = Tail::kTwoSided);

struct ExpressionRecord {
  std::string drug;
  std::string gene;
  std::vector<double> samples;
};

// drug_id<TAB>gene_id<TAB>v1,v2,... rows; '#' comments and blank lines are
// skipped and a "drug..."/"gene..." first row is taken as a header.
// Throws DataError with file:line context.
std::vector<ExpressionRecord> read_expression_records(const std::string& path);
std::vector<ExpressionRecord> read_expression_records(std::istream& in,
                                                      const std::string& source_name);

struct ThresholdRow {
  double threshold = 0.0;
  std::size_t increased = 0;
  std::size_t decreased = 0;
  std::size_t inconclusive = 0;
  EvalReport report;
};

struct ExternalEvalResult {
  std::uint32_t increased_code = 0;
  std::uint32_t decreased_code = 0;
  std::vector<ThresholdRow> rows;
};

// Labels every record with ttest_label at each threshold, drops inconclusive
// ones, and scores the rest against the model. `vocab` must contain relations
// named "increased" and "decreased" (case-insensitive).
ExternalEvalResult external_eval(const ParamStore& params, const ModelConfig& model,
                                 const ExtractionConfig& extraction,
                                 const InteractionGraph& context,
                                 const RelationVocab& vocab,
                                 const TrainingSummary& seen,
                                 std::span<const ExpressionRecord> records,
                                 std::span<const double> thresholds,
                                 Tail tail = Tail::kTwoSided, std::size_t threads = 1);

std::string external_eval_to_json(const ExternalEvalResult& result,
                                   const RelationVocab& vocab);
std::string external_eval_to_table(const ExternalEvalResult& result);

}  // namespace cosmig
