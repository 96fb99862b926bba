#include "cosmig/ttest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "cosmig/error.hpp"
#include "json.hpp"

namespace cosmig {

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 1000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::uint32_t find_relation(const RelationVocab& vocab, const std::string& wanted) {
  for (std::uint32_t code = 1; code <= vocab.size(); ++code) {
    if (lower(vocab.name(code)) == wanted) return code;
  }
  throw Error("relation vocabulary has no '" + wanted + "' relation; external evaluation "
              "needs both 'increased' and 'decreased'");
}

std::vector<std::string> split_on(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(line);
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw Error("incomplete_beta: x must be in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw Error("student_t_cdf: df must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return t > 0.0 ? 1.0 - tail : tail;
}

const char* to_string(Direction direction) {
  switch (direction) {
    case Direction::kIncreased: return "increased";
    case Direction::kDecreased: return "decreased";
    case Direction::kInconclusive: return "inconclusive";
  }
  return "?";
}

TTestResult ttest_label(std::span<const double> samples, double p_threshold, Tail tail) {
  if (samples.size() < 2) throw Error("t-test needs at least 2 samples");
  if (!(p_threshold > 0.0 && p_threshold <= 1.0)) {
    throw Error("p-value threshold must be in (0, 1]");
  }
  TTestResult r;
  r.n = samples.size();
  const double n = static_cast<double>(r.n);
  double total = 0.0;
  for (double v : samples) {
    if (!std::isfinite(v)) throw NumericError("t-test sample is not finite");
    total += v;
  }
  r.mean = total / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - r.mean) * (v - r.mean);
  const double sd = std::sqrt(ss / (n - 1.0));

  if (sd == 0.0) {
    if (r.mean == 0.0) return r;
    r.t = r.mean > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
  } else {
    r.t = r.mean / (sd / std::sqrt(n));
    const double df = n - 1.0;
    const double two_sided = incomplete_beta(0.5 * df, 0.5, df / (df + r.t * r.t));
    r.p_value = tail == Tail::kTwoSided ? two_sided : 0.5 * two_sided;
  }
  if (r.p_value < p_threshold && r.mean != 0.0) {
    r.label = r.mean > 0 ? Direction::kIncreased : Direction::kDecreased;
  }
  return r;
}

std::vector<ExpressionRecord> read_expression_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open expression file '" + path + "'");
  return read_expression_records(in, path);
}

std::vector<ExpressionRecord> read_expression_records(std::istream& in,
                                                      const std::string& source_name) {
  std::vector<ExpressionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto cols = split_on(line, '\t');
    if (first) {
      first = false;
      if (cols.size() >= 2 && lower(trim(cols[0])).starts_with("drug") &&
          lower(trim(cols[1])).starts_with("gene")) {
        continue;
      }
    }
    if (cols.size() < 3) {
      throw DataError(source_name, line_no, "expected 3 tab-separated columns, got " +
                                                std::to_string(cols.size()));
    }
    ExpressionRecord rec{trim(cols[0]), trim(cols[1]), {}};
    if (rec.drug.empty() || rec.gene.empty()) {
      throw DataError(source_name, line_no, "empty drug or gene id");
    }
    for (const std::string& field : split_on(cols[2], ',')) {
      const std::string value = trim(field);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (value.empty() || used != value.size() || !std::isfinite(v)) {
        throw DataError(source_name, line_no, "bad sample value '" + value + "'");
      }
      rec.samples.push_back(v);
    }
    if (rec.samples.size() < 2) {
      throw DataError(source_name, line_no, "a record needs at least 2 samples");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

ExternalEvalResult external_eval(const ParamStore& params, const ModelConfig& model,
                                 const ExtractionConfig& extraction,
                                 const InteractionGraph& context,
                                 const RelationVocab& vocab,
                                 const TrainingSummary& seen,
                                 std::span<const ExpressionRecord> records,
                                 std::span<const double> thresholds, Tail tail,
                                 std::size_t threads) {
  ExternalEvalResult result;
  result.increased_code = find_relation(vocab, "increased");
  result.decreased_code = find_relation(vocab, "decreased");

  std::vector<Interaction> queries;
  queries.reserve(records.size());
  for (const auto& rec : records) queries.push_back({rec.drug, rec.gene, 0});
  const auto prepared = prepare_pairs(context, queries, extraction, threads);
  const auto scores = score_pairs(prepared, params, model, threads);

  for (double threshold : thresholds) {
    ThresholdRow row;
    row.threshold = threshold;
    std::vector<Interaction> labelled;
    std::vector<std::optional<double>> labelled_scores;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const TTestResult t = ttest_label(records[i].samples, threshold, tail);
      if (t.label == Direction::kInconclusive) {
        ++row.inconclusive;
        continue;
      }
      const bool up = t.label == Direction::kIncreased;
      ++(up ? row.increased : row.decreased);
      labelled.push_back({records[i].drug, records[i].gene,
                          up ? result.increased_code : result.decreased_code});
      labelled_scores.push_back(scores[i]);
    }
    row.report = tally(labelled, labelled_scores, model.num_relations, seen);
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string external_eval_to_json(const ExternalEvalResult& result,
                                  const RelationVocab& vocab) {
  nlohmann::ordered_json j;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : result.rows) {
    nlohmann::ordered_json r;
    r["threshold"] = row.threshold;
    r["increased"] = row.increased;
    r["decreased"] = row.decreased;
    r["inconclusive"] = row.inconclusive;
    r["report"] = nlohmann::ordered_json::parse(report_to_json(row.report, &vocab));
    rows.push_back(std::move(r));
  }
  j["thresholds"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string external_eval_to_table(const ExternalEvalResult& result) {
  std::ostringstream out;
  out << fmt::format("{:>9} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "threshold",
                     "evaluated", "inconcl.", "overall", "sD_sG", "sD_uG", "uD_sG", "uD_uG",
                     "majority");
  for (const auto& row : result.rows) {
    const auto& rep = row.report;
    out << fmt::format("{:>9g} {:>9} {:>9} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f}\n",
                       row.threshold, rep.overall.count, row.inconclusive, rep.overall.accuracy(),
                       rep.groups[0].accuracy(), rep.groups[1].accuracy(),
                       rep.groups[2].accuracy(), rep.groups[3].accuracy(),
                       rep.majority_baseline);
  }
  return out.str();
}

}  // namespace cosmig
