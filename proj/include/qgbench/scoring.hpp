#pragma once

// Scores a generation run against gold questions and aggregates the ten
// automatic-metric columns.

#include <algorithm>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgbench/error.hpp"
#include "qgbench/generation.hpp"
#include "qgbench/metrics.hpp"

namespace qgbench::scoring {

using metrics::PRF;
using Json = nlohmann::ordered_json;

struct MetricValues {
  PRF rouge2;
  PRF rougeL;
  double meteor = 0;
  double chrf = 0;
  double bleu = 0;
  std::optional<PRF> bertscore;
};

struct PairScores {
  std::string record_id;
  MetricValues values;
};

struct ScoreReport {
  std::string run_id;
  std::string model_id;
  promptkit::PromptSetting setting = promptkit::PromptSetting::WithLongPrompt;
  std::size_t n_scored = 0;
  std::size_t n_failed = 0;  // Failed generations, excluded from the means
  std::vector<PairScores> per_pair;
  MetricValues corpus_means;
};

/// Column headers in the order of the automatic-evaluation table.
inline const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols = {
      "ROUGE-2 Precision", "ROUGE-2 Recall", "ROUGE-2 F1", "ROUGE-L Precision",
      "ROUGE-L Recall",    "ROUGE-L F1",     "METEOR",     "CHrF (%)",
      "BLEU (%)",          "BERTScore"};
  return cols;
}

/// The ten columns as stored values in [0, 1]; BERTScore is its F1.
inline std::vector<std::optional<double>> column_values(const MetricValues& v) {
  return {v.rouge2.precision, v.rouge2.recall, v.rouge2.f1, v.rougeL.precision, v.rougeL.recall,
          v.rougeL.f1,        v.meteor,        v.chrf,      v.bleu,
          v.bertscore ? std::optional<double>(v.bertscore->f1) : std::nullopt};
}

/// CHrF and BLEU are shown as percentages with two decimals; the rest with
/// three decimals.
inline std::string format_column(std::size_t column, std::optional<double> value) {
  if (!value) return "-";
  std::ostringstream ss;
  ss << std::fixed;
  if (column == 7 || column == 8) {
    ss << std::setprecision(2) << (*value * 100.0);
  } else {
    ss << std::setprecision(3) << *value;
  }
  return ss.str();
}

inline MetricValues score_pair(const std::string& candidate, const std::string& gold,
                               const metrics::EmbeddingProvider* embeddings) {
  const auto c = metrics::tokenize(candidate);
  const auto g = metrics::tokenize(gold);
  MetricValues v;
  v.rouge2 = metrics::rouge_n(c, g, 2);
  v.rougeL = metrics::rouge_l(c, g);
  v.meteor = metrics::meteor(c, g);
  v.chrf = metrics::chrf(candidate, gold);
  v.bleu = metrics::bleu(c, g);
  if (embeddings) {
    const auto ce = embeddings->embed(candidate);
    const auto ge = embeddings->embed(gold);
    v.bertscore = metrics::bert_score(ce, ge);
  }
  return v;
}

/// Order-independent mean: values are summed in ascending order.
inline double stable_mean(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline MetricValues mean_of(const std::vector<PairScores>& rows) {
  auto collect = [&](auto get) {
    std::vector<double> xs;
    xs.reserve(rows.size());
    for (const auto& r : rows) xs.push_back(get(r.values));
    return stable_mean(std::move(xs));
  };
  MetricValues m;
  m.rouge2 = {collect([](const MetricValues& v) { return v.rouge2.precision; }),
              collect([](const MetricValues& v) { return v.rouge2.recall; }),
              collect([](const MetricValues& v) { return v.rouge2.f1; })};
  m.rougeL = {collect([](const MetricValues& v) { return v.rougeL.precision; }),
              collect([](const MetricValues& v) { return v.rougeL.recall; }),
              collect([](const MetricValues& v) { return v.rougeL.f1; })};
  m.meteor = collect([](const MetricValues& v) { return v.meteor; });
  m.chrf = collect([](const MetricValues& v) { return v.chrf; });
  m.bleu = collect([](const MetricValues& v) { return v.bleu; });
  const bool all_bert = !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const auto& r) {
    return r.values.bertscore.has_value();
  });
  if (all_bert) {
    m.bertscore = PRF{collect([](const MetricValues& v) { return v.bertscore->precision; }),
                      collect([](const MetricValues& v) { return v.bertscore->recall; }),
                      collect([](const MetricValues& v) { return v.bertscore->f1; })};
  }
  return m;
}

/// Per-pair scores for Ok results, means over those pairs. Failed results
/// are counted in n_failed. The BERTScore column is absent without an
/// embedding provider.
inline ScoreReport evaluate_run(const generation::GenerationRun& run,
                                const std::map<std::string, std::string>& gold,
                                const metrics::EmbeddingProvider* embeddings = nullptr) {
  ScoreReport report;
  report.run_id = run.run_id;
  report.model_id = run.model_id;
  report.setting = run.setting;
  for (const auto& r : run.results) {
    if (!r.ok()) {
      ++report.n_failed;
      continue;
    }
    auto it = gold.find(r.record_id);
    if (it == gold.end()) throw MissingGold(r.record_id);
    report.per_pair.push_back({r.record_id, score_pair(r.output_question, it->second, embeddings)});
  }
  if (report.per_pair.empty()) throw NoScorablePairs();
  report.n_scored = report.per_pair.size();
  report.corpus_means = mean_of(report.per_pair);
  return report;
}

inline std::map<std::string, std::string> gold_map(const std::vector<corpus::QuadRecord>& records) {
  std::map<std::string, std::string> out;
  for (const auto& r : records) out.emplace(r.id, r.question);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline Json prf_json(const PRF& p) {
  return Json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

inline PRF prf_from(const nlohmann::json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

inline Json to_json(const MetricValues& v) {
  Json j;
  j["rouge2"] = prf_json(v.rouge2);
  j["rougeL"] = prf_json(v.rougeL);
  j["meteor"] = v.meteor;
  j["chrf"] = v.chrf;
  j["bleu"] = v.bleu;
  j["bertscore"] = v.bertscore ? prf_json(*v.bertscore) : Json(nullptr);
  return j;
}

inline MetricValues values_from_json(const nlohmann::json& j) {
  MetricValues v;
  v.rouge2 = prf_from(j.at("rouge2"));
  v.rougeL = prf_from(j.at("rougeL"));
  v.meteor = j.at("meteor").get<double>();
  v.chrf = j.at("chrf").get<double>();
  v.bleu = j.at("bleu").get<double>();
  if (j.contains("bertscore") && !j["bertscore"].is_null()) v.bertscore = prf_from(j["bertscore"]);
  return v;
}

/// Header fields, one object per pair, then the means as the last member.
inline Json to_json(const ScoreReport& r) {
  Json j;
  j["run_id"] = r.run_id;
  j["model_id"] = r.model_id;
  j["setting"] = promptkit::to_string(r.setting);
  j["n_scored"] = r.n_scored;
  j["n_failed"] = r.n_failed;
  Json rows = Json::array();
  for (const auto& p : r.per_pair) {
    Json row;
    row["record_id"] = p.record_id;
    const Json values = to_json(p.values);
    for (const auto& [k, val] : values.items()) row[k] = val;
    rows.push_back(std::move(row));
  }
  j["per_pair"] = std::move(rows);
  j["corpus_means"] = to_json(r.corpus_means);
  return j;
}

inline ScoreReport report_from_json(const nlohmann::json& j) {
  ScoreReport r;
  r.run_id = j.at("run_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.setting = promptkit::setting_from_string(j.at("setting").get<std::string>());
  r.n_scored = j.at("n_scored").get<std::size_t>();
  r.n_failed = j.at("n_failed").get<std::size_t>();
  for (const auto& row : j.at("per_pair")) {
    r.per_pair.push_back({row.at("record_id").get<std::string>(), values_from_json(row)});
  }
  r.corpus_means = values_from_json(j.at("corpus_means"));
  return r;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Per-pair CSV in table column order with a trailing "mean" row. Values
/// use the table's display scale.
inline std::string to_csv(const ScoreReport& r) {
  std::string out = "record_id";
  for (const auto& c : metric_columns()) out += "," + csv_escape(c);
  out += '\n';
  auto row = [&](const std::string& id, const MetricValues& v) {
    out += csv_escape(id);
    const auto vals = column_values(v);
    for (std::size_t k = 0; k < vals.size(); ++k) out += "," + format_column(k, vals[k]);
    out += '\n';
  };
  for (const auto& p : r.per_pair) row(p.record_id, p.values);
  row("mean", r.corpus_means);
  return out;
}

}  // namespace qgbench::scoring
