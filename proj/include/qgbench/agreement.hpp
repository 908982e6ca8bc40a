#pragma once

// Human-evaluation data: five-criterion ratings on a 1-5 scale, Fleiss'
// kappa per criterion, and per-(model, setting) mean scores.

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qgbench/error.hpp"
#include "qgbench/promptkit.hpp"

namespace qgbench::agreement {

using Json = nlohmann::ordered_json;

enum class Criterion { Grammaticality, Appropriateness, Relevance, Complexity, Novelty };

inline constexpr std::array<Criterion, 5> kCriteria = {
    Criterion::Grammaticality, Criterion::Appropriateness, Criterion::Relevance,
    Criterion::Complexity, Criterion::Novelty};

inline constexpr std::array<std::string_view, 5> kCriterionNames = {
    "Grammaticality", "Appropriateness", "Relevance", "Complexity", "Novelty"};

inline std::string_view to_string(Criterion c) { return kCriterionNames[static_cast<std::size_t>(c)]; }

inline constexpr int kMinScore = 1;
inline constexpr int kMaxScore = 5;
inline constexpr std::size_t kCategories = kMaxScore - kMinScore + 1;

class InvalidRating : public Error {
 public:
  explicit InvalidRating(const std::string& detail, std::string field = {})
      : Error("InvalidRating", detail), field_(std::move(field)) {}
  /// Offending field name, when one can be singled out.
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct RaterTarget {
  std::string rater_id;
  std::string target_id;
  friend auto operator<=>(const RaterTarget&, const RaterTarget&) = default;
};

class UnevenCoverage : public Error {
 public:
  explicit UnevenCoverage(std::vector<RaterTarget> missing)
      : Error("UnevenCoverage", describe(missing)), missing_(std::move(missing)) {}
  const std::vector<RaterTarget>& missing() const noexcept { return missing_; }

 private:
  static std::string describe(const std::vector<RaterTarget>& missing) {
    std::string s = std::to_string(missing.size()) + " (rater, target) pair(s) unrated";
    if (!missing.empty()) {
      s += ", e.g. (" + missing.front().rater_id + ", " + missing.front().target_id + ")";
    }
    return s;
  }
  std::vector<RaterTarget> missing_;
};

struct RatingRecord {
  std::string rater_id;
  std::string target_id;
  std::array<int, 5> scores{};  // indexed by Criterion
  std::string submitted_at;

  int score(Criterion c) const { return scores[static_cast<std::size_t>(c)]; }
  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

/// Target ids name a generated question: "<run_id>:<record_id>".
inline std::string make_target_id(std::string_view run_id, std::string_view record_id) {
  return std::string(run_id) + ":" + std::string(record_id);
}

inline std::pair<std::string, std::string> split_target_id(std::string_view target_id) {
  const auto pos = target_id.find(':');
  if (pos == std::string_view::npos) return {std::string(target_id), {}};
  return {std::string(target_id.substr(0, pos)), std::string(target_id.substr(pos + 1))};
}

inline Json to_json(const RatingRecord& r) {
  Json j;
  j["rater_id"] = r.rater_id;
  j["target_id"] = r.target_id;
  Json scores;
  for (auto c : kCriteria) scores[std::string(to_string(c))] = r.score(c);
  j["scores"] = std::move(scores);
  j["submitted_at"] = r.submitted_at;
  return j;
}

/// Strict parse: both ids non-empty, all five criteria present as integers
/// in 1..5, no unknown criteria.
inline RatingRecord rating_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidRating("rating must be a JSON object");
  RatingRecord r;
  for (auto [key, dest] : {std::pair{"rater_id", &r.rater_id}, std::pair{"target_id", &r.target_id}}) {
    if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
      throw InvalidRating(std::string("missing ") + key, key);
    }
    *dest = j[key].get<std::string>();
  }
  if (!j.contains("scores") || !j["scores"].is_object()) {
    throw InvalidRating("missing scores object", "scores");
  }
  const auto& scores = j["scores"];
  for (const auto& [key, _] : scores.items()) {
    if (std::find(kCriterionNames.begin(), kCriterionNames.end(), key) == kCriterionNames.end()) {
      throw InvalidRating("unknown criterion '" + key + "'", key);
    }
  }
  for (auto c : kCriteria) {
    const std::string name(to_string(c));
    if (!scores.contains(name)) throw InvalidRating("missing criterion " + name, name);
    const auto& v = scores[name];
    if (!v.is_number_integer()) throw InvalidRating(name + " must be an integer", name);
    const auto s = v.get<std::int64_t>();
    if (s < kMinScore || s > kMaxScore) {
      throw InvalidRating(name + " must lie in 1..5, got " + std::to_string(s), name);
    }
    r.scores[static_cast<std::size_t>(c)] = static_cast<int>(s);
  }
  if (j.contains("submitted_at") && j["submitted_at"].is_string()) {
    r.submitted_at = j["submitted_at"].get<std::string>();
  }
  return r;
}

inline std::vector<RatingRecord> parse_ratings(std::istream& in) {
  std::vector<RatingRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedLine(line_no, e.what());
    }
    out.push_back(rating_from_json(j));
  }
  return out;
}

/// Keeps the last submission for each (rater, target), in first-seen order.
inline std::vector<RatingRecord> latest_wins(const std::vector<RatingRecord>& ratings) {
  std::map<RaterTarget, std::size_t> slot;
  std::vector<RatingRecord> out;
  for (const auto& r : ratings) {
    RaterTarget key{r.rater_id, r.target_id};
    if (auto it = slot.find(key); it != slot.end()) {
      out[it->second] = r;
    } else {
      slot.emplace(std::move(key), out.size());
      out.push_back(r);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fleiss' kappa

/// counts[i][j] = number of raters who put item i in category j.
using CountMatrix = std::vector<std::vector<std::size_t>>;

inline double fleiss_kappa(const CountMatrix& counts, std::size_t n_raters) {
  if (n_raters < 2) throw TooFewRaters(n_raters);
  if (counts.empty()) throw RaggedMatrix("count matrix has no items");
  const std::size_t k = counts.front().size();
  if (k == 0) throw RaggedMatrix("count matrix has no categories");
  const std::size_t n_items = counts.size();

  std::vector<std::size_t> column(k, 0);
  double p_bar_sum = 0;
  const auto n = static_cast<double>(n_raters);
  for (std::size_t i = 0; i < n_items; ++i) {
    const auto& row = counts[i];
    if (row.size() != k) {
      throw RaggedMatrix("row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                         " categories, expected " + std::to_string(k));
    }
    std::size_t sum = 0, sq = 0;
    for (std::size_t j = 0; j < k; ++j) {
      sum += row[j];
      sq += row[j] * row[j];
      column[j] += row[j];
    }
    if (sum != n_raters) {
      throw RaggedMatrix("row " + std::to_string(i) + " sums to " + std::to_string(sum) +
                         ", expected " + std::to_string(n_raters));
    }
    p_bar_sum += static_cast<double>(sq - n_raters) / (n * (n - 1));
  }
  const double p_bar = p_bar_sum / static_cast<double>(n_items);
  const double total = static_cast<double>(n_items) * n;
  double p_e = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const double pj = static_cast<double>(column[j]) / total;
    p_e += pj * pj;
  }
  // Every rating in one category: rows are necessarily unanimous.
  if (p_e >= 1.0) return 1.0;
  return (p_bar - p_e) / (1.0 - p_e);
}

struct AgreementReport {
  std::map<Criterion, double> kappa;
  std::size_t n_items = 0;
  std::size_t n_raters = 0;
};

inline Json to_json(const AgreementReport& r) {
  Json j;
  Json kappa;
  for (const auto& [c, v] : r.kappa) kappa[std::string(to_string(c))] = v;
  j["kappa"] = std::move(kappa);
  j["n_items"] = r.n_items;
  j["n_raters"] = r.n_raters;
  return j;
}

/// Requires every rater to have rated every target (after latest-wins
/// deduplication); incomplete designs are rejected with the missing pairs.
inline AgreementReport kappa_per_criterion(const std::vector<RatingRecord>& ratings) {
  const auto latest = latest_wins(ratings);
  std::set<std::string> raters, targets;
  std::set<RaterTarget> present;
  for (const auto& r : latest) {
    raters.insert(r.rater_id);
    targets.insert(r.target_id);
    present.insert({r.rater_id, r.target_id});
  }
  std::vector<RaterTarget> missing;
  for (const auto& rater : raters) {
    for (const auto& target : targets) {
      if (!present.count({rater, target})) missing.push_back({rater, target});
    }
  }
  if (!missing.empty()) throw UnevenCoverage(std::move(missing));
  if (raters.size() < 2) throw TooFewRaters(raters.size());

  std::map<std::string, std::size_t> row_of;
  for (const auto& t : targets) row_of.emplace(t, row_of.size());

  AgreementReport report;
  report.n_items = targets.size();
  report.n_raters = raters.size();
  for (auto c : kCriteria) {
    CountMatrix counts(targets.size(), std::vector<std::size_t>(kCategories, 0));
    for (const auto& r : latest) {
      ++counts[row_of[r.target_id]][static_cast<std::size_t>(r.score(c) - kMinScore)];
    }
    report.kappa[c] = fleiss_kappa(counts, raters.size());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Aggregation

struct RunInfo {
  std::string model_id;
  promptkit::PromptSetting setting;
};

struct AggregateRow {
  std::string model_id;
  std::optional<promptkit::PromptSetting> setting;  // absent for unknown runs
  std::size_t n_ratings = 0;
  std::array<double, 5> mean{};
};

/// Mean score per (model, setting, criterion) over latest-wins ratings.
/// Rows are ordered by setting (unknown last), then model id.
inline std::vector<AggregateRow> aggregate_ratings(const std::vector<RatingRecord>& ratings,
                                                   const std::map<std::string, RunInfo>& runs) {
  struct Key {
    int setting_rank;
    std::string model_id;
    auto operator<=>(const Key&) const = default;
  };
  struct Acc {
    std::optional<promptkit::PromptSetting> setting;
    std::size_t n = 0;
    std::array<long long, 5> sum{};
  };
  std::map<Key, Acc> acc;
  for (const auto& r : latest_wins(ratings)) {
    const auto [run_id, record_id] = split_target_id(r.target_id);
    Key key{3, run_id};
    std::optional<promptkit::PromptSetting> setting;
    if (auto it = runs.find(run_id); it != runs.end()) {
      key = {static_cast<int>(it->second.setting), it->second.model_id};
      setting = it->second.setting;
    }
    auto& a = acc[key];
    a.setting = setting;
    ++a.n;
    for (std::size_t c = 0; c < 5; ++c) a.sum[c] += r.scores[c];
  }
  std::vector<AggregateRow> rows;
  for (const auto& [key, a] : acc) {
    AggregateRow row{key.model_id, a.setting, a.n, {}};
    for (std::size_t c = 0; c < 5; ++c) {
      row.mean[c] = static_cast<double>(a.sum[c]) / static_cast<double>(a.n);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string format_mean(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << v;
  return ss.str();
}

/// Table layout: setting, model, then the five criteria with two decimals.
inline std::string to_csv(const std::vector<AggregateRow>& rows) {
  std::string out = "Setting,Model";
  for (auto name : kCriterionNames) out += "," + std::string(name);
  out += '\n';
  for (const auto& r : rows) {
    out += r.setting ? std::string(promptkit::display_name(*r.setting)) : std::string("Unknown");
    out += "," + r.model_id;
    for (double m : r.mean) out += "," + format_mean(m);
    out += '\n';
  }
  return out;
}

}  // namespace qgbench::agreement
