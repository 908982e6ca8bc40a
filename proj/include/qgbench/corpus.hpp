#pragma once

// Quadruple corpora: <context, long prompt, short prompt, question> records
// stored one JSON object per line.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "qgbench/error.hpp"
#include "qgbench/text.hpp"

namespace qgbench::corpus {

enum class SubjectKind { History, Geography, Economics, EnvironmentalStudies, Science, Other };

struct Subject {
  SubjectKind kind = SubjectKind::Other;
  std::string other_name;  // only meaningful for Other

  static Subject parse(std::string_view name) {
    std::string key;
    for (char c : name) {
      if (c != ' ' && c != '_' && c != '-') {
        key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      }
    }
    if (key == "history") return {SubjectKind::History, {}};
    if (key == "geography") return {SubjectKind::Geography, {}};
    if (key == "economics") return {SubjectKind::Economics, {}};
    if (key == "environmentalstudies" || key == "evs") {
      return {SubjectKind::EnvironmentalStudies, {}};
    }
    if (key == "science") return {SubjectKind::Science, {}};
    return {SubjectKind::Other, std::string(name)};
  }

  std::string name() const {
    switch (kind) {
      case SubjectKind::History: return "History";
      case SubjectKind::Geography: return "Geography";
      case SubjectKind::Economics: return "Economics";
      case SubjectKind::EnvironmentalStudies: return "EnvironmentalStudies";
      case SubjectKind::Science: return "Science";
      case SubjectKind::Other: break;
    }
    return other_name;
  }

  friend bool operator==(const Subject&, const Subject&) = default;
};

struct QuadRecord {
  std::string id;
  Subject subject;
  std::string context;
  std::string long_prompt;
  std::string short_prompt;
  std::string question;
  std::optional<std::string> grade;  // carried through when the input has it

  friend bool operator==(const QuadRecord&, const QuadRecord&) = default;
};

inline constexpr std::string_view kFieldNames[] = {"id",          "subject",      "context",
                                                   "long_prompt", "short_prompt", "question"};

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::ordered_json to_json(const QuadRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["subject"] = r.subject.name();
  j["context"] = r.context;
  j["long_prompt"] = r.long_prompt;
  j["short_prompt"] = r.short_prompt;
  j["question"] = r.question;
  if (r.grade) j["grade"] = *r.grade;
  return j;
}

inline std::string serialize(const std::vector<QuadRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

/// Reads newline-delimited records. Blank lines are skipped; line numbers are
/// 1-based and count blank lines. A field that is absent, not a string, or
/// blank after trimming is reported as MissingField.
inline std::vector<QuadRecord> parse_quads(std::istream& in) {
  std::vector<QuadRecord> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::is_blank(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedLine(line_no, e.what());
    }
    if (!j.is_object()) throw MalformedLine(line_no, "expected a JSON object");
    auto field = [&](std::string_view name) -> std::string {
      auto it = j.find(name);
      if (it == j.end() || !it->is_string()) throw MissingField(std::string(name), line_no);
      auto value = it->get<std::string>();
      if (text::is_blank(value)) throw MissingField(std::string(name), line_no);
      return value;
    };
    QuadRecord r;
    r.id = field("id");
    r.subject = Subject::parse(field("subject"));
    r.context = field("context");
    r.long_prompt = field("long_prompt");
    r.short_prompt = field("short_prompt");
    r.question = field("question");
    if (auto g = j.find("grade"); g != j.end()) {
      r.grade = g->is_string() ? g->get<std::string>() : g->dump();
    }
    if (!seen.insert(r.id).second) throw DuplicateId(r.id);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<QuadRecord> parse_quads(std::string_view data) {
  std::istringstream in{std::string(data)};
  return parse_quads(in);
}

// ---------------------------------------------------------------------------
// Validation

enum class Severity { Error, Warning };

struct Issue {
  Severity severity;
  std::string code;
  std::string message;
};

inline std::string normalized_phrase(std::string_view s) {
  return text::join(text::normalized_tokens(s), " ");
}

/// First half of the context by code-point count.
inline std::string context_head(std::string_view context) {
  auto cps = text::decode_utf8(context);
  cps.resize(cps.size() / 2);
  return text::encode_utf8(cps);
}

inline std::vector<Issue> validate(const QuadRecord& r) {
  std::vector<Issue> issues;
  const std::pair<std::string_view, const std::string*> fields[] = {
      {"id", &r.id},
      {"context", &r.context},
      {"long_prompt", &r.long_prompt},
      {"short_prompt", &r.short_prompt},
      {"question", &r.question}};
  for (const auto& [name, value] : fields) {
    if (text::is_blank(*value)) {
      issues.push_back({Severity::Error, "EmptyField", std::string(name) + " is empty"});
    }
  }
  if (!text::is_blank(r.short_prompt) && !text::is_blank(r.context)) {
    const auto needle = normalized_phrase(r.short_prompt);
    const auto head = " " + normalized_phrase(context_head(r.context)) + " ";
    if (head.find(" " + needle + " ") == std::string::npos) {
      issues.push_back({Severity::Warning, "ShortPromptNotInContextHead",
                        "short prompt '" + r.short_prompt +
                            "' does not occur in the first half of the context"});
    }
  }
  if (!text::is_blank(r.question)) {
    const auto q = text::trim(r.question);
    if (q.back() != '?') {
      issues.push_back({Severity::Warning, "QuestionNotInterrogative",
                        "question does not end with '?'"});
    }
  }
  return issues;
}

// ---------------------------------------------------------------------------
// Train/test split

struct SplitSpec {
  double ratio = 0.8;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<QuadRecord> train;
  std::vector<QuadRecord> test;
};

/// floor(ratio * n), tolerant of representation error such as 0.29 * 100.
inline std::size_t train_size(double ratio, std::size_t n) {
  const double exact = ratio * static_cast<double>(n);
  return static_cast<std::size_t>(std::floor(exact + 1e-9 * std::max(1.0, exact)));
}

/// Unbiased draw from [0, bound) by rejecting the low remainder of the
/// 64-bit range. std::uniform_int_distribution is implementation-defined, so
/// it is avoided to keep partitions identical across standard libraries.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

/// Fisher-Yates over record indices driven by mt19937_64(seed). The first
/// floor(ratio*N) shuffled indices form the training set; both partitions
/// keep the input's relative order.
inline Split split(const std::vector<QuadRecord>& records, const SplitSpec& spec) {
  if (!(spec.ratio > 0.0 && spec.ratio < 1.0)) {
    throw InvalidArgument("split ratio must lie strictly between 0 and 1");
  }
  if (records.empty()) throw EmptyCorpus();
  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[bounded(rng, i + 1)]);
  }
  const std::size_t n_train = train_size(spec.ratio, n);
  std::vector<bool> in_train(n, false);
  for (std::size_t k = 0; k < n_train; ++k) in_train[order[k]] = true;
  Split out;
  out.train.reserve(n_train);
  out.test.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? out.train : out.test).push_back(records[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct MeanWords {
  double context = 0;
  double long_prompt = 0;
  double short_prompt = 0;
  double question = 0;
};

struct LeadingBigram {
  std::string bigram;
  std::size_t count = 0;
  double share = 0;  // percent of all questions
};

struct DatasetStats {
  std::size_t total = 0;
  std::map<std::string, std::size_t> per_subject;
  std::optional<MeanWords> mean_words;  // absent for an empty corpus
  std::vector<LeadingBigram> leading_bigrams;
};

inline DatasetStats stats(const std::vector<QuadRecord>& records) {
  DatasetStats s;
  s.total = records.size();
  if (records.empty()) return s;

  // Integer sums keep the result independent of record order.
  std::size_t ctx = 0, lp = 0, sp = 0, q = 0;
  std::map<std::string, std::size_t> bigrams;
  for (const auto& r : records) {
    ++s.per_subject[r.subject.name()];
    ctx += text::word_count(r.context);
    lp += text::word_count(r.long_prompt);
    sp += text::word_count(r.short_prompt);
    q += text::word_count(r.question);
    const auto toks = text::normalized_tokens(r.question);
    if (toks.size() >= 2) ++bigrams[toks[0] + " " + toks[1]];
  }
  const double n = static_cast<double>(records.size());
  s.mean_words = MeanWords{static_cast<double>(ctx) / n, static_cast<double>(lp) / n,
                           static_cast<double>(sp) / n, static_cast<double>(q) / n};
  for (const auto& [bigram, count] : bigrams) {
    s.leading_bigrams.push_back({bigram, count, 100.0 * static_cast<double>(count) / n});
  }
  std::stable_sort(s.leading_bigrams.begin(), s.leading_bigrams.end(),
                   [](const LeadingBigram& a, const LeadingBigram& b) { return a.count > b.count; });
  return s;
}

}  // namespace qgbench::corpus
