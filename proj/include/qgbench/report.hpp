#pragma once

// Question typology and the markdown/CSV report documents.

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qgbench/agreement.hpp"
#include "qgbench/corpus.hpp"
#include "qgbench/error.hpp"
#include "qgbench/promptkit.hpp"
#include "qgbench/scoring.hpp"
#include "qgbench/text.hpp"

namespace qgbench::report {

// ---------------------------------------------------------------------------
// Typology

enum class Kind { Procedural, Cause, Verification, Consequence, Other };

inline std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::Procedural: return "Procedural";
    case Kind::Cause: return "Cause";
    case Kind::Verification: return "Verification";
    case Kind::Consequence: return "Consequence";
    case Kind::Other: return "Other";
  }
  return "?";
}

/// Deep-reasoning categories. Judgemental questions have no surface pattern
/// and fall under Other.
inline constexpr bool is_deep(Kind k) {
  return k == Kind::Procedural || k == Kind::Cause || k == Kind::Consequence;
}

struct QuestionKind {
  Kind kind = Kind::Other;
  bool deep = false;
};

namespace detail {

template <std::size_t N>
bool one_of(std::string_view w, const std::string_view (&set)[N]) {
  return std::find(std::begin(set), std::end(set), w) != std::end(set);
}

/// Folds typographic apostrophes so "doesn’t" matches "doesn't".
inline std::string fold_apostrophes(std::string s) {
  static constexpr std::string_view curly = "\xE2\x80\x99";
  for (auto pos = s.find(curly); pos != std::string::npos; pos = s.find(curly, pos + 1)) {
    s.replace(pos, curly.size(), "'");
  }
  return s;
}

}  // namespace detail

/// Rule cascade on normalized tokens; consequence patterns are checked
/// first so "How does X affect Y?" is not read as procedural.
inline QuestionKind classify_question(std::string_view question) {
  auto toks = text::normalized_tokens(question);
  for (auto& t : toks) t = detail::fold_apostrophes(std::move(t));
  const std::string_view first = toks.size() > 0 ? std::string_view(toks[0]) : "";
  const std::string_view second = toks.size() > 1 ? std::string_view(toks[1]) : "";

  static constexpr std::string_view kDoForms[] = {"does", "do", "did"};
  static constexpr std::string_view kAffect[] = {"affect", "affects", "affected", "affecting"};
  // "how"/"why" followed by a modal or auxiliary verb (or "to"); negated
  // forms count for "why".
  static constexpr std::string_view kHowFollowers[] = {
      "did", "do", "does", "can", "could", "should", "would", "will", "may", "might", "must",
      "shall", "to"};
  static constexpr std::string_view kWhyFollowers[] = {
      "is",      "are",     "was",      "were",     "did",      "do",       "does",
      "has",     "have",    "had",      "can",      "could",    "should",   "would",
      "will",    "may",     "might",    "must",     "shall",    "isn't",    "aren't",
      "wasn't",  "weren't", "didn't",   "don't",    "doesn't",  "hasn't",   "haven't",
      "hadn't",  "can't",   "cannot",   "couldn't", "shouldn't", "wouldn't", "won't",
      "mustn't"};
  static constexpr std::string_view kVerificationLeads[] = {
      "does", "do", "did", "is", "are", "was", "were", "can", "could", "should", "would", "has",
      "have"};

  auto make = [](Kind k) { return QuestionKind{k, is_deep(k)}; };

  if (first == "what" && second == "happens") return make(Kind::Consequence);
  if (first == "how" && detail::one_of(second, kDoForms)) {
    for (std::size_t i = 2; i < toks.size(); ++i) {
      if (detail::one_of(toks[i], kAffect)) return make(Kind::Consequence);
    }
  }
  if (first == "how" && detail::one_of(second, kHowFollowers)) return make(Kind::Procedural);
  if (first == "why" && detail::one_of(second, kWhyFollowers)) return make(Kind::Cause);
  if (detail::one_of(first, kVerificationLeads)) return make(Kind::Verification);
  return make(Kind::Other);
}

inline double deep_ratio(const std::vector<std::string>& questions) {
  if (questions.empty()) throw EmptyInput("deep_ratio");
  std::size_t deep = 0;
  for (const auto& q : questions) deep += classify_question(q).deep ? 1 : 0;
  return static_cast<double>(deep) / static_cast<double>(questions.size());
}

// ---------------------------------------------------------------------------
// Rendering

struct Sections {
  bool corpus = true;
  bool automatic = true;
  bool human = true;
  bool agreement = true;
};

struct ReportInputs {
  std::optional<corpus::DatasetStats> stats;
  std::vector<scoring::ScoreReport> scores;
  std::optional<agreement::AgreementReport> agreement;
  std::vector<agreement::AggregateRow> ratings;
  std::size_t top_bigrams = 10;
  Sections sections;
};

struct DocumentSet {
  std::string markdown;
  std::map<std::string, std::string> csv;  // file name -> content
};

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string csv_field(const std::string& s) { return scoring::csv_escape(s); }

/// "what is" -> "What is".
inline std::string sentence_case(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 32);
  return s;
}

/// Markdown table where each setting opens a heading row and the best value
/// per column within a setting is bolded.
struct GroupedTable {
  std::vector<std::string> header;
  struct Row {
    std::string label;
    std::vector<std::optional<double>> values;
    std::vector<std::string> shown;
  };
  std::vector<std::pair<std::string, std::vector<Row>>> groups;

  std::string render() const {
    std::string out = "|";
    for (const auto& h : header) out += " " + h + " |";
    out += "\n|---|";
    for (std::size_t c = 1; c < header.size(); ++c) out += "---:|";
    out += '\n';
    for (const auto& [title, rows] : groups) {
      out += "| *" + title + "* |";
      for (std::size_t c = 1; c < header.size(); ++c) out += " |";
      out += '\n';
      const std::size_t ncols = header.size() - 1;
      std::vector<std::optional<double>> best(ncols);
      for (const auto& r : rows) {
        for (std::size_t c = 0; c < ncols; ++c) {
          if (r.values[c] && (!best[c] || *r.values[c] > *best[c])) best[c] = r.values[c];
        }
      }
      for (const auto& r : rows) {
        out += "| " + r.label + " |";
        for (std::size_t c = 0; c < ncols; ++c) {
          const bool top = rows.size() > 1 && r.values[c] && best[c] && *r.values[c] == *best[c];
          out += " " + (top ? "**" + r.shown[c] + "**" : r.shown[c]) + " |";
        }
        out += '\n';
      }
    }
    return out;
  }
};

inline std::string setting_title(std::optional<promptkit::PromptSetting> s) {
  return s ? std::string(promptkit::display_name(*s)) : std::string("Unknown");
}

}  // namespace detail

/// Pure: identical inputs give byte-identical documents.
inline DocumentSet render_report(const ReportInputs& in) {
  DocumentSet docs;
  std::string& md = docs.markdown;
  md = "# Question generation benchmark report\n";

  if (in.sections.corpus && in.stats) {
    const auto& s = *in.stats;
    md += "\n## Corpus\n\n| Statistic | Value |\n|---|---:|\n";
    md += "| Records | " + std::to_string(s.total) + " |\n";
    for (const auto& [subject, n] : s.per_subject) {
      md += "| " + subject + " | " + std::to_string(n) + " |\n";
    }
    if (s.mean_words) {
      md += "| Mean context words | " + detail::fixed(s.mean_words->context, 2) + " |\n";
      md += "| Mean long prompt words | " + detail::fixed(s.mean_words->long_prompt, 2) + " |\n";
      md += "| Mean short prompt words | " + detail::fixed(s.mean_words->short_prompt, 2) + " |\n";
      md += "| Mean question words | " + detail::fixed(s.mean_words->question, 2) + " |\n";
    }
    md += "\n### Leading bigrams\n\n| Rank | Bigram | % |\n|---:|---|---:|\n";
    std::string csv = "rank,bigram,count,share\n";
    const std::size_t n = std::min(in.top_bigrams, s.leading_bigrams.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto& b = s.leading_bigrams[i];
      md += "| " + std::to_string(i + 1) + " | " + detail::sentence_case(b.bigram) + " | " +
            detail::fixed(b.share, 2) + " |\n";
      csv += std::to_string(i + 1) + "," + detail::csv_field(b.bigram) + "," +
             std::to_string(b.count) + "," + detail::fixed(b.share, 2) + "\n";
    }
    docs.csv["leading_bigrams.csv"] = std::move(csv);
  }

  if (in.sections.automatic) {
    detail::GroupedTable table;
    table.header.push_back("Model");
    for (const auto& c : scoring::metric_columns()) table.header.push_back(c);
    std::string csv = "Setting,Model";
    for (const auto& c : scoring::metric_columns()) csv += "," + detail::csv_field(c);
    csv += '\n';
    for (auto setting : promptkit::kAllSettings) {
      std::vector<detail::GroupedTable::Row> rows;
      for (const auto& r : in.scores) {
        if (r.setting != setting) continue;
        detail::GroupedTable::Row row{r.model_id, scoring::column_values(r.corpus_means), {}};
        csv += detail::csv_field(std::string(promptkit::display_name(setting))) + "," +
               detail::csv_field(r.model_id);
        for (std::size_t c = 0; c < row.values.size(); ++c) {
          row.shown.push_back(scoring::format_column(c, row.values[c]));
          csv += "," + row.shown.back();
        }
        csv += '\n';
        rows.push_back(std::move(row));
      }
      if (!rows.empty()) {
        table.groups.emplace_back(std::string(promptkit::display_name(setting)), std::move(rows));
      }
    }
    md += "\n## Automatic evaluation\n\n" + table.render();
    docs.csv["automatic.csv"] = std::move(csv);
  }

  if (in.sections.human) {
    detail::GroupedTable table;
    table.header.push_back("Model");
    for (auto name : agreement::kCriterionNames) table.header.emplace_back(name);
    std::vector<std::optional<promptkit::PromptSetting>> order(std::begin(promptkit::kAllSettings),
                                                               std::end(promptkit::kAllSettings));
    order.push_back(std::nullopt);
    for (const auto& setting : order) {
      std::vector<detail::GroupedTable::Row> rows;
      for (const auto& r : in.ratings) {
        if (r.setting != setting) continue;
        detail::GroupedTable::Row row{r.model_id, {}, {}};
        for (double m : r.mean) {
          row.values.emplace_back(m);
          row.shown.push_back(agreement::format_mean(m));
        }
        rows.push_back(std::move(row));
      }
      if (!rows.empty()) table.groups.emplace_back(detail::setting_title(setting), std::move(rows));
    }
    md += "\n## Human evaluation\n\n" + table.render();
    docs.csv["human.csv"] = agreement::to_csv(in.ratings);
  }

  if (in.sections.agreement && in.agreement) {
    const auto& a = *in.agreement;
    md += "\n## Inter-annotator agreement\n\n";
    md += std::to_string(a.n_raters) + " raters, " + std::to_string(a.n_items) + " items.\n\n";
    md += "| Criterion | Fleiss' kappa |\n|---|---:|\n";
    std::string csv = "criterion,kappa\n";
    for (const auto& [c, k] : a.kappa) {
      md += "| " + std::string(agreement::to_string(c)) + " | " + detail::fixed(k, 2) + " |\n";
      csv += std::string(agreement::to_string(c)) + "," + detail::fixed(k, 4) + "\n";
    }
    docs.csv["agreement.csv"] = std::move(csv);
  }
  return docs;
}

}  // namespace qgbench::report
