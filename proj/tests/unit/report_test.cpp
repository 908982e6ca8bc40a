#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qgbench/corpus.hpp"
#include "qgbench/io.hpp"
#include "qgbench/report.hpp"

using namespace qgbench;
using report::Kind;
using promptkit::PromptSetting;

TEST(Typology, WorkedExamples) {
  EXPECT_EQ(report::classify_question("How did Pandita Ramabai break stereotypes?").kind, Kind::Procedural);
  EXPECT_EQ(report::classify_question("Why is the Ganges river dolphin blind?").kind, Kind::Cause);
  EXPECT_EQ(report::classify_question("Does universal basic income (UBI) reduce poverty?").kind,
            Kind::Verification);
  EXPECT_EQ(report::classify_question("What happens if oceans acidify?").kind, Kind::Consequence);
}

TEST(Typology, FurtherExamples) {
  EXPECT_EQ(report::classify_question("How did Brahmo Samaj reform Indian society?").kind, Kind::Procedural);
  EXPECT_EQ(report::classify_question("Why is urban waste disposal a serious problem in India?").kind,
            Kind::Cause);
  EXPECT_EQ(report::classify_question("Are Vedas older than Puranas?").kind, Kind::Verification);
  EXPECT_EQ(report::classify_question("How does the government deficit affect the economy?").kind,
            Kind::Consequence);
}

TEST(Typology, ModalsNegationsAndOther) {
  EXPECT_EQ(report::classify_question("How can we conserve water?").kind, Kind::Procedural);
  EXPECT_EQ(report::classify_question("How to make compost?").kind, Kind::Procedural);
  EXPECT_EQ(report::classify_question("Why can't plants grow in the dark?").kind, Kind::Cause);
  EXPECT_EQ(report::classify_question("Why can\xE2\x80\x99t plants grow in the dark?").kind, Kind::Cause);
  EXPECT_EQ(report::classify_question("What is photosynthesis?").kind, Kind::Other);
  EXPECT_EQ(report::classify_question("How many states are in India?").kind, Kind::Other);
  EXPECT_EQ(report::classify_question("Is democracy the best form of government?").kind, Kind::Verification);
  EXPECT_EQ(report::classify_question("").kind, Kind::Other);
}

TEST(Typology, DeepFlagFollowsKind) {
  const std::pair<Kind, bool> table[] = {{Kind::Procedural, true},
                                         {Kind::Cause, true},
                                         {Kind::Consequence, true},
                                         {Kind::Verification, false},
                                         {Kind::Other, false}};
  for (auto [k, deep] : table) EXPECT_EQ(report::is_deep(k), deep) << report::to_string(k);
  for (const char* q : {"How did it start?", "Why is it so?", "Does it work?", "What happens next?", "Who?"}) {
    const auto c = report::classify_question(q);
    EXPECT_EQ(c.deep, report::is_deep(c.kind)) << q;
  }
}

TEST(Typology, DeepRatio) {
  EXPECT_DOUBLE_EQ(report::deep_ratio({"How did Pandita Ramabai break stereotypes?",
                                       "Why is the Ganges river dolphin blind?",
                                       "Does universal basic income (UBI) reduce poverty?",
                                       "What happens if oceans acidify?"}),
                   0.75);
  EXPECT_EQ(report::deep_ratio({"Why is it so?"}), 1.0);
  EXPECT_EQ(report::deep_ratio({"Is it so?"}), 0.0);
  EXPECT_THROW(report::deep_ratio({}), EmptyInput);
}

namespace {

scoring::ScoreReport score(std::string model, PromptSetting s, double base) {
  scoring::ScoreReport r;
  r.run_id = model + "-" + std::string(promptkit::to_string(s));
  r.model_id = std::move(model);
  r.setting = s;
  r.n_scored = 10;
  r.corpus_means.rouge2 = {base, base / 2, base / 3};
  r.corpus_means.rougeL = {base + 0.1, base, base - 0.05};
  r.corpus_means.meteor = base * 0.9;
  r.corpus_means.chrf = base * 0.8;
  r.corpus_means.bleu = base * 0.1;
  return r;
}

report::ReportInputs sample_inputs() {
  report::ReportInputs in;
  in.stats = corpus::stats(corpus::parse_quads(io::read_file(QGBENCH_TEST_ROOT "/data/fixture10.ndjson")));
  in.top_bigrams = 3;
  in.scores = {score("text-davinci-003", PromptSetting::WithLongPrompt, 0.4),
               score("gpt-3.5-turbo", PromptSetting::WithLongPrompt, 0.3),
               score("text-davinci-003", PromptSetting::WithoutPrompt, 0.2)};
  agreement::AgreementReport a;
  a.n_items = 4;
  a.n_raters = 3;
  for (auto c : agreement::kCriteria) a.kappa[c] = 0.25 * static_cast<double>(c);
  in.agreement = a;
  in.ratings = {{"gpt-3.5-turbo", PromptSetting::WithLongPrompt, 4, {4.5, 4, 3.75, 2, 1}},
                {"text-davinci-003", PromptSetting::WithLongPrompt, 4, {4.25, 4.5, 3.5, 2.5, 1}},
                {"ghost", std::nullopt, 1, {3, 3, 3, 3, 3}}};
  return in;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(Render, Deterministic) {
  const auto a = report::render_report(sample_inputs());
  const auto b = report::render_report(sample_inputs());
  EXPECT_EQ(a.markdown, b.markdown);
  EXPECT_EQ(a.csv, b.csv);
}

TEST(Render, EmptyScoresGiveEmptyTables) {
  report::ReportInputs in;
  const auto d = report::render_report(in);
  EXPECT_NE(d.markdown.find("## Automatic evaluation"), std::string::npos);
  EXPECT_EQ(count(d.markdown, "*With"), 0u);
  EXPECT_EQ(d.csv.at("automatic.csv"),
            "Setting,Model,ROUGE-2 Precision,ROUGE-2 Recall,ROUGE-2 F1,ROUGE-L Precision,ROUGE-L Recall,"
            "ROUGE-L F1,METEOR,CHrF (%),BLEU (%),BERTScore\n");
  EXPECT_FALSE(d.csv.count("agreement.csv"));
  EXPECT_FALSE(d.csv.count("leading_bigrams.csv"));
}

TEST(Render, OneRowUnderOneHeading) {
  report::ReportInputs in;
  in.scores = {score("m", PromptSetting::WithShortPrompt, 0.5)};
  const auto d = report::render_report(in);
  EXPECT_EQ(count(d.markdown, "| *With Short Prompt* |"), 1u);
  EXPECT_EQ(count(d.markdown, "| m |"), 1u);
  EXPECT_EQ(count(d.markdown, "**"), 0u);  // nothing to compare against
}

TEST(Render, BoldsColumnMaximaWithinSetting) {
  const auto d = report::render_report(sample_inputs());
  // The davinci long-prompt row wins every automatic column; the lone
  // without-prompt row is not bolded.
  EXPECT_NE(d.markdown.find("| text-davinci-003 | **0.400** |"), std::string::npos);
  EXPECT_NE(d.markdown.find("| gpt-3.5-turbo | 0.300 |"), std::string::npos);
  EXPECT_NE(d.markdown.find("| text-davinci-003 | 0.200 |"), std::string::npos);
}

TEST(Render, SectionsCanBeDisabled) {
  auto in = sample_inputs();
  in.sections = {false, true, false, false};
  const auto d = report::render_report(in);
  EXPECT_EQ(d.markdown.find("## Corpus"), std::string::npos);
  EXPECT_EQ(d.markdown.find("## Human"), std::string::npos);
  EXPECT_EQ(d.csv.size(), 1u);
}

// Set QGBENCH_UPDATE_GOLDEN=1 to rewrite the files after a deliberate
// layout change; review the diff by hand.
TEST(Render, MatchesGoldenDocuments) {
  const std::filesystem::path dir = QGBENCH_TEST_ROOT "/golden/report";
  const auto d = report::render_report(sample_inputs());
  std::map<std::string, std::string> files = d.csv;
  files["report.md"] = d.markdown;
  if (std::getenv("QGBENCH_UPDATE_GOLDEN")) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : files) io::write_file_atomic(dir / name, content);
  }
  for (const auto& [name, content] : files) {
    EXPECT_EQ(content, io::read_file(dir / name)) << name;
  }
}
