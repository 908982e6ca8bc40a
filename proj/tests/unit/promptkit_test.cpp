#include <gtest/gtest.h>

#include "qgbench/corpus.hpp"
#include "qgbench/io.hpp"
#include "qgbench/promptkit.hpp"
#include "support/synthetic.hpp"

using namespace qgbench;
using promptkit::Marker;
using promptkit::PromptSetting;
using promptkit::Side;

namespace {

corpus::QuadRecord ppp() {
  return corpus::parse_quads(io::read_file(QGBENCH_TEST_ROOT "/data/fixture5.ndjson")).front();
}

const std::string kPppContext =
    "Purchasing power parity (PPP) is an economic indicator that signifies the purchasing power "
    "of the currencies of various nations of the world against each other. It helps in comparing "
    "living standards between different countries and estimating economic productivity.";

}  // namespace

TEST(Instruction, LongPromptTemplate) {
  EXPECT_EQ(promptkit::render_instruction(ppp(), PromptSetting::WithLongPrompt).text,
            "Given the context " + kPppContext +
                " and the long prompt purchasing power parity helps, generate a Question");
}

TEST(Instruction, ShortPromptTemplate) {
  EXPECT_EQ(promptkit::render_instruction(ppp(), PromptSetting::WithShortPrompt).text,
            "Given the context " + kPppContext +
                " and the short prompt purchasing power, generate a Question");
}

TEST(Instruction, WithoutPromptTemplate) {
  EXPECT_EQ(promptkit::render_instruction(ppp(), PromptSetting::WithoutPrompt).text,
            "Given the context " + kPppContext + ", generate a Question");
}

TEST(Segmented, SourceLayouts) {
  const auto r = ppp();
  EXPECT_EQ(promptkit::flatten(promptkit::render_segmented(r, PromptSetting::WithShortPrompt, Side::Source)),
            "[CLS] " + kPppContext + " [SEP] purchasing power [SEP]");
  EXPECT_EQ(promptkit::flatten(promptkit::render_segmented(r, PromptSetting::WithLongPrompt, Side::Source)),
            "[CLS] " + kPppContext + " [SEP] purchasing power parity helps [SEP]");
  EXPECT_EQ(promptkit::flatten(promptkit::render_segmented(r, PromptSetting::WithoutPrompt, Side::Source)),
            "[CLS] " + kPppContext + " [SEP]");
}

TEST(Segmented, TargetIsQuestionForEverySetting) {
  for (auto s : promptkit::kAllSettings) {
    EXPECT_EQ(promptkit::flatten(promptkit::render_segmented(ppp(), s, Side::Target)),
              "[CLS] What does purchasing power parity do? [SEP]");
  }
}

TEST(SegmentedProperty, MarkerCountLaw) {
  for (const auto& r : testsupport::synthetic_corpus(50)) {
    for (auto s : promptkit::kAllSettings) {
      const auto src = promptkit::render_segmented(r, s, Side::Source);
      const std::size_t want_sep = s == PromptSetting::WithoutPrompt ? 1 : 2;
      EXPECT_EQ(promptkit::count_markers(src, Marker::SEP), want_sep);
      EXPECT_EQ(promptkit::count_markers(src, Marker::CLS), 1u);
      EXPECT_EQ(src.segments.front().marker, Marker::CLS);
      const auto tgt = promptkit::render_segmented(r, s, Side::Target);
      EXPECT_EQ(promptkit::count_markers(tgt, Marker::SEP), 1u);
      EXPECT_EQ(promptkit::count_markers(tgt, Marker::CLS), 1u);
    }
  }
}

TEST(InstructionProperty, ContainsFieldsVerbatim) {
  for (const auto& r : testsupport::synthetic_corpus(50, 9)) {
    for (auto s : promptkit::kAllSettings) {
      const auto text = promptkit::render_instruction(r, s).text;
      EXPECT_NE(text.find(r.context), std::string::npos);
      if (s == PromptSetting::WithLongPrompt) {
        EXPECT_NE(text.find(r.long_prompt), std::string::npos);
      }
      if (s == PromptSetting::WithShortPrompt) {
        EXPECT_NE(text.find(r.short_prompt), std::string::npos);
      }
      EXPECT_TRUE(text.ends_with(", generate a Question"));
    }
  }
}

TEST(Settings, NamesRoundTrip) {
  for (auto s : promptkit::kAllSettings) {
    EXPECT_EQ(promptkit::setting_from_string(promptkit::to_string(s)), s);
  }
  EXPECT_EQ(promptkit::setting_from_string("long"), PromptSetting::WithLongPrompt);
  EXPECT_EQ(promptkit::setting_from_string("none"), PromptSetting::WithoutPrompt);
  EXPECT_THROW(promptkit::setting_from_string("medium"), InvalidArgument);
  EXPECT_EQ(promptkit::display_name(PromptSetting::WithShortPrompt), "With Short Prompt");
}

TEST(Golden, FixtureRenderingsMatchCheckedInFiles) {
  const auto records =
      corpus::parse_quads(io::read_file(QGBENCH_TEST_ROOT "/data/fixture5.ndjson"));
  for (auto s : promptkit::kAllSettings) {
    for (std::string kind : {"instruction", "segmented-source", "segmented-target"}) {
      std::string got;
      for (const auto& r : records) {
        if (kind == "instruction") {
          got += promptkit::render_instruction(r, s).text;
        } else {
          got += promptkit::flatten(promptkit::render_segmented(
              r, s, kind == "segmented-target" ? Side::Target : Side::Source));
        }
        got += '\n';
      }
      const std::string path = std::string(QGBENCH_TEST_ROOT "/golden/rendering/") +
                               std::string(promptkit::to_string(s)) + "." + kind + ".txt";
      EXPECT_EQ(got, io::read_file(path)) << path;
    }
  }
}
