#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "qgbench/porter.hpp"

using qgbench::porter::stem;

TEST(Porter, ClassicExamples) {
  EXPECT_EQ(stem("caresses"), "caress");
  EXPECT_EQ(stem("ponies"), "poni");
  EXPECT_EQ(stem("agreed"), "agre");
  EXPECT_EQ(stem("hopping"), "hop");
  EXPECT_EQ(stem("filing"), "file");
  EXPECT_EQ(stem("relational"), "relat");
  EXPECT_EQ(stem("generalization"), "gener");
  EXPECT_EQ(stem("adjustable"), "adjust");
  EXPECT_EQ(stem("controll"), "control");
}

// The original algorithm has no short-word guard: a lone plural "s" goes.
TEST(Porter, ShortWords) {
  EXPECT_EQ(stem("a"), "a");
  EXPECT_EQ(stem("is"), "i");
  EXPECT_EQ(stem(""), "");
}

// Reference pairs produced by an independent implementation of the
// original algorithm.
TEST(Porter, MatchesReferenceVocabulary) {
  std::ifstream in(QGBENCH_TEST_ROOT "/data/porter_vocab.tsv");
  ASSERT_TRUE(in);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos) << line;
    const auto word = line.substr(0, tab);
    const auto want = line.substr(tab + 1);
    EXPECT_EQ(stem(word), want) << word;
    ++n;
  }
  EXPECT_GT(n, 1000u);
}
