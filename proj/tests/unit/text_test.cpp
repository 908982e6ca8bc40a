#include <gtest/gtest.h>

#include "qgbench/digest.hpp"
#include "qgbench/text.hpp"

using namespace qgbench;

TEST(Text, DecodeEncodeRoundTrip) {
  const std::string s = "caf\xC3\xA9 \xE2\x80\x9Cquoted\xE2\x80\x9D \xF0\x9F\x98\x80";
  EXPECT_EQ(text::encode_utf8(text::decode_utf8(s)), s);
  EXPECT_EQ(text::decode_utf8(s).size(), 15u);
}

TEST(Text, InvalidBytesBecomeReplacementCharacter) {
  const auto cps = text::decode_utf8("a\xFF" "b");
  ASSERT_EQ(cps.size(), 3u);
  EXPECT_EQ(cps[1], U'�');
}

TEST(Text, SplitWhitespaceHandlesUnicodeSpaces) {
  const auto parts = text::split_whitespace("  one\ttwo\xC2\xA0three\n four ");
  ASSERT_EQ(parts.size(), 4u);
  EXPECT_EQ(parts[2], "three");
  EXPECT_EQ(text::word_count(""), 0u);
  EXPECT_EQ(text::word_count("   "), 0u);
}

TEST(Text, NormalizeStripsEdgePunctuationAndLowercases) {
  EXPECT_EQ(text::normalize_token("(PPP)"), "ppp");
  EXPECT_EQ(text::normalize_token("Why?"), "why");
  EXPECT_EQ(text::normalize_token("doesn't"), "doesn't");
  EXPECT_EQ(text::normalize_token("\xE2\x80\x9CHello,\xE2\x80\x9D"), "hello");
  EXPECT_EQ(text::normalize_token("--"), "");
}

TEST(Text, NormalizedTokensDropEmptyPieces) {
  const auto toks = text::normalized_tokens("What is - Purchasing power parity (PPP)?");
  const std::vector<std::string> want = {"what", "is", "purchasing", "power", "parity", "ppp"};
  EXPECT_EQ(toks, want);
}

TEST(Text, TrimAndBlank) {
  EXPECT_EQ(text::trim("  a b \n"), "a b");
  EXPECT_TRUE(text::is_blank(" \t\n"));
  EXPECT_FALSE(text::is_blank(" x "));
}

TEST(Digest, KnownSha256Vectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(Sha256().update("a").update("bc").hex(), sha256_hex("abc"));
}
