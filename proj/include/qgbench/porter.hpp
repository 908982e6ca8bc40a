#pragma once

// Porter (1980) suffix stripper, original published rule set: step 2 uses
// ABLI -> ABLE, there is no LOGI rule, and short words are not special-cased.
// Works on code points; only ASCII a/e/i/o/u/y participate as vowels.

#include <string>
#include <string_view>
#include <vector>

#include "qgbench/text.hpp"

namespace qgbench::porter {

namespace detail {

using Word = std::u32string;

inline bool ends_with(const Word& w, std::u32string_view suffix) {
  return w.size() >= suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline Word drop(const Word& w, std::size_t n) { return w.substr(0, w.size() - n); }

inline bool is_vowel_letter(char32_t c) {
  return c == U'a' || c == U'e' || c == U'i' || c == U'o' || c == U'u';
}

/// Consonant flag per position; y is a consonant at the start or after a vowel.
inline std::vector<bool> consonants(const Word& w) {
  std::vector<bool> flags(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (is_vowel_letter(w[i])) {
      flags[i] = false;
    } else if (w[i] == U'y') {
      flags[i] = (i == 0) ? true : !flags[i - 1];
    } else {
      flags[i] = true;
    }
  }
  return flags;
}

/// m in [C](VC)^m[V].
inline int measure(const Word& w) {
  const auto f = consonants(w);
  int m = 0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (!f[i - 1] && f[i]) ++m;
  }
  return m;
}

inline bool contains_vowel(const Word& w) {
  for (bool c : consonants(w)) {
    if (!c) return true;
  }
  return false;
}

inline bool is_consonant_at(const Word& w, std::size_t i) { return consonants(w)[i]; }

inline bool ends_double_consonant(const Word& w) {
  return w.size() >= 2 && w[w.size() - 1] == w[w.size() - 2] && is_consonant_at(w, w.size() - 1);
}

/// *o: ends consonant-vowel-consonant and the last letter is not w, x or y.
inline bool ends_cvc(const Word& w) {
  if (w.size() < 3) return false;
  const auto f = consonants(w);
  const auto n = w.size();
  const char32_t last = w[n - 1];
  return f[n - 3] && !f[n - 2] && f[n - 1] && last != U'w' && last != U'x' && last != U'y';
}

struct Rule {
  std::u32string_view suffix;
  std::u32string_view replacement;
  int min_measure;  // condition is measure(stem) > min_measure
};

/// The first rule whose suffix matches decides; if its condition fails the
/// word is returned unchanged.
template <std::size_t N>
Word apply_rules(const Word& w, const Rule (&rules)[N]) {
  for (const auto& r : rules) {
    if (ends_with(w, r.suffix)) {
      Word stem = drop(w, r.suffix.size());
      if (measure(stem) > r.min_measure) return stem + Word(r.replacement);
      return w;
    }
  }
  return w;
}

inline Word step1a(const Word& w) {
  if (ends_with(w, U"sses")) return drop(w, 2);
  if (ends_with(w, U"ies")) return drop(w, 2);
  if (ends_with(w, U"ss")) return w;
  if (ends_with(w, U"s")) return drop(w, 1);
  return w;
}

inline Word step1b(const Word& w) {
  if (ends_with(w, U"eed")) {
    Word stem = drop(w, 3);
    return measure(stem) > 0 ? stem + U"ee" : w;
  }
  Word stem;
  bool stripped = false;
  for (std::u32string_view suffix : {std::u32string_view(U"ed"), std::u32string_view(U"ing")}) {
    if (ends_with(w, suffix)) {
      stem = drop(w, suffix.size());
      if (contains_vowel(stem)) {
        stripped = true;
        break;
      }
    }
  }
  if (!stripped) return w;
  if (ends_with(stem, U"at") || ends_with(stem, U"bl") || ends_with(stem, U"iz")) return stem + U"e";
  if (ends_double_consonant(stem)) {
    const char32_t last = stem.back();
    if (last != U'l' && last != U's' && last != U'z') return drop(stem, 1);
    return stem;
  }
  if (measure(stem) == 1 && ends_cvc(stem)) return stem + U"e";
  return stem;
}

inline Word step1c(const Word& w) {
  if (ends_with(w, U"y")) {
    Word stem = drop(w, 1);
    if (contains_vowel(stem)) return stem + U"i";
  }
  return w;
}

inline Word step2(const Word& w) {
  static constexpr Rule rules[] = {
      {U"ational", U"ate", 0}, {U"tional", U"tion", 0}, {U"enci", U"ence", 0},
      {U"anci", U"ance", 0},   {U"izer", U"ize", 0},    {U"abli", U"able", 0},
      {U"alli", U"al", 0},     {U"entli", U"ent", 0},   {U"eli", U"e", 0},
      {U"ousli", U"ous", 0},   {U"ization", U"ize", 0}, {U"ation", U"ate", 0},
      {U"ator", U"ate", 0},    {U"alism", U"al", 0},    {U"iveness", U"ive", 0},
      {U"fulness", U"ful", 0}, {U"ousness", U"ous", 0}, {U"aliti", U"al", 0},
      {U"iviti", U"ive", 0},   {U"biliti", U"ble", 0},
  };
  return apply_rules(w, rules);
}

inline Word step3(const Word& w) {
  static constexpr Rule rules[] = {
      {U"icate", U"ic", 0}, {U"ative", U"", 0}, {U"alize", U"al", 0}, {U"iciti", U"ic", 0},
      {U"ical", U"ic", 0},  {U"ful", U"", 0},   {U"ness", U"", 0},
  };
  return apply_rules(w, rules);
}

inline Word step4(const Word& w) {
  static constexpr std::u32string_view suffixes[] = {
      U"al",  U"ance", U"ence", U"er",  U"ic",  U"able", U"ible", U"ant", U"ement", U"ment",
      U"ent", U"ion",  U"ou",   U"ism", U"ate", U"iti",  U"ous",  U"ive", U"ize"};
  for (auto suffix : suffixes) {
    if (!ends_with(w, suffix)) continue;
    Word stem = drop(w, suffix.size());
    bool ok = measure(stem) > 1;
    if (ok && suffix == U"ion") ok = stem.back() == U's' || stem.back() == U't';
    return ok ? stem : w;
  }
  return w;
}

inline Word step5a(const Word& w) {
  if (!ends_with(w, U"e")) return w;
  Word stem = drop(w, 1);
  const int m = measure(stem);
  if (m > 1 || (m == 1 && !ends_cvc(stem))) return stem;
  return w;
}

inline Word step5b(const Word& w) {
  if (ends_with(w, U"ll") && measure(drop(w, 1)) > 1) return drop(w, 1);
  return w;
}

}  // namespace detail

/// Stems one already-lowercased token.
inline std::string stem(std::string_view token) {
  const auto cps = text::decode_utf8(token);
  detail::Word w(cps.begin(), cps.end());
  w = detail::step1a(w);
  w = detail::step1b(w);
  w = detail::step1c(w);
  w = detail::step2(w);
  w = detail::step3(w);
  w = detail::step4(w);
  w = detail::step5a(w);
  w = detail::step5b(w);
  return text::encode_utf8(std::vector<char32_t>(w.begin(), w.end()));
}

}  // namespace qgbench::porter
