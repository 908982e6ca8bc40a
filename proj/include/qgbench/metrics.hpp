#pragma once

// Reference-based scores for a single generated question against its gold
// question: ROUGE-N, ROUGE-L, METEOR, chrF, BLEU and embedding-based
// BERTScore. All values are in [0, 1]; every zero denominator yields 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qgbench/error.hpp"
#include "qgbench/porter.hpp"
#include "qgbench/text.hpp"

namespace qgbench::metrics {

/// Lowercased, punctuation-stripped tokens. Never contains empty tokens.
struct TokenSeq {
  std::vector<std::string> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

inline TokenSeq tokenize(std::string_view text) { return {text::normalized_tokens(text)}; }

struct PRF {
  double precision = 0;
  double recall = 0;
  double f1 = 0;

  static PRF from(double p, double r) { return {p, r, (p + r == 0) ? 0.0 : 2 * p * r / (p + r)}; }
  friend bool operator==(const PRF&, const PRF&) = default;
};

inline double ratio(double num, std::size_t den) {
  return den == 0 ? 0.0 : num / static_cast<double>(den);
}

namespace detail {

/// n-gram -> occurrence count. Tokens are joined with a unit separator,
/// which cannot occur inside a normalized token.
inline std::unordered_map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& toks,
                                                                 std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (n == 0 || toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key = toks[i];
    for (std::size_t k = 1; k < n; ++k) {
      key += '\x1f';
      key += toks[i + k];
    }
    ++counts[key];
  }
  return counts;
}

template <class Map>
std::size_t clipped_overlap(const Map& cand, const Map& ref) {
  std::size_t hits = 0;
  for (const auto& [gram, count] : cand) {
    if (auto it = ref.find(gram); it != ref.end()) hits += std::min(count, it->second);
  }
  return hits;
}

inline std::size_t ngram_total(std::size_t len, std::size_t n) { return len >= n ? len - n + 1 : 0; }

}  // namespace detail

// ---------------------------------------------------------------------------
// ROUGE

inline PRF rouge_n(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n) {
  if (n == 0) throw InvalidArgument("rouge_n requires n >= 1");
  const auto hits = static_cast<double>(detail::clipped_overlap(
      detail::ngram_counts(candidate.tokens, n), detail::ngram_counts(reference.tokens, n)));
  return PRF::from(ratio(hits, detail::ngram_total(candidate.size(), n)),
                   ratio(hits, detail::ngram_total(reference.size(), n)));
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      cur[j + 1] = a[i] == b[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline PRF rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
  const auto l = static_cast<double>(lcs_length(candidate.tokens, reference.tokens));
  return PRF::from(ratio(l, candidate.size()), ratio(l, reference.size()));
}

// ---------------------------------------------------------------------------
// METEOR

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
  /// Search-node cap for the chunk-minimising alignment. Only reached by
  /// inputs with long runs of repeated tokens; the best alignment found so
  /// far is then used.
  std::size_t search_budget = 2'000'000;
};

struct Alignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  std::vector<std::ptrdiff_t> target;  // candidate position -> reference position or -1
  bool exhaustive = true;              // false when the search budget ran out
};

namespace detail {

/// Finds a one-to-one alignment that (1) uses the maximum number of exact
/// matches, (2) then the maximum number of Porter-stem matches among the
/// remaining tokens, and (3) among those, has the fewest chunks. A chunk is
/// a maximal run of candidate tokens aligned to consecutive reference tokens.
class MeteorAligner {
 public:
  MeteorAligner(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                std::size_t budget)
      : budget_(budget) {
    // Interned ids for surface forms and stems.
    std::unordered_map<std::string, int> surface_ids, stem_ids;
    auto intern = [](std::unordered_map<std::string, int>& ids, const std::string& s) {
      return ids.try_emplace(s, static_cast<int>(ids.size())).first->second;
    };
    for (const auto& t : cand) {
      c_surface_.push_back(intern(surface_ids, t));
      c_stem_.push_back(intern(stem_ids, porter::stem(t)));
    }
    for (const auto& t : ref) {
      r_surface_.push_back(intern(surface_ids, t));
      r_stem_.push_back(intern(stem_ids, porter::stem(t)));
    }
    const std::size_t ns = surface_ids.size();
    const std::size_t nst = stem_ids.size();

    std::vector<std::size_t> c_count(ns, 0), r_count(ns, 0);
    for (int s : c_surface_) ++c_count[static_cast<std::size_t>(s)];
    for (int s : r_surface_) ++r_count[static_cast<std::size_t>(s)];
    exact_quota_.resize(ns);
    c_spare_.resize(ns);
    r_spare_.resize(ns);
    for (std::size_t s = 0; s < ns; ++s) {
      exact_quota_[s] = std::min(c_count[s], r_count[s]);
      c_spare_[s] = c_count[s] - exact_quota_[s];
      r_spare_[s] = r_count[s] - exact_quota_[s];
    }
    // Stem-stage quota: leftovers of each side grouped by stem.
    std::vector<std::size_t> c_left(nst, 0), r_left(nst, 0);
    std::vector<int> stem_of_surface(ns, -1);
    for (std::size_t i = 0; i < cand.size(); ++i) {
      stem_of_surface[static_cast<std::size_t>(c_surface_[i])] = c_stem_[i];
    }
    for (std::size_t j = 0; j < ref.size(); ++j) {
      stem_of_surface[static_cast<std::size_t>(r_surface_[j])] = r_stem_[j];
    }
    for (std::size_t s = 0; s < ns; ++s) {
      c_left[static_cast<std::size_t>(stem_of_surface[s])] += c_spare_[s];
      r_left[static_cast<std::size_t>(stem_of_surface[s])] += r_spare_[s];
    }
    stem_quota_.resize(nst);
    for (std::size_t s = 0; s < nst; ++s) stem_quota_[s] = std::min(c_left[s], r_left[s]);

    for (auto q : exact_quota_) total_matches_ += q;
    for (auto q : stem_quota_) total_matches_ += q;

    // Suffix counts of candidate positions per surface and per stem, used to
    // prune branches that can no longer meet a quota.
    c_surface_suffix_.assign(cand.size() + 1, std::vector<std::size_t>());
    c_stem_suffix_.assign(cand.size() + 1, std::vector<std::size_t>());
    c_surface_suffix_[cand.size()].assign(ns, 0);
    c_stem_suffix_[cand.size()].assign(nst, 0);
    for (std::size_t i = cand.size(); i-- > 0;) {
      c_surface_suffix_[i] = c_surface_suffix_[i + 1];
      c_stem_suffix_[i] = c_stem_suffix_[i + 1];
      ++c_surface_suffix_[i][static_cast<std::size_t>(c_surface_[i])];
      ++c_stem_suffix_[i][static_cast<std::size_t>(c_stem_[i])];
    }
  }

  Alignment run() {
    Alignment out;
    out.matches = total_matches_;
    out.target.assign(c_surface_.size(), -1);
    if (total_matches_ == 0) return out;

    exact_left_ = exact_quota_;
    stem_left_ = stem_quota_;
    c_spare_left_ = c_spare_;
    r_spare_left_ = r_spare_;
    r_used_.assign(r_surface_.size(), false);
    current_.assign(c_surface_.size(), -1);
    best_chunks_ = std::numeric_limits<std::size_t>::max();
    search(0, -1, 0, 0);
    out.chunks = best_chunks_;
    out.target = best_;
    out.exhaustive = nodes_ <= budget_;
    return out;
  }

 private:
  bool quotas_reachable(std::size_t i) const {
    for (std::size_t s = 0; s < exact_left_.size(); ++s) {
      if (exact_left_[s] > c_surface_suffix_[i][s]) return false;
    }
    for (std::size_t s = 0; s < stem_left_.size(); ++s) {
      if (stem_left_[s] > c_stem_suffix_[i][s]) return false;
    }
    return true;
  }

  void try_target(std::size_t i, std::ptrdiff_t prev, std::size_t chunks, std::size_t matched,
                  std::size_t j) {
    if (r_used_[j]) return;
    const auto cs = static_cast<std::size_t>(c_surface_[i]);
    const auto rs = static_cast<std::size_t>(r_surface_[j]);
    const auto stem = static_cast<std::size_t>(c_stem_[i]);
    const bool exact = cs == rs;
    if (exact) {
      if (exact_left_[cs] == 0) return;
    } else {
      if (c_stem_[i] != r_stem_[j] || stem_left_[stem] == 0 || c_spare_left_[cs] == 0 ||
          r_spare_left_[rs] == 0) {
        return;
      }
    }
    const bool continues = prev >= 0 && static_cast<std::ptrdiff_t>(j) == prev + 1;
    const std::size_t next_chunks = chunks + (continues ? 0 : 1);
    if (next_chunks >= best_chunks_) return;

    r_used_[j] = true;
    current_[i] = static_cast<std::ptrdiff_t>(j);
    if (exact) {
      --exact_left_[cs];
    } else {
      --stem_left_[stem];
      --c_spare_left_[cs];
      --r_spare_left_[rs];
    }
    search(i + 1, static_cast<std::ptrdiff_t>(j), next_chunks, matched + 1);
    if (exact) {
      ++exact_left_[cs];
    } else {
      ++stem_left_[stem];
      ++c_spare_left_[cs];
      ++r_spare_left_[rs];
    }
    current_[i] = -1;
    r_used_[j] = false;
  }

  void search(std::size_t i, std::ptrdiff_t prev, std::size_t chunks, std::size_t matched) {
    if (best_chunks_ <= 1 || ++nodes_ > budget_) return;
    if (matched == total_matches_) {
      if (chunks < best_chunks_) {
        best_chunks_ = chunks;
        best_ = current_;
      }
      return;
    }
    if (i == c_surface_.size() || !quotas_reachable(i)) return;

    // Extending the current chunk first finds good bounds early.
    if (prev >= 0 && static_cast<std::size_t>(prev) + 1 < r_surface_.size()) {
      try_target(i, prev, chunks, matched, static_cast<std::size_t>(prev) + 1);
    }
    for (std::size_t j = 0; j < r_surface_.size(); ++j) {
      if (prev >= 0 && j == static_cast<std::size_t>(prev) + 1) continue;
      try_target(i, prev, chunks, matched, j);
    }
    // Leave position i unaligned.
    search(i + 1, -1, chunks, matched);
  }

  std::size_t budget_;
  std::size_t nodes_ = 0;
  std::vector<int> c_surface_, c_stem_, r_surface_, r_stem_;
  std::vector<std::size_t> exact_quota_, stem_quota_, c_spare_, r_spare_;
  std::vector<std::vector<std::size_t>> c_surface_suffix_, c_stem_suffix_;
  std::size_t total_matches_ = 0;

  std::vector<std::size_t> exact_left_, stem_left_, c_spare_left_, r_spare_left_;
  std::vector<bool> r_used_;
  std::vector<std::ptrdiff_t> current_, best_;
  std::size_t best_chunks_ = 0;
};

}  // namespace detail

inline Alignment meteor_align(const TokenSeq& candidate, const TokenSeq& reference,
                              const MeteorParams& params = {}) {
  return detail::MeteorAligner(candidate.tokens, reference.tokens, params.search_budget).run();
}

inline double meteor(const TokenSeq& candidate, const TokenSeq& reference,
                     const MeteorParams& params = {}) {
  const auto a = meteor_align(candidate, reference, params);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double p = m / static_cast<double>(candidate.size());
  const double r = m / static_cast<double>(reference.size());
  const double f_mean = p * r / (params.alpha * p + (1 - params.alpha) * r);
  const double penalty =
      params.gamma * std::pow(static_cast<double>(a.chunks) / m, params.beta);
  return f_mean * (1 - penalty);
}

// ---------------------------------------------------------------------------
// chrF

struct ChrfParams {
  std::size_t max_n = 6;
  double beta = 2.0;
};

/// Character n-gram F-beta on code points with whitespace removed. Orders
/// for which the reference has no n-grams are skipped; precision and recall
/// are averaged over the remaining orders before combining.
inline double chrf(std::string_view candidate, std::string_view reference,
                   const ChrfParams& params = {}) {
  auto strip = [](std::string_view s) {
    std::u32string out;
    for (char32_t c : text::decode_utf8(s)) {
      if (!text::is_space(c)) out.push_back(c);
    }
    return out;
  };
  const auto cand = strip(candidate);
  const auto ref = strip(reference);
  auto grams = [](const std::u32string& s, std::size_t n) {
    std::unordered_map<std::u32string, std::size_t> counts;
    for (std::size_t i = 0; i + n <= s.size(); ++i) ++counts[s.substr(i, n)];
    return counts;
  };
  double p_sum = 0, r_sum = 0;
  std::size_t orders = 0;
  for (std::size_t n = 1; n <= params.max_n; ++n) {
    const std::size_t ref_total = detail::ngram_total(ref.size(), n);
    if (ref_total == 0) continue;
    const std::size_t cand_total = detail::ngram_total(cand.size(), n);
    const auto hits = static_cast<double>(detail::clipped_overlap(grams(cand, n), grams(ref, n)));
    p_sum += ratio(hits, cand_total);
    r_sum += ratio(hits, ref_total);
    ++orders;
  }
  if (orders == 0) return 0.0;
  const double p = p_sum / static_cast<double>(orders);
  const double r = r_sum / static_cast<double>(orders);
  if (p == 0 && r == 0) return 0.0;
  const double b2 = params.beta * params.beta;
  return (1 + b2) * p * r / (b2 * p + r);
}

// ---------------------------------------------------------------------------
// BLEU

struct BleuParams {
  std::size_t max_n = 4;
  double epsilon = 1e-9;
};

/// Sufficient statistics; corpus BLEU sums these over pairs.
struct BleuStats {
  std::vector<std::size_t> matches;
  std::vector<std::size_t> totals;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;

  BleuStats& operator+=(const BleuStats& o) {
    if (matches.size() < o.matches.size()) {
      matches.resize(o.matches.size(), 0);
      totals.resize(o.totals.size(), 0);
    }
    for (std::size_t k = 0; k < o.matches.size(); ++k) {
      matches[k] += o.matches[k];
      totals[k] += o.totals[k];
    }
    candidate_length += o.candidate_length;
    reference_length += o.reference_length;
    return *this;
  }
};

inline BleuStats bleu_stats(const TokenSeq& candidate, const TokenSeq& reference,
                            std::size_t max_n = 4) {
  BleuStats s;
  s.candidate_length = candidate.size();
  s.reference_length = reference.size();
  for (std::size_t n = 1; n <= max_n; ++n) {
    s.matches.push_back(detail::clipped_overlap(detail::ngram_counts(candidate.tokens, n),
                                                detail::ngram_counts(reference.tokens, n)));
    s.totals.push_back(detail::ngram_total(candidate.size(), n));
  }
  return s;
}

/// Geometric mean of modified precisions over the orders the candidate is
/// long enough to have (effective order), zero match counts replaced by
/// epsilon, times the brevity penalty exp(1 - |ref|/|cand|) when shorter.
inline double bleu_from_stats(const BleuStats& s, const BleuParams& params = {}) {
  if (s.candidate_length == 0) return 0.0;
  double log_sum = 0;
  std::size_t orders = 0;
  for (std::size_t k = 0; k < s.totals.size() && k < params.max_n; ++k) {
    if (s.totals[k] == 0) break;
    const double num = s.matches[k] ? static_cast<double>(s.matches[k]) : params.epsilon;
    log_sum += std::log(num / static_cast<double>(s.totals[k]));
    ++orders;
  }
  const double bp =
      s.candidate_length >= s.reference_length
          ? 1.0
          : std::exp(1.0 - static_cast<double>(s.reference_length) /
                               static_cast<double>(s.candidate_length));
  return bp * std::exp(log_sum / static_cast<double>(orders));
}

inline double bleu(const TokenSeq& candidate, const TokenSeq& reference,
                   const BleuParams& params = {}) {
  return bleu_from_stats(bleu_stats(candidate, reference, params.max_n), params);
}

inline double corpus_bleu(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references,
                          const BleuParams& params = {}) {
  if (candidates.size() != references.size()) {
    throw InvalidArgument("corpus_bleu: candidate and reference counts differ");
  }
  BleuStats pooled;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    pooled += bleu_stats(candidates[i], references[i], params.max_n);
  }
  return bleu_from_stats(pooled, params);
}

// ---------------------------------------------------------------------------
// BERTScore (greedy cosine matching over supplied token embeddings)

using Embedding = std::vector<double>;

namespace detail {

inline double norm(const Embedding& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double cosine(const Embedding& a, double na, const Embedding& b, double nb) {
  double dot = 0;
  for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
  return dot / (na * nb);
}

}  // namespace detail

/// P = mean over candidate vectors of their best cosine against the
/// reference side, R symmetrically. No idf weighting, no baseline rescaling.
inline PRF bert_score(std::span<const Embedding> cand, std::span<const Embedding> ref) {
  if (cand.empty() || ref.empty()) return {};
  const std::size_t dim = cand.front().size();
  std::vector<double> cn, rn;
  for (const auto& v : cand) {
    if (v.size() != dim) throw DimensionMismatch(dim, v.size());
    cn.push_back(detail::norm(v));
  }
  for (const auto& v : ref) {
    if (v.size() != dim) throw DimensionMismatch(dim, v.size());
    rn.push_back(detail::norm(v));
  }
  for (double n : cn) {
    if (n == 0) throw InvalidArgument("bert_score: zero-length embedding");
  }
  for (double n : rn) {
    if (n == 0) throw InvalidArgument("bert_score: zero-length embedding");
  }
  std::vector<double> best_c(cand.size(), -1.0), best_r(ref.size(), -1.0);
  for (std::size_t i = 0; i < cand.size(); ++i) {
    for (std::size_t j = 0; j < ref.size(); ++j) {
      const double sim = detail::cosine(cand[i], cn[i], ref[j], rn[j]);
      best_c[i] = std::max(best_c[i], sim);
      best_r[j] = std::max(best_r[j], sim);
    }
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  return PRF::from(mean(best_c), mean(best_r));
}

/// Supplies one embedding per token of a text.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<Embedding> embed(std::string_view text) const = 0;
};

/// Static per-token vectors loaded from a text file: one "token v1 ... vd"
/// line per token (an optional word2vec "count dim" header is skipped).
/// Tokens missing from the table contribute no vector.
class TokenVectorTable final : public EmbeddingProvider {
 public:
  static TokenVectorTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embeddings file " + path);
    TokenVectorTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream ss(line);
      std::string token;
      if (!(ss >> token)) continue;
      Embedding v;
      double x = 0;
      while (ss >> x) v.push_back(x);
      if (line_no == 1 && v.size() == 1) continue;  // word2vec header
      if (v.empty()) throw MalformedLine(line_no, "embedding line without values");
      table.add(text::normalize_token(token), std::move(v));
    }
    return table;
  }

  void add(std::string token, Embedding v) {
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_) throw DimensionMismatch(dim_, v.size());
    vectors_[std::move(token)] = std::move(v);
  }

  std::size_t dimension() const noexcept { return dim_; }

  std::vector<Embedding> embed(std::string_view text) const override {
    std::vector<Embedding> out;
    for (const auto& tok : text::normalized_tokens(text)) {
      if (auto it = vectors_.find(tok); it != vectors_.end()) out.push_back(it->second);
    }
    return out;
  }

 private:
  std::unordered_map<std::string, Embedding> vectors_;
  std::size_t dim_ = 0;
};

}  // namespace qgbench::metrics
