#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "qgbench/agreement.hpp"

using namespace qgbench;
using namespace qgbench::agreement;

namespace {

RatingRecord rating(std::string rater, std::string target, std::array<int, 5> scores) {
  return {std::move(rater), std::move(target), scores, "2024-01-01T00:00:00Z"};
}

CountMatrix random_matrix(std::mt19937_64& rng, std::size_t items, std::size_t cats, std::size_t raters) {
  CountMatrix m(items, std::vector<std::size_t>(cats, 0));
  for (auto& row : m) {
    for (std::size_t r = 0; r < raters; ++r) ++row[rng() % cats];
  }
  return m;
}

}  // namespace

TEST(Fleiss, UnanimousRowsGiveOne) {
  EXPECT_EQ(fleiss_kappa({{3, 0}, {0, 3}}, 3), 1.0);
  EXPECT_EQ(fleiss_kappa({{0, 0, 5, 0, 0}, {0, 0, 5, 0, 0}}, 5), 1.0);  // single category used
}

TEST(Fleiss, MixedMatrixHandDerived) {
  EXPECT_NEAR(fleiss_kappa({{2, 1}, {1, 2}}, 3), -1.0 / 3.0, 1e-12);
}

TEST(Fleiss, RejectsBadMatrices) {
  EXPECT_THROW(fleiss_kappa({{2, 0}, {1, 2}}, 3), RaggedMatrix);
  EXPECT_THROW(fleiss_kappa({{2, 1}, {1, 1, 1}}, 3), RaggedMatrix);
  EXPECT_THROW(fleiss_kappa({}, 3), RaggedMatrix);
  EXPECT_THROW(fleiss_kappa({{1}}, 1), TooFewRaters);
}

TEST(FleissProperty, OneExactlyWhenAllRowsUnanimous) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 500; ++t) {
    const std::size_t raters = 2 + rng() % 5;
    const auto m = random_matrix(rng, 1 + rng() % 6, 2 + rng() % 4, raters);
    const bool unanimous = std::all_of(m.begin(), m.end(), [&](const auto& row) {
      return std::find(row.begin(), row.end(), raters) != row.end();
    });
    const double k = fleiss_kappa(m, raters);
    EXPECT_EQ(k == 1.0, unanimous);
    EXPECT_LE(k, 1.0);
    EXPECT_GE(k, -1.0);
  }
}

TEST(FleissProperty, InvariantUnderItemAndCategoryPermutation) {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 200; ++t) {
    auto m = random_matrix(rng, 2 + rng() % 8, 5, 5);
    const double k = fleiss_kappa(m, 5);
    std::shuffle(m.begin(), m.end(), rng);
    std::vector<std::size_t> perm = {0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    CountMatrix p(m.size(), std::vector<std::size_t>(5));
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < 5; ++j) p[i][perm[j]] = m[i][j];
    }
    EXPECT_NEAR(fleiss_kappa(p, 5), k, 1e-12);
  }
}

TEST(Ratings, StrictParsing) {
  const auto ok = nlohmann::json::parse(
      R"({"rater_id":"r1","target_id":"run:a","scores":{"Grammaticality":5,"Appropriateness":4,"Relevance":3,"Complexity":2,"Novelty":1}})");
  const auto r = rating_from_json(ok);
  EXPECT_EQ(r.score(Criterion::Relevance), 3);

  auto bad = ok;
  bad["scores"]["Relevance"] = 6;
  try {
    rating_from_json(bad);
    FAIL();
  } catch (const InvalidRating& e) {
    EXPECT_EQ(e.field(), "Relevance");
  }
  bad = ok;
  bad["scores"].erase("Novelty");
  EXPECT_THROW(rating_from_json(bad), InvalidRating);
  bad = ok;
  bad["scores"]["Grammaticality"] = 4.5;
  EXPECT_THROW(rating_from_json(bad), InvalidRating);
  bad = ok;
  bad["scores"]["Fluency"] = 3;
  EXPECT_THROW(rating_from_json(bad), InvalidRating);
  bad = ok;
  bad["rater_id"] = "";
  EXPECT_THROW(rating_from_json(bad), InvalidRating);
}

TEST(Ratings, JsonRoundTrip) {
  const auto r = rating("r1", "run:a", {5, 4, 3, 2, 1});
  EXPECT_EQ(rating_from_json(nlohmann::json::parse(to_json(r).dump())), r);
  std::istringstream in(to_json(r).dump() + "\n\n" + to_json(r).dump() + "\n");
  EXPECT_EQ(parse_ratings(in).size(), 2u);
}

TEST(Ratings, TargetIdSplitsAtFirstColon) {
  EXPECT_EQ(make_target_id("run-1", "eco:0001"), "run-1:eco:0001");
  EXPECT_EQ(split_target_id("run-1:eco:0001"), (std::pair<std::string, std::string>{"run-1", "eco:0001"}));
}

TEST(Ratings, LatestWins) {
  const auto out = latest_wins({rating("r1", "t", {1, 1, 1, 1, 1}), rating("r2", "t", {2, 2, 2, 2, 2}),
                                rating("r1", "t", {5, 5, 5, 5, 5})});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].rater_id, "r1");
  EXPECT_EQ(out[0].scores[0], 5);
}

TEST(PerCriterion, UnanimousRatersGiveOne) {
  std::vector<RatingRecord> rs;
  for (int rater = 0; rater < 5; ++rater) {
    for (int t = 0; t < 4; ++t) {
      rs.push_back(rating("r" + std::to_string(rater), "run:" + std::to_string(t),
                          {1 + t, 2, 1 + (t % 5), 5 - t, 3}));
    }
  }
  const auto rep = kappa_per_criterion(rs);
  EXPECT_EQ(rep.n_raters, 5u);
  EXPECT_EQ(rep.n_items, 4u);
  for (auto c : kCriteria) EXPECT_EQ(rep.kappa.at(c), 1.0) << to_string(c);
}

TEST(PerCriterion, SkippedTargetIsUnevenCoverage) {
  std::vector<RatingRecord> rs = {rating("r1", "a", {1, 1, 1, 1, 1}), rating("r1", "b", {1, 1, 1, 1, 1}),
                                  rating("r2", "a", {1, 1, 1, 1, 1})};
  try {
    kappa_per_criterion(rs);
    FAIL();
  } catch (const UnevenCoverage& e) {
    ASSERT_EQ(e.missing().size(), 1u);
    EXPECT_EQ(e.missing()[0].rater_id, "r2");
    EXPECT_EQ(e.missing()[0].target_id, "b");
  }
}

TEST(PerCriterion, SingleRaterIsTooFew) {
  EXPECT_THROW(kappa_per_criterion({rating("r1", "a", {1, 1, 1, 1, 1})}), TooFewRaters);
}

// Ratings built from known matrices must give the same kappa as the
// matrices themselves.
TEST(PerCriterion, ComposesWithFleiss) {
  std::mt19937_64 rng(23);
  const std::size_t raters = 4, items = 7;
  std::vector<RatingRecord> rs;
  std::array<CountMatrix, 5> want;
  for (auto& m : want) m.assign(items, std::vector<std::size_t>(5, 0));
  for (std::size_t i = 0; i < items; ++i) {
    for (std::size_t r = 0; r < raters; ++r) {
      std::array<int, 5> s{};
      for (std::size_t c = 0; c < 5; ++c) {
        s[c] = 1 + static_cast<int>(rng() % 5);
        ++want[c][i][static_cast<std::size_t>(s[c] - 1)];
      }
      rs.push_back(rating("r" + std::to_string(r), "t" + std::to_string(i), s));
    }
  }
  const auto rep = kappa_per_criterion(rs);
  for (std::size_t c = 0; c < 5; ++c) {
    EXPECT_NEAR(rep.kappa.at(kCriteria[c]), fleiss_kappa(want[c], raters), 1e-12);
  }
}

TEST(Aggregate, Examples) {
  const std::map<std::string, RunInfo> runs = {
      {"run1", {"davinci", promptkit::PromptSetting::WithLongPrompt}}};
  auto rows = aggregate_ratings({rating("r1", "run1:a", {5, 5, 5, 5, 5})}, runs);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].mean[0], 5.0);
  EXPECT_EQ(format_mean(rows[0].mean[0]), "5.00");

  rows = aggregate_ratings({rating("r1", "run1:a", {1, 1, 4, 1, 1}), rating("r2", "run1:a", {1, 1, 5, 1, 1})},
                           runs);
  EXPECT_EQ(rows[0].mean[static_cast<std::size_t>(Criterion::Relevance)], 4.5);
}

TEST(Aggregate, MatchesCellByCellRecomputation) {
  const std::map<std::string, RunInfo> runs = {
      {"A", {"davinci", promptkit::PromptSetting::WithLongPrompt}},
      {"B", {"chatgpt", promptkit::PromptSetting::WithLongPrompt}},
      {"C", {"davinci", promptkit::PromptSetting::WithoutPrompt}}};
  std::mt19937_64 rng(24);
  std::vector<RatingRecord> rs;
  const char* run_ids[] = {"A", "B", "C"};
  for (int i = 0; i < 30; ++i) {
    std::array<int, 5> s{};
    for (auto& x : s) x = 1 + static_cast<int>(rng() % 5);
    rs.push_back(rating("r" + std::to_string(i % 3),
                        std::string(run_ids[i % 3]) + ":rec" + std::to_string(i / 3), s));
  }
  const auto rows = aggregate_ratings(rs, runs);
  ASSERT_EQ(rows.size(), 3u);
  // Rows ordered by setting, then model.
  EXPECT_EQ(rows[0].model_id, "chatgpt");
  EXPECT_EQ(rows[1].model_id, "davinci");
  EXPECT_EQ(rows[2].setting, promptkit::PromptSetting::WithoutPrompt);
  for (const auto& row : rows) {
    const std::string run = row.model_id == "chatgpt" ? "B"
                            : row.setting == promptkit::PromptSetting::WithLongPrompt ? "A"
                                                                                        : "C";
    for (std::size_t c = 0; c < 5; ++c) {
      double sum = 0;
      int n = 0;
      for (const auto& r : rs) {
        if (r.target_id.rfind(run + ":", 0) == 0) {
          sum += r.scores[c];
          ++n;
        }
      }
      EXPECT_DOUBLE_EQ(row.mean[c], sum / n);
      EXPECT_GE(row.mean[c], 1.0);
      EXPECT_LE(row.mean[c], 5.0);
    }
  }
}

TEST(Aggregate, UnknownRunsListedLast) {
  const auto rows = aggregate_ratings({rating("r1", "ghost:a", {3, 3, 3, 3, 3})}, {});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].setting);
  EXPECT_EQ(to_csv(rows), "Setting,Model,Grammaticality,Appropriateness,Relevance,Complexity,Novelty\n"
                          "Unknown,ghost,3.00,3.00,3.00,3.00,3.00\n");
}
