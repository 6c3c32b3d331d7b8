#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "reviewkit/sentiment.hpp"
#include "reviewkit/text.hpp"

using namespace reviewkit;

TEST(Text, RoundHalfUp) {
  EXPECT_EQ(text::round_half_up(1.5), 2);
  EXPECT_EQ(text::round_half_up(2.5), 3);
  EXPECT_EQ(text::round_half_up(2.49), 2);
  EXPECT_EQ(text::round_half_up(5 * 0.3), 2);
}

TEST(Text, FormatPercent) {
  EXPECT_EQ(text::format_percent(186, 410), "45.4");
  EXPECT_EQ(text::format_percent(342, 410), "83.4");
  EXPECT_EQ(text::format_percent(1, 8), "12.5");
  EXPECT_EQ(text::format_percent(0, 0), "0.0");
}

TEST(Text, SentenceSplit) {
  auto s = text::split_sentences("The suction is great. Battery died fast.");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1], "Battery died fast.");
  EXPECT_EQ(text::split_sentences("Dr. Smith paid 9.99 for it! Worth it?").size(), 2u);
  EXPECT_TRUE(text::split_sentences("   ").empty());
}

TEST(Text, WordCountIsWhitespaceTokens) {
  EXPECT_EQ(text::word_count("  a b\tc\nd  "), 4u);
  EXPECT_EQ(text::word_count(""), 0u);
}

TEST(Sentiment, AnchorPoints) {
  EXPECT_EQ(sentiment::stars_from_score(0.6), 3);
  EXPECT_EQ(sentiment::stars_from_score(0.2), 1);
  EXPECT_EQ(sentiment::stars_from_score(0.3), 2);
}

TEST(Sentiment, StarBoundariesMatchThresholdTable) {
  // Half-up: a boundary value belongs to the upper bucket.
  const auto table = [](double c) {
    if (c < 0.3) return 1;
    if (c < 0.5) return 2;
    if (c < 0.7) return 3;
    if (c < 0.9) return 4;
    return 5;
  };
  for (int i = 0; i <= 100; ++i) {
    const double c = i / 100.0;
    EXPECT_EQ(sentiment::stars_from_score(c), table(c)) << c;
  }
  EXPECT_EQ(sentiment::stars_from_score(0.1), 1);
  EXPECT_EQ(sentiment::stars_from_score(0.5), 3);
  EXPECT_EQ(sentiment::stars_from_score(0.7), 4);
  EXPECT_EQ(sentiment::stars_from_score(0.9), 5);
}

TEST(Sentiment, StarsMonotoneOnGrid) {
  int prev = 0;
  for (int i = 0; i <= 100; ++i) {
    const int s = sentiment::stars_from_score(i / 100.0);
    EXPECT_GE(s, prev);
    prev = s;
  }
}

TEST(Sentiment, OutOfRangeIsContractViolation) {
  EXPECT_THROW(sentiment::stars_from_score(1.01), ContractViolation);
  EXPECT_THROW(sentiment::stars_from_score(-0.1), ContractViolation);
}

TEST(Sentiment, ScoreTextFixtures) {
  EXPECT_DOUBLE_EQ(sentiment::score_text("").compound, 0.5);
  EXPECT_DOUBLE_EQ(sentiment::score_text("excellent and lovely").compound, 1.0);
  // P = love 0.9 + great 0.7 + practical 0.4; N = cheap 0.5 + weak 0.5.
  const auto r = sentiment::score_text("I love this strap, it feels great and practical, but the buckle is cheap and weak.");
  EXPECT_NEAR(r.compound, (1.0 / 3.0 + 1.0) / 2.0, 1e-12);
  EXPECT_EQ(r.positive_hits, 3u);
  EXPECT_EQ(r.negative_hits, 2u);
  EXPECT_EQ(r.stars, sentiment::stars_from_score(r.compound));
}

TEST(Sentiment, NegationWindow) {
  EXPECT_LT(sentiment::score_text("not good").compound, 0.5);
  EXPECT_LT(sentiment::score_text("never really very good").compound, 0.5);
  // Four tokens back is outside the window of 3.
  EXPECT_GT(sentiment::score_text("not at all really good").compound, 0.5);
  // Clause punctuation ends the scope.
  EXPECT_GT(sentiment::score_text("not bad, good").compound, 0.5);
  EXPECT_DOUBLE_EQ(sentiment::score_text("no. good").compound, 1.0);
}

TEST(Sentiment, AppendingPositiveClauseNeverDecreases) {
  std::mt19937 rng(11);
  const std::vector<std::string> vocab{"good", "bad", "not", "strap", "cheap", "never", "love", "the", "it", ",", "."};
  const std::vector<std::string> positives{"excellent", "good", "sturdy", "nice", "love"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string s;
    const int len = static_cast<int>(rng() % 12);
    for (int i = 0; i < len; ++i) s += vocab[rng() % vocab.size()] + " ";
    const double before = sentiment::score_text(s).compound;
    const double after = sentiment::score_text(s + ". " + positives[rng() % positives.size()]).compound;
    EXPECT_GE(after + 1e-12, before) << s;
  }
}

TEST(Sentiment, AverageRoundedRating) {
  EXPECT_EQ(sentiment::average_rounded_rating({2, 1, 4, 2}), 2);
  EXPECT_EQ(sentiment::average_rounded_rating({5}), 5);
  EXPECT_EQ(sentiment::average_rounded_rating({3, 4}), 4);
  EXPECT_THROW(sentiment::average_rounded_rating({}), InvalidArgument);
  EXPECT_THROW(sentiment::average_rounded_rating({0, 3}), InvalidArgument);
}

TEST(Sentiment, AverageIsPermutationInvariant) {
  std::mt19937 rng(5);
  for (int t = 0; t < 500; ++t) {
    std::vector<int> v(1 + rng() % 8);
    for (auto& x : v) x = 1 + static_cast<int>(rng() % 5);
    const int expected = sentiment::average_rounded_rating(v);
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_EQ(sentiment::average_rounded_rating(v), expected);
  }
}

TEST(Sentiment, OverallRating) {
  sentiment::SentimentReport two{0.3, 0, 1, 2};
  const std::vector<int> ratings{2, 1, 4, 2};  // mean 2.25
  EXPECT_EQ(sentiment::overall_rating(ratings, two, 0.5).suggested_stars, 2);
  EXPECT_EQ(sentiment::overall_rating(ratings, two, 1.0).suggested_stars, sentiment::average_rounded_rating(ratings));
  sentiment::SentimentReport high{0.95, 3, 0, 5};
  EXPECT_EQ(sentiment::overall_rating(ratings, high, 0.0).suggested_stars, 5);
  const auto both = sentiment::overall_rating(ratings, two, 0.5);
  ASSERT_TRUE(both.topic_average && both.text_stars);
  EXPECT_DOUBLE_EQ(*both.topic_average, 2.25);
  EXPECT_EQ(*both.text_stars, 2);
  EXPECT_THROW(sentiment::overall_rating({}, std::nullopt), InvalidArgument);
}

TEST(Sentiment, LexiconFileFormat) {
  std::istringstream ok("# comment\nsplendid\t0.8\nmeh\t-0.3\n[negators]\nnah\n");
  const auto lex = sentiment::parse_lexicon(ok);
  EXPECT_EQ(lex.entries.size(), 2u);
  EXPECT_EQ(lex.negators.count("nah"), 1u);
  EXPECT_LT(sentiment::score_text("nah splendid", lex).compound, 0.5);

  std::istringstream out_of_range("wow\t1.5\n");
  EXPECT_THROW(sentiment::parse_lexicon(out_of_range), InvalidArgument);
  std::istringstream clash("good\t0.5\n[negators]\ngood\n");
  EXPECT_THROW(sentiment::parse_lexicon(clash), InvalidArgument);
}

TEST(Sentiment, DefaultLexiconInvariants) {
  const auto& lex = sentiment::default_lexicon();
  EXPECT_GE(lex.entries.size(), 250u);
  for (const auto& [tok, pol] : lex.entries) {
    EXPECT_GE(pol, -1.0);
    EXPECT_LE(pol, 1.0);
    EXPECT_EQ(lex.negators.count(tok), 0u) << tok;
  }
}
