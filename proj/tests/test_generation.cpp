#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "reviewkit/data.hpp"
#include "reviewkit/generation.hpp"

using namespace reviewkit;
using namespace reviewkit::generation;

namespace {

std::string fixture(const std::string& name) { return std::string(REVIEWKIT_TEST_DATA) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::vector<TopicRating> kCameraStraps{{"Feel", 2}, {"features", 1}, {"strap", 4}, {"price", 2}};
const std::vector<TopicRating> kPerfumes{{"Smell", 1}, {"Price", 2}, {"Warm", 2}, {"Long Lasting", 1}};
const std::vector<TopicRating> kToys{{"Size", 4}, {"Softness", 4}, {"Quality", 5}, {"Carry", 5}};
const std::vector<TopicRating> kRuffledTops{{"Size", 2}, {"Fit", 3}, {"Appearance", 3}, {"color", 2}};

std::vector<std::string> topics_of(const std::vector<TopicRating>& r) {
  std::vector<std::string> out;
  for (const auto& x : r) out.push_back(x.topic);
  return out;
}

TopicVocabulary vocabulary(const std::string& pt, const std::vector<TopicRating>& ratings) {
  return build_topic_vocabulary(data::bundled_catalog(), pt, "", topics_of(ratings));
}

double mean_compound(const std::string& pt, const std::vector<TopicRating>& ratings, std::uint64_t seed) {
  TemplateBackend backend(seed);
  const auto r = suggest(pt, "", ratings, backend, vocabulary(pt, ratings));
  double sum = 0;
  for (const auto& s : r.suggestions) sum += s.sentiment->compound;
  return sum / static_cast<double>(r.suggestions.size());
}

}  // namespace

TEST(Prompt, CameraStrapsGolden) {
  const auto bundle = build_prompt("Camera Straps", "", kCameraStraps);
  EXPECT_EQ(bundle.to_text(), slurp(fixture("camera_straps_prompt.txt")));
}

TEST(Prompt, SingleRatingAndProductName) {
  const auto bundle = build_prompt("Perfumes", "Bloom", {{"Smell", 1}});
  EXPECT_EQ(bundle.input_data, "Product Type: Perfumes, Product Name: Bloom\nTopics and Ratings are: Smell: 1 stars.");
}

TEST(Prompt, RejectsBadInput) {
  EXPECT_THROW(build_prompt("Perfumes", "", {}), InvalidArgument);
  EXPECT_THROW(build_prompt("", "", {{"Smell", 1}}), InvalidArgument);
  EXPECT_THROW(build_prompt("Perfumes", "", {{"Smell", 0}}), InvalidArgument);
  EXPECT_THROW(build_prompt("Perfumes", "", {{"Smell", 6}}), InvalidArgument);
  EXPECT_THROW(build_prompt("Perfumes", "", {{"a, b", 3}}), InvalidArgument);
  EXPECT_THROW(build_prompt("Perfumes", "", {{"x: y", 3}}), InvalidArgument);
}

TEST(Prompt, InputDataRoundTrips) {
  std::mt19937 rng(3);
  const std::vector<std::string> words{"feel", "Strap", "long lasting", "ease of use", "price", "Battery Life"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TopicRating> ratings(1 + rng() % 5);
    for (auto& r : ratings) r = {words[rng() % words.size()], 1 + static_cast<int>(rng() % 5)};
    const std::string name = trial % 2 ? "Model X" : "";
    const auto parsed = parse_input_data(build_prompt("Camera Straps", name, ratings).to_text());
    EXPECT_EQ(parsed.product_type, "Camera Straps");
    EXPECT_EQ(parsed.product_name, name);
    EXPECT_EQ(parsed.ratings, ratings);
  }
  EXPECT_THROW(parse_input_data("hello"), FormatError);
}

TEST(Parse, ResponseShapes) {
  const auto r = parse_response("**Feel**: Soft and nice.\n- Strap: \"Sturdy enough.\"\nrandom chatter\n\n");
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.pairs[0].topic, "feel");
  EXPECT_EQ(r.pairs[0].text, "Soft and nice.");
  EXPECT_EQ(r.pairs[1].topic, "strap");
  EXPECT_EQ(r.pairs[1].text, "Sturdy enough.");
  EXPECT_EQ(r.diagnostics.size(), 1u);
  EXPECT_THROW(parse_response("no topics at all"), FormatError);
  EXPECT_THROW(parse_response(""), FormatError);
}

TEST(Parse, InvertsTemplateGeneration) {
  const auto raw = template_generate("Camera Straps", kCameraStraps, 11);
  const auto parsed = parse_response(raw);
  ASSERT_EQ(parsed.pairs.size(), kCameraStraps.size());
  for (std::size_t i = 0; i < kCameraStraps.size(); ++i)
    EXPECT_EQ(parsed.pairs[i].topic, text::casefold(kCameraStraps[i].topic));
}

TEST(Validate, RatingMention) {
  const auto vocab = vocabulary("Camera Straps", kCameraStraps);
  const auto s = validate_phrase({"strap", "It deserves 4 stars easily"}, topics_of(kCameraStraps), vocab);
  EXPECT_TRUE(s.has(Flag::rating_mention));
  EXPECT_TRUE(s.has(Flag::too_short));
  for (const char* p : {"a solid 5/5", "I rated it 3 today", "four stars from me", "2 out of 5 overall"})
    EXPECT_TRUE(mentions_rating(p)) << p;
  for (const char* p : {"it has 3 pockets", "the strap is 5 cm wide", "stars on the print"})
    EXPECT_FALSE(mentions_rating(p)) << p;
}

TEST(Validate, OffTopicTerm) {
  const auto vocab = vocabulary("Camera Straps", kCameraStraps);
  EXPECT_EQ(vocab.foreign_terms.count("waterproof"), 1u);
  EXPECT_EQ(vocab.foreign_terms.count("price"), 0u);
  const auto s = validate_phrase(
      {"strap", "The strap is waterproof and kept my camera dry during a long rainy hike across the hills last spring."},
      topics_of(kCameraStraps), vocab);
  EXPECT_TRUE(s.has(Flag::off_topic_term));
  EXPECT_EQ(s.off_topic_terms, std::vector<std::string>{"waterproof"});
}

TEST(Validate, CleanPhraseHasNoFlags) {
  const auto vocab = vocabulary("Camera Straps", kCameraStraps);
  const std::string phrase =
      "The strap sits comfortably on my shoulder through a full day of shooting and the padding never slips out of "
      "place.";
  ASSERT_EQ(text::word_count(phrase), 21u);
  const auto s = validate_phrase({"strap", phrase}, topics_of(kCameraStraps), vocab);
  EXPECT_TRUE(s.flags.empty());
  EXPECT_TRUE(validate_phrase({"lens", phrase}, topics_of(kCameraStraps), vocab).has(Flag::unknown_topic));
}

TEST(Validate, WordBoundsAreWarningsUnlessStrict) {
  ValidationLimits lax;
  ValidationLimits strict;
  strict.strict = true;
  EXPECT_FALSE(is_reject_class(Flag::too_short, lax));
  EXPECT_TRUE(is_reject_class(Flag::too_short, strict));
  EXPECT_TRUE(is_reject_class(Flag::rating_mention, lax));
  std::string long_text;
  for (int i = 0; i < 30; ++i) long_text += "word ";
  EXPECT_TRUE(validate_phrase({"strap", long_text}, {"strap"}, {}).has(Flag::too_long));
}

TEST(Validate, ExcisionIsIdempotent) {
  for (const char* p : {"Great strap, easily 5 stars.", "I rated it 4 and would again", "A 5/5 buy, honestly.",
                        "Nothing to remove here."}) {
    const auto once = excise_rating_mentions(p);
    EXPECT_FALSE(mentions_rating(once)) << once;
    EXPECT_EQ(excise_rating_mentions(once), once);
  }
  EXPECT_EQ(excise_rating_mentions("Great strap, easily 5 stars."), "Great strap, easily.");
}

TEST(Templates, EveryTemplateLandsOnItsStarLevel) {
  for (const auto& t : default_template_table().templates) {
    for (const char* topic : {"strap", "long lasting", "ease of use"}) {
      std::string phrase = t.text;
      phrase.replace(phrase.find("{topic}"), 7, topic);
      const auto r = sentiment::score_text(phrase);
      EXPECT_EQ(r.stars, t.stars) << phrase << " compound " << r.compound;
      EXPECT_GE(text::word_count(phrase), 20u) << phrase;
      EXPECT_LE(text::word_count(phrase), 25u) << phrase;
      EXPECT_FALSE(mentions_rating(phrase)) << phrase;
    }
  }
}

TEST(Templates, TableFileFormat) {
  std::istringstream missing_level("negative\tbad {topic}\nneutral\tok {topic}\n");
  EXPECT_THROW(parse_template_table(missing_level), InvalidArgument);
  std::istringstream wrong_tier("positive:2\tgood {topic}\n");
  EXPECT_THROW(parse_template_table(wrong_tier), InvalidArgument);
  std::istringstream ok("negative\tbad {topic}\nneutral\tok {topic}\npositive\tgood {topic}\n");
  EXPECT_EQ(parse_template_table(ok).templates.size(), 3u);
}

TEST(Templates, SynonymsOnlyWhenSentimentNeutral) {
  SynonymMap syn{{"strap", {"sling", "great band"}}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto out = template_generate("Camera Straps", {{"strap", 3}}, seed, default_template_table(), syn);
    EXPECT_EQ(out.find("great band"), std::string::npos);
  }
}

TEST(Generate, RetriesThenFails) {
  int calls = 0;
  FunctionBackend flaky([&](const std::string&, int) -> std::string {
    if (++calls < 3) throw BackendError("timeout");
    return "Strap: fine";
  });
  const auto bundle = build_prompt("Camera Straps", "", {{"strap", 3}});
  const auto r = generate_phrases(bundle, flaky);
  EXPECT_EQ(r.attempts, 3);
  FunctionBackend dead([](const std::string&, int) -> std::string { throw BackendError("down"); });
  EXPECT_THROW(generate_phrases(bundle, dead), BackendError);
  FunctionBackend empty([](const std::string&, int) { return std::string("  \n"); });
  EXPECT_THROW(generate_phrases(bundle, empty), EmptyResponse);
}

TEST(Suggest, OneSuggestionPerTopicWithMissing) {
  FunctionBackend partial([](const std::string&, int) {
    return std::string(
        "Feel: The texture is soft against the neck and stays pleasant through long days of walking around the "
        "city.\nBonus: extra stuff\n");
  });
  const auto r = suggest("Camera Straps", "", kCameraStraps, partial, vocabulary("Camera Straps", kCameraStraps));
  ASSERT_EQ(r.suggestions.size(), 4u);
  EXPECT_FALSE(r.suggestions[0].has(Flag::missing));
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_TRUE(r.suggestions[i].has(Flag::missing));
    EXPECT_EQ(r.suggestions[i].topic, kCameraStraps[i].topic);
  }
  EXPECT_EQ(r.regenerations, 1);
}

TEST(Suggest, FormatErrorRegeneratesOnce) {
  int calls = 0;
  FunctionBackend backend([&](const std::string& prompt, int attempt) {
    ++calls;
    if (attempt == 0) return std::string("I cannot help with that");
    TemplateBackend t(1);
    return t.complete(prompt, attempt);
  });
  const auto r = suggest("Camera Straps", "", kCameraStraps, backend, vocabulary("Camera Straps", kCameraStraps));
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(r.regenerations, 1);
  for (const auto& s : r.suggestions) EXPECT_TRUE(s.flags.empty()) << s.topic;
}

TEST(Suggest, FallbackBackend) {
  FunctionBackend dead([](const std::string&, int) -> std::string { throw BackendError("down"); });
  TemplateBackend tmpl(7);
  SuggestOptions opts;
  opts.fallback = &tmpl;
  const auto r = suggest("Camera Straps", "", kCameraStraps, dead, vocabulary("Camera Straps", kCameraStraps), opts);
  EXPECT_EQ(r.backend, "template");
  EXPECT_EQ(r.suggestions.size(), 4u);
  EXPECT_THROW(suggest("Camera Straps", "", kCameraStraps, dead, {}), BackendError);
}

TEST(Suggest, DeterministicUnderFixedSeed) {
  TemplateBackend a(42);
  TemplateBackend b(42);
  const auto vocab = vocabulary("Perfumes", kPerfumes);
  const auto x = suggest("Perfumes", "", kPerfumes, a, vocab);
  const auto y = suggest("Perfumes", "", kPerfumes, b, vocab);
  ASSERT_EQ(x.suggestions.size(), y.suggestions.size());
  for (std::size_t i = 0; i < x.suggestions.size(); ++i) EXPECT_EQ(x.suggestions[i].text, y.suggestions[i].text);
}

TEST(Suggest, ToneFollowsRatings) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    EXPECT_LT(mean_compound("Perfumes", kPerfumes, seed), 0.35) << seed;
    EXPECT_GT(mean_compound("Stuffed Toys & Animals", kToys, seed), 0.65) << seed;
    const double neutral = mean_compound("Ruffled Tops", kRuffledTops, seed);
    EXPECT_GE(neutral, 0.35) << seed;
    EXPECT_LE(neutral, 0.65) << seed;
  }
}

TEST(Suggest, TemplateOutputIsClean) {
  TemplateBackend backend(7);
  for (const auto& [pt, ratings] : std::vector<std::pair<std::string, std::vector<TopicRating>>>{
           {"Perfumes", kPerfumes}, {"Stuffed Toys & Animals", kToys}, {"Ruffled Tops", kRuffledTops},
           {"Camera Straps", kCameraStraps}}) {
    const auto r = suggest(pt, "", ratings, backend, vocabulary(pt, ratings));
    for (const auto& s : r.suggestions) EXPECT_TRUE(s.flags.empty()) << pt << " / " << s.topic << ": " << s.text;
    EXPECT_EQ(r.regenerations, 0);
  }
}

TEST(Export, RecordsAndDiagnostics) {
  std::ifstream in(fixture("annotated_reviews.jsonl"));
  std::vector<std::string> read_diag;
  const auto reviews = read_annotated_reviews(in, &read_diag);
  EXPECT_EQ(reviews.size(), 7u);
  EXPECT_EQ(read_diag.size(), 1u);
  const auto out = export_finetune_records(reviews);
  ASSERT_EQ(out.records.size(), 3u);
  EXPECT_EQ(out.diagnostics.size(), 4u);
  EXPECT_EQ(out.records[0].instruction, finetune_instruction());
  EXPECT_EQ(out.records[0].context,
            "Product Type: Camera Straps, Product Name: Peak Slide\nTopics and Ratings are: strap: 4 stars.");
  EXPECT_EQ(out.records[0].response, "Title: Solid strap\nReview: Comfortable on long walks.");
  EXPECT_EQ(out.records[1].response, "Too expensive for what it is.");
  EXPECT_EQ(out.per_pt_counts.at("Camera Straps"), 2u);
  EXPECT_EQ(out.guidance.size(), 2u);
}

TEST(Export, TwelveRecordsOneProductType) {
  std::vector<AnnotatedReview> reviews;
  for (int i = 0; i < 12; ++i)
    reviews.push_back({"Camera Straps", "", {{"strap", 1 + i % 5}}, "", "Review number " + std::to_string(i)});
  const auto out = export_finetune_records(reviews);
  EXPECT_EQ(out.records.size(), 12u);
  EXPECT_TRUE(out.diagnostics.empty());
  ASSERT_EQ(out.guidance.size(), 1u);
  EXPECT_NE(out.guidance[0].find("200"), std::string::npos);
  for (const auto& r : out.records) {
    const auto parsed = parse_input_data(r.context);
    EXPECT_EQ(parsed.product_type, "Camera Straps");
  }
}
