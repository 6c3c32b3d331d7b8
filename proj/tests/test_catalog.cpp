#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "reviewkit/catalog.hpp"
#include "reviewkit/data.hpp"

using namespace reviewkit;
using namespace reviewkit::catalog;

namespace {

std::string fixture(const std::string& name) { return std::string(REVIEWKIT_TEST_DATA) + "/" + name; }

std::string review_line(const std::string& id, const std::string& pt, const std::string& text, int stars) {
  return to_json(Review{id, pt, "", text, stars}).dump() + "\n";
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("reviewkit_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Ingest, RangeRuleRejects) {
  ReviewStore store;
  std::istringstream in(review_line("1", "p", "a", 5) + review_line("2", "p", "b", 4) + review_line("3", "p", "c", 1) +
                        R"({"id":"4","product_type":"p","product_name":"","text":"d","stars":7})" + "\n");
  const auto s = store.ingest(in);
  EXPECT_EQ(s.accepted, 3u);
  EXPECT_EQ(s.rejected, 1u);
  ASSERT_EQ(s.rejections.size(), 1u);
  EXPECT_EQ(s.rejections[0].line, 4u);
}

TEST(Ingest, EmptyStream) {
  ReviewStore store;
  std::istringstream in("");
  const auto s = store.ingest(in);
  EXPECT_EQ(s.accepted, 0u);
  EXPECT_EQ(s.rejected, 0u);
}

TEST(Ingest, FixturePerProductTypeCounts) {
  ReviewStore store;
  std::ifstream in(fixture("reviews_12.jsonl"));
  ASSERT_TRUE(in);
  const auto s = store.ingest(in);
  EXPECT_EQ(s.accepted, 12u);
  EXPECT_EQ(s.per_pt_counts.at("ptA"), 7u);
  EXPECT_EQ(s.per_pt_counts.at("ptB"), 5u);
}

TEST(Ingest, DuplicateIdsRejected) {
  ReviewStore store;
  std::istringstream first(review_line("x", "p", "a", 3));
  store.ingest(first);
  std::istringstream again(review_line("x", "p", "a", 3) + review_line("y", "p", "b", 3) + review_line("y", "p", "b", 3));
  const auto s = store.ingest(again);
  EXPECT_EQ(s.accepted, 1u);
  EXPECT_EQ(s.rejected, 2u);
  EXPECT_EQ(store.size(), 2u);
}

TEST(Ingest, ExactFieldSet) {
  EXPECT_THROW(review_from_json_line(R"({"id":"1","product_type":"p","text":"t","stars":3,"extra":1})"),
               InvalidArgument);
  EXPECT_THROW(review_from_json_line(R"({"id":"1","product_type":"p","text":"t"})"), InvalidArgument);
  EXPECT_THROW(review_from_json_line("not json"), InvalidArgument);
}

TEST(Ingest, UnwritableStoreIsFatal) {
  const auto dir = temp_dir("unwritable");
  std::filesystem::create_directories(dir / "log.jsonl");  // a directory where the log file should be
  ReviewStore store(dir / "log.jsonl" );
  std::istringstream in(review_line("1", "p", "a", 3));
  EXPECT_THROW(store.ingest(in), IoError);
  std::filesystem::remove_all(dir);
}

TEST(Mining, DocumentFrequencyRanking) {
  ReviewStore store;
  std::string corpus;
  for (int i = 0; i < 10; ++i) {
    std::string t;
    if (i < 6) t += "battery ";
    if (i >= 6) t += "screen ";
    corpus += review_line(std::to_string(i), "phones", t, 3);
  }
  std::istringstream in(corpus);
  store.ingest(in);
  MiningOptions opts;
  opts.coverage_threshold = 10;
  const auto topics = extract_frequent_mentions(store, "phones", opts);
  ASSERT_GE(topics.size(), 2u);
  EXPECT_EQ(topics[0].label, "battery");
  EXPECT_EQ(topics[0].support, 6u);
  EXPECT_EQ(topics[1].label, "screen");
  EXPECT_EQ(topics[1].support, 4u);
  for (const auto& t : topics) EXPECT_EQ(t.source, TopicSource::mined);
}

TEST(Mining, TiesAreAlphabetical) {
  ReviewStore store;
  std::istringstream in(review_line("1", "p", "zipper hood", 3) + review_line("2", "p", "hood zipper", 3));
  store.ingest(in);
  MiningOptions opts;
  opts.coverage_threshold = 1;
  opts.terms.bigrams = false;
  const auto topics = extract_frequent_mentions(store, "p", opts);
  ASSERT_EQ(topics.size(), 2u);
  EXPECT_EQ(topics[0].label, "hood");
  EXPECT_EQ(topics[1].label, "zipper");
}

TEST(Mining, BelowThresholdIsCatalogMiss) {
  ReviewStore store;
  EXPECT_THROW(extract_frequent_mentions(store, "nothing"), CatalogMiss);
  std::istringstream in(review_line("1", "p", "battery", 3));
  store.ingest(in);
  EXPECT_THROW(extract_frequent_mentions(store, "p"), CatalogMiss);
}

TEST(Mining, DeterministicAndSupportOrdered) {
  ReviewStore store;
  std::ifstream in(fixture("reviews_12.jsonl"));
  store.ingest(in);
  MiningOptions opts;
  opts.coverage_threshold = 5;
  const auto a = extract_frequent_mentions(store, "ptA", opts);
  const auto b = extract_frequent_mentions(store, "ptA", opts);
  EXPECT_EQ(a, b);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_GE(a[i - 1].support, a[i].support);
  EXPECT_EQ(a.front().label, "battery");
}

TEST(Mining, LemmaLight) {
  EXPECT_EQ(lemma_light("batteries"), "battery");
  EXPECT_EQ(lemma_light("straps"), "strap");
  EXPECT_EQ(lemma_light("boxes"), "box");
  EXPECT_EQ(lemma_light("glass"), "glass");
  EXPECT_EQ(lemma_light("status"), "status");
}

TEST(Description, SuctionRanksFirst) {
  const std::string d =
      "Powerful suction lifts dirt from carpets. The suction stays strong on hard floors. "
      "Suction power lasts the whole battery charge.";
  const auto scored = score_description_terms(d);
  ASSERT_FALSE(scored.empty());
  EXPECT_EQ(scored[0].term, "suction");
  // count 3, first occurrence at index 0, present in all 3 sentences.
  EXPECT_DOUBLE_EQ(scored[0].score, 3.0);
  const auto topics = extract_topics_from_description(d, 1);
  ASSERT_EQ(topics.size(), 1u);
  EXPECT_EQ(topics[0].label, "suction");
  EXPECT_EQ(topics[0].source, TopicSource::description);
}

TEST(Description, StopWordsOnlyAndEmpty) {
  EXPECT_TRUE(extract_topics_from_description("It is what it is, and they were there.").empty());
  EXPECT_TRUE(extract_topics_from_description("").empty());
}

TEST(Coverage, FractionAboveThreshold) {
  ReviewStore store;
  std::string corpus;
  int id = 0;
  for (auto [pt, n] : std::vector<std::pair<std::string, int>>{{"a", 300}, {"b", 100}, {"c", 260}})
    for (int i = 0; i < n; ++i) corpus += review_line(std::to_string(id++), pt, "x", 3);
  std::istringstream in(corpus);
  store.ingest(in);
  const auto r = store.coverage_report(250);
  EXPECT_EQ(r.pt_count, 3u);
  EXPECT_EQ(r.above_threshold, 2u);
  EXPECT_NEAR(r.fraction_above_threshold, 2.0 / 3.0, 1e-12);
  EXPECT_NE(format_coverage(r).find("(66.7%)"), std::string::npos);
}

TEST(Coverage, EmptyStore) {
  ReviewStore store;
  const auto r = store.coverage_report();
  EXPECT_EQ(r.pt_count, 0u);
  EXPECT_EQ(r.fraction_above_threshold, 0.0);
}

TEST(Topics, GarbageBagsFromCatalog) {
  const auto cat = data::bundled_catalog();
  const auto r = topics_for(cat, std::nullopt, "Garbage Bags", false);
  EXPECT_EQ(r.provenance, Provenance::catalog);
  const std::vector<std::string> expected{"sturdiness", "durability", "strength", "smell",    "leak",
                                          "price",      "size",       "ease of use", "material", "tie"};
  ASSERT_EQ(r.topics.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(r.topics[i].label, expected[i]);
}

TEST(Topics, FallbackRules) {
  const auto cat = data::bundled_catalog();
  const ProductType fresh{"Trail Shoes", "Trail Shoes", "Apparel", ""};
  EXPECT_THROW(topics_for(cat, fresh, fresh.id, false), CatalogMiss);
  EXPECT_THROW(topics_for(cat, std::nullopt, "Nope", true), NotFound);

  FallbackSource nearest{Provenance::similar_pt, [&](const ProductType&) -> std::optional<TopicLookupResult> {
                           TopicLookupResult r;
                           r.topics = *cat.find("Rain Jackets");
                           return r;
                         }};
  const auto r = topics_for(cat, fresh, fresh.id, true, {nearest});
  EXPECT_EQ(r.provenance, Provenance::similar_pt);
  EXPECT_EQ(r.topics, *cat.find("Rain Jackets"));

  FallbackSource failing{Provenance::llm, [](const ProductType&) -> std::optional<TopicLookupResult> {
                           throw BackendError("offline");
                         }};
  EXPECT_THROW(topics_for(cat, fresh, fresh.id, true, {failing}), CatalogMiss);
}

TEST(Topics, NoFallbackNeverLeavesCatalog) {
  const auto cat = data::bundled_catalog();
  for (const auto& [pt, _] : cat.entries) EXPECT_EQ(topics_for(cat, std::nullopt, pt, false).provenance, Provenance::catalog);
}

TEST(Topics, RankedListsAreUniqueAndOrdered) {
  for (const auto& [pt, topics] : data::bundled_catalog().entries) {
    std::set<std::string> labels;
    for (std::size_t i = 0; i < topics.size(); ++i) {
      EXPECT_TRUE(labels.insert(topics[i].label).second) << pt;
      if (i > 0) {
        EXPECT_GE(topics[i - 1].support, topics[i].support);
      }
      for (const auto& s : topics[i].synonyms) EXPECT_NE(s, topics[i].label);
    }
  }
}

TEST(CatalogFile, RoundTrip) {
  const auto cat = data::bundled_catalog();
  std::stringstream buf;
  write_catalog(buf, cat);
  const auto back = read_catalog(buf);
  EXPECT_EQ(back.entries, cat.entries);
}

TEST(CatalogService, ReingestIsIdempotentAndPersistent) {
  const auto dir = temp_dir("service");
  std::string corpus;
  for (int i = 0; i < 30; ++i) corpus += review_line(std::to_string(i), "lamps", i % 2 ? "bulb shade" : "bulb switch", 3);
  MiningOptions opts;
  opts.coverage_threshold = 20;
  std::shared_ptr<const TopicCatalog> first;
  {
    CatalogService svc(dir);
    std::istringstream in(corpus);
    EXPECT_EQ(svc.ingest(in).accepted, 30u);
    first = svc.rebuild(opts);
    EXPECT_EQ(first->version, 1u);
    std::istringstream again(corpus);
    EXPECT_EQ(svc.ingest(again).accepted, 0u);
    const auto second = svc.rebuild(opts);
    EXPECT_EQ(second->entries, first->entries);
    EXPECT_EQ(second->version, first->version);
  }
  CatalogService reopened(dir);
  EXPECT_EQ(reopened.snapshot()->entries, first->entries);
  EXPECT_EQ(reopened.with_store([](const ReviewStore& s) { return s.size(); }), 30u);
  std::filesystem::remove_all(dir);
}
