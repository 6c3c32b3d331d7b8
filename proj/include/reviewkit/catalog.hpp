#pragma once

// Review ingestion, frequent-mention mining and topic catalog snapshots.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "reviewkit/error.hpp"
#include "reviewkit/sentiment.hpp"
#include "reviewkit/text.hpp"

namespace reviewkit::catalog {

using json = nlohmann::json;

struct ProductType {
  std::string id;
  std::string name;
  std::string department;   // empty when unknown
  std::string description;  // used for cold-start topic extraction
};

struct Review {
  std::string id;
  std::string product_type_id;
  std::string product_name;
  std::string text;
  int stars = 0;
};

enum class TopicSource { mined, description, similar_pt, llm };

inline std::string_view to_string(TopicSource s) {
  switch (s) {
    case TopicSource::mined: return "mined";
    case TopicSource::description: return "description";
    case TopicSource::similar_pt: return "similar_pt";
    case TopicSource::llm: return "llm";
  }
  return "mined";
}

inline TopicSource topic_source_from_string(std::string_view s) {
  if (s == "mined") return TopicSource::mined;
  if (s == "description") return TopicSource::description;
  if (s == "similar_pt") return TopicSource::similar_pt;
  if (s == "llm") return TopicSource::llm;
  throw InvalidArgument("unknown topic source: " + std::string(s));
}

struct Topic {
  std::string label;  // lowercase canonical form
  std::vector<std::string> synonyms;
  std::size_t support = 0;
  TopicSource source = TopicSource::mined;

  friend bool operator==(const Topic&, const Topic&) = default;
};

using TopicList = std::vector<Topic>;

/// Builds a Topic with the label lowercased and trimmed, synonyms lowercased,
/// deduplicated and never equal to the label.
inline Topic make_topic(std::string_view label, std::vector<std::string> synonyms = {},
                        std::size_t support = 0, TopicSource source = TopicSource::mined) {
  Topic t;
  t.label = text::casefold(text::trim(label));
  if (t.label.empty()) throw InvalidArgument("topic label must be nonempty");
  std::set<std::string> seen;
  for (auto& s : synonyms) {
    auto folded = text::casefold(text::trim(s));
    if (folded.empty() || folded == t.label || !seen.insert(folded).second) continue;
    t.synonyms.push_back(std::move(folded));
  }
  t.support = support;
  t.source = source;
  return t;
}

/// Descending support, ties by label; duplicate labels keep the first
/// (highest-ranked) occurrence.
inline TopicList rank_topics(TopicList topics) {
  std::stable_sort(topics.begin(), topics.end(), [](const Topic& a, const Topic& b) {
    if (a.support != b.support) return a.support > b.support;
    return a.label < b.label;
  });
  std::unordered_set<std::string> seen;
  TopicList out;
  out.reserve(topics.size());
  for (auto& t : topics) {
    if (seen.insert(t.label).second) out.push_back(std::move(t));
  }
  return out;
}

inline json to_json(const Topic& t) {
  return json{{"label", t.label},
              {"synonyms", t.synonyms},
              {"support", t.support},
              {"source", std::string(to_string(t.source))}};
}

inline Topic topic_from_json(const json& j) {
  return make_topic(j.at("label").get<std::string>(),
                    j.value("synonyms", std::vector<std::string>{}),
                    j.value("support", std::size_t{0}),
                    topic_source_from_string(j.value("source", std::string("mined"))));
}

inline json to_json(const Review& r) {
  return json{{"id", r.id},
              {"product_type", r.product_type_id},
              {"product_name", r.product_name},
              {"text", r.text},
              {"stars", r.stars}};
}

/// Parses one JSON Lines review record. Fields are exactly
/// {"id","product_type","product_name","text","stars"}; product_name may be
/// absent or null. Throws InvalidArgument with the rejection reason.
inline Review review_from_json_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("malformed JSON", e.what());
  }
  if (!j.is_object()) throw InvalidArgument("record is not an object");
  static const std::set<std::string> allowed = {"id", "product_type", "product_name", "text",
                                                "stars"};
  for (const auto& [key, _] : j.items()) {
    if (allowed.count(key) == 0) throw InvalidArgument("unexpected field '" + key + "'");
  }
  const auto require_string = [&](const char* key) -> std::string {
    if (!j.contains(key) || !j[key].is_string())
      throw InvalidArgument(std::string("missing or non-string field '") + key + "'");
    return j[key].get<std::string>();
  };
  Review r;
  r.id = require_string("id");
  r.product_type_id = require_string("product_type");
  if (j.contains("text") && j["text"].is_null()) {
    r.text.clear();
  } else {
    r.text = require_string("text");
  }
  if (j.contains("product_name") && !j["product_name"].is_null()) {
    if (!j["product_name"].is_string()) throw InvalidArgument("product_name must be a string");
    r.product_name = j["product_name"].get<std::string>();
  }
  if (!j.contains("stars") || !j["stars"].is_number_integer())
    throw InvalidArgument("missing or non-integer field 'stars'");
  const auto stars = j["stars"].get<long long>();
  if (stars < 1 || stars > 5) throw InvalidArgument("stars out of range: " + std::to_string(stars));
  r.stars = static_cast<int>(stars);
  if (r.id.empty()) throw InvalidArgument("empty review id");
  if (r.product_type_id.empty()) throw InvalidArgument("empty product_type");
  return r;
}

struct Rejection {
  std::size_t line = 0;  // 1-based line in the submitted stream
  std::string reason;
};

struct IngestSummary {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> per_pt_counts;  // accepted in this batch
  std::vector<Rejection> rejections;
};

inline json to_json(const IngestSummary& s) {
  json rejections = json::array();
  for (const auto& r : s.rejections) rejections.push_back({{"line", r.line}, {"reason", r.reason}});
  return json{{"accepted", s.accepted},
              {"rejected", s.rejected},
              {"per_pt_counts", s.per_pt_counts},
              {"rejections", rejections}};
}

// --------------------------------------------------------------------------
// Candidate terms

/// Light lemmatization: plural folding only ("batteries" -> "battery",
/// "boxes" -> "box", "straps" -> "strap"). Words ending in ss/us/is are kept.
inline std::string lemma_light(std::string word) {
  const auto ends_with = [&](std::string_view suffix) {
    return word.size() >= suffix.size() &&
           word.compare(word.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (word.size() > 4 && ends_with("ies")) {
    word.replace(word.size() - 3, 3, "y");
  } else if (word.size() > 4 && (ends_with("ches") || ends_with("shes") || ends_with("xes") ||
                                 ends_with("sses") || ends_with("zes"))) {
    word.resize(word.size() - 2);
  } else if (word.size() > 3 && ends_with("s") && !ends_with("ss") && !ends_with("us") &&
             !ends_with("is")) {
    word.pop_back();
  }
  return word;
}

/// Words that occur in nearly every review without naming a product aspect.
inline const std::unordered_set<std::string>& generic_review_words() {
  static const std::unordered_set<std::string> words = {
      "product", "item", "one", "get", "got", "buy", "bought", "purchase", "purchased",
      "thing", "really", "much", "use", "used", "using", "like", "even", "well", "still",
      "make", "made", "would", "could", "star", "review", "order", "ordered", "received"};
  return words;
}

struct TermOptions {
  const std::unordered_set<std::string>* stop_words = &text::default_stop_words();
  // Opinion words are not aspects; excluded from mining when set.
  const sentiment::SentimentLexicon* opinion_lexicon = &sentiment::default_lexicon();
  bool exclude_generic = true;
  bool bigrams = true;
};

namespace detail {

/// Content tokens of one text segment; std::nullopt entries mark positions
/// where a stop word was removed so bigrams never span a gap.
inline std::vector<std::optional<std::string>> content_tokens(std::string_view segment,
                                                              const TermOptions& opts) {
  std::vector<std::optional<std::string>> out;
  for (auto& tok : text::alnum_tokens(segment)) {
    const bool stop = opts.stop_words->count(tok) != 0 ||
                      (opts.exclude_generic && generic_review_words().count(tok) != 0) ||
                      (opts.opinion_lexicon && opts.opinion_lexicon->polarity(tok).has_value()) ||
                      std::all_of(tok.begin(), tok.end(),
                                  [](unsigned char c) { return std::isdigit(c) != 0; }) ||
                      tok.size() < 2;
    if (stop) {
      if (!out.empty() && out.back().has_value()) out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(lemma_light(std::move(tok)));
    }
  }
  return out;
}

}  // namespace detail

/// Ordered candidate occurrences (unigrams, then adjacent-content bigrams
/// interleaved at their start position) for one segment of text.
inline std::vector<std::string> candidate_occurrences(std::string_view segment,
                                                      const TermOptions& opts = {}) {
  const auto tokens = detail::content_tokens(segment, opts);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!tokens[i]) continue;
    out.push_back(*tokens[i]);
    if (opts.bigrams && i + 1 < tokens.size() && tokens[i + 1])
      out.push_back(*tokens[i] + " " + *tokens[i + 1]);
  }
  return out;
}

/// Distinct candidate terms of a text.
inline std::set<std::string> candidate_terms(std::string_view text_in, const TermOptions& opts = {}) {
  auto occ = candidate_occurrences(text_in, opts);
  return {occ.begin(), occ.end()};
}

// --------------------------------------------------------------------------
// Catalog snapshot

struct TopicCatalog {
  std::map<std::string, TopicList> entries;  // product_type_id -> ranked topics
  std::uint64_t version = 0;

  const TopicList* find(const std::string& pt) const {
    auto it = entries.find(pt);
    return it == entries.end() ? nullptr : &it->second;
  }
};

inline json catalog_entry_to_json(const std::string& pt, const TopicList& topics) {
  json arr = json::array();
  for (const auto& t : topics) arr.push_back(to_json(t));
  return json{{"product_type", pt}, {"topics", arr}};
}

/// One JSON document per product type per line, in product-type order.
inline void write_catalog(std::ostream& out, const TopicCatalog& catalog) {
  for (const auto& [pt, topics] : catalog.entries) out << catalog_entry_to_json(pt, topics).dump() << '\n';
}

inline TopicCatalog read_catalog(std::istream& in) {
  TopicCatalog catalog;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      TopicList topics;
      for (const auto& t : j.at("topics")) topics.push_back(topic_from_json(t));
      catalog.entries[j.at("product_type").get<std::string>()] = rank_topics(std::move(topics));
    } catch (const json::exception& e) {
      throw InvalidArgument("catalog line " + std::to_string(line_no) + " malformed", e.what());
    }
  }
  return catalog;
}

inline json to_json(const ProductType& pt) {
  json j{{"id", pt.id}, {"name", pt.name}};
  if (!pt.department.empty()) j["department"] = pt.department;
  if (!pt.description.empty()) j["description"] = pt.description;
  return j;
}

inline ProductType product_type_from_json(const json& j) {
  ProductType pt;
  pt.id = j.at("id").get<std::string>();
  pt.name = j.value("name", pt.id);
  pt.department = j.value("department", std::string{});
  pt.description = j.value("description", std::string{});
  if (pt.id.empty()) throw InvalidArgument("product type id must be nonempty");
  if (pt.name.empty()) throw InvalidArgument("product type name must be nonempty");
  return pt;
}

// --------------------------------------------------------------------------
// Store

struct MiningOptions {
  std::size_t max_topics = 10;
  std::size_t coverage_threshold = 250;
  TermOptions terms{};
};

struct CoverageReport {
  std::size_t pt_count = 0;
  std::size_t threshold = 250;
  std::vector<std::pair<std::string, std::size_t>> reviews_histogram;  // bucket -> PT count
  double fraction_above_threshold = 0.0;
  std::size_t above_threshold = 0;
};

inline std::string format_coverage(const CoverageReport& r) {
  std::ostringstream out;
  out << "product types: " << r.pt_count << '\n';
  out << "reviews per product type:\n";
  for (const auto& [bucket, count] : r.reviews_histogram) out << "  " << bucket << ": " << count << '\n';
  char pct[32];
  std::snprintf(pct, sizeof pct, "%.1f%%", 100.0 * r.fraction_above_threshold);
  out << "above " << r.threshold << " reviews: " << r.above_threshold << " (" << pct << ")\n";
  return out.str();
}

inline json to_json(const CoverageReport& r) {
  json hist = json::array();
  for (const auto& [bucket, count] : r.reviews_histogram) hist.push_back({{"bucket", bucket}, {"count", count}});
  return json{{"pt_count", r.pt_count},
              {"threshold", r.threshold},
              {"reviews_histogram", hist},
              {"above_threshold", r.above_threshold},
              {"fraction_above_threshold", r.fraction_above_threshold}};
}

/// In-memory review store with an optional append-only JSON Lines log.
/// Not synchronized; CatalogService serializes writers around it.
class ReviewStore {
 public:
  ReviewStore() = default;

  /// Opens (or creates) a store persisted at `log_path`, replaying the log.
  explicit ReviewStore(std::filesystem::path log_path) : log_path_(std::move(log_path)) {
    if (std::filesystem::exists(*log_path_)) {
      std::ifstream in(*log_path_);
      if (!in) throw IoError("cannot read review log: " + log_path_->string());
      std::string line;
      while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        add_unlogged(review_from_json_line(line));
      }
    }
  }

  IngestSummary ingest(std::istream& source) {
    IngestSummary summary;
    std::string line;
    std::size_t line_no = 0;
    std::vector<Review> batch;
    std::unordered_set<std::string> batch_ids;
    while (std::getline(source, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      try {
        Review r = review_from_json_line(line);
        if (ids_.count(r.id) != 0 || !batch_ids.insert(r.id).second)
          throw InvalidArgument("duplicate review id '" + r.id + "'");
        batch.push_back(std::move(r));
      } catch (const InvalidArgument& e) {
        ++summary.rejected;
        summary.rejections.push_back({line_no, e.what()});
      }
    }
    append_to_log(batch);
    for (auto& r : batch) {
      ++summary.accepted;
      ++summary.per_pt_counts[r.product_type_id];
      add_unlogged(std::move(r));
    }
    return summary;
  }

  IngestSummary ingest(const std::vector<Review>& reviews) {
    std::ostringstream buf;
    for (const auto& r : reviews) buf << to_json(r).dump() << '\n';
    std::istringstream in(buf.str());
    return ingest(in);
  }

  void register_product_type(ProductType pt) {
    if (pt.id.empty()) throw InvalidArgument("product type id must be nonempty");
    if (pt.name.empty()) pt.name = pt.id;
    product_types_[pt.id] = std::move(pt);
  }

  /// Registered product types plus any product type seen only in reviews.
  std::vector<ProductType> product_types() const {
    std::map<std::string, ProductType> all = product_types_;
    for (const auto& [pt, _] : by_pt_) {
      if (all.count(pt) == 0) all[pt] = ProductType{pt, pt, {}, {}};
    }
    std::vector<ProductType> out;
    for (auto& [_, pt] : all) out.push_back(pt);
    return out;
  }

  std::optional<ProductType> product_type(const std::string& id) const {
    if (auto it = product_types_.find(id); it != product_types_.end()) return it->second;
    if (by_pt_.count(id) != 0) return ProductType{id, id, {}, {}};
    return std::nullopt;
  }

  std::size_t review_count(const std::string& pt) const {
    auto it = by_pt_.find(pt);
    return it == by_pt_.end() ? 0 : it->second.size();
  }

  std::vector<const Review*> reviews_for(const std::string& pt) const {
    std::vector<const Review*> out;
    if (auto it = by_pt_.find(pt); it != by_pt_.end())
      for (auto idx : it->second) out.push_back(&reviews_[idx]);
    return out;
  }

  std::size_t size() const { return reviews_.size(); }
  const std::vector<Review>& reviews() const { return reviews_; }

  CoverageReport coverage_report(std::size_t threshold = 250) const {
    CoverageReport report;
    report.threshold = threshold;
    static const std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> buckets = {
        {"0", {0, 0}},          {"1-49", {1, 49}},       {"50-99", {50, 99}},
        {"100-249", {100, 249}}, {"250-499", {250, 499}}, {"500-999", {500, 999}},
        {"1000+", {1000, static_cast<std::size_t>(-1)}}};
    std::vector<std::size_t> counts(buckets.size(), 0);
    for (const auto& pt : product_types()) {
      const auto n = review_count(pt.id);
      ++report.pt_count;
      if (n > threshold) ++report.above_threshold;
      for (std::size_t b = 0; b < buckets.size(); ++b) {
        if (n >= buckets[b].second.first && n <= buckets[b].second.second) ++counts[b];
      }
    }
    for (std::size_t b = 0; b < buckets.size(); ++b) report.reviews_histogram.emplace_back(buckets[b].first, counts[b]);
    report.fraction_above_threshold =
        report.pt_count == 0 ? 0.0
                             : static_cast<double>(report.above_threshold) / static_cast<double>(report.pt_count);
    return report;
  }

 private:
  void add_unlogged(Review r) {
    if (!ids_.insert(r.id).second) return;
    by_pt_[r.product_type_id].push_back(reviews_.size());
    reviews_.push_back(std::move(r));
  }

  void append_to_log(const std::vector<Review>& batch) {
    if (!log_path_ || batch.empty()) return;
    if (log_path_->has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(log_path_->parent_path(), ec);
    }
    std::ofstream out(*log_path_, std::ios::app);
    if (!out) throw IoError("review store unwritable: " + log_path_->string());
    for (const auto& r : batch) out << to_json(r).dump() << '\n';
    out.flush();
    if (!out) throw IoError("review store write failed: " + log_path_->string());
  }

  std::optional<std::filesystem::path> log_path_;
  std::vector<Review> reviews_;
  std::unordered_set<std::string> ids_;
  std::map<std::string, std::vector<std::size_t>> by_pt_;
  std::map<std::string, ProductType> product_types_;
};

/// Top topics of a product type ranked by document frequency of candidate
/// terms (number of reviews mentioning the term). Throws CatalogMiss when the
/// product type has fewer than `coverage_threshold` reviews.
inline TopicList extract_frequent_mentions(const ReviewStore& store, const std::string& pt,
                                           const MiningOptions& opts = {}) {
  const auto reviews = store.reviews_for(pt);
  if (reviews.empty() || reviews.size() < opts.coverage_threshold) {
    throw CatalogMiss("product type '" + pt + "' has " + std::to_string(reviews.size()) +
                      " reviews (< " + std::to_string(opts.coverage_threshold) +
                      "); use a fallback topic source");
  }
  std::map<std::string, std::size_t> document_frequency;
  for (const Review* r : reviews) {
    for (const auto& term : candidate_terms(r->text, opts.terms)) ++document_frequency[term];
  }
  TopicList topics;
  topics.reserve(document_frequency.size());
  for (const auto& [term, df] : document_frequency) topics.push_back(Topic{term, {}, df, TopicSource::mined});
  topics = rank_topics(std::move(topics));
  if (topics.size() > opts.max_topics) topics.resize(opts.max_topics);
  return topics;
}

/// Unsupervised keyword extraction from a single product description.
/// score(term) = count * 1 / (1 + first_position_fraction) * sentence_spread,
/// where first_position_fraction is the index of the term's first
/// occurrence over the number of candidate occurrences and sentence_spread is
/// the fraction of sentences containing the term.
struct ScoredTerm {
  std::string term;
  double score = 0.0;
  std::size_t count = 0;
};

inline std::vector<ScoredTerm> score_description_terms(std::string_view description,
                                                       const TermOptions& opts = {}) {
  const auto sentences = text::split_sentences(description);
  std::vector<std::string> stream;
  std::map<std::string, std::size_t> first_index;
  std::map<std::string, std::size_t> counts;
  std::map<std::string, std::size_t> sentence_hits;
  for (const auto sentence : sentences) {
    std::set<std::string> in_sentence;
    for (auto& term : candidate_occurrences(sentence, opts)) {
      first_index.try_emplace(term, stream.size());
      ++counts[term];
      in_sentence.insert(term);
      stream.push_back(std::move(term));
    }
    for (const auto& t : in_sentence) ++sentence_hits[t];
  }
  std::vector<ScoredTerm> scored;
  if (stream.empty()) return scored;
  const double total = static_cast<double>(stream.size());
  const double n_sentences = static_cast<double>(sentences.size());
  for (const auto& [term, count] : counts) {
    const double first_fraction = static_cast<double>(first_index[term]) / total;
    const double spread = static_cast<double>(sentence_hits[term]) / n_sentences;
    scored.push_back({term, static_cast<double>(count) / (1.0 + first_fraction) * spread, count});
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredTerm& a, const ScoredTerm& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.term < b.term;
  });
  return scored;
}

inline TopicList extract_topics_from_description(std::string_view description, std::size_t max_topics = 10,
                                                 const TermOptions& opts = {}) {
  TopicList topics;
  if (text::trim(description).empty() || max_topics == 0) return topics;
  for (const auto& s : score_description_terms(description, opts)) {
    if (topics.size() == max_topics) break;
    topics.push_back(Topic{s.term, {}, s.count, TopicSource::description});
  }
  return topics;
}

// --------------------------------------------------------------------------
// Topic resolution

enum class Provenance { catalog, similar_pt, llm, description };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::catalog: return "catalog";
    case Provenance::similar_pt: return "similar_pt";
    case Provenance::llm: return "llm";
    case Provenance::description: return "description";
  }
  return "catalog";
}

struct TopicLookupResult {
  TopicList topics;
  Provenance provenance = Provenance::catalog;
  std::string detail;  // e.g. the product type topics were borrowed from
  std::uint64_t catalog_version = 0;
};

/// A cold-start topic source; returns std::nullopt (or an empty list) when it
/// cannot produce topics for the product type.
struct FallbackSource {
  Provenance provenance;
  std::function<std::optional<TopicLookupResult>(const ProductType&)> resolve;
};

/// Catalog hit first; otherwise, when allowed, each fallback in order.
inline TopicLookupResult topics_for(const TopicCatalog& catalog, const std::optional<ProductType>& pt,
                                    const std::string& pt_id, bool allow_fallback,
                                    const std::vector<FallbackSource>& fallbacks = {},
                                    std::size_t max_topics = 10) {
  const TopicList* hit = catalog.find(pt_id);
  if (!pt && !hit) throw NotFound("unknown product type '" + pt_id + "'");
  if (hit && !hit->empty()) {
    TopicLookupResult r;
    r.topics.assign(hit->begin(), hit->begin() + std::min(max_topics, hit->size()));
    r.provenance = Provenance::catalog;
    r.catalog_version = catalog.version;
    return r;
  }
  if (!allow_fallback)
    throw CatalogMiss("no catalog topics for '" + pt_id + "' and fallback disabled");
  const ProductType resolved = pt ? *pt : ProductType{pt_id, pt_id, {}, {}};
  std::vector<std::string> tried;
  for (const auto& source : fallbacks) {
    std::optional<TopicLookupResult> r;
    try {
      r = source.resolve(resolved);
    } catch (const BackendError& e) {
      tried.push_back(std::string(to_string(source.provenance)) + ": " + e.what());
      continue;
    }
    if (r && !r->topics.empty()) {
      r->provenance = source.provenance;
      if (r->topics.size() > max_topics) r->topics.resize(max_topics);
      r->catalog_version = catalog.version;
      return *r;
    }
    tried.push_back(std::string(to_string(source.provenance)) + ": no topics");
  }
  std::string detail;
  for (const auto& t : tried) detail += (detail.empty() ? "" : "; ") + t;
  throw CatalogMiss("no topic source produced topics for '" + pt_id + "'", detail);
}

// --------------------------------------------------------------------------
// Concurrent wrapper

/// Single-writer store plus an immutable, atomically swapped catalog
/// snapshot. Readers take a shared_ptr copy and never observe a partial
/// rebuild.
class CatalogService {
 public:
  CatalogService() : snapshot_(std::make_shared<const TopicCatalog>()) {}

  /// Persistent service rooted at `data_dir` (reviews.jsonl, catalog.jsonl,
  /// product_types.jsonl).
  explicit CatalogService(const std::filesystem::path& data_dir)
      : data_dir_(data_dir), store_(data_dir / "reviews.jsonl") {
    std::error_code ec;
    std::filesystem::create_directories(data_dir, ec);
    if (ec) throw IoError("cannot create data dir: " + data_dir.string());
    TopicCatalog catalog;
    if (std::ifstream in(data_dir / "catalog.jsonl"); in) catalog = read_catalog(in);
    if (std::ifstream in(data_dir / "product_types.jsonl"); in) {
      std::string line;
      while (std::getline(in, line))
        if (!text::trim(line).empty()) store_.register_product_type(product_type_from_json(json::parse(line)));
    }
    snapshot_ = std::make_shared<const TopicCatalog>(std::move(catalog));
  }

  std::shared_ptr<const TopicCatalog> snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
  }

  template <class Fn>
  auto with_store(Fn&& fn) const {
    std::lock_guard lock(writer_mutex_);
    return fn(static_cast<const ReviewStore&>(store_));
  }

  IngestSummary ingest(std::istream& source) {
    std::lock_guard lock(writer_mutex_);
    return store_.ingest(source);
  }

  void register_product_type(ProductType pt) {
    std::lock_guard lock(writer_mutex_);
    store_.register_product_type(pt);
    if (data_dir_) {
      std::ofstream out(*data_dir_ / "product_types.jsonl", std::ios::app);
      if (!out) throw IoError("cannot write product types");
      out << to_json(pt).dump() << '\n';
    }
  }

  /// Re-mines every product type at or above the coverage threshold. Entries
  /// for product types below it are carried over from the current snapshot
  /// (curated or previously imported lists).
  std::shared_ptr<const TopicCatalog> rebuild(const MiningOptions& opts = {}) {
    std::lock_guard lock(writer_mutex_);
    auto current = snapshot();
    TopicCatalog next;
    next.entries = current->entries;
    for (const auto& pt : store_.product_types()) {
      if (store_.review_count(pt.id) == 0 || store_.review_count(pt.id) < opts.coverage_threshold) continue;
      next.entries[pt.id] = extract_frequent_mentions(store_, pt.id, opts);
    }
    return publish_locked(std::move(next), current);
  }

  /// Replaces or adds catalog entries (e.g. an imported snapshot).
  std::shared_ptr<const TopicCatalog> import(const TopicCatalog& entries) {
    std::lock_guard lock(writer_mutex_);
    auto current = snapshot();
    TopicCatalog next;
    next.entries = current->entries;
    for (const auto& [pt, topics] : entries.entries) next.entries[pt] = rank_topics(topics);
    return publish_locked(std::move(next), current);
  }

 private:
  std::shared_ptr<const TopicCatalog> publish_locked(TopicCatalog next,
                                                     const std::shared_ptr<const TopicCatalog>& current) {
    if (next.entries == current->entries) return current;
    next.version = current->version + 1;
    if (data_dir_) {
      const auto tmp = *data_dir_ / "catalog.jsonl.tmp";
      {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot write catalog snapshot");
        write_catalog(out, next);
      }
      std::filesystem::rename(tmp, *data_dir_ / "catalog.jsonl");
    }
    auto published = std::make_shared<const TopicCatalog>(std::move(next));
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = published;
    return published;
  }

  std::optional<std::filesystem::path> data_dir_;
  ReviewStore store_;
  mutable std::mutex writer_mutex_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const TopicCatalog> snapshot_;
};

}  // namespace reviewkit::catalog
