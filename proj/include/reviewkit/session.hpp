#pragma once

// Interactive review composition: topics -> ratings -> phrases -> draft ->
// final, with live topic coverage and an append-only event journal.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reviewkit/catalog.hpp"
#include "reviewkit/error.hpp"
#include "reviewkit/evaluation.hpp"
#include "reviewkit/generation.hpp"
#include "reviewkit/sentiment.hpp"
#include "reviewkit/text.hpp"

namespace reviewkit::session {

using json = nlohmann::json;

enum class State { created, topics_presented, rated, phrases_suggested, drafting, finalized };

inline std::string_view to_string(State s) {
  switch (s) {
    case State::created: return "CREATED";
    case State::topics_presented: return "TOPICS_PRESENTED";
    case State::rated: return "RATED";
    case State::phrases_suggested: return "PHRASES_SUGGESTED";
    case State::drafting: return "DRAFTING";
    case State::finalized: return "FINALIZED";
  }
  return "CREATED";
}

inline State state_from_string(std::string_view s) {
  for (auto st : {State::created, State::topics_presented, State::rated, State::phrases_suggested, State::drafting,
                  State::finalized})
    if (to_string(st) == s) return st;
  throw InvalidArgument("unknown session state '" + std::string(s) + "'");
}

/// The transition relation. Forward edges, DRAFTING -> RATED re-entry, and
/// self-loops for repeated rating, suggesting and draft edits.
inline bool transition_allowed(State from, State to) {
  switch (from) {
    case State::created: return to == State::topics_presented;
    case State::topics_presented: return to == State::rated;
    case State::rated: return to == State::rated || to == State::phrases_suggested;
    case State::phrases_suggested: return to == State::phrases_suggested || to == State::drafting;
    case State::drafting: return to == State::drafting || to == State::rated || to == State::finalized;
    case State::finalized: return false;
  }
  return false;
}

// --------------------------------------------------------------------------
// Topic detection

struct SentenceTopics {
  std::size_t sentence = 0;
  std::vector<std::string> topics;

  friend bool operator==(const SentenceTopics&, const SentenceTopics&) = default;
};

namespace detail {

inline bool token_matches(const std::string& text_token, const std::string& term_token) {
  return text_token == term_token || text_token == term_token + "s";
}

inline bool contains_term(const std::vector<std::string>& tokens, const std::vector<std::string>& term) {
  if (term.empty() || term.size() > tokens.size()) return false;
  for (std::size_t i = 0; i + term.size() <= tokens.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; ok && j < term.size(); ++j) ok = token_matches(tokens[i + j], term[j]);
    if (ok) return true;
  }
  return false;
}

}  // namespace detail

/// Tags each sentence with the topics whose label or a synonym occurs in it as
/// whole words (case-insensitive; a trailing "s" on the draft word is the
/// only inflection folded). Sentences without topics are omitted.
inline std::vector<SentenceTopics> detect_topics(std::string_view draft, const catalog::TopicList& topics) {
  std::vector<SentenceTopics> out;
  std::vector<std::vector<std::vector<std::string>>> terms;
  for (const auto& t : topics) {
    std::vector<std::vector<std::string>> forms{text::alnum_tokens(t.label)};
    for (const auto& s : t.synonyms) forms.push_back(text::alnum_tokens(s));
    terms.push_back(std::move(forms));
  }
  const auto sentences = text::split_sentences(text::trim(draft));
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto tokens = text::alnum_tokens(sentences[i]);
    SentenceTopics st{i, {}};
    for (std::size_t t = 0; t < topics.size(); ++t) {
      if (std::any_of(terms[t].begin(), terms[t].end(),
                      [&](const std::vector<std::string>& f) { return detail::contains_term(tokens, f); }))
        st.topics.push_back(topics[t].label);
    }
    if (!st.topics.empty()) out.push_back(std::move(st));
  }
  return out;
}

struct Coverage {
  std::vector<SentenceTopics> sentence_tags;
  std::vector<std::string> covered;      // rated topics found in the draft, rating order
  std::vector<std::string> unaddressed;  // rated topics not found
};

inline Coverage compute_coverage(std::string_view draft, const catalog::TopicList& presented,
                                 const std::vector<generation::TopicRating>& ratings) {
  Coverage c;
  c.sentence_tags = detect_topics(draft, presented);
  std::set<std::string> found;
  for (const auto& st : c.sentence_tags) found.insert(st.topics.begin(), st.topics.end());
  for (const auto& r : ratings) (found.count(r.topic) ? c.covered : c.unaddressed).push_back(r.topic);
  return c;
}

// --------------------------------------------------------------------------
// Session

struct FinalReview {
  std::string text;
  std::vector<SentenceTopics> sentence_tags;
  std::vector<std::string> extra_topics;  // tagged topics that were presented but not rated
  sentiment::SentimentReport sentiment;
  int suggested_stars = 0;
  int topic_average_stars = 0;
  int text_stars = 0;
};

struct ReviewSession {
  std::string id;
  std::string product_type;
  std::string product_name;
  State state = State::created;
  catalog::TopicList presented_topics;
  std::string provenance;  // empty when no topics were obtainable
  std::uint64_t catalog_version = 0;
  std::vector<generation::TopicRating> ratings;
  std::vector<generation::PhraseSuggestion> suggestions;
  std::string draft;
  Coverage coverage;
  std::optional<FinalReview> final;
  std::vector<std::string> diagnostics;
  std::uint64_t version = 0;  // number of journaled events applied
};

inline json to_json(const SentenceTopics& st) { return json{{"sentence", st.sentence}, {"topics", st.topics}}; }

inline json to_json(const Coverage& c) {
  json tags = json::array();
  for (const auto& st : c.sentence_tags) tags.push_back(to_json(st));
  return json{{"sentence_tags", tags}, {"covered", c.covered}, {"unaddressed", c.unaddressed}};
}

inline json to_json(const sentiment::SentimentReport& r) {
  return json{{"compound", r.compound},
              {"positive_hits", r.positive_hits},
              {"negative_hits", r.negative_hits},
              {"stars", r.stars}};
}

inline json to_json(const FinalReview& f) {
  json tags = json::array();
  for (const auto& st : f.sentence_tags) tags.push_back(to_json(st));
  return json{{"text", f.text},
              {"sentence_tags", tags},
              {"extra_topics", f.extra_topics},
              {"sentiment", to_json(f.sentiment)},
              {"suggested_stars", f.suggested_stars},
              {"topic_average_stars", f.topic_average_stars},
              {"text_stars", f.text_stars}};
}

inline json to_json(const ReviewSession& s) {
  json topics = json::array();
  for (const auto& t : s.presented_topics) topics.push_back(catalog::to_json(t));
  json ratings = json::array();
  for (const auto& r : s.ratings) ratings.push_back(generation::to_json(r));
  json suggestions = json::array();
  for (const auto& p : s.suggestions) suggestions.push_back(generation::to_json(p));
  return json{{"id", s.id},
              {"product_type", s.product_type},
              {"product_name", s.product_name},
              {"state", std::string(to_string(s.state))},
              {"presented_topics", topics},
              {"provenance", s.provenance},
              {"catalog_version", s.catalog_version},
              {"ratings", ratings},
              {"suggestions", suggestions},
              {"draft", s.draft},
              {"coverage", to_json(s.coverage)},
              {"final", s.final ? to_json(*s.final) : json(nullptr)},
              {"diagnostics", s.diagnostics},
              {"version", s.version}};
}

namespace detail {

inline generation::PhraseSuggestion suggestion_from_json(const json& j) {
  generation::PhraseSuggestion p;
  p.topic = j.at("topic").get<std::string>();
  p.text = j.at("text").get<std::string>();
  p.word_count = j.at("word_count").get<std::size_t>();
  for (const auto& f : j.at("flags")) {
    const auto name = f.get<std::string>();
    for (auto flag : {generation::Flag::rating_mention, generation::Flag::too_short, generation::Flag::too_long,
                      generation::Flag::off_topic_term, generation::Flag::unknown_topic, generation::Flag::missing})
      if (generation::to_string(flag) == name) p.flags.insert(flag);
  }
  if (j.contains("sentiment")) {
    const auto& s = j.at("sentiment");
    p.sentiment = sentiment::SentimentReport{s.at("compound").get<double>(), s.at("positive_hits").get<std::size_t>(),
                                             s.at("negative_hits").get<std::size_t>(), s.at("stars").get<int>()};
  }
  if (j.contains("off_topic_terms")) p.off_topic_terms = j.at("off_topic_terms").get<std::vector<std::string>>();
  return p;
}

inline std::vector<SentenceTopics> tags_from_json(const json& arr) {
  std::vector<SentenceTopics> out;
  for (const auto& t : arr) out.push_back({t.at("sentence").get<std::size_t>(), t.at("topics").get<std::vector<std::string>>()});
  return out;
}

inline FinalReview final_from_json(const json& j) {
  FinalReview f;
  f.text = j.at("text").get<std::string>();
  f.sentence_tags = tags_from_json(j.at("sentence_tags"));
  f.extra_topics = j.at("extra_topics").get<std::vector<std::string>>();
  const auto& s = j.at("sentiment");
  f.sentiment = {s.at("compound").get<double>(), s.at("positive_hits").get<std::size_t>(),
                 s.at("negative_hits").get<std::size_t>(), s.at("stars").get<int>()};
  f.suggested_stars = j.at("suggested_stars").get<int>();
  f.topic_average_stars = j.at("topic_average_stars").get<int>();
  f.text_stars = j.at("text_stars").get<int>();
  return f;
}

inline std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

inline void require(const ReviewSession& s, State to, std::string_view op) {
  if (s.state == State::finalized) throw InvalidState("session " + s.id + " is finalized; " + std::string(op) + " rejected");
  if (!transition_allowed(s.state, to))
    throw InvalidState(std::string(op) + " not allowed in state " + std::string(to_string(s.state)));
}

}  // namespace detail

// --------------------------------------------------------------------------
// Pure state transitions. Each returns the journal payload describing its
// effect so replay can re-apply it without calling backends.

inline json apply_ratings(ReviewSession& s, const std::vector<generation::TopicRating>& input) {
  detail::require(s, State::rated, "rate_topics");
  if (input.empty()) throw InvalidArgument("rate_topics needs at least one rating");
  std::vector<generation::TopicRating> ratings;
  std::vector<std::string> diagnostics;
  for (const auto& r : input) {
    if (r.stars < 1 || r.stars > 5)
      throw InvalidArgument("stars for '" + r.topic + "' outside 1..5: " + std::to_string(r.stars));
    const auto key = text::casefold(text::trim(r.topic));
    auto it = std::find_if(s.presented_topics.begin(), s.presented_topics.end(),
                           [&](const catalog::Topic& t) { return t.label == key; });
    if (it == s.presented_topics.end()) throw InvalidArgument("topic '" + r.topic + "' was not presented", r.topic);
    auto dup = std::find_if(ratings.begin(), ratings.end(),
                            [&](const generation::TopicRating& x) { return x.topic == it->label; });
    if (dup != ratings.end()) {
      diagnostics.push_back("topic '" + it->label + "' rated twice; last value wins");
      dup->stars = r.stars;
    } else {
      ratings.push_back({it->label, r.stars});
    }
  }
  s.ratings = std::move(ratings);
  s.suggestions.clear();
  s.state = State::rated;
  s.coverage = compute_coverage(s.draft, s.presented_topics, s.ratings);
  s.diagnostics = diagnostics;
  json payload = json::array();
  for (const auto& r : s.ratings) payload.push_back(generation::to_json(r));
  return json{{"ratings", payload}, {"diagnostics", diagnostics}};
}

/// RATED or PHRASES_SUGGESTED move to PHRASES_SUGGESTED; in DRAFTING the
/// suggestions are refreshed without leaving the state.
inline json apply_suggestions(ReviewSession& s, std::vector<generation::PhraseSuggestion> suggestions,
                              const std::vector<std::string>& diagnostics = {}) {
  const State to = s.state == State::drafting ? State::drafting : State::phrases_suggested;
  detail::require(s, to, "suggest_phrases");
  if (s.ratings.empty()) throw InvalidState("suggest_phrases needs at least one rating");
  s.suggestions = std::move(suggestions);
  s.state = to;
  s.diagnostics = diagnostics;
  json payload = json::array();
  for (const auto& p : s.suggestions) payload.push_back(generation::to_json(p));
  return json{{"suggestions", payload}, {"diagnostics", diagnostics}};
}

inline json apply_draft(ReviewSession& s, std::string text) {
  detail::require(s, State::drafting, "update_draft");
  s.draft = std::move(text);
  s.state = State::drafting;
  s.coverage = compute_coverage(s.draft, s.presented_topics, s.ratings);
  s.diagnostics.clear();
  return json{{"text", s.draft}};
}

inline FinalReview build_final_review(const ReviewSession& s, const sentiment::SentimentLexicon& lexicon,
                                      double alpha) {
  FinalReview f;
  f.text = s.draft;
  f.sentence_tags = detect_topics(s.draft, s.presented_topics);
  std::set<std::string> rated;
  for (const auto& r : s.ratings) rated.insert(r.topic);
  std::set<std::string> extra;
  for (const auto& st : f.sentence_tags)
    for (const auto& t : st.topics)
      if (!rated.count(t)) extra.insert(t);
  f.extra_topics.assign(extra.begin(), extra.end());
  f.sentiment = sentiment::score_text(s.draft, lexicon);
  std::vector<int> stars;
  for (const auto& r : s.ratings) stars.push_back(r.stars);
  const auto overall = sentiment::overall_rating(stars, f.sentiment, alpha);
  f.suggested_stars = overall.suggested_stars;
  f.topic_average_stars = stars.empty() ? 0 : sentiment::average_rounded_rating(stars);
  f.text_stars = overall.text_stars.value_or(f.sentiment.stars);
  return f;
}

inline json apply_final(ReviewSession& s, FinalReview f) {
  detail::require(s, State::finalized, "finalize");
  s.final = std::move(f);
  s.state = State::finalized;
  s.diagnostics.clear();
  return to_json(*s.final);
}

// --------------------------------------------------------------------------
// Manager

struct SessionDeps {
  /// Topics for a product type with fallback enabled. Throws NotFound or
  /// CatalogMiss.
  std::function<catalog::TopicLookupResult(const std::string& product_type)> resolve_topics;
  /// Vocabulary for the off-topic check.
  std::function<generation::TopicVocabulary(const std::string& product_type, const std::string& product_name,
                                            const std::vector<std::string>& requested)>
      vocabulary;
  const sentiment::SentimentLexicon* lexicon = &sentiment::default_lexicon();
  generation::SuggestOptions suggest{};
  double alpha = 0.5;
};

struct ReplaySummary {
  std::size_t events = 0;
  std::size_t sessions = 0;
  std::vector<std::string> diagnostics;
};

/// Owns sessions. Operations on one session are serialized by its own mutex;
/// distinct sessions proceed concurrently. Every state change is appended to
/// the journal before it becomes visible.
class SessionManager {
 public:
  explicit SessionManager(SessionDeps deps, std::optional<std::filesystem::path> journal = std::nullopt)
      : deps_(std::move(deps)), journal_path_(std::move(journal)) {
    if (journal_path_) {
      if (journal_path_->has_parent_path()) std::filesystem::create_directories(journal_path_->parent_path());
      replay_summary_ = replay();
    }
  }

  ~SessionManager() { flush(); }

  const ReplaySummary& replay_summary() const { return replay_summary_; }

  /// Creates a session in TOPICS_PRESENTED. A repeated idempotency key returns
  /// the original session. Unknown product types raise NotFound; product
  /// types with no obtainable topics get an empty topic list and a
  /// diagnostic.
  ReviewSession create(const std::string& product_type, const std::string& product_name = {},
                       const std::string& idempotency_key = {}) {
    if (text::trim(product_type).empty()) throw InvalidArgument("product_type must be nonempty");
    {
      std::lock_guard lock(registry_mutex_);
      if (!idempotency_key.empty()) {
        if (auto it = idempotency_.find(idempotency_key); it != idempotency_.end()) {
          auto entry = sessions_.at(it->second);
          std::lock_guard session_lock(entry->mutex);
          if (entry->session.product_type != product_type || entry->session.product_name != product_name)
            throw InvalidArgument("idempotency key reused with a different request", idempotency_key);
          return entry->session;
        }
      }
    }
    ReviewSession s;
    s.product_type = product_type;
    s.product_name = product_name;
    try {
      auto lookup = deps_.resolve_topics(product_type);
      s.presented_topics = std::move(lookup.topics);
      s.provenance = std::string(catalog::to_string(lookup.provenance));
      s.catalog_version = lookup.catalog_version;
      if (!lookup.detail.empty()) s.diagnostics.push_back(lookup.detail);
    } catch (const CatalogMiss& e) {
      s.diagnostics.push_back(std::string("no topics obtainable: ") + e.what());
    }
    s.state = State::topics_presented;

    std::lock_guard lock(registry_mutex_);
    if (!idempotency_key.empty()) {
      if (auto it = idempotency_.find(idempotency_key); it != idempotency_.end()) return sessions_.at(it->second)->session;
    }
    std::ostringstream id;
    id << "s" << std::setw(6) << std::setfill('0') << ++next_id_;
    s.id = id.str();
    json topics = json::array();
    for (const auto& t : s.presented_topics) topics.push_back(catalog::to_json(t));
    append(s, "created",
           json{{"product_type", s.product_type},
                {"product_name", s.product_name},
                {"idempotency_key", idempotency_key},
                {"topics", topics},
                {"provenance", s.provenance},
                {"catalog_version", s.catalog_version},
                {"diagnostics", s.diagnostics}});
    auto entry = std::make_shared<Entry>();
    entry->session = s;
    sessions_[s.id] = entry;
    if (!idempotency_key.empty()) idempotency_[idempotency_key] = s.id;
    return s;
  }

  ReviewSession get(const std::string& id) const {
    auto entry = find(id);
    std::lock_guard lock(entry->mutex);
    return entry->session;
  }

  std::vector<std::string> ids() const {
    std::lock_guard lock(registry_mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : sessions_) out.push_back(id);
    return out;
  }

  ReviewSession rate_topics(const std::string& id, const std::vector<generation::TopicRating>& ratings) {
    return mutate(id, "rated", [&](ReviewSession& s) { return apply_ratings(s, ratings); });
  }

  /// Runs the generation pipeline; the session is untouched if it throws.
  ReviewSession suggest_phrases(const std::string& id, GenerationBackend& backend) {
    auto entry = find(id);
    std::lock_guard lock(entry->mutex);
    ReviewSession next = entry->session;
    const State to = next.state == State::drafting ? State::drafting : State::phrases_suggested;
    detail::require(next, to, "suggest_phrases");
    if (next.ratings.empty()) throw InvalidState("suggest_phrases needs at least one rating");
    std::vector<std::string> requested;
    for (const auto& r : next.ratings) requested.push_back(r.topic);
    const auto vocabulary = deps_.vocabulary ? deps_.vocabulary(next.product_type, next.product_name, requested)
                                             : generation::TopicVocabulary{};
    auto opts = deps_.suggest;
    opts.lexicon = deps_.lexicon;
    opts.synonyms = generation::synonyms_from_topics(next.presented_topics);
    auto result = generation::suggest(next.product_type, next.product_name, next.ratings, backend, vocabulary, opts);
    const auto payload = apply_suggestions(next, std::move(result.suggestions), result.diagnostics);
    commit(*entry, std::move(next), "suggested", payload);
    return entry->session;
  }

  ReviewSession update_draft(const std::string& id, const std::string& text) {
    return mutate(id, "draft", [&](ReviewSession& s) { return apply_draft(s, text); });
  }

  ReviewSession finalize(const std::string& id) {
    return mutate(id, "finalized", [&](ReviewSession& s) {
      if (s.state == State::finalized) throw InvalidState("session " + s.id + " is already finalized");
      if (text::trim(s.draft).empty()) throw InvalidArgument("cannot finalize an empty draft");
      return apply_final(s, build_final_review(s, *deps_.lexicon, deps_.alpha));
    });
  }

  void flush() {
    std::lock_guard lock(journal_mutex_);
    if (journal_.is_open()) journal_.flush();
  }

 private:
  struct Entry {
    mutable std::mutex mutex;
    ReviewSession session;
  };

  std::shared_ptr<Entry> find(const std::string& id) const {
    std::lock_guard lock(registry_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("unknown session '" + id + "'");
    return it->second;
  }

  template <class Fn>
  ReviewSession mutate(const std::string& id, const char* event, Fn&& fn) {
    auto entry = find(id);
    std::lock_guard lock(entry->mutex);
    ReviewSession next = entry->session;
    const json payload = fn(next);
    commit(*entry, std::move(next), event, payload);
    return entry->session;
  }

  void commit(Entry& entry, ReviewSession next, const char* event, const json& payload) {
    append(next, event, payload);
    entry.session = std::move(next);
  }

  void append(ReviewSession& s, const char* event, const json& payload) {
    ++s.version;
    if (!journal_path_) return;
    const json record{{"session_id", s.id}, {"seq", s.version}, {"event", event}, {"payload", payload},
                      {"ts", detail::timestamp_utc()}};
    std::lock_guard lock(journal_mutex_);
    if (!journal_.is_open()) {
      journal_.open(*journal_path_, std::ios::app);
      if (!journal_) throw IoError("cannot open session journal " + journal_path_->string());
    }
    journal_ << record.dump() << '\n';
    journal_.flush();
    if (!journal_) {
      --s.version;
      throw IoError("cannot append to session journal");
    }
  }

  ReplaySummary replay() {
    ReplaySummary summary;
    std::ifstream in(*journal_path_);
    if (!in) return summary;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      try {
        apply_record(json::parse(line));
        ++summary.events;
      } catch (const std::exception& e) {
        summary.diagnostics.push_back("journal line " + std::to_string(line_no) + " skipped: " + e.what());
      }
    }
    summary.sessions = sessions_.size();
    return summary;
  }

  void apply_record(const json& j) {
    const auto id = j.at("session_id").get<std::string>();
    const auto event = j.at("event").get<std::string>();
    const auto seq = j.at("seq").get<std::uint64_t>();
    const auto& p = j.at("payload");
    if (event == "created") {
      auto entry = std::make_shared<Entry>();
      auto& s = entry->session;
      s.id = id;
      s.product_type = p.at("product_type").get<std::string>();
      s.product_name = p.value("product_name", std::string{});
      for (const auto& t : p.at("topics")) s.presented_topics.push_back(catalog::topic_from_json(t));
      s.provenance = p.value("provenance", std::string{});
      s.catalog_version = p.value("catalog_version", std::uint64_t{0});
      s.diagnostics = p.value("diagnostics", std::vector<std::string>{});
      s.state = State::topics_presented;
      s.version = seq;
      sessions_[id] = entry;
      if (const auto key = p.value("idempotency_key", std::string{}); !key.empty()) idempotency_[key] = id;
      if (id.size() > 1 && id[0] == 's') next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(id.substr(1)));
      return;
    }
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw InvalidState("event for unknown session " + id);
    auto& s = it->second->session;
    if (seq != s.version + 1) throw InvalidState("out-of-order seq for session " + id);
    if (event == "rated") {
      std::vector<generation::TopicRating> ratings;
      for (const auto& r : p.at("ratings")) ratings.push_back(generation::topic_rating_from_json(r));
      apply_ratings(s, ratings);
      s.diagnostics = p.value("diagnostics", std::vector<std::string>{});
    } else if (event == "suggested") {
      std::vector<generation::PhraseSuggestion> suggestions;
      for (const auto& x : p.at("suggestions")) suggestions.push_back(detail::suggestion_from_json(x));
      apply_suggestions(s, std::move(suggestions), p.value("diagnostics", std::vector<std::string>{}));
    } else if (event == "draft") {
      apply_draft(s, p.at("text").get<std::string>());
    } else if (event == "finalized") {
      apply_final(s, detail::final_from_json(p));
    } else {
      throw InvalidArgument("unknown journal event '" + event + "'");
    }
    s.version = seq;
  }

  SessionDeps deps_;
  std::optional<std::filesystem::path> journal_path_;
  std::ofstream journal_;
  std::mutex journal_mutex_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::map<std::string, std::string> idempotency_;
  std::uint64_t next_id_ = 0;
  ReplaySummary replay_summary_;
};

/// Case-study row for a session with suggestions; `references` maps a
/// lowercase topic to held-out reference phrases.
inline evaluation::CaseStudyRow case_study_row(const ReviewSession& s,
                                               const std::map<std::string, std::vector<std::string>>& references = {}) {
  evaluation::CaseStudyRow row;
  row.product_type = s.product_type;
  for (const auto& r : s.ratings) row.ratings.emplace_back(r.topic, r.stars);
  double sum = 0.0;
  for (const auto& p : s.suggestions) {
    row.suggestions.emplace_back(p.topic, p.text);
    sum += p.sentiment ? p.sentiment->compound : 0.5;
  }
  if (!s.suggestions.empty()) row.sentiment = sum / static_cast<double>(s.suggestions.size());
  row.bleu = evaluation::suggestion_bleu(row.suggestions, references);
  if (s.final) {
    row.suggested_stars = s.final->suggested_stars;
    row.topic_average_stars = s.final->topic_average_stars;
  }
  return row;
}

}  // namespace reviewkit::session
