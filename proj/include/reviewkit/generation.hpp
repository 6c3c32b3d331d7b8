#pragma once

// Prompt construction, phrase generation through a pluggable backend,
// response parsing, validation and fine-tune record export.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "reviewkit/backend.hpp"
#include "reviewkit/catalog.hpp"
#include "reviewkit/error.hpp"
#include "reviewkit/sentiment.hpp"
#include "reviewkit/text.hpp"

namespace reviewkit::generation {

using json = nlohmann::json;

struct TopicRating {
  std::string topic;  // display label as the customer saw it
  int stars = 0;

  friend bool operator==(const TopicRating&, const TopicRating&) = default;
};

inline void validate(const TopicRating& r) {
  if (text::trim(r.topic).empty()) throw InvalidArgument("topic must be nonempty");
  if (r.topic.find_first_of(",:\n") != std::string::npos)
    throw InvalidArgument("topic '" + r.topic + "' contains a reserved character (, : or newline)");
  if (r.stars < 1 || r.stars > 5)
    throw InvalidArgument("stars for '" + r.topic + "' outside 1..5: " + std::to_string(r.stars));
}

inline json to_json(const TopicRating& r) { return json{{"topic", r.topic}, {"stars", r.stars}}; }

inline TopicRating topic_rating_from_json(const json& j) {
  TopicRating r{j.at("topic").get<std::string>(), j.at("stars").get<int>()};
  validate(r);
  return r;
}

// --------------------------------------------------------------------------
// Prompt

inline constexpr std::string_view kOpeningPrompt =
    "Act like a customer who purchased the product of given product type. After using the product, you want "
    "to provide review on the website. Now you have information on product type, product related topics "
    "along with rating for each topic.";
inline constexpr std::string_view kAsk =
    "Suggest topics and respective phrase (minimum 20 words) for selected and rated topic.";
inline constexpr std::string_view kClosingPrompt =
    "Do not mention any rating in the review text. Also, you can use synonyms for tags when generating the "
    "phrase.";

struct PromptBundle {
  std::string opening;
  std::string ask;
  std::string input_data;
  std::string closing;

  /// Text sent to a backend.
  std::string to_text() const {
    return "Opening Prompt: " + opening + "\nAsk: " + ask + "\nInput data: " + input_data +
           "\nClosing Prompt: " + closing + "\n";
  }
};

inline json to_json(const PromptBundle& b) {
  return json{{"opening", b.opening}, {"ask", b.ask}, {"input_data", b.input_data}, {"closing", b.closing}};
}

/// "Product Type: <pt>[, Product Name: <name>]\nTopics and Ratings are:
/// <topic>: <n> stars, ... ." Shared by prompts and fine-tune contexts.
inline std::string serialize_input_data(std::string_view product_type, std::string_view product_name,
                                        const std::vector<TopicRating>& ratings) {
  std::string out = "Product Type: ";
  out += product_type;
  if (!product_name.empty()) {
    out += ", Product Name: ";
    out += product_name;
  }
  out += "\nTopics and Ratings are: ";
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    if (i > 0) out += ", ";
    out += ratings[i].topic + ": " + std::to_string(ratings[i].stars) + " stars";
  }
  out += ".";
  return out;
}

struct InputData {
  std::string product_type;
  std::string product_name;
  std::vector<TopicRating> ratings;
};

/// Inverse of serialize_input_data; also accepts the text embedded in a full
/// prompt. Throws FormatError when the markers are absent.
inline InputData parse_input_data(std::string_view blob) {
  static constexpr std::string_view kPt = "Product Type: ";
  static constexpr std::string_view kName = ", Product Name: ";
  static constexpr std::string_view kTopics = "Topics and Ratings are: ";
  const auto pt_at = blob.find(kPt);
  const auto topics_at = blob.find(kTopics);
  if (pt_at == std::string_view::npos || topics_at == std::string_view::npos || topics_at < pt_at)
    throw FormatError("input data markers not found");
  InputData out;
  auto pt_line = blob.substr(pt_at + kPt.size());
  pt_line = pt_line.substr(0, pt_line.find('\n'));
  if (auto n = pt_line.find(kName); n != std::string_view::npos) {
    out.product_name = std::string(text::trim(pt_line.substr(n + kName.size())));
    pt_line = pt_line.substr(0, n);
  }
  out.product_type = std::string(text::trim(pt_line));
  auto list = blob.substr(topics_at + kTopics.size());
  list = text::trim(list.substr(0, list.find('\n')));
  if (!list.empty() && list.back() == '.') list.remove_suffix(1);
  std::size_t start = 0;
  while (start <= list.size()) {
    auto end = list.find(',', start);
    auto item = text::trim(list.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (!item.empty()) {
      const auto colon = item.rfind(':');
      if (colon == std::string_view::npos) throw FormatError("rating without ':' in input data");
      const auto topic = text::trim(item.substr(0, colon));
      const auto tokens = text::alnum_tokens(item.substr(colon + 1));
      if (topic.empty() || tokens.empty()) throw FormatError("malformed rating in input data");
      int stars = 0;
      try {
        stars = std::stoi(tokens.front());
      } catch (const std::exception&) {
        throw FormatError("non-numeric stars in input data");
      }
      out.ratings.push_back({std::string(topic), stars});
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

inline PromptBundle build_prompt(std::string_view product_type, std::string_view product_name,
                                 const std::vector<TopicRating>& ratings) {
  if (ratings.empty()) throw InvalidArgument("build_prompt needs at least one topic rating");
  if (text::trim(product_type).empty()) throw InvalidArgument("product type must be nonempty");
  for (const auto& r : ratings) validate(r);
  return PromptBundle{std::string(kOpeningPrompt), std::string(kAsk),
                      serialize_input_data(product_type, product_name, ratings), std::string(kClosingPrompt)};
}

// --------------------------------------------------------------------------
// Template backend

enum class Tier { negative, neutral, positive };

inline Tier tier_for(int stars) {
  if (stars <= 2) return Tier::negative;
  if (stars == 3) return Tier::neutral;
  return Tier::positive;
}

inline std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::negative: return "negative";
    case Tier::neutral: return "neutral";
    case Tier::positive: return "positive";
  }
  return "neutral";
}

struct PhraseTemplate {
  Tier tier = Tier::neutral;
  int stars = 0;  // 0 = any star count within the tier
  std::string text;  // contains "{topic}"
};

/// Tiered phrase templates. File format, one template per line:
///   <tier>[:<stars>]<TAB><template with {topic}>
/// with '#' comments; tier is negative, neutral or positive.
struct TemplateTable {
  std::vector<PhraseTemplate> templates;

  std::vector<const PhraseTemplate*> candidates(int stars) const {
    std::vector<const PhraseTemplate*> exact;
    std::vector<const PhraseTemplate*> tier_wide;
    const Tier tier = tier_for(stars);
    for (const auto& t : templates) {
      if (t.tier != tier) continue;
      if (t.stars == stars) exact.push_back(&t);
      if (t.stars == 0) tier_wide.push_back(&t);
    }
    return exact.empty() ? tier_wide : exact;
  }
};

inline TemplateTable parse_template_table(std::istream& in) {
  TemplateTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto tab = body.find('\t');
    if (tab == std::string_view::npos)
      throw InvalidArgument("template line " + std::to_string(line_no) + ": expected <tier><TAB><template>");
    auto head = body.substr(0, tab);
    PhraseTemplate t;
    t.text = std::string(text::trim(body.substr(tab + 1)));
    if (const auto colon = head.find(':'); colon != std::string_view::npos) {
      t.stars = std::stoi(std::string(head.substr(colon + 1)));
      head = head.substr(0, colon);
    }
    if (head == "negative") t.tier = Tier::negative;
    else if (head == "neutral") t.tier = Tier::neutral;
    else if (head == "positive") t.tier = Tier::positive;
    else throw InvalidArgument("template line " + std::to_string(line_no) + ": unknown tier");
    if (t.stars != 0 && (t.stars < 1 || t.stars > 5 || tier_for(t.stars) != t.tier))
      throw InvalidArgument("template line " + std::to_string(line_no) + ": stars do not belong to tier");
    if (t.text.find("{topic}") == std::string::npos)
      throw InvalidArgument("template line " + std::to_string(line_no) + ": missing {topic}");
    table.templates.push_back(std::move(t));
  }
  for (int stars = 1; stars <= 5; ++stars)
    if (table.candidates(stars).empty())
      throw InvalidArgument("template table has no template for " + std::to_string(stars) + " stars");
  return table;
}

namespace detail {

// Each star level stays inside a fixed compound band under the default
// lexicon: 1 -> 0, 2 -> [0.28, 0.45], 3 -> 0.5, 4 -> [0.65, 0.9], 5 -> 1.
inline constexpr std::string_view kDefaultTemplates = R"(# tier[:stars]	template
negative:1	The {topic} was a real disappointment from day one; it felt cheap and flimsy, and I regret spending money on something this poor.
negative:1	I was frustrated by the {topic} almost immediately; it is badly designed, unreliable in daily use, and honestly a waste of money.
negative:1	Terrible {topic} overall; it fell apart within weeks, looked shoddy from the start, and left me disappointed with the whole purchase.
negative:1	The {topic} is the worst part of this product; it is awkward, poorly made, and nowhere close to what the listing promised.
negative:2	The {topic} seemed good at first, but it turned out disappointing and a bit expensive for what you actually get in the end.
negative:2	I wanted to like the {topic}, and it has a nice look, but it feels cheap and awkward compared with options I tried.
negative:2	The {topic} is handy for light use, but it feels weak and inconsistent, which left me unconvinced after a few weeks of use.
negative:2	There is something pleasant about the {topic}, yet it is mediocre overall and has a few problems that I could not overlook.
neutral:3	The {topic} is decent for everyday use, though a little basic; it does the job without standing out in any particular way.
neutral:3	I have mixed feelings about the {topic}; some days it seems nice, other days it feels awkward, so it balances out as average.
neutral:3	The {topic} is acceptable and fairly practical, but it is also a bit plain and dull, so my feelings about it remain mixed.
neutral:3	Nothing special about the {topic}: it is fine in some ways and odd in others, which leaves me somewhere in the middle.
positive:4	The {topic} is really good and comfortable to live with; there is one minor issue, but I am happy with it overall.
positive:4	I am pleased with the {topic}; it feels solid and reliable, even if it is a little heavy compared with what I expected.
positive:4	The {topic} turned out nice and easy to manage day to day; not perfect, but a solid choice that I would recommend.
positive:4	Good {topic} for the money; it is handy, pretty, and dependable, with only a slightly awkward moment now and then during use.
positive:5	The {topic} is excellent; it exceeded my expectations in every way, and I love how well it has held up so far.
positive:5	Absolutely delighted with the {topic}; it is impressive, beautifully made, and easily one of the best purchases I have made this year.
positive:5	The {topic} is simply fantastic; everything about it feels thoughtful and lovely, and I would happily recommend it to friends and family.
positive:5	Outstanding {topic}: wonderful from the first day, perfectly suited to how I use it, and a real pleasure to have around.
)";

}  // namespace detail

inline const TemplateTable& default_template_table() {
  static const TemplateTable table = [] {
    std::istringstream in{std::string(detail::kDefaultTemplates)};
    return parse_template_table(in);
  }();
  return table;
}

/// Synonyms usable in place of a topic label, keyed by lowercase label.
using SynonymMap = std::map<std::string, std::vector<std::string>>;

inline SynonymMap synonyms_from_topics(const catalog::TopicList& topics) {
  SynonymMap m;
  for (const auto& t : topics) m[t.label] = t.synonyms;
  return m;
}

/// Deterministic offline generator: one "Topic: phrase" line per rating, in
/// input order. The template is chosen by a stable hash of (seed, product
/// type, topic, stars); "{topic}" becomes the lowercase label or one of its
/// sentiment-neutral synonyms.
inline std::string template_generate(std::string_view product_type, const std::vector<TopicRating>& ratings,
                                     std::uint64_t seed, const TemplateTable& table = default_template_table(),
                                     const SynonymMap& synonyms = {},
                                     const sentiment::SentimentLexicon& lexicon = sentiment::default_lexicon()) {
  std::string out;
  for (const auto& r : ratings) {
    validate(r);
    const auto options = table.candidates(r.stars);
    std::uint64_t h = text::fnv1a(std::to_string(seed));
    h = text::fnv1a("|", h);
    h = text::fnv1a(text::casefold(product_type), h);
    h = text::fnv1a("|", h);
    h = text::fnv1a(text::casefold(r.topic), h);
    h = text::fnv1a("|" + std::to_string(r.stars), h);
    const PhraseTemplate& chosen = *options[h % options.size()];

    const std::string label = text::casefold(text::trim(r.topic));
    std::vector<std::string> names{label};
    if (auto it = synonyms.find(label); it != synonyms.end()) {
      for (const auto& s : it->second) {
        bool neutral = true;
        for (const auto& tok : text::alnum_tokens(s)) neutral = neutral && !lexicon.polarity(tok).has_value();
        if (neutral) names.push_back(s);
      }
    }
    const std::string& name = names[(h >> 32) % names.size()];

    std::string phrase = chosen.text;
    for (auto pos = phrase.find("{topic}"); pos != std::string::npos; pos = phrase.find("{topic}", pos + name.size()))
      phrase.replace(pos, 7, name);
    if (!phrase.empty()) phrase[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(phrase[0])));
    out += r.topic + ": " + phrase + "\n";
  }
  return out;
}

/// Backend that answers phrase prompts from the template table. Prompts
/// without product-type/rating input data raise BackendError.
class TemplateBackend final : public GenerationBackend {
 public:
  explicit TemplateBackend(std::uint64_t seed, const TemplateTable* table = &default_template_table(),
                           std::function<SynonymMap(const std::string& product_type)> synonyms = {})
      : seed_(seed), table_(table), synonyms_(std::move(synonyms)) {}

  std::string complete(const std::string& prompt, int attempt) override {
    InputData input;
    try {
      input = parse_input_data(prompt);
    } catch (const FormatError&) {
      throw BackendError("template backend only answers phrase prompts");
    }
    if (input.ratings.empty()) throw BackendError("template backend: no topic ratings in prompt");
    for (const auto& r : input.ratings) {
      if (r.stars < 1 || r.stars > 5) throw BackendError("template backend: stars outside 1..5");
    }
    const SynonymMap syn = synonyms_ ? synonyms_(input.product_type) : SynonymMap{};
    return template_generate(input.product_type, input.ratings, seed_ + static_cast<std::uint64_t>(attempt),
                             *table_, syn);
  }

  std::string_view kind() const override { return "template"; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  const TemplateTable* table_;
  std::function<SynonymMap(const std::string&)> synonyms_;
};

// --------------------------------------------------------------------------
// Generation

struct GenerateOptions {
  int retries = 2;  // extra attempts after a transport failure
};

struct GenerationResult {
  std::string text;
  std::chrono::milliseconds latency{0};
  int attempts = 0;
};

inline GenerationResult generate_phrases(const PromptBundle& bundle, GenerationBackend& backend,
                                         const GenerateOptions& opts = {}, int regeneration = 0) {
  GenerationResult result;
  const auto start = std::chrono::steady_clock::now();
  std::string last_error;
  for (int attempt = 0; attempt <= opts.retries; ++attempt) {
    ++result.attempts;
    try {
      result.text = backend.complete(bundle.to_text(), regeneration);
      result.latency =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
      if (text::trim(result.text).empty()) throw EmptyResponse("backend returned an empty response");
      return result;
    } catch (const BackendError& e) {
      last_error = e.what();
    }
  }
  throw BackendError("backend failed after " + std::to_string(result.attempts) + " attempts", last_error);
}

struct ParsedPair {
  std::string topic;  // casefolded
  std::string text;
};

struct ParsedResponse {
  std::vector<ParsedPair> pairs;
  std::vector<std::string> diagnostics;
};

/// Parses "<Topic>: <text>" lines. Bold markers, bullets and wrapping quotes
/// are stripped; lines without a usable "label: text" shape are skipped with
/// a diagnostic. Throws FormatError when nothing parses.
inline ParsedResponse parse_response(std::string_view raw) {
  ParsedResponse out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < raw.size()) {
    auto end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    std::string line(raw.substr(start, end - start));
    start = end + 1;
    ++line_no;
    for (auto pos = line.find("**"); pos != std::string::npos; pos = line.find("**", pos)) line.erase(pos, 2);
    std::string_view v = text::trim(line);
    if (v.empty()) continue;
    while (!v.empty() && (v.front() == '-' || v.front() == '*' || v.front() == '#')) v = text::trim(v.substr(1));
    if (v.size() >= 3 && static_cast<unsigned char>(v[0]) == 0xE2 && static_cast<unsigned char>(v[1]) == 0x80 &&
        static_cast<unsigned char>(v[2]) == 0xA2)
      v = text::trim(v.substr(3));  // U+2022 bullet
    const auto colon = v.find(':');
    if (colon == std::string_view::npos) {
      out.diagnostics.push_back("line " + std::to_string(line_no) + ": no 'topic:' prefix, skipped");
      continue;
    }
    auto topic = text::trim(v.substr(0, colon));
    auto body = text::trim(v.substr(colon + 1));
    while (!body.empty() && (body.front() == '"' || body.front() == '*')) body = text::trim(body.substr(1));
    if (!body.empty() && body.back() == '"' && std::count(body.begin(), body.end(), '"') % 2 == 1)
      body.remove_suffix(1);
    if (topic.empty() || body.empty() || text::word_count(topic) > 6) {
      out.diagnostics.push_back("line " + std::to_string(line_no) + ": not a 'topic: phrase' line, skipped");
      continue;
    }
    out.pairs.push_back({text::casefold(topic), std::string(text::trim(body))});
  }
  if (out.pairs.empty()) throw FormatError("response contains no 'topic: phrase' lines");
  return out;
}

// --------------------------------------------------------------------------
// Validation

enum class Flag { rating_mention, too_short, too_long, off_topic_term, unknown_topic, missing };

inline std::string_view to_string(Flag f) {
  switch (f) {
    case Flag::rating_mention: return "RATING_MENTION";
    case Flag::too_short: return "TOO_SHORT";
    case Flag::too_long: return "TOO_LONG";
    case Flag::off_topic_term: return "OFF_TOPIC_TERM";
    case Flag::unknown_topic: return "UNKNOWN_TOPIC";
    case Flag::missing: return "MISSING";
  }
  return "UNKNOWN";
}

struct ValidationLimits {
  std::size_t min_words = 20;
  std::size_t max_words = 25;
  std::size_t max_tokens = 150;  // hard cap, always reject-class
  bool strict = false;           // word-bound flags reject instead of warn
};

/// Vocabulary for the hallucination heuristic: terms this product type may
/// mention, and attribute terms known only from other product types.
struct TopicVocabulary {
  std::set<std::string> own_terms;
  std::set<std::string> foreign_terms;
};

namespace detail {

inline std::vector<std::string> vocabulary_tokens(std::string_view s) {
  std::vector<std::string> out;
  const auto& stop = text::default_stop_words();
  for (auto& tok : text::alnum_tokens(s)) {
    if (stop.count(tok) != 0 || tok.size() < 3) continue;
    out.push_back(catalog::lemma_light(std::move(tok)));
  }
  return out;
}

// Topic labels that double as everyday verbs ("it feels cheap").
inline const std::set<std::string>& phrasing_verbs() {
  static const std::set<std::string> verbs{"feel", "look", "seem", "work", "smell", "fit"};
  return verbs;
}

/// A single-word label maps to its token; a multi-word label maps to the
/// joined token sequence so its parts ("long", "life") stay neutral.
inline std::string vocabulary_term(std::string_view label) {
  std::string joined;
  for (const auto& t : vocabulary_tokens(label)) joined += (joined.empty() ? "" : " ") + t;
  return joined;
}

/// Unigrams plus joined runs of up to four adjacent vocabulary tokens.
inline std::set<std::string> phrase_terms(std::string_view s) {
  const auto toks = vocabulary_tokens(s);
  std::set<std::string> out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    std::string run = toks[i];
    out.insert(run);
    for (std::size_t j = i + 1; j < toks.size() && j < i + 4; ++j) out.insert(run += " " + toks[j]);
  }
  return out;
}

}  // namespace detail

/// Own terms: tokens and token runs of the product type, product name, its
/// catalog topics and synonyms, and the requested topics. Foreign terms: other
/// product types' topics and synonyms, minus opinion words and minus generic
/// attributes shared by at least `generic_fraction` of catalogs (price,
/// quality, size, ...).
inline TopicVocabulary build_topic_vocabulary(const catalog::TopicCatalog& cat, std::string_view product_type,
                                              std::string_view product_name,
                                              const std::vector<std::string>& requested_topics,
                                              double generic_fraction = 0.25,
                                              const sentiment::SentimentLexicon& lexicon = sentiment::default_lexicon()) {
  TopicVocabulary v;
  const auto add_own = [&](std::string_view s) {
    for (auto& t : detail::phrase_terms(s)) v.own_terms.insert(std::move(t));
  };
  add_own(product_type);
  add_own(product_name);
  for (const auto& t : requested_topics) add_own(t);
  std::map<std::string, std::size_t> catalogs_with_term;
  for (const auto& [pt, topics] : cat.entries) {
    std::set<std::string> terms;
    for (const auto& t : topics) {
      terms.insert(detail::vocabulary_term(t.label));
      for (const auto& s : t.synonyms) terms.insert(detail::vocabulary_term(s));
      if (pt == product_type) {
        add_own(t.label);
        for (const auto& s : t.synonyms) add_own(s);
      }
    }
    terms.erase("");
    for (const auto& t : terms) ++catalogs_with_term[t];
  }
  const auto n = static_cast<double>(cat.entries.size());
  const auto generic_at = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(generic_fraction * n)));
  for (const auto& [term, count] : catalogs_with_term) {
    if (count >= generic_at) continue;
    if (lexicon.polarity(term).has_value()) continue;
    if (v.own_terms.count(term) != 0) continue;
    if (catalog::generic_review_words().count(term) != 0 || detail::phrasing_verbs().count(term) != 0) continue;
    v.foreign_terms.insert(term);
  }
  return v;
}

struct PhraseSuggestion {
  std::string topic;
  std::string text;
  std::size_t word_count = 0;
  std::optional<sentiment::SentimentReport> sentiment;
  std::set<Flag> flags;
  std::vector<std::string> off_topic_terms;

  bool has(Flag f) const { return flags.count(f) != 0; }
};

inline const std::vector<std::regex>& rating_patterns() {
  static const std::vector<std::regex> patterns = [] {
    const auto icase = std::regex::ECMAScript | std::regex::icase;
    return std::vector<std::regex>{
        std::regex(R"(\b\d+(\.\d+)?\s*(-\s*)?stars?\b)", icase),
        std::regex(R"(\b(one|two|three|four|five|half a)\s*(-\s*)?stars?\b)", icase),
        std::regex(R"(\b\d+(\.\d+)?\s*/\s*(5|10)\b)", icase),
        std::regex(R"(\b\d+(\.\d+)?\s+out\s+of\s+(5|10|five|ten)\b)", icase),
        std::regex(R"(\b(rated|rate|rating|give it|giving it|gave it)\s+(it\s+)?(a\s+|an\s+)?\d+(\.\d+)?\b)", icase),
    };
  }();
  return patterns;
}

inline bool mentions_rating(std::string_view phrase) {
  const std::string s(phrase);
  return std::any_of(rating_patterns().begin(), rating_patterns().end(),
                     [&](const std::regex& re) { return std::regex_search(s, re); });
}

/// Removes rating mentions ("4 stars", "5/5", "rated 4") and tidies the
/// whitespace and punctuation left behind. Idempotent.
inline std::string excise_rating_mentions(std::string_view phrase) {
  std::string s(phrase);
  for (const auto& re : rating_patterns()) s = std::regex_replace(s, re, "");
  static const std::regex spaces(R"(\s{2,})");
  static const std::regex space_before_punct(R"(\s+([,.;:!?]))");
  static const std::regex doubled_punct(R"(([,;:])\s*([,.;:!?]))");
  s = std::regex_replace(s, spaces, " ");
  s = std::regex_replace(s, space_before_punct, "$1");
  s = std::regex_replace(s, doubled_punct, "$2");
  return std::string(text::trim(s));
}

inline bool is_reject_class(Flag f, const ValidationLimits& limits) {
  switch (f) {
    case Flag::too_short:
    case Flag::too_long: return limits.strict;
    default: return true;
  }
}

/// Flags a parsed pair; never modifies its text.
inline PhraseSuggestion validate_phrase(const ParsedPair& pair, const std::vector<std::string>& requested_topics,
                                        const TopicVocabulary& vocabulary, const ValidationLimits& limits = {}) {
  PhraseSuggestion s;
  s.topic = pair.topic;
  s.text = pair.text;
  s.word_count = text::word_count(pair.text);
  if (mentions_rating(pair.text)) s.flags.insert(Flag::rating_mention);
  if (s.word_count < limits.min_words) s.flags.insert(Flag::too_short);
  if (s.word_count > limits.max_words || s.word_count > limits.max_tokens) s.flags.insert(Flag::too_long);
  const bool requested =
      std::any_of(requested_topics.begin(), requested_topics.end(),
                  [&](const std::string& t) { return text::casefold(text::trim(t)) == text::casefold(pair.topic); });
  if (!requested) s.flags.insert(Flag::unknown_topic);
  std::set<std::string> off;
  for (const auto& term : detail::phrase_terms(pair.text)) {
    if (vocabulary.foreign_terms.count(term) != 0 && vocabulary.own_terms.count(term) == 0) off.insert(term);
  }
  if (!off.empty()) {
    s.flags.insert(Flag::off_topic_term);
    s.off_topic_terms.assign(off.begin(), off.end());
  }
  return s;
}

// --------------------------------------------------------------------------
// Pipeline

struct SuggestOptions {
  ValidationLimits limits{};
  GenerateOptions generate{};
  const sentiment::SentimentLexicon* lexicon = &sentiment::default_lexicon();
  GenerationBackend* fallback = nullptr;  // used when the primary backend fails
  SynonymMap synonyms{};                  // topic -> synonyms for matching answers
  bool excise_ratings = false;            // rewrite RATING_MENTION phrases before validation
};

struct SuggestResult {
  std::vector<PhraseSuggestion> suggestions;  // one per requested topic, input order
  std::vector<std::string> diagnostics;
  std::string backend;
  std::chrono::milliseconds latency{0};
  int regenerations = 0;
};

namespace detail {

inline bool topic_matches(const std::string& requested, const std::string& answered, const SynonymMap& synonyms) {
  const auto req = text::casefold(text::trim(requested));
  const auto ans = text::casefold(text::trim(answered));
  if (req == ans || catalog::lemma_light(req) == catalog::lemma_light(ans)) return true;
  if (auto it = synonyms.find(req); it != synonyms.end())
    return std::find(it->second.begin(), it->second.end(), ans) != it->second.end();
  return false;
}

inline std::size_t reject_count(const PhraseSuggestion& s, const ValidationLimits& limits) {
  return static_cast<std::size_t>(
      std::count_if(s.flags.begin(), s.flags.end(), [&](Flag f) { return is_reject_class(f, limits); }));
}

}  // namespace detail

/// build_prompt -> generate_phrases -> parse_response -> validate_phrase ->
/// sentiment. A format failure regenerates once; phrases carrying
/// reject-class flags are regenerated once and otherwise surfaced with their
/// flags. Every requested topic appears exactly once; unanswered topics get
/// an empty MISSING suggestion.
inline SuggestResult suggest(std::string_view product_type, std::string_view product_name,
                             const std::vector<TopicRating>& ratings, GenerationBackend& backend,
                             const TopicVocabulary& vocabulary, const SuggestOptions& opts = {}) {
  const PromptBundle bundle = build_prompt(product_type, product_name, ratings);
  std::vector<std::string> requested;
  for (const auto& r : ratings) requested.push_back(r.topic);

  SuggestResult result;
  GenerationBackend* active = &backend;
  const auto run = [&](int regeneration) -> ParsedResponse {
    GenerationResult gen;
    try {
      gen = generate_phrases(bundle, *active, opts.generate, regeneration);
    } catch (const BackendError& e) {
      if (opts.fallback == nullptr || active == opts.fallback) throw;
      result.diagnostics.push_back(std::string("primary backend failed, using fallback: ") + e.what());
      active = opts.fallback;
      gen = generate_phrases(bundle, *active, opts.generate, regeneration);
    }
    result.latency += gen.latency;
    return parse_response(gen.text);
  };

  ParsedResponse parsed;
  try {
    parsed = run(0);
  } catch (const FormatError& e) {
    result.diagnostics.push_back(std::string("regenerating after format error: ") + e.what());
    ++result.regenerations;
    parsed = run(1);
  }
  result.backend = std::string(active->kind());

  const auto assemble = [&](const ParsedResponse& response, bool record) {
    std::vector<PhraseSuggestion> out;
    std::vector<bool> used(response.pairs.size(), false);
    for (const auto& r : ratings) {
      std::optional<std::size_t> hit;
      for (std::size_t i = 0; i < response.pairs.size(); ++i) {
        if (!used[i] && detail::topic_matches(r.topic, response.pairs[i].topic, opts.synonyms)) {
          hit = i;
          break;
        }
      }
      if (!hit) {
        PhraseSuggestion missing;
        missing.topic = r.topic;
        missing.flags.insert(Flag::missing);
        out.push_back(std::move(missing));
        continue;
      }
      used[*hit] = true;
      ParsedPair pair{r.topic, response.pairs[*hit].text};
      if (opts.excise_ratings && mentions_rating(pair.text)) pair.text = excise_rating_mentions(pair.text);
      out.push_back(validate_phrase(pair, requested, vocabulary, opts.limits));
    }
    if (record) {
      for (const auto& d : response.diagnostics) result.diagnostics.push_back(d);
      for (std::size_t i = 0; i < response.pairs.size(); ++i) {
        if (used[i]) continue;
        const auto extra = validate_phrase(response.pairs[i], requested, vocabulary, opts.limits);
        result.diagnostics.push_back("dropped answer for " +
                                     std::string(extra.has(Flag::unknown_topic) ? "unrequested" : "duplicate") +
                                     " topic '" + response.pairs[i].topic + "'");
      }
    }
    return out;
  };

  auto suggestions = assemble(parsed, true);
  const bool needs_retry = std::any_of(suggestions.begin(), suggestions.end(), [&](const PhraseSuggestion& s) {
    return detail::reject_count(s, opts.limits) > 0;
  });
  if (needs_retry) {
    ++result.regenerations;
    try {
      const auto retry = assemble(run(static_cast<int>(result.regenerations)), false);
      for (std::size_t i = 0; i < suggestions.size(); ++i) {
        if (detail::reject_count(suggestions[i], opts.limits) == 0) continue;
        if (detail::reject_count(retry[i], opts.limits) < detail::reject_count(suggestions[i], opts.limits))
          suggestions[i] = retry[i];
      }
    } catch (const Error& e) {
      result.diagnostics.push_back(std::string("regeneration failed, keeping flagged phrases: ") + e.what());
    }
  }
  for (auto& s : suggestions) s.sentiment = sentiment::score_text(s.text, *opts.lexicon);
  result.suggestions = std::move(suggestions);
  return result;
}

inline json to_json(const PhraseSuggestion& s) {
  json flags = json::array();
  for (auto f : s.flags) flags.push_back(std::string(to_string(f)));
  json j{{"topic", s.topic}, {"text", s.text}, {"word_count", s.word_count}, {"flags", flags}};
  if (s.sentiment) {
    j["sentiment"] = {{"compound", s.sentiment->compound},
                      {"positive_hits", s.sentiment->positive_hits},
                      {"negative_hits", s.sentiment->negative_hits},
                      {"stars", s.sentiment->stars}};
  }
  if (!s.off_topic_terms.empty()) j["off_topic_terms"] = s.off_topic_terms;
  return j;
}

// --------------------------------------------------------------------------
// Fine-tune export

struct FineTuneRecord {
  std::string instruction;
  std::string context;
  std::string response;
};

inline json to_json(const FineTuneRecord& r) {
  return json{{"instruction", r.instruction}, {"context", r.context}, {"response", r.response}};
}

/// A review annotated with the topic ratings its author gave.
struct AnnotatedReview {
  std::string product_type;
  std::string product_name;
  std::vector<TopicRating> ratings;
  std::string title;
  std::string text;
};

/// Reads {"product_type","product_name","ratings":[{"topic","stars"}],"title","text"}
/// lines. Malformed lines become diagnostics.
inline std::vector<AnnotatedReview> read_annotated_reviews(std::istream& in, std::vector<std::string>* diagnostics) {
  std::vector<AnnotatedReview> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      AnnotatedReview r;
      r.product_type = j.value("product_type", std::string{});
      r.product_name = j.value("product_name", std::string{});
      r.title = j.value("title", std::string{});
      r.text = j.value("text", std::string{});
      if (j.contains("ratings"))
        for (const auto& x : j.at("ratings")) r.ratings.push_back({x.at("topic").get<std::string>(), x.at("stars").get<int>()});
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      if (diagnostics) diagnostics->push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline constexpr std::size_t kRecommendedReviewsPerProductType = 200;

struct ExportResult {
  std::vector<FineTuneRecord> records;
  std::vector<std::string> diagnostics;
  std::map<std::string, std::size_t> per_pt_counts;
  std::vector<std::string> guidance;  // product types below the recommended count
};

inline std::string finetune_instruction() {
  return std::string(kOpeningPrompt) + "\n" + std::string(kAsk) + "\n" + std::string(kClosingPrompt);
}

/// One record per complete review: instruction is the fixed prompt text,
/// context the prompt's input-data serialization, response the title (when
/// present) and review text.
inline ExportResult export_finetune_records(const std::vector<AnnotatedReview>& reviews) {
  ExportResult out;
  for (std::size_t i = 0; i < reviews.size(); ++i) {
    const auto& r = reviews[i];
    std::string missing;
    if (text::trim(r.product_type).empty()) missing = "product_type";
    else if (r.ratings.empty()) missing = "ratings";
    else if (text::trim(r.text).empty()) missing = "text";
    if (!missing.empty()) {
      out.diagnostics.push_back("review " + std::to_string(i + 1) + " skipped: missing " + missing);
      continue;
    }
    try {
      for (const auto& rating : r.ratings) validate(rating);
    } catch (const InvalidArgument& e) {
      out.diagnostics.push_back("review " + std::to_string(i + 1) + " skipped: " + e.what());
      continue;
    }
    FineTuneRecord rec;
    rec.instruction = finetune_instruction();
    rec.context = serialize_input_data(r.product_type, r.product_name, r.ratings);
    rec.response = r.title.empty() ? r.text : "Title: " + r.title + "\nReview: " + r.text;
    out.records.push_back(std::move(rec));
    ++out.per_pt_counts[r.product_type];
  }
  for (const auto& [pt, count] : out.per_pt_counts) {
    if (count < kRecommendedReviewsPerProductType)
      out.guidance.push_back("product type '" + pt + "' has " + std::to_string(count) + " reviews; about " +
                             std::to_string(kRecommendedReviewsPerProductType) +
                             " per product type are recommended for fine-tuning");
  }
  return out;
}

}  // namespace reviewkit::generation
