#pragma once

// BLEU with stop-word preprocessing and the optional equal-length
// eligibility rule, topic-suggestion accuracy, and report emitters.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "reviewkit/error.hpp"
#include "reviewkit/text.hpp"

namespace reviewkit::evaluation {

using json = nlohmann::json;
using Tokens = std::vector<std::string>;

/// Lowercase, split on non-alphanumerics (digits kept), drop stop words.
inline Tokens preprocess(std::string_view s,
                         const std::unordered_set<std::string>& stop_words = text::default_stop_words()) {
  Tokens out;
  for (auto& tok : text::alnum_tokens(s))
    if (stop_words.count(tok) == 0) out.push_back(std::move(tok));
  return out;
}

inline constexpr int kMaxOrder = 4;

struct BleuOptions {
  int max_n = kMaxOrder;
  bool smoothing = false;  // add-epsilon on zero-match orders
  double epsilon = 0.1;
};

/// Cumulative BLEU-1..max_n (index 0 holds BLEU-1).
using BleuScores = std::array<double, kMaxOrder>;

namespace detail {

inline std::map<Tokens, std::size_t> ngram_counts(const Tokens& tokens, std::size_t n) {
  std::map<Tokens, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                    tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

}  // namespace detail

/// Length of the reference closest to `c`; ties go to the shorter one.
inline std::size_t closest_reference_length(std::size_t c, const std::vector<Tokens>& references) {
  std::size_t best = references.front().size();
  for (const auto& r : references) {
    const auto d = r.size() > c ? r.size() - c : c - r.size();
    const auto bd = best > c ? best - c : c - best;
    if (d < bd || (d == bd && r.size() < best)) best = r.size();
  }
  return best;
}

/// Clipped n-gram precision per order, brevity penalty against the closest
/// reference length, geometric mean over orders 1..n. A zero precision makes
/// that cumulative score 0 unless smoothing is on.
inline BleuScores bleu(const Tokens& candidate, const std::vector<Tokens>& references,
                       const BleuOptions& opts = {}) {
  if (candidate.empty()) throw InvalidArgument("bleu: empty candidate");
  if (references.empty()) throw InvalidArgument("bleu: no references");
  if (opts.max_n < 1 || opts.max_n > kMaxOrder) throw InvalidArgument("bleu: max_n must be in 1..4");

  std::array<double, kMaxOrder> precision{};
  for (int n = 1; n <= opts.max_n; ++n) {
    const auto cand = detail::ngram_counts(candidate, static_cast<std::size_t>(n));
    std::map<Tokens, std::size_t> max_ref;
    for (const auto& ref : references)
      for (const auto& [gram, count] : detail::ngram_counts(ref, static_cast<std::size_t>(n)))
        max_ref[gram] = std::max(max_ref[gram], count);
    std::size_t clipped = 0;
    std::size_t total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      if (auto it = max_ref.find(gram); it != max_ref.end()) clipped += std::min(count, it->second);
    }
    if (clipped == 0 && opts.smoothing) precision[n - 1] = opts.epsilon / static_cast<double>(std::max<std::size_t>(total, 1));
    else if (total == 0) precision[n - 1] = 0.0;
    else precision[n - 1] = static_cast<double>(clipped) / static_cast<double>(total);
  }

  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(closest_reference_length(candidate.size(), references));
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;

  BleuScores out{};
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 1; n <= opts.max_n; ++n) {
    if (precision[n - 1] <= 0.0) zero = true;
    else log_sum += std::log(precision[n - 1]);
    out[n - 1] = zero ? 0.0 : bp * std::exp(log_sum / n);
  }
  return out;
}

struct BleuPair {
  std::string id;
  std::string candidate;
  std::vector<std::string> references;
};

/// Reads {"id","candidate","references":[...]} lines.
inline std::vector<BleuPair> read_bleu_pairs(std::istream& in) {
  std::vector<BleuPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      BleuPair p;
      p.id = j.contains("id") ? (j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump())
                              : std::to_string(line_no);
      p.candidate = j.at("candidate").get<std::string>();
      p.references = j.at("references").get<std::vector<std::string>>();
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw FormatError("bleu input line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

struct Eligibility {
  std::vector<std::size_t> eligible;  // indices into the input
  std::size_t total = 0;
  double rate = 0.0;
};

/// A pair is eligible when the preprocessed candidate has as many tokens as
/// one of its references. With `enabled` false every pair is kept.
inline Eligibility eligibility_filter(const std::vector<BleuPair>& pairs, bool enabled = true) {
  Eligibility e;
  e.total = pairs.size();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto c = preprocess(pairs[i].candidate).size();
    bool ok = !enabled;
    for (const auto& ref : pairs[i].references) ok = ok || preprocess(ref).size() == c;
    if (ok) e.eligible.push_back(i);
  }
  e.rate = e.total == 0 ? 0.0 : static_cast<double>(e.eligible.size()) / static_cast<double>(e.total);
  return e;
}

struct BleuReport {
  std::string method;
  BleuScores cumulative{};  // mean over scored pairs
  std::size_t eligible_count = 0;
  std::size_t scored_count = 0;  // eligible pairs with a nonempty candidate and reference
  std::size_t total_count = 0;
};

/// Average sentence BLEU over the eligible pairs.
inline BleuReport corpus_bleu(const std::vector<BleuPair>& pairs, bool eligibility = true,
                              const BleuOptions& opts = {}, std::string method = "candidate") {
  BleuReport report;
  report.method = std::move(method);
  const auto e = eligibility_filter(pairs, eligibility);
  report.total_count = e.total;
  report.eligible_count = e.eligible.size();
  for (auto i : e.eligible) {
    const auto cand = preprocess(pairs[i].candidate);
    std::vector<Tokens> refs;
    for (const auto& r : pairs[i].references) refs.push_back(preprocess(r));
    if (cand.empty() || refs.empty()) continue;
    const auto s = bleu(cand, refs, opts);
    for (int n = 0; n < kMaxOrder; ++n) report.cumulative[n] += s[n];
    ++report.scored_count;
  }
  if (report.scored_count > 0)
    for (auto& v : report.cumulative) v /= static_cast<double>(report.scored_count);
  return report;
}

/// Rows "Cumulative n-gram", one column per method.
inline std::string format_bleu_table(const std::vector<BleuReport>& reports, int max_n = kMaxOrder) {
  std::vector<std::string> header{"Metric"};
  for (const auto& r : reports) header.push_back(r.method);
  std::vector<std::vector<std::string>> rows;
  for (int n = 1; n <= max_n; ++n) {
    std::vector<std::string> row{"Cumulative " + std::to_string(n) + "-gram"};
    for (const auto& r : reports) {
      std::ostringstream v;
      v << std::fixed << std::setprecision(3) << r.cumulative[n - 1];
      row.push_back(v.str());
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  const auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c == 0 ? "" : " | ") << row[c] << std::string(width[c] - row[c].size(), ' ');
    }
    out << "\n";
  };
  emit(header);
  std::size_t rule = 0;
  for (auto w : width) rule += w;
  out << std::string(rule + 3 * (width.size() - 1), '-') << "\n";
  for (const auto& row : rows) emit(row);
  return out.str();
}

inline json to_json(const BleuReport& r) {
  json cumulative = json::object();
  for (int n = 1; n <= kMaxOrder; ++n) cumulative[std::to_string(n)] = r.cumulative[n - 1];
  return json{{"method", r.method},
              {"cumulative", cumulative},
              {"eligible_count", r.eligible_count},
              {"scored_count", r.scored_count},
              {"total_count", r.total_count}};
}

// --------------------------------------------------------------------------
// Topic accuracy

struct TopicAccuracyReport {
  std::size_t total = 0;       // suggested topics
  std::size_t relevant = 0;
  std::size_t irrelevant = 0;
  std::size_t unjudged = 0;    // no gold and no description topics to judge against
  double accuracy = 0.0;       // relevant / total
  bool defined = true;         // false when nothing was suggested

  std::string percent() const { return text::format_percent(relevant, total); }
};

inline TopicAccuracyReport accuracy_from_counts(std::size_t total, std::size_t relevant, std::size_t irrelevant = 0) {
  if (relevant + irrelevant > total) throw InvalidArgument("relevant + irrelevant exceeds total");
  TopicAccuracyReport r;
  r.total = total;
  r.relevant = relevant;
  r.irrelevant = irrelevant;
  r.unjudged = total - relevant - irrelevant;
  r.defined = total > 0;
  r.accuracy = r.defined ? static_cast<double>(relevant) / static_cast<double>(total) : 0.0;
  return r;
}

using TopicSets = std::map<std::string, std::vector<std::string>>;
using RelevanceJudge = std::function<bool(const std::string& suggested, const std::vector<std::string>& reference)>;

inline bool exact_relevance(const std::string& suggested, const std::vector<std::string>& reference) {
  const auto s = text::casefold(text::trim(suggested));
  return std::any_of(reference.begin(), reference.end(),
                     [&](const std::string& r) { return text::casefold(text::trim(r)) == s; });
}

/// Suggested topics of a product type with gold topics are judged against the
/// gold list, the rest against description-derived topics; product types with
/// neither count as unjudged.
inline TopicAccuracyReport topic_accuracy(const TopicSets& gold, const TopicSets& suggested,
                                          const TopicSets& description_topics = {},
                                          const RelevanceJudge& judge = exact_relevance) {
  TopicAccuracyReport r;
  for (const auto& [pt, topics] : suggested) {
    const std::vector<std::string>* reference = nullptr;
    if (auto g = gold.find(pt); g != gold.end() && !g->second.empty()) reference = &g->second;
    else if (auto d = description_topics.find(pt); d != description_topics.end()) reference = &d->second;
    std::set<std::string> seen;
    for (const auto& t : topics) {
      if (!seen.insert(text::casefold(text::trim(t))).second) continue;
      ++r.total;
      if (reference == nullptr) ++r.unjudged;
      else if (judge(t, *reference)) ++r.relevant;
      else ++r.irrelevant;
    }
  }
  r.defined = r.total > 0;
  r.accuracy = r.defined ? static_cast<double>(r.relevant) / static_cast<double>(r.total) : 0.0;
  return r;
}

/// Mean of per-row accuracies, in percent to one decimal.
inline std::string mean_accuracy_percent(const std::vector<TopicAccuracyReport>& rows) {
  if (rows.empty()) return "0.0";
  double sum = 0.0;
  for (const auto& r : rows) sum += r.accuracy;
  const auto tenths = text::round_half_up(1000.0 * sum / static_cast<double>(rows.size()));
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

inline json to_json(const TopicAccuracyReport& r) {
  return json{{"total", r.total},       {"relevant", r.relevant}, {"irrelevant", r.irrelevant},
              {"unjudged", r.unjudged}, {"accuracy", r.accuracy}, {"accuracy_percent", r.percent()},
              {"defined", r.defined}};
}

/// Reads {"product_type","topics":[...]} lines.
inline TopicSets read_topic_sets(std::istream& in) {
  TopicSets out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      auto& dst = out[j.at("product_type").get<std::string>()];
      for (const auto& t : j.at("topics")) dst.push_back(t.is_string() ? t.get<std::string>() : t.at("label").get<std::string>());
    } catch (const json::exception& e) {
      throw FormatError("topic set line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// Case study

struct CaseStudyRow {
  std::string product_type;
  std::vector<std::pair<std::string, int>> ratings;
  std::vector<std::pair<std::string, std::string>> suggestions;  // topic, phrase
  double sentiment = 0.5;                  // mean compound over suggestions
  std::optional<double> bleu;              // blank unless references were supplied
  int suggested_stars = 0;
  int topic_average_stars = 0;
};

/// Mean cumulative BLEU-n of each suggestion against its topic's references.
/// Returns nullopt when no suggestion has references.
inline std::optional<double> suggestion_bleu(const std::vector<std::pair<std::string, std::string>>& suggestions,
                                             const std::map<std::string, std::vector<std::string>>& references,
                                             const BleuOptions& opts = {4, true, 0.1}) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [topic, phrase] : suggestions) {
    auto it = references.find(text::casefold(topic));
    if (it == references.end() || it->second.empty()) continue;
    const auto cand = preprocess(phrase);
    std::vector<Tokens> refs;
    for (const auto& r : it->second) refs.push_back(preprocess(r));
    if (cand.empty()) {
      ++n;
      continue;
    }
    sum += bleu(cand, refs, opts)[static_cast<std::size_t>(opts.max_n - 1)];
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

inline std::string format_case_study(const std::vector<CaseStudyRow>& rows) {
  std::ostringstream out;
  out << "Product Type | Topics and Ratings | Suggestions | Sentiment Score | BLEU Score | Final Rating\n";
  for (const auto& row : rows) {
    std::string ratings;
    for (const auto& [t, s] : row.ratings) ratings += (ratings.empty() ? "" : ", ") + t + ": " + std::to_string(s) + " stars";
    std::string suggestions;
    for (const auto& [t, p] : row.suggestions) suggestions += (suggestions.empty() ? "" : " / ") + t + ": " + p;
    std::ostringstream sentiment;
    sentiment << std::fixed << std::setprecision(2) << row.sentiment;
    std::ostringstream bleu_cell;
    if (row.bleu) bleu_cell << std::fixed << std::setprecision(2) << *row.bleu;
    out << row.product_type << " | " << ratings << " | " << suggestions << " | " << sentiment.str() << " | "
        << bleu_cell.str() << " | " << row.suggested_stars << " (topics " << row.topic_average_stars << ")\n";
  }
  return out.str();
}

inline json to_json(const CaseStudyRow& row) {
  json ratings = json::array();
  for (const auto& [t, s] : row.ratings) ratings.push_back({{"topic", t}, {"stars", s}});
  json suggestions = json::array();
  for (const auto& [t, p] : row.suggestions) suggestions.push_back({{"topic", t}, {"text", p}});
  return json{{"product_type", row.product_type},
              {"ratings", ratings},
              {"suggestions", suggestions},
              {"sentiment", row.sentiment},
              {"bleu", row.bleu ? json(*row.bleu) : json(nullptr)},
              {"suggested_stars", row.suggested_stars},
              {"topic_average_stars", row.topic_average_stars}};
}

}  // namespace reviewkit::evaluation
