#pragma once

// Similar-product-type resolution for cold-start topic suggestion: edit
// distance, TF-IDF cosine and backend-assisted ranking, plus accuracy
// reporting over a gold standard.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <semaphore>
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
#include "reviewkit/text.hpp"

namespace reviewkit::similarity {

using json = nlohmann::json;

// --------------------------------------------------------------------------
// Edit distance

/// Minimum number of single-character insertions, deletions and
/// substitutions turning `a` into `b` (byte-wise). Two-row dynamic program,
/// O(|a|·|b|) time, O(min(|a|,|b|)) space.
inline std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitution = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitution});
      diagonal = above;
    }
  }
  return row[b.size()];
}

/// 1 - distance(casefold(a), casefold(b)) / max(|a|, |b|); 1.0 when both are
/// empty.
inline double levenshtein_similarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  const auto d = levenshtein_distance(text::casefold(a), text::casefold(b));
  return 1.0 - static_cast<double>(d) / static_cast<double>(longest);
}

// --------------------------------------------------------------------------
// Embeddings

/// Sparse vector sorted by feature index.
struct Embedding {
  std::vector<std::pair<std::uint32_t, double>> entries;
  bool valid = false;  // false for empty or out-of-vocabulary text

  double norm() const {
    double s = 0.0;
    for (const auto& [_, v] : entries) s += v * v;
    return std::sqrt(s);
  }
};

inline double dot(const Embedding& a, const Embedding& b) {
  double s = 0.0;
  auto i = a.entries.begin();
  auto j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      s += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return s;
}

/// Cosine of two unit-norm embeddings; 0 when either is invalid.
inline double cosine(const Embedding& a, const Embedding& b) {
  if (!a.valid || !b.valid) return 0.0;
  return dot(a, b);
}

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Embedding embed(std::string_view text) const = 0;
};

/// Local lexical embedder: TF-IDF over word unigrams ("w:glasses") and
/// character trigrams of the space-padded lowercase word sequence
/// ("c: wi"), L2-normalized. idf(f) = ln((1 + N) / (1 + df(f))) + 1 over the
/// fitted vocabulary; features never seen during fitting are ignored.
class TfidfEmbedder final : public EmbeddingProvider {
 public:
  TfidfEmbedder() = default;
  explicit TfidfEmbedder(const std::vector<std::string>& vocabulary) { fit(vocabulary); }

  static std::map<std::string, std::size_t> features(std::string_view text_in) {
    std::map<std::string, std::size_t> f;
    const auto words = text::alnum_tokens(text_in);
    std::string padded = " ";
    for (std::size_t i = 0; i < words.size(); ++i) {
      ++f["w:" + words[i]];
      padded += words[i];
      padded += ' ';
    }
    if (words.empty()) return f;
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) ++f["c:" + padded.substr(i, 3)];
    return f;
  }

  void fit(const std::vector<std::string>& documents) {
    index_.clear();
    idf_.clear();
    std::map<std::string, std::size_t> df;
    for (const auto& d : documents)
      for (const auto& [feature, _] : features(d)) ++df[feature];
    const double n = static_cast<double>(documents.size());
    for (const auto& [feature, count] : df) {
      index_.emplace(feature, static_cast<std::uint32_t>(idf_.size()));
      idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
  }

  Embedding embed(std::string_view text_in) const override {
    Embedding e;
    for (const auto& [feature, tf] : features(text_in)) {
      auto it = index_.find(feature);
      if (it == index_.end()) continue;
      e.entries.emplace_back(it->second, static_cast<double>(tf) * idf_[it->second]);
    }
    std::sort(e.entries.begin(), e.entries.end());
    const double n = e.norm();
    if (n == 0.0) {
      e.entries.clear();
      return e;
    }
    for (auto& [_, v] : e.entries) v /= n;
    e.valid = true;
    return e;
  }

  std::size_t vocabulary_size() const { return idf_.size(); }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<double> idf_;
};

// --------------------------------------------------------------------------
// Ranking

enum class MethodKind { levenshtein, cosine, llm };

inline std::string_view to_string(MethodKind k) {
  switch (k) {
    case MethodKind::levenshtein: return "levenshtein";
    case MethodKind::cosine: return "cosine";
    case MethodKind::llm: return "llm";
  }
  return "cosine";
}

inline MethodKind method_from_string(std::string_view s) {
  if (s == "levenshtein") return MethodKind::levenshtein;
  if (s == "cosine") return MethodKind::cosine;
  if (s == "llm") return MethodKind::llm;
  throw InvalidArgument("unknown similarity method '" + std::string(s) + "'");
}

struct SimilarityMethod {
  MethodKind kind = MethodKind::cosine;
  double threshold = 0.5;  // levenshtein only
  std::size_t k = 10;

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must lie in [0, 1]");
    if (k < 1) throw InvalidArgument("k must be at least 1");
  }
};

struct ScoredProductType {
  std::string id;
  std::string name;
  double score = 0.0;
};

/// Score descending, then name ascending.
inline void sort_ranked(std::vector<ScoredProductType>& ranked) {
  std::sort(ranked.begin(), ranked.end(), [](const ScoredProductType& a, const ScoredProductType& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.name < b.name;
  });
}

/// Prompt asking a backend for the k candidates most similar to `pt`.
inline std::string llm_similarity_prompt(const catalog::ProductType& pt,
                                         const std::vector<catalog::ProductType>& candidates, std::size_t k) {
  std::ostringstream out;
  out << "You are organizing a retail catalog. Given the source product type and a list of candidate "
         "product types, list the "
      << k << " candidates most similar to the source product type in how customers use and review them.\n";
  out << "Source product type: " << pt.name << '\n';
  out << "Candidate product types:\n";
  for (const auto& c : candidates) out << "- " << c.name << '\n';
  out << "Answer with candidate names only, one per line, most similar first.";
  return out.str();
}

/// Splits a free-text answer into candidate labels: one per line or comma,
/// with bullets, numbering, quotes and bold markers stripped.
inline std::vector<std::string> split_label_list(std::string_view response) {
  std::vector<std::string> labels;
  std::string current;
  const auto flush = [&] {
    std::string_view v = text::trim(current);
    while (!v.empty() && (v.front() == '-' || v.front() == '*' || v.front() == '"' || v.front() == '\'' ||
                          v.front() == ' '))
      v.remove_prefix(1);
    // List numbering "1." / "2)" but not "3D Glasses".
    std::size_t digits = 0;
    while (digits < v.size() && std::isdigit(static_cast<unsigned char>(v[digits]))) ++digits;
    if (digits > 0 && digits < v.size() && (v[digits] == '.' || v[digits] == ')')) {
      v.remove_prefix(digits + 1);
      v = text::trim(v);
    }
    while (!v.empty() && (v.front() == '*' || v.front() == '"' || v.front() == '\'')) v.remove_prefix(1);
    while (!v.empty() && (v.back() == '"' || v.back() == '\'' || v.back() == '*' || v.back() == '.' ||
                          v.back() == ' '))
      v.remove_suffix(1);
    if (!v.empty()) labels.emplace_back(v);
    current.clear();
  };
  for (char c : response) {
    if (c == '\n' || c == ',' || c == ';') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  return labels;
}

/// Backend-assisted ranking. Labels outside the candidate list are dropped,
/// duplicates collapse to their first mention, and the result is capped at k.
/// BackendError propagates so the caller can fall back to cosine.
inline std::vector<catalog::ProductType> llm_similar_product_types(
    const catalog::ProductType& pt, const std::vector<catalog::ProductType>& candidates,
    GenerationBackend& backend, std::size_t k = 10) {
  std::vector<catalog::ProductType> scope;
  for (const auto& c : candidates)
    if (c.id != pt.id) scope.push_back(c);
  if (scope.empty()) return {};
  const std::string response = backend.complete(llm_similarity_prompt(pt, scope, k), 0);
  std::unordered_map<std::string, const catalog::ProductType*> by_name;
  for (const auto& c : scope) {
    by_name.emplace(text::casefold(c.name), &c);
    by_name.emplace(text::casefold(c.id), &c);
  }
  std::vector<catalog::ProductType> out;
  std::unordered_set<std::string> seen;
  for (const auto& label : split_label_list(response)) {
    auto it = by_name.find(text::casefold(label));
    if (it == by_name.end()) continue;
    if (!seen.insert(it->second->id).second) continue;
    out.push_back(*it->second);
    if (out.size() == k) break;
  }
  return out;
}

struct SimilarityContext {
  const EmbeddingProvider* embedder = nullptr;  // required for cosine
  GenerationBackend* backend = nullptr;         // required for llm
};

/// Ranked similar product types, at most `method.k`, never including `pt`.
inline std::vector<ScoredProductType> similar_product_types(const catalog::ProductType& pt,
                                                            const SimilarityMethod& method,
                                                            const std::vector<catalog::ProductType>& scope,
                                                            const SimilarityContext& ctx = {}) {
  method.validate();
  std::vector<ScoredProductType> ranked;
  switch (method.kind) {
    case MethodKind::levenshtein:
      for (const auto& c : scope) {
        if (c.id == pt.id) continue;
        const double s = levenshtein_similarity(pt.name, c.name);
        if (s >= method.threshold) ranked.push_back({c.id, c.name, s});
      }
      break;
    case MethodKind::cosine: {
      if (ctx.embedder == nullptr) throw InvalidArgument("cosine similarity needs an embedding provider");
      const auto query = ctx.embedder->embed(pt.name);
      for (const auto& c : scope) {
        if (c.id == pt.id) continue;
        if (!pt.department.empty() && c.department != pt.department) continue;
        ranked.push_back({c.id, c.name, cosine(query, ctx.embedder->embed(c.name))});
      }
      break;
    }
    case MethodKind::llm: {
      if (ctx.backend == nullptr) throw InvalidArgument("llm similarity needs a generation backend");
      const auto picks = llm_similar_product_types(pt, scope, *ctx.backend, method.k);
      // Rank-derived score so callers can compare against other methods.
      for (std::size_t i = 0; i < picks.size(); ++i)
        ranked.push_back({picks[i].id, picks[i].name,
                          1.0 - static_cast<double>(i) / static_cast<double>(method.k)});
      return ranked;
    }
  }
  sort_ranked(ranked);
  if (ranked.size() > method.k) ranked.resize(method.k);
  return ranked;
}

/// Runs llm_similar_product_types for many queries with at most
/// `max_in_flight` concurrent backend calls. Failed queries map to
/// std::nullopt. The backend must tolerate concurrent calls.
inline std::vector<std::optional<std::vector<catalog::ProductType>>> llm_similar_batch(
    const std::vector<catalog::ProductType>& queries, const std::vector<catalog::ProductType>& candidates,
    GenerationBackend& backend, std::size_t k = 10, std::size_t max_in_flight = 4) {
  if (max_in_flight == 0) throw InvalidArgument("max_in_flight must be positive");
  std::counting_semaphore<> slots(static_cast<std::ptrdiff_t>(max_in_flight));
  std::vector<std::future<std::optional<std::vector<catalog::ProductType>>>> futures;
  futures.reserve(queries.size());
  for (const auto& q : queries) {
    slots.acquire();
    futures.push_back(std::async(std::launch::async, [&, q]() -> std::optional<std::vector<catalog::ProductType>> {
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{slots};
      try {
        return llm_similar_product_types(q, candidates, backend, k);
      } catch (const BackendError&) {
        return std::nullopt;
      }
    }));
  }
  std::vector<std::optional<std::vector<catalog::ProductType>>> out;
  out.reserve(futures.size());
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

// --------------------------------------------------------------------------
// Evaluation

struct SimilarityReport {
  std::string method;
  std::size_t total_detected = 0;  // TPTs
  std::size_t correct = 0;         // CPTs
  std::size_t missing = 0;         // MPTs
  double accuracy = 0.0;           // correct / total_detected
  bool accuracy_defined = true;    // false when nothing was detected
};

inline std::string accuracy_percent(const SimilarityReport& r) {
  return text::format_percent(r.correct, r.total_detected);
}

/// total_detected = sum |predicted|, correct = sum |predicted ∩ gold|,
/// missing = sum max(0, k - |predicted|) + gold items never produced.
inline SimilarityReport evaluate_similarity_methods(
    const std::map<std::string, std::set<std::string>>& gold,
    const std::map<std::string, std::vector<std::string>>& predicted, std::size_t k = 10,
    std::string method = {}) {
  if (gold.size() != predicted.size() ||
      !std::equal(gold.begin(), gold.end(), predicted.begin(),
                  [](const auto& g, const auto& p) { return g.first == p.first; }))
    throw InvalidArgument("gold and predicted must cover the same product types");
  SimilarityReport r;
  r.method = std::move(method);
  for (const auto& [pt, preds] : predicted) {
    const auto& expected = gold.at(pt);
    std::set<std::string> produced;
    for (const auto& p : preds) {
      if (!produced.insert(p).second) continue;
      ++r.total_detected;
      if (expected.count(p) != 0) ++r.correct;
    }
    if (produced.size() < k) r.missing += k - produced.size();
    for (const auto& g : expected)
      if (produced.count(g) == 0) ++r.missing;
  }
  r.accuracy_defined = r.total_detected > 0;
  r.accuracy = r.accuracy_defined ? static_cast<double>(r.correct) / static_cast<double>(r.total_detected) : 0.0;
  return r;
}

/// Reads {"product_type": "...", "similar": ["...", ...]} records, one per
/// line. Used for both gold and prediction files.
inline std::map<std::string, std::vector<std::string>> read_similarity_records(std::istream& in) {
  std::map<std::string, std::vector<std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      auto& list = out[j.at("product_type").get<std::string>()];
      for (const auto& s : j.at("similar")) list.push_back(s.get<std::string>());
    } catch (const json::exception& e) {
      throw InvalidArgument("similarity record line " + std::to_string(line_no) + " malformed", e.what());
    }
  }
  return out;
}

inline std::map<std::string, std::set<std::string>> as_gold(
    const std::map<std::string, std::vector<std::string>>& records) {
  std::map<std::string, std::set<std::string>> gold;
  for (const auto& [pt, list] : records) gold[pt] = {list.begin(), list.end()};
  return gold;
}

/// Table with columns Method | #TPTs | #CPTs | #MPTs | A(%).
inline std::string format_similarity_table(const std::vector<SimilarityReport>& reports) {
  std::size_t width = 6;
  for (const auto& r : reports) width = std::max(width, r.method.size());
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s | %7s | %7s | %7s | %7s\n", static_cast<int>(width), "Method", "#TPTs",
                "#CPTs", "#MPTs", "A(%)");
  out << buf;
  out << std::string(width, '-') << "-+-" << std::string(7, '-') << "-+-" << std::string(7, '-') << "-+-"
      << std::string(7, '-') << "-+-" << std::string(7, '-') << '\n';
  for (const auto& r : reports) {
    const std::string acc = r.accuracy_defined ? accuracy_percent(r) + "%" : "n/a";
    std::snprintf(buf, sizeof buf, "%-*s | %7zu | %7zu | %7zu | %7s\n", static_cast<int>(width), r.method.c_str(),
                  r.total_detected, r.correct, r.missing, acc.c_str());
    out << buf;
  }
  return out.str();
}

inline json to_json(const SimilarityReport& r) {
  return json{{"method", r.method},
              {"total_detected", r.total_detected},
              {"correct", r.correct},
              {"missing", r.missing},
              {"accuracy", r.accuracy},
              {"accuracy_percent", accuracy_percent(r)},
              {"accuracy_defined", r.accuracy_defined}};
}

}  // namespace reviewkit::similarity
