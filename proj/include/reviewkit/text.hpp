#pragma once

// Shared text primitives: case folding, tokenizers, stop words, sentence
// splitting and the round-half-up rule used by every rating computation.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace reviewkit::text {

/// ASCII lowercase. Non-ASCII bytes pass through untouched.
inline std::string casefold(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }

/// Replaces the UTF-8 right single quotation mark with an ASCII apostrophe so
/// "didn’t" and "didn't" tokenize alike.
inline std::string normalize_apostrophes(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
        static_cast<unsigned char>(s[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(s[i + 2]) == 0x99 ||
         static_cast<unsigned char>(s[i + 2]) == 0x98)) {
      out.push_back('\'');
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

/// Lowercased maximal runs of ASCII letters and digits.
inline std::vector<std::string> alnum_tokens(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : s) {
    if (is_alnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

/// A word token, or a clause boundary marker when `boundary` is set.
struct WordToken {
  std::string text;
  bool boundary = false;
};

/// Lowercased words keeping inner apostrophes ("didn't"), with clause
/// punctuation (. , ; : ! ?) emitted as boundary markers.
inline std::vector<WordToken> word_tokens(std::string_view raw) {
  const std::string s = normalize_apostrophes(raw);
  std::vector<WordToken> tokens;
  std::string current;
  const auto flush = [&] {
    while (!current.empty() && current.back() == '\'') current.pop_back();
    if (!current.empty()) tokens.push_back({std::move(current), false});
    current.clear();
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (is_alnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'' && !current.empty()) {
      current.push_back('\'');
    } else {
      flush();
      if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?') {
        if (tokens.empty() || !tokens.back().boundary) tokens.push_back({{}, true});
      }
    }
  }
  flush();
  return tokens;
}

/// Whitespace-delimited token count; this is the "word count" of a phrase.
inline std::size_t word_count(std::string_view s) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

/// Round half away from zero for the non-negative values used here
/// (2.5 -> 3, 1.5 -> 2, 2.49 -> 2). A tiny epsilon absorbs binary noise such
/// as 5 * 0.3 == 1.4999999999999998.
inline long long round_half_up(double x) {
  return static_cast<long long>(std::floor(x + 0.5 + 1e-9));
}

/// Percentage with one decimal, computed by exact integer round-half-up of
/// numerator/denominator (e.g. 186/410 -> "45.4").
inline std::string format_percent(std::size_t numerator, std::size_t denominator) {
  if (denominator == 0) return "0.0";
  const unsigned long long tenths =
      (2ULL * 1000ULL * numerator + denominator) / (2ULL * denominator);
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

// Bundled English stop words (function words only).
inline const std::unordered_set<std::string>& default_stop_words() {
  static const std::unordered_set<std::string> words = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your",
      "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she",
      "her", "hers", "herself", "it", "its", "itself", "they", "them", "their",
      "theirs", "themselves", "what", "which", "who", "whom", "this", "that",
      "these", "those", "am", "is", "are", "was", "were", "be", "been", "being",
      "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
      "the", "and", "but", "if", "or", "because", "as", "until", "while", "of",
      "at", "by", "for", "with", "about", "against", "between", "into",
      "through", "during", "before", "after", "above", "below", "to", "from",
      "up", "down", "in", "out", "on", "off", "over", "under", "again",
      "further", "then", "once", "here", "there", "when", "where", "why", "how",
      "all", "any", "both", "each", "few", "more", "most", "other", "some",
      "such", "no", "nor", "not", "only", "own", "same", "so", "than", "too",
      "very", "s", "t", "can", "will", "just", "don", "should", "now", "d",
      "ll", "m", "o", "re", "ve", "y", "didn", "doesn", "isn", "wasn", "won",
      "couldn", "wouldn", "also", "would", "could", "it's", "i'm", "i've"};
  return words;
}

/// Sentence spans split on . ! ? with an abbreviation allowlist. Returned
/// views point into `text`; empty sentences are dropped.
inline std::vector<std::string_view> split_sentences(std::string_view text) {
  static const std::unordered_set<std::string> abbreviations = {
      "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g",
      "i.e", "approx", "inc", "ltd", "oz", "lb", "lbs", "ft"};
  std::vector<std::string_view> sentences;
  std::size_t start = 0;
  const auto emit = [&](std::size_t end) {
    auto piece = trim(text.substr(start, end - start));
    if (!piece.empty()) sentences.push_back(piece);
    start = end;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (c == '.') {
      // Decimal point: "2.5"
      if (i > 0 && i + 1 < text.size() &&
          std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
          std::isdigit(static_cast<unsigned char>(text[i + 1])))
        continue;
      std::size_t w = i;
      while (w > start && (is_alnum(static_cast<unsigned char>(text[w - 1])) ||
                           text[w - 1] == '.'))
        --w;
      if (abbreviations.count(casefold(text.substr(w, i - w))) != 0) continue;
    }
    std::size_t end = i + 1;
    while (end < text.size() &&
           (text[end] == '.' || text[end] == '!' || text[end] == '?' ||
            text[end] == '"' || text[end] == '\''))
      ++end;
    emit(end);
    i = end - 1;
  }
  emit(text.size());
  return sentences;
}

/// 64-bit FNV-1a, stable across platforms and runs.
inline std::uint64_t fnv1a(std::string_view bytes,
                           std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace reviewkit::text
