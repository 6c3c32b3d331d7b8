#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "reviewkit/error.hpp"
#include "reviewkit/text.hpp"

namespace reviewkit::sentiment {

struct SentimentLexicon {
  std::unordered_map<std::string, double> entries;  // token -> polarity in [-1, 1]
  std::unordered_set<std::string> negators;
  std::size_t window = 3;

  std::optional<double> polarity(const std::string& token) const {
    auto it = entries.find(token);
    if (it == entries.end()) return std::nullopt;
    return it->second;
  }
};

/// Parses the lexicon text format:
///
///   # comment
///   token<TAB>polarity
///   [negators]
///   token
///
/// Polarities outside [-1, 1] and negators that also carry a polarity are
/// rejected.
inline SentimentLexicon parse_lexicon(std::istream& in) {
  SentimentLexicon lexicon;
  std::string line;
  bool in_negators = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (body == "[negators]") {
      in_negators = true;
      continue;
    }
    if (body.front() == '[') {
      in_negators = false;
      continue;
    }
    if (in_negators) {
      lexicon.negators.insert(text::casefold(body));
      continue;
    }
    const auto tab = body.find('\t');
    if (tab == std::string_view::npos)
      throw InvalidArgument("lexicon line " + std::to_string(line_no) +
                            ": expected token<TAB>polarity");
    const std::string token = text::casefold(text::trim(body.substr(0, tab)));
    const std::string value(text::trim(body.substr(tab + 1)));
    double polarity = 0.0;
    try {
      std::size_t used = 0;
      polarity = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw InvalidArgument("lexicon line " + std::to_string(line_no) +
                            ": bad polarity '" + value + "'");
    }
    if (polarity < -1.0 || polarity > 1.0)
      throw InvalidArgument("lexicon line " + std::to_string(line_no) +
                            ": polarity outside [-1, 1]");
    lexicon.entries[token] = polarity;
  }
  for (const auto& n : lexicon.negators) {
    if (lexicon.entries.count(n) != 0)
      throw InvalidArgument("negator '" + n + "' also has a polarity entry");
  }
  return lexicon;
}

inline SentimentLexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon file: " + path);
  return parse_lexicon(in);
}

namespace detail {

// Curated retail-review vocabulary. Product aspects that commonly appear as
// topic labels (quality, price, value, comfort, warmth, ...) are deliberately
// absent so that a topic name never carries sentiment by itself.
inline constexpr std::string_view kDefaultLexicon = R"(# token	polarity
# strong positive
excellent	0.9
outstanding	0.9
fantastic	0.9
amazing	0.9
superb	0.9
exceptional	0.9
perfect	0.9
perfectly	0.8
wonderful	0.9
love	0.9
loved	0.9
loves	0.9
awesome	0.9
brilliant	0.8
flawless	0.9
impressive	0.8
impressed	0.8
delighted	0.9
delightful	0.8
superior	0.7
incredible	0.8
incredibly	0.5
beautiful	0.8
beautifully	0.8
gorgeous	0.8
adorable	0.8
lovely	0.8
best	0.8
thrilled	0.9
exceeded	0.7
exceeds	0.7
highly	0.4
# mild positive
good	0.6
great	0.7
nice	0.5
fine	0.3
decent	0.3
solid	0.5
sturdy	0.6
durable	0.6
reliable	0.6
comfortable	0.6
comfy	0.6
soft	0.5
pleasant	0.6
pleasing	0.5
enjoyable	0.6
enjoyed	0.6
enjoy	0.6
happy	0.7
glad	0.6
satisfied	0.6
satisfying	0.6
pleased	0.6
recommend	0.7
recommended	0.7
worth	0.5
worthwhile	0.5
useful	0.5
helpful	0.5
handy	0.5
convenient	0.5
easy	0.5
easily	0.4
effortless	0.6
effortlessly	0.6
practical	0.4
versatile	0.5
efficient	0.5
effective	0.5
fast	0.4
quick	0.4
quickly	0.3
clean	0.4
fresh	0.5
bright	0.4
vibrant	0.6
cute	0.6
pretty	0.5
stylish	0.6
elegant	0.7
attractive	0.6
charming	0.6
appealing	0.5
inviting	0.5
cozy	0.6
warmly	0.4
fits	0.3
flattering	0.6
well	0.3
right	0.3
adequate	0.3
adequately	0.3
acceptable	0.3
okay	0.2
ok	0.2
fair	0.2
reasonable	0.4
affordable	0.5
bargain	0.6
strong	0.4
supportive	0.5
secure	0.4
safe	0.4
sharp	0.3
crisp	0.4
clear	0.3
accurate	0.5
precise	0.5
consistent	0.4
lightweight	0.4
portable	0.4
compact	0.3
spacious	0.4
roomy	0.4
quiet	0.4
powerful	0.5
fantastically	0.8
works	0.3
working	0.2
functional	0.3
favorite	0.7
favourite	0.7
fun	0.6
cuddly	0.6
cuddling	0.5
soothing	0.5
luxurious	0.7
premium	0.5
thoughtful	0.5
attentive	0.4
careful	0.3
substantial	0.4
agreeably	0.4
conveniently	0.4
nicely	0.5
pleasantly	0.5
wonderfully	0.8
generous	0.5
impeccable	0.9
superbly	0.9
marvelous	0.8
terrific	0.8
gem	0.7
winner	0.6
success	0.6
charm	0.5
plus	0.3
benefit	0.4
advantage	0.4
improved	0.4
improvement	0.4
upgrade	0.4
# mild negative
cheap	-0.5
cheaply	-0.5
flimsy	-0.7
fragile	-0.5
weak	-0.5
loose	-0.4
tight	-0.3
snug	-0.2
small	-0.2
dull	-0.5
faded	-0.5
bland	-0.4
plain	-0.2
basic	-0.3
generic	-0.3
average	-0.1
mediocre	-0.5
meh	-0.4
lacking	-0.5
lacked	-0.5
lacks	-0.5
lack	-0.5
missing	-0.4
slow	-0.4
noisy	-0.5
loud	-0.3
heavy	-0.3
bulky	-0.4
awkward	-0.4
uncomfortable	-0.6
itchy	-0.5
scratchy	-0.5
stiff	-0.4
rough	-0.4
sticky	-0.4
greasy	-0.4
difficult	-0.5
hard	-0.3
complicated	-0.4
confusing	-0.5
tricky	-0.3
fuss	-0.3
annoying	-0.6
annoyed	-0.6
frustrating	-0.7
frustrated	-0.7
inconsistent	-0.4
unreliable	-0.6
overpriced	-0.7
expensive	-0.4
pricey	-0.4
excessive	-0.5
unjustified	-0.5
disproportionately	-0.4
underwhelming	-0.6
underwhelmed	-0.6
disappointing	-0.7
disappointed	-0.7
disappointment	-0.7
unfortunately	-0.4
sadly	-0.4
off	-0.3
unpleasant	-0.7
odd	-0.3
strange	-0.3
weird	-0.3
restrictive	-0.4
restricted	-0.3
cramped	-0.4
short	-0.2
shorter	-0.2
smaller	-0.2
worn	-0.3
stained	-0.5
scratched	-0.5
dented	-0.5
leaks	-0.6
leaked	-0.6
leaking	-0.6
leaky	-0.6
smelly	-0.6
stinks	-0.7
fades	-0.4
faint	-0.3
shrank	-0.5
shrunk	-0.5
ripped	-0.6
tore	-0.6
torn	-0.6
frayed	-0.5
wobbly	-0.5
unstable	-0.5
problem	-0.5
problems	-0.5
issue	-0.4
issues	-0.4
complaint	-0.5
concern	-0.3
wrong	-0.5
poor	-0.7
poorly	-0.7
# strong negative
bad	-0.7
terrible	-0.9
horrible	-0.9
awful	-0.9
worst	-0.9
worse	-0.7
useless	-0.8
broken	-0.8
broke	-0.8
breaks	-0.7
defective	-0.8
junk	-0.8
waste	-0.8
wasted	-0.8
hate	-0.9
hated	-0.9
regret	-0.8
return	-0.3
returned	-0.4
refund	-0.4
fail	-0.7
failed	-0.7
fails	-0.7
failure	-0.7
ruined	-0.8
shoddy	-0.8
dreadful	-0.9
pathetic	-0.9
unusable	-0.9
unacceptable	-0.8
ridiculous	-0.6
shocking	-0.5
shockingly	-0.5
misleading	-0.7
fake	-0.7
scam	-0.9
gone	-0.3
died	-0.6
dead	-0.6
cold	-0.2
avoid	-0.6
[negators]
not
no
never
none
nothing
nobody
neither
nor
without
hardly
barely
scarcely
isn't
wasn't
aren't
weren't
don't
doesn't
didn't
can't
cannot
couldn't
won't
wouldn't
shouldn't
haven't
hasn't
hadn't
ain't
)";

}  // namespace detail

/// Bundled default lexicon of curated retail-review terms.
inline const SentimentLexicon& default_lexicon() {
  static const SentimentLexicon lexicon = [] {
    std::istringstream in{std::string(detail::kDefaultLexicon)};
    return parse_lexicon(in);
  }();
  return lexicon;
}

struct SentimentReport {
  double compound = 0.5;  // [0, 1]; 0.5 is neutral
  std::size_t positive_hits = 0;
  std::size_t negative_hits = 0;
  int stars = 3;
};

/// Maps a compound score in [0, 1] to 1..5 stars: clamp(round_half_up(5c), 1, 5).
inline int stars_from_score(double compound) {
  if (!(compound >= 0.0 && compound <= 1.0))
    throw ContractViolation("compound score outside [0, 1]: " + std::to_string(compound));
  const auto stars = text::round_half_up(5.0 * compound);
  return static_cast<int>(std::clamp<long long>(stars, 1, 5));
}

/// Lexicon scoring. A hit is sign-flipped when a negator occurs within
/// `window` tokens before it in the same clause; clause punctuation ends the
/// negation scope. raw = (P - N) / (P + N) over summed magnitudes,
/// compound = (raw + 1) / 2.
inline SentimentReport score_text(std::string_view text_in,
                                  const SentimentLexicon& lexicon = default_lexicon()) {
  const auto tokens = text::word_tokens(text_in);
  double positive = 0.0;
  double negative = 0.0;
  SentimentReport report;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].boundary) continue;
    auto polarity = lexicon.polarity(tokens[i].text);
    if (!polarity || *polarity == 0.0) continue;
    double value = *polarity;
    for (std::size_t back = 1; back <= lexicon.window && back <= i; ++back) {
      const auto& prev = tokens[i - back];
      if (prev.boundary) break;
      if (lexicon.negators.count(prev.text) != 0) {
        value = -value;
        break;
      }
    }
    if (value > 0) {
      positive += value;
      ++report.positive_hits;
    } else {
      negative += -value;
      ++report.negative_hits;
    }
  }
  const double total = positive + negative;
  const double raw = total > 0.0 ? (positive - negative) / total : 0.0;
  report.compound = std::clamp((raw + 1.0) / 2.0, 0.0, 1.0);
  report.stars = stars_from_score(report.compound);
  return report;
}

/// round_half_up(mean) of 1..5 star ratings.
inline int average_rounded_rating(const std::vector<int>& ratings) {
  if (ratings.empty()) throw InvalidArgument("average_rounded_rating: empty rating list");
  long long sum = 0;
  for (int r : ratings) {
    if (r < 1 || r > 5) throw InvalidArgument("rating outside 1..5: " + std::to_string(r));
    sum += r;
  }
  // Exact: floor((2*sum + n) / (2n)) == round_half_up(sum / n) for sum, n > 0.
  const auto n = static_cast<long long>(ratings.size());
  return static_cast<int>((2 * sum + n) / (2 * n));
}

struct OverallRating {
  int suggested_stars = 0;
  std::optional<double> topic_average;  // unrounded mean of topic ratings
  std::optional<int> text_stars;        // stars_from_score of the final text
};

/// Blends topic ratings with the final text's sentiment:
/// round_half_up(alpha * mean(topics) + (1 - alpha) * stars(text)). When only
/// one component is available it is used alone.
inline OverallRating overall_rating(const std::vector<int>& topic_ratings,
                                    const std::optional<SentimentReport>& final_text,
                                    double alpha = 0.5) {
  if (alpha < 0.0 || alpha > 1.0) throw InvalidArgument("blend alpha outside [0, 1]");
  OverallRating out;
  if (!topic_ratings.empty()) {
    average_rounded_rating(topic_ratings);  // validates range
    out.topic_average =
        std::accumulate(topic_ratings.begin(), topic_ratings.end(), 0.0) /
        static_cast<double>(topic_ratings.size());
  }
  if (final_text) out.text_stars = stars_from_score(final_text->compound);
  if (!out.topic_average && !out.text_stars)
    throw InvalidArgument("overall_rating needs topic ratings or a final text");
  double blended = 0.0;
  if (out.topic_average && out.text_stars)
    blended = alpha * *out.topic_average + (1.0 - alpha) * *out.text_stars;
  else if (out.topic_average)
    blended = *out.topic_average;
  else
    blended = *out.text_stars;
  out.suggested_stars = static_cast<int>(std::clamp<long long>(text::round_half_up(blended), 1, 5));
  return out;
}

}  // namespace reviewkit::sentiment
