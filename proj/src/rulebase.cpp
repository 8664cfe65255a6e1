#include "acrotag/rulebase.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace acrotag {

namespace {

bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

// Characters of the acronym that must be found in the long form: letters
// and digits, without a plural "s" suffix (as in "CNNs").
std::string alignment_letters(std::string_view acronym) {
  std::string_view core = acronym;
  if (core.size() > 2 && core.back() == 's' && is_upper(core[core.size() - 2])) {
    core.remove_suffix(1);
  }
  std::string letters;
  for (char c : core) {
    if (is_alnum(c)) letters += lower(c);
  }
  return letters;
}

}  // namespace

void validate(const RuleConfig& config) {
  if (config.min_acronym_len < 1 || config.min_acronym_len > config.max_acronym_len) {
    throw std::invalid_argument("rules: need 1 <= min_acronym_len <= max_acronym_len");
  }
  if (config.max_longform_window && *config.max_longform_window < 1) {
    throw std::invalid_argument("rules: max_longform_window must be at least 1");
  }
  if (!(config.min_uppercase_fraction >= 0.0 && config.min_uppercase_fraction <= 1.0)) {
    throw std::invalid_argument("rules: min_uppercase_fraction must lie in [0, 1]");
  }
}

bool is_short_form_candidate(std::string_view token, const RuleConfig& config) {
  if (token.size() < config.min_acronym_len || token.size() > config.max_acronym_len) return false;
  if (!std::isalpha(static_cast<unsigned char>(token.front()))) return false;
  const auto upper = std::count_if(token.begin(), token.end(), is_upper);
  return static_cast<double>(upper) >= config.min_uppercase_fraction * static_cast<double>(token.size());
}

std::optional<std::size_t> match_long_form(std::span<const std::string> tokens, std::size_t paren,
                                           const RuleConfig& config) {
  if (paren == 0 || paren + 2 >= tokens.size() || tokens[paren] != "(" ||
      tokens[paren + 2] != ")") {
    return std::nullopt;
  }
  const std::string letters = alignment_letters(tokens[paren + 1]);
  if (letters.empty()) return std::nullopt;
  const std::size_t window = config.window_for(tokens[paren + 1].size());
  const std::size_t lowest = paren > window ? paren - window : 0;

  // Letters to the left of (word, pos) are still free; a word may give up
  // several letters (e.g. "message" -> M, S).
  std::size_t word = paren;
  std::size_t pos = 0;
  std::size_t leftmost = paren;
  bool leftmost_initial = false;
  for (auto it = letters.rbegin(); it != letters.rend(); ++it) {
    const char c = *it;
    std::optional<std::size_t> hit;
    std::size_t hit_pos = 0;
    for (std::size_t j = word + 1; j-- > lowest;) {
      if (j == paren || (j == word && pos == 0)) continue;
      if (!tokens[j].empty() && lower(tokens[j].front()) == c) {
        hit = j;
        break;
      }
    }
    for (std::size_t j = word + 1; !hit && j-- > lowest;) {
      if (j == paren) continue;
      const std::string& w = tokens[j];
      for (std::size_t p = std::min(j == word ? pos : w.size(), w.size()); p-- > 1;) {
        if (lower(w[p]) == c) {
          hit = j;
          hit_pos = p;
          break;
        }
      }
    }
    if (!hit) return std::nullopt;
    word = *hit;
    pos = hit_pos;
    leftmost = *hit;
    leftmost_initial = hit_pos == 0;
  }
  if (!leftmost_initial) return std::nullopt;
  return leftmost;
}

std::vector<Span> rule_identify(const Sample& sample, const RuleConfig& config) {
  validate(config);
  const auto& tokens = sample.tokens;
  std::vector<Span> longs;
  for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
    if (tokens[i] != "(" || !is_short_form_candidate(tokens[i + 1], config)) continue;
    if (auto start = match_long_form(tokens, i, config)) {
      // Skip a definition that would overlap the previous one.
      if (longs.empty() || longs.back().end <= *start) {
        longs.push_back(Span{SpanKind::Long, *start, i});
      }
    }
  }

  std::vector<Span> spans = longs;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!is_short_form_candidate(tokens[i], config)) continue;
    const bool inside_long = std::any_of(longs.begin(), longs.end(), [i](const Span& s) {
      return s.start <= i && i < s.end;
    });
    if (!inside_long) spans.push_back(Span{SpanKind::Short, i, i + 1});
  }
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });
  return spans;
}

Dataset rule_predict(const Dataset& dataset, const RuleConfig& config) {
  Dataset out = dataset;
  for (Sample& s : out.samples) {
    const std::vector<Span> spans = rule_identify(s, config);
    s.labels = bio_encode(spans, s.tokens.size());
  }
  return out;
}

}  // namespace acrotag
