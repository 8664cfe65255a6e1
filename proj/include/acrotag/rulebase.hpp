#pragma once

// Rule baseline for acronym and long-form identification.
//
// Short forms: any token whose length lies in [min_acronym_len,
// max_acronym_len] and whose share of uppercase letters reaches
// min_uppercase_fraction.
//
// Long forms: only for the pattern "long form ( ACR )". The acronym's
// letters are aligned right to left against the tokens preceding "(",
// preferring word-initial characters and falling back to word-internal
// ones, within a bounded window. The long form runs from the leftmost
// matched word to the token before "(" and is emitted only when every
// letter matched and the leftmost word matched on its initial.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acrotag/corpus.hpp"

namespace acrotag {

struct RuleConfig {
  std::size_t min_acronym_len = 2;
  std::size_t max_acronym_len = 10;
  /// Tokens scanned left of "("; unset means 2 + 2 * acronym length.
  std::optional<std::size_t> max_longform_window;
  double min_uppercase_fraction = 0.6;

  std::size_t window_for(std::size_t acronym_len) const {
    return max_longform_window.value_or(2 + 2 * acronym_len);
  }
};

/// Throws std::invalid_argument when lengths or the window are out of range.
void validate(const RuleConfig& config);

bool is_short_form_candidate(std::string_view token, const RuleConfig& config);

/// Start index of the long form defined by the acronym at
/// tokens[paren + 1], where tokens[paren] == "(". nullopt when the
/// alignment fails.
std::optional<std::size_t> match_long_form(std::span<const std::string> tokens, std::size_t paren,
                                           const RuleConfig& config);

/// Spans found in one sample, sorted and disjoint.
std::vector<Span> rule_identify(const Sample& sample, const RuleConfig& config);

/// Copy of `dataset` whose labels encode the rule spans.
Dataset rule_predict(const Dataset& dataset, const RuleConfig& config);

}  // namespace acrotag
