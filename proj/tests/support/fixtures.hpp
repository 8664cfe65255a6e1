#pragma once

#include <string>
#include <vector>

#include "acrotag/corpus.hpp"
#include "acrotag/rng.hpp"

namespace fixtures {

/// "Existing methods for learning with noisy labels ( LNL ) ..." with gold
/// labels: long form at 3..6, acronym at 8.
acrotag::Sample lnl_sample();

/// The CNNs / RNNs / CRNNs sentence: tokens plus the gold row and the two
/// predicted rows (without and with adversarial training).
std::vector<std::string> case_tokens();
std::vector<acrotag::Tag> case_gold();
std::vector<acrotag::Tag> case_without_at();
std::vector<acrotag::Tag> case_with_at();

std::vector<acrotag::Tag> parse_tags(const std::vector<std::string>& tags);

/// Random well-formed BIO sequence of `length` tags.
std::vector<acrotag::Tag> random_well_formed(acrotag::Rng& rng, std::size_t length);
/// Uniformly random tags, usually ill-formed.
std::vector<acrotag::Tag> random_tags(acrotag::Rng& rng, std::size_t length);

/// Labeled dataset of `count` samples with random well-formed labels and
/// ids "S-0", "S-1", ...
acrotag::Dataset random_dataset(acrotag::Rng& rng, std::size_t count, std::size_t max_len);

/// Fresh scratch directory under the system temp path.
std::string scratch_dir(const std::string& name);

}  // namespace fixtures
