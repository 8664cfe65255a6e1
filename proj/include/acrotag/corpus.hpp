#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace acrotag {

/// Malformed or invariant-violating data. Messages carry the location
/// (file, sample index, id, field) when one is known.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The declaration order is the argmax tie-break order.
enum class Tag : std::uint8_t { O = 0, BShort = 1, IShort = 2, BLong = 3, ILong = 4 };

inline constexpr std::size_t kNumTags = 5;
inline constexpr std::array<Tag, kNumTags> kAllTags = {Tag::O, Tag::BShort, Tag::IShort,
                                                       Tag::BLong, Tag::ILong};

std::string_view render_tag(Tag tag);
/// Throws DataError on anything other than the five tag strings.
Tag parse_tag(std::string_view text);

enum class SpanKind : std::uint8_t { Short, Long };

std::string_view render_kind(SpanKind kind);

/// Half-open token interval [start, end).
struct Span {
  SpanKind kind = SpanKind::Short;
  std::size_t start = 0;
  std::size_t end = 0;

  auto operator<=>(const Span&) const = default;
};

std::string to_string(const Span& span);

struct Sample {
  std::string id;
  std::vector<std::string> tokens;
  std::optional<std::vector<Tag>> labels;
};

enum class DatasetRole { Train, Dev, Test };

std::string_view render_role(DatasetRole role);
DatasetRole parse_role(std::string_view text);

struct Dataset {
  std::vector<Sample> samples;
  DatasetRole role = DatasetRole::Train;
};

/// Checks every Sample and Dataset invariant; throws DataError naming the
/// first offending sample and field. `source` prefixes the message.
void validate(const Dataset& dataset, std::string_view source = "dataset");

/// Parses a JSON array of {"id", "tokens", "labels"?} records.
Dataset parse_dataset_text(std::string_view text, DatasetRole role,
                           std::string_view source = "<memory>");
Dataset parse_dataset(const std::filesystem::path& path, DatasetRole role);

/// Serializes one record per line. Samples without labels omit the field.
std::string dataset_to_json(const Dataset& dataset);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);

// BIO span codec.

struct DecodeResult {
  std::vector<Span> spans;
  /// Number of orphan I-x tags that had to open a new span.
  std::size_t repairs = 0;
};

/// B-x opens a span of kind x and following I-x tokens extend it. An I-x
/// that does not continue a span of kind x opens one (counted as a repair).
/// A B-x right after a span of kind x starts a new adjacent span.
DecodeResult bio_decode_counted(std::span<const Tag> labels);
std::vector<Span> bio_decode(std::span<const Tag> labels);

/// Throws DataError on overlapping or out-of-range spans.
std::vector<Tag> bio_encode(std::span<const Span> spans, std::size_t length);

// Synthetic corpus generation.

struct SyntheticConfig {
  std::size_t count = 2000;
  /// Number of long-form content words drawn from the built-in list
  /// (0 = the whole list).
  std::size_t vocab_size = 0;
  /// Size of the seed-level inventory of defined terms that sentences draw
  /// from, so acronyms recur across a corpus (0 = a fresh term every time).
  std::size_t term_count = 300;
  /// Share of sentences that define an acronym as "long form ( ACR )".
  double definition_rate = 0.75;
  /// Among definitions, share whose acronym is the exact word initials.
  /// The rest are non-standard: mixed letters that initial matching misses.
  double standard_fraction = 0.6;
  /// Probability of a non-acronym parenthetical in a sentence.
  double distractor_rate = 0.3;
  /// Probability that a sentence mentions an acronym without defining it.
  double mention_rate = 0.3;
  std::string id_prefix = "TR";
  DatasetRole role = DatasetRole::Train;
};

/// Throws std::invalid_argument on zero count or fractions outside [0, 1].
void validate(const SyntheticConfig& config);

/// Pure function of (config, seed); labels follow from the construction.
/// The role selects an independent stream, so `--role dev` with the training
/// seed yields the matching dev set.
Dataset gen_synthetic(const SyntheticConfig& config, std::uint64_t seed);

/// Train/dev pair with disjoint ids ("TR-n", "DEV-n") and independent
/// generator streams derived from one seed.
struct SyntheticSplit {
  Dataset train;
  Dataset dev;
};
SyntheticSplit gen_synthetic_split(SyntheticConfig config, std::size_t train_count,
                                   std::size_t dev_count, std::uint64_t seed);

/// Word lists backing the generator.
std::span<const std::string_view> content_words();
std::span<const std::string_view> frame_words();
std::span<const std::string_view> connector_words();

}  // namespace acrotag
