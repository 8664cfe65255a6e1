#pragma once

// Flat "key = value" configuration covering every tagger, training and FGM
// setting. Lines starting with '#' are comments. Precedence when resolving:
// command-line flag > config file > built-in default.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "acrotag/advtrain.hpp"
#include "acrotag/tagger.hpp"

namespace acrotag {

struct RunConfig {
  TaggerConfig tagger;  // vocab_size 0 = take it from the training vocabulary
  std::size_t min_count = 1;
  TrainConfig train;
  FgmConfig fgm;

  RunConfig() { tagger.vocab_size = 0; }
};

enum class ValueSource { Default, File, Flag };

std::string_view render_source(ValueSource source);

struct ConfigKey {
  std::string_view name;
  std::string_view doc;
};

/// Every accepted key in print order, with its documentation.
std::span<const ConfigKey> config_keys();

class ResolvedConfig {
 public:
  ResolvedConfig();

  /// Applies one key. Throws ConfigError on an unknown key or a value that
  /// does not parse or is out of range.
  void set(std::string_view key, std::string_view value, ValueSource source);
  std::string get(std::string_view key) const;

  void load_file(const std::filesystem::path& path);
  void load_text(std::string_view text, std::string_view source);

  const RunConfig& values() const { return values_; }
  ValueSource source(std::string_view key) const;

  /// One "key = value  (source)" line per key.
  std::string describe() const;
  /// The same keys as a loadable config file.
  std::string to_file_text() const;

 private:
  RunConfig values_;
  std::map<std::string, ValueSource, std::less<>> sources_;
};

/// Text of the shipped default config file (built-in defaults, documented).
std::string default_config_text();

}  // namespace acrotag
