#include "acrotag/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "acrotag/rng.hpp"
#include "json.hpp"

namespace acrotag {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Tags, spans, roles

std::string_view render_tag(Tag tag) {
  switch (tag) {
    case Tag::O: return "O";
    case Tag::BShort: return "B-short";
    case Tag::IShort: return "I-short";
    case Tag::BLong: return "B-long";
    case Tag::ILong: return "I-long";
  }
  throw DataError("invalid tag value");
}

Tag parse_tag(std::string_view text) {
  for (Tag t : kAllTags) {
    if (render_tag(t) == text) return t;
  }
  throw DataError("unknown tag '" + std::string(text) + "'");
}

std::string_view render_kind(SpanKind kind) {
  return kind == SpanKind::Short ? "short" : "long";
}

std::string to_string(const Span& span) {
  std::ostringstream os;
  os << render_kind(span.kind) << '(' << span.start << ',' << span.end << ')';
  return os.str();
}

std::string_view render_role(DatasetRole role) {
  switch (role) {
    case DatasetRole::Train: return "train";
    case DatasetRole::Dev: return "dev";
    case DatasetRole::Test: return "test";
  }
  return "train";
}

DatasetRole parse_role(std::string_view text) {
  if (text == "train") return DatasetRole::Train;
  if (text == "dev") return DatasetRole::Dev;
  if (text == "test") return DatasetRole::Test;
  throw DataError("unknown dataset role '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Validation and file I/O

namespace {

std::string where(std::string_view source, std::size_t index, std::string_view id,
                  std::string_view field) {
  std::ostringstream os;
  os << source << ": sample " << index;
  if (!id.empty()) os << " (id '" << id << "')";
  os << ": field '" << field << "': ";
  return os.str();
}

}  // namespace

void validate(const Dataset& dataset, std::string_view source) {
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const Sample& s = dataset.samples[i];
    if (s.id.empty()) throw DataError(where(source, i, s.id, "id") + "empty id");
    if (!seen.insert(s.id).second) {
      throw DataError(where(source, i, s.id, "id") + "duplicate id '" + s.id + "'");
    }
    if (s.tokens.empty()) throw DataError(where(source, i, s.id, "tokens") + "no tokens");
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      if (s.tokens[t].empty()) {
        throw DataError(where(source, i, s.id, "tokens") + "token " + std::to_string(t) +
                        " is empty");
      }
    }
    if (s.labels) {
      if (s.labels->size() != s.tokens.size()) {
        throw DataError(where(source, i, s.id, "labels") + "length mismatch: " +
                        std::to_string(s.tokens.size()) + " tokens but " +
                        std::to_string(s.labels->size()) + " labels");
      }
    } else if (dataset.role != DatasetRole::Test) {
      throw DataError(where(source, i, s.id, "labels") + "missing labels in a " +
                      std::string(render_role(dataset.role)) + " dataset");
    }
  }
}

Dataset parse_dataset_text(std::string_view text, DatasetRole role, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string(source) + ": malformed file: " + e.what());
  }
  if (!doc.is_array()) throw DataError(std::string(source) + ": malformed file: expected an array of records");

  Dataset ds;
  ds.role = role;
  ds.samples.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& rec = doc[i];
    if (!rec.is_object()) throw DataError(where(source, i, "", "record") + "not an object");
    Sample s;
    auto id = rec.find("id");
    if (id == rec.end() || !id->is_string()) {
      throw DataError(where(source, i, "", "id") + "missing or not a string");
    }
    s.id = id->get<std::string>();
    auto tokens = rec.find("tokens");
    if (tokens == rec.end() || !tokens->is_array()) {
      throw DataError(where(source, i, s.id, "tokens") + "missing or not an array");
    }
    for (const json& tok : *tokens) {
      if (!tok.is_string()) throw DataError(where(source, i, s.id, "tokens") + "non-string token");
      s.tokens.push_back(tok.get<std::string>());
    }
    auto labels = rec.find("labels");
    if (labels != rec.end() && !labels->is_null()) {
      if (!labels->is_array()) throw DataError(where(source, i, s.id, "labels") + "not an array");
      std::vector<Tag> tags;
      tags.reserve(labels->size());
      for (const json& lab : *labels) {
        if (!lab.is_string()) throw DataError(where(source, i, s.id, "labels") + "non-string label");
        try {
          tags.push_back(parse_tag(lab.get<std::string>()));
        } catch (const DataError& e) {
          throw DataError(where(source, i, s.id, "labels") + e.what());
        }
      }
      s.labels = std::move(tags);
    }
    ds.samples.push_back(std::move(s));
  }
  validate(ds, source);
  return ds;
}

Dataset parse_dataset(const std::filesystem::path& path, DatasetRole role) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset_text(buf.str(), role, path.string());
}

std::string dataset_to_json(const Dataset& dataset) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const Sample& s = dataset.samples[i];
    json rec = json::object();
    rec["id"] = s.id;
    rec["tokens"] = s.tokens;
    if (s.labels) {
      json labels = json::array();
      for (Tag t : *s.labels) labels.push_back(std::string(render_tag(t)));
      rec["labels"] = std::move(labels);
    }
    out += "  ";
    out += rec.dump();
    out += i + 1 < dataset.samples.size() ? ",\n" : "\n";
  }
  out += "]\n";
  return out;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open file for writing");
  out << dataset_to_json(dataset);
  if (!out) throw DataError(path.string() + ": write failed");
}

// ---------------------------------------------------------------------------
// BIO codec

namespace {

SpanKind kind_of(Tag t) {
  return (t == Tag::BShort || t == Tag::IShort) ? SpanKind::Short : SpanKind::Long;
}

}  // namespace

DecodeResult bio_decode_counted(std::span<const Tag> labels) {
  DecodeResult result;
  std::optional<Span> open;
  auto close = [&](std::size_t end) {
    if (open) {
      open->end = end;
      result.spans.push_back(*open);
      open.reset();
    }
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Tag t = labels[i];
    if (t == Tag::O) {
      close(i);
    } else if (t == Tag::BShort || t == Tag::BLong) {
      close(i);
      open = Span{kind_of(t), i, i};
    } else if (open && open->kind == kind_of(t)) {
      // continuation
    } else {
      close(i);
      open = Span{kind_of(t), i, i};
      ++result.repairs;
    }
  }
  close(labels.size());
  return result;
}

std::vector<Span> bio_decode(std::span<const Tag> labels) {
  return bio_decode_counted(labels).spans;
}

std::vector<Tag> bio_encode(std::span<const Span> spans, std::size_t length) {
  std::vector<Tag> tags(length, Tag::O);
  std::vector<bool> used(length, false);
  for (const Span& s : spans) {
    if (s.start >= s.end || s.end > length) {
      throw DataError("bio_encode: span " + to_string(s) + " out of range for length " +
                      std::to_string(length));
    }
    for (std::size_t i = s.start; i < s.end; ++i) {
      if (used[i]) throw DataError("bio_encode: span " + to_string(s) + " overlaps another span");
      used[i] = true;
      if (s.kind == SpanKind::Short) {
        tags[i] = i == s.start ? Tag::BShort : Tag::IShort;
      } else {
        tags[i] = i == s.start ? Tag::BLong : Tag::ILong;
      }
    }
  }
  return tags;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

void validate(const SyntheticConfig& config) {
  if (config.count == 0) throw std::invalid_argument("synthetic: sample count must be positive");
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument(std::string("synthetic: ") + name + " must lie in [0, 1]");
    }
  };
  check(config.definition_rate, "definition_rate");
  check(config.standard_fraction, "standard_fraction");
  check(config.distractor_rate, "distractor_rate");
  check(config.mention_rate, "mention_rate");
  if (config.vocab_size > content_words().size()) {
    throw std::invalid_argument("synthetic: vocab_size exceeds the built-in list of " +
                                std::to_string(content_words().size()) + " words");
  }
}

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
char upper(char c) { return static_cast<char>(std::toupper(static_cast<unsigned char>(c))); }

struct SentenceBuilder {
  std::vector<std::string> tokens;
  std::vector<Tag> labels;

  void add(std::string_view tok, Tag tag = Tag::O) {
    tokens.emplace_back(tok);
    labels.push_back(tag);
  }
};

class Generator {
 public:
  // The term inventory depends on the seed alone; sentences come from a
  // per-role stream, so train and dev built from one seed share terms but
  // never sentences.
  Generator(const SyntheticConfig& config, std::uint64_t seed)
      : config_(config), rng_(derive_seed(seed, static_cast<std::uint64_t>(config.role))) {
    const auto all = content_words();
    const std::size_t n = config.vocab_size == 0 ? all.size() : config.vocab_size;
    for (std::size_t i = 0; i < n; ++i) content_.push_back(all[i * all.size() / n]);
    Rng terms_rng(derive_seed(seed, kInventoryStream));
    for (std::size_t i = 0; i < config.term_count; ++i) {
      terms_.push_back(make_definition(terms_rng, terms_rng.chance(config.standard_fraction)));
    }
  }

  Sample next(std::size_t index) {
    SentenceBuilder out;
    const bool define = rng_.chance(config_.definition_rate);
    const bool mention = rng_.chance(config_.mention_rate);
    const bool distract = rng_.chance(config_.distractor_rate);

    if (define) {
      Definition def = terms_.empty()
                           ? make_definition(rng_, rng_.chance(config_.standard_fraction))
                           : rng_.pick(terms_);
      if (rng_.chance(0.15)) def.acronym += 's';
      // Frame words before the long form never share an initial with the
      // letter that initial matching must not find.
      const std::size_t prefix = rng_.between(1, 5);
      for (std::size_t i = 0; i < prefix; ++i) out.add(frame_word_avoiding(def.forbidden_initial));
      for (std::size_t i = 0; i < def.long_form.size(); ++i) {
        out.add(def.long_form[i], i == 0 ? Tag::BLong : Tag::ILong);
      }
      out.add("(");
      out.add(def.acronym, Tag::BShort);
      out.add(")");
      tail(out, mention, distract);
    } else {
      const std::size_t lead = rng_.between(2, 5);
      for (std::size_t i = 0; i < lead; ++i) out.add(rng_.pick(frame_words()));
      if (!mention && !distract && rng_.chance(0.5)) content_phrase(out);
      tail(out, mention, distract);
    }
    out.add(".");

    Sample s;
    s.id = config_.id_prefix + "-" + std::to_string(index);
    s.tokens = std::move(out.tokens);
    s.labels = std::move(out.labels);
    return s;
  }

 private:
  struct Definition {
    std::vector<std::string> long_form;
    std::string acronym;
    char forbidden_initial = 0;
  };

  static constexpr std::uint64_t kInventoryStream = 0x7e4d5;

  std::size_t long_form_length(Rng& rng) {
    const double u = rng.uniform();
    if (u < 0.3) return 2;
    if (u < 0.7) return 3;
    if (u < 0.9) return 4;
    return 5;
  }

  Definition make_definition(Rng& rng, bool standard) {
    const std::size_t k = long_form_length(rng);
    std::vector<std::string_view> words;
    while (words.size() < k) {
      std::string_view w = rng.pick(content_);
      if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
    }

    Definition def;
    if (!standard) {
      // The first acronym letter comes from inside the first word.
      std::vector<std::size_t> inner;
      for (std::size_t p = 1; p < words[0].size(); ++p) {
        if (std::isalpha(static_cast<unsigned char>(words[0][p])) &&
            words[0][p] != words[0][0]) {
          inner.push_back(p);
        }
      }
      def.forbidden_initial = words[0][inner[rng.below(inner.size())]];
    }

    // Optional connector between two content words; it must not carry the
    // initial that the right-to-left alignment looks for next.
    std::size_t connector_after = k;
    std::string_view connector;
    if (rng.chance(0.3)) {
      connector_after = rng.below(k - 1);
      const char needed = words[connector_after][0];
      do {
        connector = rng.pick(connector_words());
      } while (connector[0] == needed || connector[0] == def.forbidden_initial);
    }

    for (std::size_t i = 0; i < k; ++i) {
      def.long_form.emplace_back(words[i]);
      if (i == connector_after) def.long_form.emplace_back(connector);
    }
    def.acronym += upper(standard ? words[0][0] : def.forbidden_initial);
    for (std::size_t i = 1; i < k; ++i) def.acronym += upper(words[i][0]);
    return def;
  }

  std::string mentioned_acronym() {
    if (!terms_.empty()) {
      std::string a = rng_.pick(terms_).acronym;
      if (rng_.chance(0.15)) a += 's';
      return a;
    }
    std::string a;
    const std::size_t k = rng_.between(2, 5);
    for (std::size_t i = 0; i < k; ++i) a += upper(rng_.pick(content_)[0]);
    if (rng_.chance(0.15)) a += 's';
    return a;
  }

  std::string_view frame_word_avoiding(char initial) {
    std::string_view w = rng_.pick(frame_words());
    while (initial != 0 && lower(w[0]) == lower(initial)) w = rng_.pick(frame_words());
    return w;
  }

  void content_phrase(SentenceBuilder& out) {
    const std::size_t n = rng_.between(1, 3);
    for (std::size_t i = 0; i < n; ++i) out.add(rng_.pick(content_));
  }

  void distractor(SentenceBuilder& out) {
    if (rng_.chance(0.5)) content_phrase(out);
    out.add("(");
    switch (rng_.below(5)) {
      case 0:
        out.add("see");
        out.add("Table");
        out.add(std::to_string(rng_.between(1, 9)));
        break;
      case 1:
        out.add("see");
        out.add("Figure");
        out.add(std::to_string(rng_.between(1, 9)));
        break;
      case 2:
        out.add(std::to_string(rng_.between(1990, 2020)));
        break;
      case 3:
        out.add("e.g.");
        out.add(",");
        content_phrase(out);
        break;
      default:
        out.add("i.e.");
        out.add(",");
        out.add(rng_.pick(content_));
        break;
    }
    out.add(")");
  }

  void tail(SentenceBuilder& out, bool mention, bool distract) {
    const std::size_t words = rng_.between(2, 6);
    const std::size_t mention_at = rng_.below(words + 1);
    const std::size_t distract_at = rng_.below(words + 1);
    for (std::size_t i = 0; i <= words; ++i) {
      if (mention && i == mention_at) out.add(mentioned_acronym(), Tag::BShort);
      if (distract && i == distract_at) distractor(out);
      if (i < words) out.add(rng_.pick(frame_words()));
    }
  }

  const SyntheticConfig& config_;
  Rng rng_;
  std::vector<std::string_view> content_;
  std::vector<Definition> terms_;
};

}  // namespace

Dataset gen_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  validate(config);
  Generator gen(config, seed);
  Dataset ds;
  ds.role = config.role;
  ds.samples.reserve(config.count);
  for (std::size_t i = 0; i < config.count; ++i) ds.samples.push_back(gen.next(i));
  return ds;
}

SyntheticSplit gen_synthetic_split(SyntheticConfig config, std::size_t train_count,
                                   std::size_t dev_count, std::uint64_t seed) {
  SyntheticSplit split;
  config.count = train_count;
  config.id_prefix = "TR";
  config.role = DatasetRole::Train;
  split.train = gen_synthetic(config, seed);
  config.count = dev_count;
  config.id_prefix = "DEV";
  config.role = DatasetRole::Dev;
  split.dev = gen_synthetic(config, seed);
  return split;
}

}  // namespace acrotag
