#include "acrotag/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace acrotag {

namespace {

constexpr ConfigKey kKeys[] = {
    {"embed_dim", "encoder width d (>= 4)"},
    {"num_blocks", "number of self-attention blocks (>= 1)"},
    {"max_seq_len", "longest accepted sentence, in tokens (>= 2)"},
    {"num_classes", "tag classes; fixed at 5"},
    {"vocab_size", "0 = size of the vocabulary built from the training set"},
    {"min_count", "training tokens seen fewer times map to <unk>"},
    {"seed", "seeds parameter initialization and the per-epoch shuffle"},
    {"epochs", "passes over the training set (>= 1)"},
    {"batch_size", "sentences per optimizer step (>= 1)"},
    {"learning_rate", "Adam step size (> 0)"},
    {"beta1", "Adam first-moment decay"},
    {"beta2", "Adam second-moment decay"},
    {"adam_epsilon", "Adam denominator guard"},
    {"adversarial", "on = FGM adversarial training, off = clean loss only"},
    {"fgm_epsilon", "L2 radius of the FGM perturbation per sentence (> 0)"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t parse_uint(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config: " + std::string(key) + " expects a non-negative integer, got '" +
                      std::string(text) + "'");
  }
  return v;
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config: " + std::string(key) + " expects a number, got '" +
                      std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  throw ConfigError("config: " + std::string(key) + " expects on or off, got '" +
                    std::string(text) + "'");
}

std::string render_double(double v) { return nlohmann::json(v).dump(); }

}  // namespace

std::string_view render_source(ValueSource source) {
  switch (source) {
    case ValueSource::Default: return "default";
    case ValueSource::File: return "file";
    case ValueSource::Flag: return "flag";
  }
  return "default";
}

std::span<const ConfigKey> config_keys() { return kKeys; }

ResolvedConfig::ResolvedConfig() {
  for (const ConfigKey& k : kKeys) sources_.emplace(std::string(k.name), ValueSource::Default);
}

void ResolvedConfig::set(std::string_view key, std::string_view value, ValueSource source) {
  RunConfig next = values_;
  TaggerConfig& t = next.tagger;
  TrainConfig& tr = next.train;
  if (key == "embed_dim") t.embed_dim = parse_uint(key, value);
  else if (key == "num_blocks") t.num_blocks = parse_uint(key, value);
  else if (key == "max_seq_len") t.max_seq_len = parse_uint(key, value);
  else if (key == "num_classes") t.num_classes = parse_uint(key, value);
  else if (key == "vocab_size") t.vocab_size = parse_uint(key, value);
  else if (key == "min_count") next.min_count = parse_uint(key, value);
  else if (key == "seed") t.seed = tr.seed = parse_uint(key, value);
  else if (key == "epochs") tr.epochs = parse_uint(key, value);
  else if (key == "batch_size") tr.batch_size = parse_uint(key, value);
  else if (key == "learning_rate") tr.learning_rate = parse_double(key, value);
  else if (key == "beta1") tr.beta1 = parse_double(key, value);
  else if (key == "beta2") tr.beta2 = parse_double(key, value);
  else if (key == "adam_epsilon") tr.adam_epsilon = parse_double(key, value);
  else if (key == "adversarial") tr.adversarial = parse_bool(key, value);
  else if (key == "fgm_epsilon") next.fgm.epsilon = parse_double(key, value);
  else throw ConfigError("config: unknown key '" + std::string(key) + "'");

  // Range checks; vocab_size is checked once the vocabulary exists.
  TaggerConfig probe = t;
  if (probe.vocab_size == 0) probe.vocab_size = 2;
  validate(probe);
  validate(tr);
  validate(next.fgm);

  values_ = next;
  sources_.find(key)->second = source;
}

std::string ResolvedConfig::get(std::string_view key) const {
  const RunConfig& v = values_;
  if (key == "embed_dim") return std::to_string(v.tagger.embed_dim);
  if (key == "num_blocks") return std::to_string(v.tagger.num_blocks);
  if (key == "max_seq_len") return std::to_string(v.tagger.max_seq_len);
  if (key == "num_classes") return std::to_string(v.tagger.num_classes);
  if (key == "vocab_size") return std::to_string(v.tagger.vocab_size);
  if (key == "min_count") return std::to_string(v.min_count);
  if (key == "seed") return std::to_string(v.train.seed);
  if (key == "epochs") return std::to_string(v.train.epochs);
  if (key == "batch_size") return std::to_string(v.train.batch_size);
  if (key == "learning_rate") return render_double(v.train.learning_rate);
  if (key == "beta1") return render_double(v.train.beta1);
  if (key == "beta2") return render_double(v.train.beta2);
  if (key == "adam_epsilon") return render_double(v.train.adam_epsilon);
  if (key == "adversarial") return v.train.adversarial ? "on" : "off";
  if (key == "fgm_epsilon") return render_double(v.fgm.epsilon);
  throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

ValueSource ResolvedConfig::source(std::string_view key) const {
  auto it = sources_.find(key);
  if (it == sources_.end()) throw ConfigError("config: unknown key '" + std::string(key) + "'");
  return it->second;
}

void ResolvedConfig::load_text(std::string_view text, std::string_view source) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(std::string(source) + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    try {
      set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)), ValueSource::File);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void ResolvedConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  load_text(buf.str(), path.string());
}

std::string ResolvedConfig::describe() const {
  std::string out;
  for (const ConfigKey& k : kKeys) {
    std::string line = "  " + std::string(k.name) + " = " + get(k.name);
    line.resize(std::max<std::size_t>(line.size(), 32), ' ');
    out += line + " (" + std::string(render_source(source(k.name))) + ")\n";
  }
  return out;
}

std::string ResolvedConfig::to_file_text() const {
  std::string out;
  for (const ConfigKey& k : kKeys) {
    out += "# " + std::string(k.doc) + "\n";
    out += std::string(k.name) + " = " + get(k.name) + "\n";
  }
  return out;
}

std::string default_config_text() { return ResolvedConfig().to_file_text(); }

}  // namespace acrotag
