#include "acrotag/tagger.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "acrotag/rng.hpp"
#include "json.hpp"

namespace acrotag {

using nlohmann::json;

void validate(const TaggerConfig& config) {
  if (config.embed_dim < 4) throw ConfigError("tagger: embed_dim must be at least 4");
  if (config.max_seq_len < 2) throw ConfigError("tagger: max_seq_len must be at least 2");
  if (config.num_classes != kNumTags) throw ConfigError("tagger: num_classes must be 5");
  if (config.num_blocks < 1) throw ConfigError("tagger: num_blocks must be at least 1");
  if (config.vocab_size < 2) throw ConfigError("tagger: vocab_size must cover <pad> and <unk>");
}

// ---------------------------------------------------------------------------
// Vocabulary

std::string lowercase(std::string_view token) {
  std::string out(token);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Vocabulary::Vocabulary() : Vocabulary({std::string(kPadToken), std::string(kUnkToken)}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_[kPad] != kPadToken || tokens_[kUnk] != kUnkToken) {
    throw DataError("vocabulary: the first entries must be <pad> and <unk>");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw DataError("vocabulary: duplicate entry '" + tokens_[i] + "'");
    }
  }
}

std::size_t Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(lowercase(token));
  if (it == index_.end() || it->second == kPad) return kUnk;
  return it->second;
}

std::vector<std::size_t> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(lookup(t));
  return ids;
}

std::string Vocabulary::to_json() const {
  json doc = {{"format_version", 1}, {"tokens", tokens_}};
  return doc.dump(1) + "\n";
}

Vocabulary Vocabulary::from_json(std::string_view text, std::string_view source) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format_version").get<int>() != 1) {
      throw DataError(std::string(source) + ": unsupported vocabulary format version");
    }
    return Vocabulary(doc.at("tokens").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw DataError(std::string(source) + ": malformed vocabulary file: " + e.what());
  }
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open file for writing");
  out << to_json();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str(), path.string());
}

Vocabulary build_vocab(const Dataset& train, std::size_t min_count) {
  if (train.samples.empty()) throw DataError("build_vocab: empty training set");
  std::map<std::string, std::size_t> counts;
  for (const Sample& s : train.samples) {
    for (const std::string& t : s.tokens) ++counts[lowercase(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (auto& [tok, n] : counts) {
    if (n >= min_count && tok != Vocabulary::kPadToken && tok != Vocabulary::kUnkToken) {
      entries.emplace_back(tok, n);
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = {std::string(Vocabulary::kPadToken),
                                     std::string(Vocabulary::kUnkToken)};
  for (auto& e : entries) tokens.push_back(std::move(e.first));
  return Vocabulary(std::move(tokens));
}

// ---------------------------------------------------------------------------
// Parameters

Weights<Tensor> zero_weights(const TaggerConfig& c) {
  const std::size_t d = c.embed_dim, f = c.ffn_dim();
  Weights<Tensor> w;
  w.token_embedding = Tensor::matrix(c.vocab_size, d);
  w.position_embedding = Tensor::matrix(c.max_seq_len, d);
  for (std::size_t i = 0; i < c.num_blocks; ++i) {
    BlockWeights<Tensor> b;
    b.query_w = b.key_w = b.value_w = b.out_w = Tensor::matrix(d, d);
    b.query_b = b.value_b = b.out_b = Tensor({d});
    b.norm1_gain = b.norm1_shift = b.norm2_gain = b.norm2_shift = Tensor({d});
    b.ff1_w = Tensor::matrix(d, f);
    b.ff1_b = Tensor({f});
    b.ff2_w = Tensor::matrix(f, d);
    b.ff2_b = Tensor({d});
    w.blocks.push_back(std::move(b));
  }
  w.classifier_w = Tensor::matrix(d, c.num_classes);
  w.classifier_b = Tensor({c.num_classes});
  return w;
}

TaggerParams init_params(const TaggerConfig& config) {
  validate(config);
  TaggerParams p{config, zero_weights(config)};
  Rng rng(config.seed);
  for_each_named(p.weights, [&](const std::string& name, Tensor& t) {
    if (name.ends_with("embedding")) {
      for (double& v : t.values()) v = rng.uniform(-0.1, 0.1);
    } else if (name.ends_with("_gain")) {
      t.fill(1.0);
    } else if (t.rank() == 2) {
      const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
      for (double& v : t.values()) v = rng.uniform(-limit, limit);
    }
  });
  return p;
}

// ---------------------------------------------------------------------------
// Forward pass

ForwardOutput encode(const TaggerConfig& config, const Weights<ad::Var>& w,
                     std::span<const std::size_t> ids, ad::Tape& tape,
                     ad::Var perturbation) {
  using namespace ad;
  const std::size_t T = ids.size();
  if (T == 0) throw ShapeError("forward: empty token sequence");
  if (T > config.max_seq_len) {
    throw ShapeError("forward: sequence of " + std::to_string(T) + " tokens exceeds max_seq_len " +
                     std::to_string(config.max_seq_len));
  }
  for (std::size_t id : ids) {
    if (id >= config.vocab_size) {
      throw ShapeError("forward: token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(config.vocab_size));
    }
  }
  const std::size_t d = config.embed_dim;

  std::vector<std::size_t> positions(T);
  for (std::size_t t = 0; t < T; ++t) positions[t] = t;
  const Var embedding = add(tape, embed_lookup(tape, w.token_embedding, ids),
                            embed_lookup(tape, w.position_embedding, positions));

  if (tape.value(perturbation).shape() != Shape{T, d}) {
    throw ShapeError("forward: perturbation shape " +
                     shape_string(tape.value(perturbation).shape()) + " should be " +
                     shape_string({T, d}));
  }
  Var x = add(tape, embedding, perturbation);

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (const BlockWeights<Var>& b : w.blocks) {
    const Var q = add_bias(tape, matmul(tape, x, b.query_w), b.query_b);
    const Var k = matmul(tape, x, b.key_w);  // a key bias would cancel in the softmax
    const Var v = add_bias(tape, matmul(tape, x, b.value_w), b.value_b);
    const Var scores = scale(tape, matmul(tape, q, transpose(tape, k)), inv_sqrt_d);
    const Var attn = softmax_rows(tape, scores);
    const Var mixed = add_bias(tape, matmul(tape, matmul(tape, attn, v), b.out_w), b.out_b);
    x = layer_norm(tape, add(tape, x, mixed), b.norm1_gain, b.norm1_shift);

    const Var hidden = elementwise_tanh(tape, add_bias(tape, matmul(tape, x, b.ff1_w), b.ff1_b));
    const Var ff = add_bias(tape, matmul(tape, hidden, b.ff2_w), b.ff2_b);
    x = layer_norm(tape, add(tape, x, ff), b.norm2_gain, b.norm2_shift);
  }

  const Var logits = add_bias(tape, matmul(tape, x, w.classifier_w), w.classifier_b);
  return ForwardOutput{x, softmax_rows(tape, logits), embedding, perturbation};
}

ForwardOutput forward(const TaggerParams& params, std::span<const std::size_t> token_ids,
                      ad::Tape& tape, Weights<Tensor>* grad_sink, const Tensor* perturbation) {
  std::vector<Tensor*> sinks;
  if (grad_sink) {
    for_each_named(*grad_sink, [&](const std::string&, Tensor& t) { sinks.push_back(&t); });
  }
  // Var slots mirror the tensor slots; for_each_named visits both in the
  // same order.
  std::vector<ad::Var> bound;
  for_each_named(params.weights, [&](const std::string&, const Tensor& t) {
    bound.push_back(tape.param(t, grad_sink ? sinks.at(bound.size()) : nullptr));
  });
  if (grad_sink && sinks.size() != bound.size()) {
    throw ad::ShapeError("forward: gradient sink layout differs from the parameters");
  }

  Weights<ad::Var> vars;
  vars.blocks.resize(params.weights.blocks.size());
  std::size_t i = 0;
  for_each_named(vars, [&](const std::string&, ad::Var& v) { v = bound[i++]; });
  const ad::Var perturb = tape.leaf(
      perturbation ? *perturbation : Tensor::matrix(token_ids.size(), params.config.embed_dim));
  return encode(params.config, vars, token_ids, tape, perturb);
}

Tensor one_hot(std::span<const Tag> labels) {
  Tensor y = Tensor::matrix(labels.size(), kNumTags);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return y;
}

ad::Var sequence_loss(ad::Tape& tape, const ForwardOutput& out, std::span<const Tag> labels) {
  return ad::cross_entropy_sum(tape, out.probs, one_hot(labels));
}

Tensor predict_probs(const TaggerParams& params, const Vocabulary& vocab,
                     std::span<const std::string> tokens) {
  ad::Tape tape;
  const std::vector<std::size_t> ids = vocab.encode(tokens);
  const ForwardOutput out = forward(params, ids, tape);
  return tape.value(out.probs);
}

std::vector<Tag> argmax_tags(const Tensor& probs) {
  std::vector<Tag> tags(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.cols(); ++j) {
      if (probs.at(i, j) > probs.at(i, best)) best = j;
    }
    tags[i] = kAllTags[best];
  }
  return tags;
}

std::vector<Tag> predict_labels(const TaggerParams& params, const Vocabulary& vocab,
                                const Sample& sample) {
  return argmax_tags(predict_probs(params, vocab, sample.tokens));
}

Dataset predict_dataset(const TaggerParams& params, const Vocabulary& vocab,
                        const Dataset& dataset) {
  Dataset out = dataset;
  for (Sample& s : out.samples) s.labels = predict_labels(params, vocab, s);
  return out;
}

TaggerGradCheck check_tagger_gradients(const TaggerParams& params,
                                       std::span<const std::size_t> token_ids,
                                       std::span<const Tag> labels, double step) {
  if (labels.size() != token_ids.size()) {
    throw ad::ShapeError("grad check: label count differs from token count");
  }
  TaggerGradCheck out;
  std::vector<Tensor> leaves;
  for_each_named(params.weights, [&](const std::string& name, const Tensor& t) {
    out.leaf_names.push_back(name);
    leaves.push_back(t);
  });
  out.leaf_names.emplace_back("input_embedding");
  leaves.push_back(Tensor::matrix(token_ids.size(), params.config.embed_dim));

  const Tensor targets = one_hot(labels);
  const std::vector<std::size_t> ids(token_ids.begin(), token_ids.end());
  const std::size_t num_blocks = params.weights.blocks.size();
  const TaggerConfig config = params.config;
  auto loss = [&](ad::Tape& tape, std::span<const ad::Var> vars) {
    Weights<ad::Var> w;
    w.blocks.resize(num_blocks);
    std::size_t i = 0;
    for_each_named(w, [&](const std::string&, ad::Var& v) { v = vars[i++]; });
    const ForwardOutput fo = encode(config, w, ids, tape, vars[i]);
    return ad::cross_entropy_sum(tape, fo.probs, targets);
  };
  out.report = ad::grad_check(loss, leaves, step);
  return out;
}

// ---------------------------------------------------------------------------
// Weights file

namespace {

json config_to_json(const TaggerConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim},
          {"num_blocks", c.num_blocks}, {"max_seq_len", c.max_seq_len},
          {"num_classes", c.num_classes}, {"seed", c.seed}};
}

TaggerConfig config_from_json(const json& j) {
  TaggerConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.num_blocks = j.at("num_blocks").get<std::size_t>();
  c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string params_to_json(const TaggerParams& params, const Vocabulary* vocab) {
  json arrays = json::array();
  for_each_named(params.weights, [&](const std::string& name, const Tensor& t) {
    arrays.push_back({{"name", name},
                      {"shape", t.shape()},
                      {"values", std::vector<double>(t.values().begin(), t.values().end())}});
  });
  json doc = {{"format_version", kWeightsFormatVersion},
              {"config", config_to_json(params.config)},
              {"arrays", std::move(arrays)}};
  if (vocab != nullptr) doc["vocabulary"] = json::parse(vocab->to_json());
  return doc.dump() + "\n";
}

TaggerParams params_from_json(std::string_view text, std::string_view source) {
  const std::string src(source);
  try {
    const json doc = json::parse(text);
    const int version = doc.at("format_version").get<int>();
    if (version != kWeightsFormatVersion) {
      throw DataError(src + ": unsupported weights format version " + std::to_string(version));
    }
    TaggerParams p;
    p.config = config_from_json(doc.at("config"));
    validate(p.config);
    p.weights = zero_weights(p.config);

    std::map<std::string, const json*> by_name;
    for (const json& a : doc.at("arrays")) by_name[a.at("name").get<std::string>()] = &a;
    for_each_named(p.weights, [&](const std::string& name, Tensor& t) {
      auto it = by_name.find(name);
      if (it == by_name.end()) throw DataError(src + ": missing array '" + name + "'");
      const json& a = *it->second;
      const auto shape = a.at("shape").get<ad::Shape>();
      if (shape != t.shape()) {
        throw DataError(src + ": array '" + name + "' has shape " + ad::shape_string(shape) +
                        ", expected " + ad::shape_string(t.shape()));
      }
      t = Tensor(shape, a.at("values").get<std::vector<double>>());
      if (!t.all_finite()) throw DataError(src + ": array '" + name + "' has non-finite values");
      by_name.erase(it);
    });
    if (!by_name.empty()) {
      throw DataError(src + ": unexpected array '" + by_name.begin()->first + "'");
    }
    return p;
  } catch (const json::exception& e) {
    throw DataError(src + ": malformed weights file: " + e.what());
  } catch (const ad::ShapeError& e) {
    throw DataError(src + ": " + e.what());
  }
}

void save_params(const TaggerParams& params, const std::filesystem::path& path,
                 const Vocabulary* vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open file for writing");
  out << params_to_json(params, vocab);
  if (!out) throw DataError(path.string() + ": write failed");
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TaggerParams load_params(const std::filesystem::path& path) {
  return params_from_json(read_file(path), path.string());
}

std::optional<Vocabulary> embedded_vocab_from_json(std::string_view text,
                                                   std::string_view source) {
  try {
    const json doc = json::parse(text);
    if (!doc.contains("vocabulary")) return std::nullopt;
    return Vocabulary::from_json(doc.at("vocabulary").dump(), source);
  } catch (const json::exception& e) {
    throw DataError(std::string(source) + ": malformed weights file: " + e.what());
  }
}

std::optional<Vocabulary> load_embedded_vocab(const std::filesystem::path& path) {
  return embedded_vocab_from_json(read_file(path), path.string());
}

}  // namespace acrotag
