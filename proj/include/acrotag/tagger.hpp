#pragma once

// Small bidirectional self-attention encoder with a per-token softmax
// classifier over the five BIO tags.
//
//   x   = token_embedding[w] + position_embedding[t]  (+ perturbation)
//   per block:
//     a = softmax((x Wq + bq)(x Wk)^T / sqrt(d)) (x Wv + bv) Wo + bo
//     x = LN(x + a)
//     x = LN(x + tanh(x W1 + b1) W2 + b2)
//   S = softmax(x Wc + bc)

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "acrotag/autodiff.hpp"
#include "acrotag/corpus.hpp"

namespace acrotag {

using ad::Tensor;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TaggerConfig {
  std::size_t vocab_size = 2;
  std::size_t embed_dim = 64;
  std::size_t num_blocks = 2;
  std::size_t max_seq_len = 64;
  std::size_t num_classes = kNumTags;
  std::uint64_t seed = 1;

  /// Width of the feedforward hidden layer.
  std::size_t ffn_dim() const { return 2 * embed_dim; }

  bool operator==(const TaggerConfig&) const = default;
};

/// Throws ConfigError when a field is out of range.
void validate(const TaggerConfig& config);

// Lowercased token vocabulary with reserved padding and unknown ids.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  /// Ids follow the order of `tokens`; the first two must be the reserved
  /// entries.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::size_t lookup(std::string_view token) const;
  std::vector<std::size_t> encode(std::span<const std::string> tokens) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::string to_json() const;
  static Vocabulary from_json(std::string_view text, std::string_view source = "<memory>");
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string lowercase(std::string_view token);

/// Frequency-ordered vocabulary (ties broken lexicographically); tokens seen
/// fewer than `min_count` times map to the unknown id.
Vocabulary build_vocab(const Dataset& train, std::size_t min_count);

template <class T>
struct BlockWeights {
  T query_w, query_b, key_w, value_w, value_b, out_w, out_b;
  T norm1_gain, norm1_shift;
  T ff1_w, ff1_b, ff2_w, ff2_b;
  T norm2_gain, norm2_shift;

  bool operator==(const BlockWeights&) const = default;
};

template <class T>
struct Weights {
  T token_embedding;
  T position_embedding;
  std::vector<BlockWeights<T>> blocks;
  T classifier_w;
  T classifier_b;

  bool operator==(const Weights&) const = default;
};

/// Calls fn(name, member) for every tensor slot in a fixed order. Works on
/// const and non-const Weights of any element type.
template <class W, class Fn>
void for_each_named(W& w, Fn&& fn) {
  fn(std::string("token_embedding"), w.token_embedding);
  fn(std::string("position_embedding"), w.position_embedding);
  for (std::size_t i = 0; i < w.blocks.size(); ++i) {
    auto& b = w.blocks[i];
    const std::string p = "blocks." + std::to_string(i) + ".";
    fn(p + "query_w", b.query_w);
    fn(p + "query_b", b.query_b);
    fn(p + "key_w", b.key_w);
    fn(p + "value_w", b.value_w);
    fn(p + "value_b", b.value_b);
    fn(p + "out_w", b.out_w);
    fn(p + "out_b", b.out_b);
    fn(p + "norm1_gain", b.norm1_gain);
    fn(p + "norm1_shift", b.norm1_shift);
    fn(p + "ff1_w", b.ff1_w);
    fn(p + "ff1_b", b.ff1_b);
    fn(p + "ff2_w", b.ff2_w);
    fn(p + "ff2_b", b.ff2_b);
    fn(p + "norm2_gain", b.norm2_gain);
    fn(p + "norm2_shift", b.norm2_shift);
  }
  fn(std::string("classifier_w"), w.classifier_w);
  fn(std::string("classifier_b"), w.classifier_b);
}

struct TaggerParams {
  TaggerConfig config;
  Weights<Tensor> weights;

  bool operator==(const TaggerParams&) const = default;
};

/// Zero tensors with the shapes of `config`'s weights.
Weights<Tensor> zero_weights(const TaggerConfig& config);

/// Embeddings ~ U(-0.1, 0.1); matrices Glorot-uniform; biases and shifts 0;
/// norm gains 1. Deterministic in config.seed.
TaggerParams init_params(const TaggerConfig& config);

struct ForwardOutput {
  ad::Var hidden;         // T x d
  ad::Var probs;          // T x 5
  ad::Var embedding;      // token + position embedding, T x d
  ad::Var perturbation;   // leaf added to `embedding`; its gradient is dL/dx
};

/// Runs the encoder on tape variables. `weights` must hold vars of the
/// shapes given by `config`; `perturbation` is a (T x d) var added to the
/// summed input embedding.
ForwardOutput encode(const TaggerConfig& config, const Weights<ad::Var>& weights,
                     std::span<const std::size_t> token_ids, ad::Tape& tape,
                     ad::Var perturbation);

/// Binds `params` to the tape and runs the encoder. Parameter gradients
/// accumulate into `grad_sink` when given. `perturbation` (T x d) is added
/// to the summed input embedding; zeros when null.
ForwardOutput forward(const TaggerParams& params, std::span<const std::size_t> token_ids,
                      ad::Tape& tape, Weights<Tensor>* grad_sink = nullptr,
                      const Tensor* perturbation = nullptr);

/// One-hot target matrix (T x 5) for a label sequence.
Tensor one_hot(std::span<const Tag> labels);

/// Summed cross-entropy of a forward pass against gold labels.
ad::Var sequence_loss(ad::Tape& tape, const ForwardOutput& out, std::span<const Tag> labels);

/// Per-token tag distributions (T x 5) without recording gradients.
Tensor predict_probs(const TaggerParams& params, const Vocabulary& vocab,
                     std::span<const std::string> tokens);

/// Rowwise argmax; ties go to the earlier tag in O, B-short, I-short,
/// B-long, I-long order.
std::vector<Tag> argmax_tags(const Tensor& probs);

std::vector<Tag> predict_labels(const TaggerParams& params, const Vocabulary& vocab,
                                const Sample& sample);

/// Copy of `dataset` with every sample's labels replaced by predictions.
Dataset predict_dataset(const TaggerParams& params, const Vocabulary& vocab,
                        const Dataset& dataset);

struct TaggerGradCheck {
  ad::GradCheckReport report;
  /// Leaf names in report order: every weight tensor, then "input_embedding".
  std::vector<std::string> leaf_names;
};

/// Central-difference check of the summed loss of one labeled sequence
/// w.r.t. every weight tensor and the input-embedding perturbation leaf.
TaggerGradCheck check_tagger_gradients(const TaggerParams& params,
                                       std::span<const std::size_t> token_ids,
                                       std::span<const Tag> labels, double step);

// Weights file: {"format_version", "config", "arrays": [{name, shape, values}]}
// plus an optional "vocabulary" object in the vocabulary-file layout.
inline constexpr int kWeightsFormatVersion = 1;

std::string params_to_json(const TaggerParams& params, const Vocabulary* vocab = nullptr);
TaggerParams params_from_json(std::string_view text, std::string_view source = "<memory>");
void save_params(const TaggerParams& params, const std::filesystem::path& path,
                 const Vocabulary* vocab = nullptr);
TaggerParams load_params(const std::filesystem::path& path);

/// The vocabulary stored alongside the weights, if any.
std::optional<Vocabulary> embedded_vocab_from_json(std::string_view text,
                                                   std::string_view source = "<memory>");
std::optional<Vocabulary> load_embedded_vocab(const std::filesystem::path& path);

}  // namespace acrotag
