#pragma once

// Training loops for the tagger: plain cross-entropy minimization and FGM
// adversarial training.
//
// In adversarial mode every sequence of a batch contributes two passes:
//   1. clean pass: L(theta, x, y), backward; g = dL/dx at the summed
//      token+position embedding x
//   2. r_adv = epsilon * g / ||g||_2, with the norm over the whole (T x d)
//      embedding of that sequence
//   3. adversarial pass: L(theta, x + r_adv, y), backward
// The parameter gradient is the sum of both passes. The perturbation is an
// input to the second pass only; the embedding tables are never modified.
//
// Batch reduction: gradients and reported losses are divided by the number
// of tokens in the batch (per-sentence losses are sums).

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "acrotag/corpus.hpp"
#include "acrotag/tagger.hpp"

namespace acrotag {

/// A non-finite loss or gradient during training.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FgmConfig {
  double epsilon = 1.0;
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 1;
  bool adversarial = false;
};

void validate(const FgmConfig& config);
void validate(const TrainConfig& config);

/// Gradients below this norm yield a zero perturbation.
inline constexpr double kGradientNormFloor = 1e-12;

/// epsilon * g / ||g||_2, or zeros when ||g||_2 < kGradientNormFloor.
Tensor fgm_perturbation(const Tensor& g, double epsilon);

/// A sample prepared for training: vocabulary ids plus gold tags.
struct EncodedSample {
  const std::string* id = nullptr;
  std::vector<std::size_t> token_ids;
  std::vector<Tag> labels;
};

std::vector<EncodedSample> encode_dataset(const Dataset& dataset, const Vocabulary& vocab);

struct BatchGradients {
  Weights<Tensor> grads;
  double clean_loss = 0.0;        // token mean over the batch
  double adversarial_loss = 0.0;  // token mean; 0 in baseline mode
  std::size_t tokens = 0;
};

/// Gradient of the batch objective at `params` without updating anything.
/// `fgm` null selects baseline mode.
BatchGradients compute_gradients(const TaggerParams& params, std::span<const EncodedSample> batch,
                                 const FgmConfig* fgm);

/// Adaptive moment estimation with bias correction, no weight decay.
class AdamOptimizer {
 public:
  AdamOptimizer(const TaggerConfig& config, const TrainConfig& train);

  void step(Weights<Tensor>& params, const Weights<Tensor>& grads);
  std::size_t steps() const { return step_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t step_ = 0;
  Weights<Tensor> m_, v_;
};

struct StepLosses {
  double clean_loss = 0.0;
  double adversarial_loss = 0.0;
};

/// One optimizer update on one batch. Adversarial mode follows
/// train.adversarial; `fgm` supplies epsilon.
StepLosses train_step(TaggerParams& params, AdamOptimizer& optimizer,
                      std::span<const EncodedSample> batch, const TrainConfig& train,
                      const FgmConfig& fgm);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double clean_loss = 0.0;
  double adversarial_loss = 0.0;
  double dev_macro_f1 = 0.0;

  bool operator==(const EpochStats&) const = default;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // 1-based epoch with the highest dev macro F1
  double best_dev_macro_f1 = 0.0;
  Vocabulary vocab;
  TaggerParams final_params;

  bool operator==(const TrainReport&) const = default;
};

/// Optional per-epoch progress callback.
using EpochCallback = std::function<void(const EpochStats&)>;

/// Builds the vocabulary from `train`, initializes the tagger from
/// `tagger` (vocab_size is overwritten) and runs train.epochs epochs with
/// a seeded per-epoch shuffle. Returns the final-epoch parameters.
TrainReport train(const Dataset& train_set, const Dataset& dev_set, TaggerConfig tagger,
                  std::size_t min_count, const TrainConfig& train, const FgmConfig& fgm,
                  const EpochCallback& on_epoch = {});

std::string train_report_to_json(const TrainReport& report);

}  // namespace acrotag
