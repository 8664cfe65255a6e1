#include "acrotag/advtrain.hpp"

#include <cmath>
#include <numeric>

#include "acrotag/evalmetrics.hpp"
#include "acrotag/rng.hpp"
#include "json.hpp"

namespace acrotag {

void validate(const FgmConfig& config) {
  if (!(config.epsilon > 0.0) || !std::isfinite(config.epsilon)) {
    throw ConfigError("fgm: epsilon must be positive");
  }
}

void validate(const TrainConfig& c) {
  if (c.epochs < 1) throw ConfigError("train: epochs must be at least 1");
  if (c.batch_size < 1) throw ConfigError("train: batch_size must be at least 1");
  if (!(c.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0)) {
    throw ConfigError("train: beta1 and beta2 must lie in [0, 1)");
  }
  if (!(c.adam_epsilon > 0.0)) throw ConfigError("train: adam_epsilon must be positive");
}

Tensor fgm_perturbation(const Tensor& g, double epsilon) {
  if (!g.all_finite()) throw TrainingError("fgm: gradient has non-finite entries");
  const double norm = ad::l2_norm(g);
  Tensor r(g.shape());
  if (norm < kGradientNormFloor) return r;
  const double factor = epsilon / norm;
  for (std::size_t i = 0; i < g.size(); ++i) r[i] = factor * g[i];
  return r;
}

std::vector<EncodedSample> encode_dataset(const Dataset& dataset, const Vocabulary& vocab) {
  std::vector<EncodedSample> out;
  out.reserve(dataset.samples.size());
  for (const Sample& s : dataset.samples) {
    if (!s.labels) throw DataError("train: sample '" + s.id + "' has no labels");
    out.push_back(EncodedSample{&s.id, vocab.encode(s.tokens), *s.labels});
  }
  return out;
}

BatchGradients compute_gradients(const TaggerParams& params, std::span<const EncodedSample> batch,
                                 const FgmConfig* fgm) {
  if (batch.empty()) throw ConfigError("train: empty batch");
  BatchGradients out;
  out.grads = zero_weights(params.config);
  for (const EncodedSample& s : batch) out.tokens += s.token_ids.size();
  const double seed = 1.0 / static_cast<double>(out.tokens);

  double clean = 0.0, adversarial = 0.0;
  for (const EncodedSample& s : batch) {
    try {
      ad::Tape tape;
      const ForwardOutput fo = forward(params, s.token_ids, tape, &out.grads);
      const ad::Var loss = sequence_loss(tape, fo, s.labels);
      clean += tape.value(loss)[0];
      tape.backward(loss, seed);
      if (!fgm) continue;

      const Tensor r = fgm_perturbation(tape.grad(fo.perturbation), fgm->epsilon);
      ad::Tape adv_tape;
      const ForwardOutput fa = forward(params, s.token_ids, adv_tape, &out.grads, &r);
      const ad::Var adv_loss = sequence_loss(adv_tape, fa, s.labels);
      adversarial += adv_tape.value(adv_loss)[0];
      adv_tape.backward(adv_loss, seed);
    } catch (const ad::NumericError& e) {
      throw TrainingError("train: non-finite loss on sample '" + (s.id ? *s.id : "?") +
                          "': " + e.what());
    } catch (const TrainingError& e) {
      throw TrainingError("train: sample '" + (s.id ? *s.id : "?") + "': " + e.what());
    }
  }
  for_each_named(out.grads, [&](const std::string& name, const Tensor& g) {
    if (!g.all_finite()) throw TrainingError("train: non-finite gradient for " + name);
  });
  out.clean_loss = clean * seed;
  out.adversarial_loss = adversarial * seed;
  return out;
}

AdamOptimizer::AdamOptimizer(const TaggerConfig& config, const TrainConfig& train)
    : lr_(train.learning_rate),
      beta1_(train.beta1),
      beta2_(train.beta2),
      eps_(train.adam_epsilon),
      m_(zero_weights(config)),
      v_(zero_weights(config)) {}

void AdamOptimizer::step(Weights<Tensor>& params, const Weights<Tensor>& grads) {
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));

  std::vector<Tensor*> p, m, v;
  std::vector<const Tensor*> g;
  for_each_named(params, [&](const std::string&, Tensor& t) { p.push_back(&t); });
  for_each_named(grads, [&](const std::string&, const Tensor& t) { g.push_back(&t); });
  for_each_named(m_, [&](const std::string&, Tensor& t) { m.push_back(&t); });
  for_each_named(v_, [&](const std::string&, Tensor& t) { v.push_back(&t); });
  if (p.size() != g.size() || p.size() != m.size()) {
    throw ad::ShapeError("adam: parameter and gradient layouts differ");
  }
  for (std::size_t k = 0; k < p.size(); ++k) {
    Tensor& pk = *p[k];
    const Tensor& gk = *g[k];
    Tensor& mk = *m[k];
    Tensor& vk = *v[k];
    if (!pk.same_shape(gk)) throw ad::ShapeError("adam: gradient shape differs from parameter");
    for (std::size_t i = 0; i < pk.size(); ++i) {
      mk[i] = beta1_ * mk[i] + (1.0 - beta1_) * gk[i];
      vk[i] = beta2_ * vk[i] + (1.0 - beta2_) * gk[i] * gk[i];
      const double mhat = mk[i] / c1;
      const double vhat = vk[i] / c2;
      pk[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

StepLosses train_step(TaggerParams& params, AdamOptimizer& optimizer,
                      std::span<const EncodedSample> batch, const TrainConfig& train,
                      const FgmConfig& fgm) {
  const BatchGradients bg = compute_gradients(params, batch, train.adversarial ? &fgm : nullptr);
  optimizer.step(params.weights, bg.grads);
  return StepLosses{bg.clean_loss, bg.adversarial_loss};
}

TrainReport train(const Dataset& train_set, const Dataset& dev_set, TaggerConfig tagger,
                  std::size_t min_count, const TrainConfig& train, const FgmConfig& fgm,
                  const EpochCallback& on_epoch) {
  validate(train);
  if (train.adversarial) validate(fgm);
  for (const Sample& s : dev_set.samples) {
    if (!s.labels) throw DataError("train: dev sample '" + s.id + "' has no labels");
  }

  TrainReport report;
  report.vocab = build_vocab(train_set, min_count);
  tagger.vocab_size = report.vocab.size();
  TaggerParams params = init_params(tagger);
  const std::vector<EncodedSample> encoded = encode_dataset(train_set, report.vocab);

  AdamOptimizer optimizer(tagger, train);
  Rng shuffle_rng(derive_seed(train.seed, 0x5eed));
  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EncodedSample> batch;

  for (std::size_t epoch = 1; epoch <= train.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double clean_sum = 0.0, adv_sum = 0.0;
    std::size_t tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += train.batch_size) {
      batch.clear();
      std::size_t batch_tokens = 0;
      for (std::size_t i = start; i < std::min(order.size(), start + train.batch_size); ++i) {
        batch.push_back(encoded[order[i]]);
        batch_tokens += encoded[order[i]].token_ids.size();
      }
      const StepLosses losses = train_step(params, optimizer, batch, train, fgm);
      clean_sum += losses.clean_loss * static_cast<double>(batch_tokens);
      adv_sum += losses.adversarial_loss * static_cast<double>(batch_tokens);
      tokens += batch_tokens;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.clean_loss = clean_sum / static_cast<double>(tokens);
    stats.adversarial_loss = adv_sum / static_cast<double>(tokens);
    stats.dev_macro_f1 = dev_set.samples.empty()
                             ? 0.0
                             : score(dev_set, predict_dataset(params, report.vocab, dev_set)).macro_f1;
    if (report.epochs.empty() || stats.dev_macro_f1 > report.best_dev_macro_f1) {
      report.best_epoch = epoch;
      report.best_dev_macro_f1 = stats.dev_macro_f1;
    }
    report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  report.final_params = std::move(params);
  return report;
}

std::string train_report_to_json(const TrainReport& report) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const EpochStats& e : report.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"clean_loss", e.clean_loss},
                      {"adversarial_loss", e.adversarial_loss},
                      {"dev_macro_f1", e.dev_macro_f1}});
  }
  nlohmann::json doc = {{"epochs", std::move(epochs)},
                        {"best_epoch", report.best_epoch},
                        {"best_dev_macro_f1", report.best_dev_macro_f1},
                        {"vocab_size", report.vocab.size()}};
  return doc.dump(2) + "\n";
}

}  // namespace acrotag
