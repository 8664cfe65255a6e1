#include <cmath>

#include "acrotag/ensemble.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace acrotag;

namespace {

Tensor random_dist(Rng& rng, std::size_t rows) {
  Tensor t = Tensor::matrix(rows, kNumTags);
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < kNumTags; ++c) sum += t.at(r, c) = rng.uniform(0.01, 1.0);
    for (std::size_t c = 0; c < kNumTags; ++c) t.at(r, c) /= sum;
  }
  return t;
}

TaggerConfig small_config(std::uint64_t seed, std::size_t vocab_size) {
  TaggerConfig c;
  c.vocab_size = vocab_size;
  c.embed_dim = 8;
  c.num_blocks = 1;
  c.max_seq_len = 32;
  c.seed = seed;
  return c;
}

Vocabulary lnl_vocab() {
  Dataset ds;
  ds.samples.push_back(fixtures::lnl_sample());
  return build_vocab(ds, 1);
}

}  // namespace

TEST_CASE("mean of two hand-written distributions") {
  const std::vector<Tensor> dists = {Tensor({1, 2}, {0.6, 0.4}), Tensor({1, 2}, {0.2, 0.8})};
  const Tensor avg = average_probs(dists);
  CHECK(avg[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(avg[1] == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("K identical members return that matrix") {
  Rng rng(3);
  const Tensor d = random_dist(rng, 6);
  for (std::size_t k = 1; k <= 5; ++k) {
    const std::vector<Tensor> dists(k, d);
    const Tensor avg = average_probs(dists);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(avg[i] == doctest::Approx(d[i]).epsilon(1e-15));
  }
}

TEST_CASE("average_probs rejects empty or mismatched input") {
  CHECK_THROWS(average_probs(std::vector<Tensor>{}));
  const std::vector<Tensor> bad = {Tensor::matrix(2, 5, 0.2), Tensor::matrix(3, 5, 0.2)};
  CHECK_THROWS_AS(average_probs(bad), ad::ShapeError);
}

TEST_CASE("property: averaging is order-invariant and row-stochastic") {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = rng.between(1, 6);
    const std::size_t rows = rng.between(1, 10);
    std::vector<Tensor> dists;
    for (std::size_t i = 0; i < k; ++i) dists.push_back(random_dist(rng, rows));
    const Tensor avg = average_probs(dists);
    rng.shuffle(std::span<Tensor>(dists));
    REQUIRE(average_probs(dists) == avg);
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < kNumTags; ++c) {
        double lo = 1.0, hi = 0.0;
        for (const Tensor& d : dists) {
          lo = std::min(lo, d.at(r, c));
          hi = std::max(hi, d.at(r, c));
        }
        REQUIRE(avg.at(r, c) >= lo - 1e-15);
        REQUIRE(avg.at(r, c) <= hi + 1e-15);
        sum += avg.at(r, c);
      }
      REQUIRE(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("a single-member ensemble matches the member") {
  const Vocabulary vocab = lnl_vocab();
  const Sample s = fixtures::lnl_sample();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    EnsembleSet set{{init_params(small_config(seed, vocab.size()))}, vocab};
    CHECK(ensemble_predict(set, s) == predict_labels(set.members[0], vocab, s));
  }
}

TEST_CASE("unanimous members are followed") {
  const Vocabulary vocab = lnl_vocab();
  const Sample s = fixtures::lnl_sample();
  EnsembleSet set{{}, vocab};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    set.members.push_back(init_params(small_config(seed, vocab.size())));
    // Bias the classifier so every member prefers B-long everywhere.
    set.members.back().weights.classifier_b[static_cast<std::size_t>(Tag::BLong)] = 50.0;
  }
  const std::vector<Tag> out = ensemble_predict(set, s);
  CHECK(out == std::vector<Tag>(s.tokens.size(), Tag::BLong));
  const Dataset ds = ensemble_predict_dataset(set, Dataset{{s}, DatasetRole::Dev});
  CHECK(*ds.samples[0].labels == out);
}

TEST_CASE("ensemble validation") {
  const Vocabulary vocab = lnl_vocab();
  EnsembleSet empty{{}, vocab};
  CHECK_THROWS_AS(validate(empty), ConfigError);
  EnsembleSet mismatch{{init_params(small_config(1, vocab.size() + 3))}, vocab};
  CHECK_THROWS_AS(validate(mismatch), ConfigError);
  EnsembleSet ok{{init_params(small_config(1, vocab.size())),
                  init_params(small_config(2, vocab.size()))},
                 vocab};
  CHECK_NOTHROW(validate(ok));
}
