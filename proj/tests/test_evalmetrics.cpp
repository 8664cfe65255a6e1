#include "acrotag/evalmetrics.hpp"
#include "doctest.h"
#include "support/brute_force.hpp"
#include "support/fixtures.hpp"

using namespace acrotag;

namespace {

Dataset single(const std::vector<std::string>& tokens, const std::vector<Tag>& labels,
               const std::string& id = "DEV-1629") {
  Dataset ds;
  ds.role = DatasetRole::Dev;
  ds.samples.push_back(Sample{id, tokens, labels});
  return ds;
}

void require_same(const EvalReport& a, const EvalReport& b) {
  const ClassScore* xs[] = {&a.short_form, &a.long_form};
  const ClassScore* ys[] = {&b.short_form, &b.long_form};
  for (int k = 0; k < 2; ++k) {
    REQUIRE(xs[k]->true_positives == ys[k]->true_positives);
    REQUIRE(xs[k]->predicted_count == ys[k]->predicted_count);
    REQUIRE(xs[k]->gold_count == ys[k]->gold_count);
    REQUIRE(xs[k]->precision == ys[k]->precision);
    REQUIRE(xs[k]->recall == ys[k]->recall);
    REQUIRE(xs[k]->f1 == ys[k]->f1);
  }
  REQUIRE(a.macro_f1 == b.macro_f1);
}

}  // namespace

TEST_CASE("perfect predictions score 1 everywhere") {
  Rng rng(1);
  Dataset ds = fixtures::random_dataset(rng, 30, 15);
  // Make sure both kinds occur.
  ds.samples[0].labels = fixtures::case_gold();
  ds.samples[0].tokens = fixtures::case_tokens();
  const EvalReport r = score(ds, ds);
  CHECK(r.short_form.f1 == 1.0);
  CHECK(r.long_form.f1 == 1.0);
  CHECK(r.macro_f1 == 1.0);
}

TEST_CASE("hand-computed partial match") {
  std::vector<std::string> tokens(13, "w");
  const Dataset gold = single(tokens, bio_encode(std::vector<Span>{{SpanKind::Long, 3, 8},
                                                                   {SpanKind::Short, 9, 10},
                                                                   {SpanKind::Short, 11, 12}},
                                                 13));
  const Dataset pred = single(tokens, bio_encode(std::vector<Span>{{SpanKind::Long, 3, 7},
                                                                   {SpanKind::Short, 9, 10}},
                                                 13));
  const EvalReport r = score(gold, pred);
  CHECK(r.short_form.precision == 1.0);
  CHECK(r.short_form.recall == 0.5);
  CHECK(r.short_form.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(r.long_form.precision == 0.0);
  CHECK(r.long_form.recall == 0.0);
  CHECK(r.long_form.f1 == 0.0);
  CHECK(r.macro_f1 == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("CNNs / RNNs / CRNNs rows with and without adversarial training") {
  const auto tokens = fixtures::case_tokens();
  const Dataset gold = single(tokens, fixtures::case_gold());
  const EvalReport without = score(gold, single(tokens, fixtures::case_without_at()));
  CHECK(without.long_form.f1 == 0.0);
  CHECK(without.short_form.f1 == 1.0);
  const EvalReport with = score(gold, single(tokens, fixtures::case_with_at()));
  CHECK(with.macro_f1 == 1.0);
}

TEST_CASE("zero-division conventions") {
  std::vector<std::string> tokens(4, "w");
  const Dataset gold = single(tokens, fixtures::parse_tags({"B-short", "O", "O", "O"}));
  const Dataset empty = single(tokens, std::vector<Tag>(4, Tag::O));
  const EvalReport r = score(gold, empty);
  CHECK(r.short_form.precision == 0.0);
  CHECK(r.short_form.recall == 0.0);
  // No long spans anywhere: long F1 is 0, and macro uses it.
  CHECK(r.long_form.f1 == 0.0);
  const EvalReport self = score(gold, gold);
  CHECK(self.short_form.f1 == 1.0);
  CHECK(self.long_form.f1 == 0.0);
  CHECK(self.macro_f1 == 0.5);
  require_same(self, oracle::brute_force_score(gold, gold));
}

TEST_CASE("id mismatches name the first offending id") {
  std::vector<std::string> tokens(2, "w");
  const Dataset gold = single(tokens, std::vector<Tag>(2, Tag::O), "A");
  const Dataset other = single(tokens, std::vector<Tag>(2, Tag::O), "B");
  CHECK_THROWS_WITH_AS(score(gold, other), doctest::Contains("'A'"), DataError);
  Dataset extra = gold;
  extra.samples.push_back(Sample{"C", tokens, std::vector<Tag>(2, Tag::O)});
  CHECK_THROWS_WITH_AS(score(gold, extra), doctest::Contains("'C'"), DataError);
  Dataset unlabeled = gold;
  unlabeled.samples[0].labels.reset();
  CHECK_THROWS_AS(score(gold, unlabeled), DataError);
  Dataset short_pred = gold;
  short_pred.samples[0].labels->pop_back();
  CHECK_THROWS_AS(score(gold, short_pred), DataError);
}

TEST_CASE("property: score equals the brute-force oracle") {
  Rng rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    const Dataset gold = fixtures::random_dataset(rng, 50, 20);
    Dataset pred = gold;
    for (Sample& s : pred.samples) {
      // Mix exact copies, perturbations and arbitrary (ill-formed) tags.
      const std::size_t mode = rng.below(3);
      if (mode == 1) s.labels = fixtures::random_well_formed(rng, s.tokens.size());
      if (mode == 2) s.labels = fixtures::random_tags(rng, s.tokens.size());
    }
    require_same(score(gold, pred), oracle::brute_force_score(gold, pred));
  }
}

TEST_CASE("property: scores are order-invariant and bounded") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const Dataset gold = fixtures::random_dataset(rng, 20, 12);
    Dataset pred = gold;
    for (Sample& s : pred.samples) s.labels = fixtures::random_tags(rng, s.tokens.size());
    const EvalReport r = score(gold, pred);
    Dataset shuffled = pred;
    rng.shuffle(std::span<Sample>(shuffled.samples));
    require_same(r, score(gold, shuffled));
    for (double v : {r.short_form.precision, r.short_form.recall, r.short_form.f1,
                     r.long_form.precision, r.long_form.recall, r.long_form.f1, r.macro_f1}) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
    }
    REQUIRE(r.macro_f1 == (r.short_form.f1 + r.long_form.f1) / 2.0);
    REQUIRE(r.short_form.true_positives <= std::min(r.short_form.predicted_count, r.short_form.gold_count));
  }
}

TEST_CASE("property: adding a matched span never lowers P, R or F1") {
  Rng rng(43);
  for (int trial = 0; trial < 300; ++trial) {
    Dataset gold = fixtures::random_dataset(rng, 5, 10);
    Dataset pred = gold;
    for (Sample& s : pred.samples) s.labels = fixtures::random_well_formed(rng, s.tokens.size());
    const EvalReport before = score(gold, pred);
    // Append two tokens to one sample and mark a matched span there.
    const std::size_t i = rng.below(gold.samples.size());
    const SpanKind kind = rng.chance(0.5) ? SpanKind::Short : SpanKind::Long;
    const Tag b = kind == SpanKind::Short ? Tag::BShort : Tag::BLong;
    for (Dataset* d : {&gold, &pred}) {
      d->samples[i].tokens.push_back("x");
      d->samples[i].tokens.push_back("y");
      d->samples[i].labels->push_back(Tag::O);
      d->samples[i].labels->push_back(b);
    }
    const EvalReport after = score(gold, pred);
    const ClassScore& x = kind == SpanKind::Short ? before.short_form : before.long_form;
    const ClassScore& y = kind == SpanKind::Short ? after.short_form : after.long_form;
    REQUIRE(y.precision >= x.precision);
    REQUIRE(y.recall >= x.recall);
    REQUIRE(y.f1 >= x.f1);
  }
}

TEST_CASE("repairs in predictions are counted") {
  std::vector<std::string> tokens(4, "w");
  const Dataset gold = single(tokens, fixtures::parse_tags({"O", "B-short", "I-short", "O"}));
  const Dataset pred = single(tokens, fixtures::parse_tags({"O", "I-short", "I-short", "O"}));
  const EvalReport r = score(gold, pred);
  CHECK(r.prediction_repairs == 1);
  CHECK(r.short_form.f1 == 1.0);
}

TEST_CASE("report formatting") {
  const EvalReport r = make_report(make_class_score(SpanKind::Short, 1, 1, 2),
                                   make_class_score(SpanKind::Long, 0, 0, 0));
  const std::string text = format_report(r);
  CHECK(text ==
        "kind           P         R        F1\n"
        "short     1.0000    0.5000    0.6667\n"
        "long      0.0000    0.0000    0.0000\n"
        "macro F1 0.3333\n");
  const std::string json = report_to_json(r);
  CHECK(json.find("\"macro_f1\"") != std::string::npos);
}
