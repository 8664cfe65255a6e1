// Runs every acceptance criterion and prints one PASS/FAIL line per
// criterion. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "acrotag/advtrain.hpp"
#include "acrotag/ensemble.hpp"
#include "acrotag/evalmetrics.hpp"
#include "acrotag/rulebase.hpp"
#include "acrotag/run_config.hpp"
#include "support/brute_force.hpp"
#include "support/fixtures.hpp"

using namespace acrotag;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

void log(const std::string& s) {
  std::fprintf(stderr, "  %s\n", s.c_str());
  std::fflush(stderr);
}

// Same sample as `acrotag grad-check` with its defaults.
void gradient_check() {
  const auto t0 = Clock::now();
  TaggerConfig cfg;
  cfg.embed_dim = 16;
  cfg.num_blocks = 2;
  cfg.vocab_size = 12;
  cfg.max_seq_len = 8;
  cfg.seed = 1;
  const TaggerParams params = init_params(cfg);
  Rng rng(derive_seed(1, 7));
  std::vector<std::size_t> ids(8);
  std::vector<Tag> labels(8);
  for (std::size_t i = 0; i < 8; ++i) {
    ids[i] = rng.below(cfg.vocab_size);
    labels[i] = kAllTags[rng.below(kNumTags)];
  }
  const TaggerGradCheck check = check_tagger_gradients(params, ids, labels, 1e-5);
  const double secs = seconds_since(t0);
  bool input_leaf = !check.leaf_names.empty() && check.leaf_names.back() == "input_embedding";
  verdict(1, check.report.max_rel_error < 1e-4 && secs < 30.0 && input_leaf,
          fmt("max rel error %.3e over %.0f elements (%.0f leaves), %.1f s",
              check.report.max_rel_error, double(check.report.elements_checked),
              double(check.leaf_names.size()), secs));
}

void fgm_invariants() {
  Rng rng(2024);
  double worst_norm = 0.0, worst_scale = 0.0;
  bool zero_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    Tensor g = Tensor::matrix(1 + rng.below(16), 1 + rng.below(64));
    for (double& v : g.values()) v = rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-4, 3));
    const double eps = trial == 0 ? 1.0 : rng.uniform(0.01, 5.0);
    const Tensor r = fgm_perturbation(g, eps);
    worst_norm = std::max(worst_norm, std::abs(ad::l2_norm(r) - eps));
    for (double c : {0.5, 2.0, 10.0}) {
      Tensor cg = g;
      for (double& v : cg.values()) v *= c;
      const Tensor rc = fgm_perturbation(cg, eps);
      for (std::size_t i = 0; i < r.size(); ++i) {
        worst_scale = std::max(worst_scale, std::abs(rc[i] - r[i]) / eps);
      }
    }
    const Tensor z = fgm_perturbation(Tensor(g.shape(), 0.0), eps);
    zero_ok = zero_ok && z == Tensor(g.shape(), 0.0);
  }
  // Scaling by 10 is not exact in binary; a few ulps of eps are allowed.
  verdict(2, worst_norm <= 1e-9 && worst_scale <= 1e-14 && zero_ok,
          fmt("max | ||r|| - eps | %.2e, max scale deviation %.2e x eps, zero gradient -> zero: ",
              worst_norm, worst_scale) +
              (zero_ok ? "yes" : "no"));
}

void loss_oracle() {
  double worst = 0.0;
  Rng rng(5);
  for (std::size_t T : {1u, 4u, 64u}) {
    ad::Tape tape;
    const ad::Var p = tape.constant(Tensor::matrix(T, kNumTags, 1.0 / kNumTags));
    Tensor y = Tensor::matrix(T, kNumTags);
    for (std::size_t t = 0; t < T; ++t) y.at(t, rng.below(kNumTags)) = 1.0;
    const double loss = tape.value(ad::cross_entropy_sum(tape, p, y))[0];
    worst = std::max(worst, std::abs(loss - double(T) * std::log(5.0)));
  }
  verdict(3, worst <= 1e-12, fmt("max |L - T ln 5| = %.2e for T in {1, 4, 64}", worst));
}

bool same_report(const EvalReport& a, const EvalReport& b) {
  auto eq = [](const ClassScore& x, const ClassScore& y) {
    return x.true_positives == y.true_positives && x.predicted_count == y.predicted_count &&
           x.gold_count == y.gold_count && x.precision == y.precision && x.recall == y.recall &&
           x.f1 == y.f1;
  };
  return eq(a.short_form, b.short_form) && eq(a.long_form, b.long_form) &&
         a.macro_f1 == b.macro_f1;
}

void scorer_oracle() {
  Rng rng(77);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Dataset gold = fixtures::random_dataset(rng, 1 + rng.below(40), 20);
    Dataset pred = gold;
    for (Sample& s : pred.samples) {
      const std::size_t mode = rng.below(3);
      if (mode == 1) s.labels = fixtures::random_well_formed(rng, s.tokens.size());
      if (mode == 2) s.labels = fixtures::random_tags(rng, s.tokens.size());
    }
    if (!same_report(score(gold, pred), oracle::brute_force_score(gold, pred))) ++mismatches;
  }
  const auto one = [](const std::vector<Tag>& labels) {
    return Dataset{{Sample{"case", fixtures::case_tokens(), labels}}, DatasetRole::Dev};
  };
  const Dataset gold = one(fixtures::case_gold());
  const double without = score(gold, one(fixtures::case_without_at())).long_form.f1;
  const double with = score(gold, one(fixtures::case_with_at())).macro_f1;
  verdict(4, mismatches == 0 && without == 0.0 && with == 1.0,
          fmt("%.0f/1000 mismatches; case rows: w/o long F1 %.2f, with macro F1 %.2f",
              double(mismatches), without, with));
}

void bio_codec() {
  Rng rng(99);
  int failed = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::vector<Tag> tags = fixtures::random_well_formed(rng, rng.below(40));
    const std::vector<Span> spans = bio_decode(tags);
    if (bio_encode(spans, tags.size()) != tags) ++failed;
  }
  const std::vector<Span> expected = {{SpanKind::Long, 3, 8},
                                      {SpanKind::Short, 9, 10},
                                      {SpanKind::Short, 11, 12},
                                      {SpanKind::Short, 14, 15}};
  const bool gold_ok = bio_decode(fixtures::case_gold()) == expected;
  verdict(5, failed == 0 && gold_ok,
          fmt("%.0f/10000 roundtrip failures; case gold row decodes as expected: ", double(failed)) +
              (gold_ok ? "yes" : "no"));
}

struct Corpus {
  Dataset train, dev;
};

Corpus default_corpus(std::uint64_t seed) {
  SyntheticSplit s = gen_synthetic_split(SyntheticConfig{}, 2000, 400, seed);
  return {std::move(s.train), std::move(s.dev)};
}

TrainReport run_training(const Corpus& c, std::uint64_t seed, bool adversarial) {
  const RunConfig defaults;
  TaggerConfig tagger = defaults.tagger;
  tagger.seed = seed;
  TrainConfig tc = defaults.train;
  tc.seed = seed;
  tc.adversarial = adversarial;
  return train(c.train, c.dev, tagger, defaults.min_count, tc, defaults.fgm);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Runs independent jobs on up to hardware_concurrency threads; results keep
// job order. Each training run owns its state, so nothing is shared.
template <class T>
std::vector<T> run_parallel(std::vector<std::function<T()>> jobs) {
  const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
  std::vector<T> out;
  out.reserve(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); i += width) {
    std::vector<std::future<T>> running;
    for (std::size_t j = i; j < std::min(jobs.size(), i + width); ++j) {
      running.push_back(std::async(width > 1 ? std::launch::async : std::launch::deferred, jobs[j]));
    }
    for (auto& f : running) out.push_back(f.get());
  }
  return out;
}

double final_f1(const TrainReport& r) { return r.epochs.back().dev_macro_f1; }

}  // namespace

int main() {
  gradient_check();
  fgm_invariants();
  loss_oracle();
  scorer_oracle();
  bio_codec();

  // Seed-1 corpus: shared by criteria 6, 7, 8 and 10.
  const Corpus c1 = default_corpus(1);

  const auto t0 = Clock::now();
  std::vector<TrainReport> base;
  base.push_back(run_training(c1, 1, false));
  const double secs = seconds_since(t0);
  verdict(6, final_f1(base[0]) >= 0.90 && secs < 600.0,
          fmt("baseline dev macro F1 %.4f after 10 epochs in %.0f s", final_f1(base[0]), secs));

  // Second identical run for criterion 10; reported last.
  const TrainReport again = run_training(c1, 1, false);

  {
    std::vector<std::function<TrainReport()>> jobs;
    for (std::uint64_t seed = 2; seed <= 5; ++seed) {
      jobs.push_back([&c1, seed] { return run_training(c1, seed, false); });
    }
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      jobs.push_back([&c1, seed] { return run_training(c1, seed, true); });
    }
    std::vector<TrainReport> done = run_parallel(std::move(jobs));
    for (std::size_t i = 0; i < 4; ++i) base.push_back(std::move(done[i]));
    double sum_base = 0.0, sum_adv = 0.0, worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const double b = final_f1(base[seed - 1]), a = final_f1(done[4 + seed - 1]);
      log(fmt("seed %.0f: baseline %.4f  adversarial %.4f", double(seed), b, a));
      sum_base += b;
      sum_adv += a;
      worst = std::max(worst, b - a);
    }
    const double gain = (sum_adv - sum_base) / 5.0;
    verdict(7, gain >= 0.0 && worst <= 0.02,
            fmt("mean adversarial %.4f vs baseline %.4f (gain %+.4f), worst seed regression %.4f",
                sum_adv / 5.0, sum_base / 5.0, gain, worst));
  }

  {
    double sum_ens = 0.0, sum_members = 0.0;
    bool k1_identical = true;
    const std::vector<Corpus> corpora = {c1, default_corpus(2), default_corpus(3)};
    std::vector<std::function<TrainReport()>> jobs;
    for (std::size_t k = 1; k < corpora.size(); ++k) {
      for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        jobs.push_back([&corpora, k, seed] { return run_training(corpora[k], seed, false); });
      }
    }
    const std::vector<TrainReport> members_of_other = run_parallel(std::move(jobs));
    for (std::uint64_t corpus_seed = 1; corpus_seed <= 3; ++corpus_seed) {
      const Corpus& c = corpora[corpus_seed - 1];
      EnsembleSet set;
      double members = 0.0;
      for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const TrainReport& r = corpus_seed == 1 ? base[seed - 1]
                                                : members_of_other[(corpus_seed - 2) * 4 + seed - 1];
        set.vocab = r.vocab;
        set.members.push_back(r.final_params);
        members += final_f1(r);
      }
      members /= 4.0;
      const double ens = score(c.dev, ensemble_predict_dataset(set, c.dev)).macro_f1;
      log(fmt("corpus seed %.0f: ensemble %.4f, mean member %.4f", double(corpus_seed), ens,
              members));
      sum_ens += ens;
      sum_members += members;

      const EnsembleSet single{{set.members[0]}, set.vocab};
      const Dataset one = ensemble_predict_dataset(single, c.dev);
      const Dataset ref = predict_dataset(set.members[0], set.vocab, c.dev);
      for (std::size_t i = 0; i < one.samples.size(); ++i) {
        k1_identical = k1_identical && one.samples[i].labels == ref.samples[i].labels;
      }
    }
    verdict(8, sum_ens >= sum_members && k1_identical,
            fmt("mean over 3 corpus seeds: ensemble %.4f vs mean member %.4f; ", sum_ens / 3.0,
                sum_members / 3.0) +
                "K=1 matches single model: " + (k1_identical ? "yes" : "no"));
  }

  {
    const RuleConfig rules;
    double min_recall_std = 1.0;
    bool shape = true;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      SyntheticConfig std_only;
      std_only.count = 400;
      std_only.standard_fraction = 1.0;
      std_only.role = DatasetRole::Dev;
      const Dataset s = gen_synthetic(std_only, seed);
      min_recall_std = std::min(min_recall_std, score(s, rule_predict(s, rules)).long_form.recall);
      for (double frac : {0.3, 0.6}) {
        SyntheticConfig mixed = std_only;
        mixed.standard_fraction = frac;
        const Dataset m = gen_synthetic(mixed, seed);
        const ClassScore l = score(m, rule_predict(m, rules)).long_form;
        log(fmt("seed %.0f, standard fraction %.1f: rule long P %.4f R %.4f", double(seed), frac,
                l.precision, l.recall));
        shape = shape && l.precision >= l.recall;
      }
    }
    verdict(9, min_recall_std == 1.0 && shape,
            fmt("standard-only long recall (min over seeds) %.4f; mixed corpora precision >= "
                "recall: ",
                min_recall_std) +
                (shape ? "yes" : "no"));
  }

  {
    const std::string dir = fixtures::scratch_dir("acceptance_determinism");
    save_params(base[0].final_params, dir + "/a.json", &base[0].vocab);
    save_params(again.final_params, dir + "/b.json", &again.vocab);
    const bool weights = slurp(dir + "/a.json") == slurp(dir + "/b.json");
    const bool report = train_report_to_json(again) == train_report_to_json(base[0]);
    verdict(10, weights && report,
            std::string("weights file bytes identical: ") + (weights ? "yes" : "no") +
                ", TrainReport identical: " + (report ? "yes" : "no"));
  }

  std::printf("summary: %d of 10 criteria failed\n", failures);
  return failures ? 1 : 0;
}
