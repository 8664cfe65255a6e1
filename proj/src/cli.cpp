#include "acrotag/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "acrotag/advtrain.hpp"
#include "acrotag/corpus.hpp"
#include "acrotag/ensemble.hpp"
#include "acrotag/evalmetrics.hpp"
#include "acrotag/rng.hpp"
#include "acrotag/rulebase.hpp"
#include "acrotag/run_config.hpp"
#include "acrotag/tagger.hpp"
#include "json.hpp"

namespace acrotag {

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open file for writing");
  out << text;
  if (!out) throw DataError(path + ": write failed");
}

std::string fmt_double(double v) { return nlohmann::json(v).dump(); }

// Prints settings of commands that have no config file.
class Settings {
 public:
  explicit Settings(std::ostream& out) : out_(out) {}
  template <class T>
  Settings& add(std::string_view key, const T& value) {
    std::ostringstream os;
    if constexpr (std::is_floating_point_v<T>) {
      os << fmt_double(value);
    } else {
      os << value;
    }
    lines_.emplace_back(std::string(key), os.str());
    return *this;
  }
  void print() const {
    out_ << "resolved config:\n";
    for (const auto& [k, v] : lines_) out_ << "  " << k << " = " << v << "\n";
  }

 private:
  std::ostream& out_;
  std::vector<std::pair<std::string, std::string>> lines_;
};

struct GenDataArgs {
  std::string out;
  std::size_t count = 2000;
  std::uint64_t seed = 1;
  std::string role = "train";
  std::string id_prefix;
  SyntheticConfig synth;
  bool no_labels = false;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  SyntheticConfig cfg = a.synth;
  cfg.count = a.count;
  cfg.role = parse_role(a.role);
  cfg.id_prefix = !a.id_prefix.empty()
                      ? a.id_prefix
                      : (cfg.role == DatasetRole::Train ? "TR"
                         : cfg.role == DatasetRole::Dev ? "DEV"
                                                        : "TEST");
  Settings(out)
      .add("count", cfg.count)
      .add("seed", a.seed)
      .add("role", a.role)
      .add("id_prefix", cfg.id_prefix)
      .add("vocab_size", cfg.vocab_size)
      .add("term_count", cfg.term_count)
      .add("definition_rate", cfg.definition_rate)
      .add("standard_fraction", cfg.standard_fraction)
      .add("distractor_rate", cfg.distractor_rate)
      .add("mention_rate", cfg.mention_rate)
      .add("labels", a.no_labels ? "omitted" : "written")
      .print();
  Dataset ds = gen_synthetic(cfg, a.seed);
  if (a.no_labels) {
    if (cfg.role != DatasetRole::Test) throw DataError("gen-data: --no-labels needs --role test");
    for (Sample& s : ds.samples) s.labels.reset();
  }
  write_dataset(ds, a.out);
  out << "wrote " << ds.samples.size() << " samples to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string train, dev, out, vocab, report, config;
  std::map<std::string, std::string> overrides;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  ResolvedConfig rc;
  if (!a.config.empty()) rc.load_file(a.config);
  for (const auto& [k, v] : a.overrides) rc.set(k, v, ValueSource::Flag);
  out << "resolved config (flag > file > default):\n" << rc.describe();

  const Dataset train_set = parse_dataset(a.train, DatasetRole::Train);
  const Dataset dev_set = parse_dataset(a.dev, DatasetRole::Dev);
  const RunConfig& c = rc.values();
  out << "train: " << train_set.samples.size() << " samples, dev: " << dev_set.samples.size()
      << " samples, mode: " << (c.train.adversarial ? "adversarial (FGM)" : "baseline") << "\n";

  const TrainReport report = train(
      train_set, dev_set, c.tagger, c.min_count, c.train, c.fgm, [&](const EpochStats& e) {
        char line[160];
        std::snprintf(line, sizeof line,
                      "epoch %3zu  clean_loss %.6f  adversarial_loss %.6f  dev_macro_f1 %.4f\n",
                      e.epoch, e.clean_loss, e.adversarial_loss, e.dev_macro_f1);
        out << line << std::flush;
      });
  if (c.tagger.vocab_size != 0 && c.tagger.vocab_size != report.vocab.size()) {
    throw ConfigError("train: vocab_size " + std::to_string(c.tagger.vocab_size) +
                      " differs from the built vocabulary of " +
                      std::to_string(report.vocab.size()));
  }
  save_params(report.final_params, a.out, &report.vocab);
  if (!a.vocab.empty()) report.vocab.save(a.vocab);
  if (!a.report.empty()) write_text(a.report, train_report_to_json(report));
  out << "final epoch dev macro F1 " << fmt_double(report.epochs.back().dev_macro_f1)
      << ", best epoch " << report.best_epoch << " ("
      << fmt_double(report.best_dev_macro_f1) << ")\n";
  out << "wrote weights and vocabulary to " << a.out;
  if (!a.vocab.empty()) out << ", vocabulary also to " << a.vocab;
  out << "\n";
  return 0;
}

struct PredictArgs {
  std::vector<std::string> models;
  std::string vocab, input, out;
};

// The --vocab file when given, otherwise the vocabulary stored in `model`.
Vocabulary resolve_vocab(const std::string& vocab_path, const std::string& model) {
  if (!vocab_path.empty()) return Vocabulary::load(vocab_path);
  std::optional<Vocabulary> v = load_embedded_vocab(model);
  if (!v) throw DataError(model + ": weights file carries no vocabulary; pass --vocab");
  return std::move(*v);
}

std::string vocab_label(const std::string& vocab_path) {
  return vocab_path.empty() ? std::string("(stored in weights)") : vocab_path;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  Settings(out)
      .add("model", a.models.front())
      .add("vocab", vocab_label(a.vocab))
      .add("input", a.input)
      .print();
  const TaggerParams params = load_params(a.models.front());
  const Vocabulary vocab = resolve_vocab(a.vocab, a.models.front());
  if (params.config.vocab_size != vocab.size()) {
    throw ConfigError("predict: weights expect a vocabulary of " +
                      std::to_string(params.config.vocab_size) + " entries, " + a.vocab +
                      " has " + std::to_string(vocab.size()));
  }
  const Dataset input = parse_dataset(a.input, DatasetRole::Test);
  const Dataset pred = predict_dataset(params, vocab, input);
  write_dataset(pred, a.out);
  out << "wrote predictions for " << pred.samples.size() << " samples to " << a.out << "\n";
  return 0;
}

int cmd_ensemble_predict(const PredictArgs& a, std::ostream& out) {
  Settings s(out);
  for (const std::string& m : a.models) s.add("model", m);
  s.add("vocab", vocab_label(a.vocab)).add("input", a.input).print();
  EnsembleSet set;
  set.vocab = resolve_vocab(a.vocab, a.models.front());
  for (const std::string& m : a.models) {
    if (a.vocab.empty() && resolve_vocab(a.vocab, m) != set.vocab) {
      throw DataError(m + ": stored vocabulary differs from " + a.models.front() +
                      "'s; ensemble members must share one vocabulary");
    }
    set.members.push_back(load_params(m));
  }
  validate(set);
  const Dataset input = parse_dataset(a.input, DatasetRole::Test);
  const Dataset pred = ensemble_predict_dataset(set, input);
  write_dataset(pred, a.out);
  out << "wrote " << set.members.size() << "-member ensemble predictions for "
      << pred.samples.size() << " samples to " << a.out << "\n";
  return 0;
}

struct RuleArgs {
  std::string input, out;
  RuleConfig rules;
  std::size_t window = 0;
};

int cmd_rule_predict(const RuleArgs& a, std::ostream& out) {
  RuleConfig rules = a.rules;
  if (a.window > 0) rules.max_longform_window = a.window;
  Settings(out)
      .add("input", a.input)
      .add("min_acronym_len", rules.min_acronym_len)
      .add("max_acronym_len", rules.max_acronym_len)
      .add("max_longform_window",
           rules.max_longform_window ? std::to_string(*rules.max_longform_window)
                                     : std::string("2 + 2 * acronym length"))
      .add("min_uppercase_fraction", rules.min_uppercase_fraction)
      .print();
  validate(rules);
  const Dataset input = parse_dataset(a.input, DatasetRole::Test);
  const Dataset pred = rule_predict(input, rules);
  write_dataset(pred, a.out);
  out << "wrote rule predictions for " << pred.samples.size() << " samples to " << a.out << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string gold, pred, report;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  Settings(out).add("gold", a.gold).add("pred", a.pred).print();
  const Dataset gold = parse_dataset(a.gold, DatasetRole::Dev);
  const Dataset pred = parse_dataset(a.pred, DatasetRole::Dev);
  const EvalReport r = score(gold, pred);
  out << format_report(r);
  if (r.prediction_repairs > 0) {
    out << "note: " << r.prediction_repairs << " ill-formed predicted tags were repaired\n";
  }
  if (!a.report.empty()) write_text(a.report, report_to_json(r));
  return 0;
}

struct GradCheckArgs {
  std::size_t embed_dim = 16;
  std::size_t num_blocks = 2;
  std::size_t tokens = 8;
  std::size_t vocab_size = 12;
  std::uint64_t seed = 1;
  double step = 1e-5;
  double threshold = 1e-4;
};

int cmd_grad_check(const GradCheckArgs& a, std::ostream& out, std::ostream& err) {
  Settings(out)
      .add("embed_dim", a.embed_dim)
      .add("num_blocks", a.num_blocks)
      .add("tokens", a.tokens)
      .add("vocab_size", a.vocab_size)
      .add("seed", a.seed)
      .add("step", a.step)
      .add("threshold", a.threshold)
      .print();
  TaggerConfig cfg;
  cfg.embed_dim = a.embed_dim;
  cfg.num_blocks = a.num_blocks;
  cfg.vocab_size = a.vocab_size;
  cfg.max_seq_len = std::max<std::size_t>(a.tokens, 2);
  cfg.seed = a.seed;
  const TaggerParams params = init_params(cfg);
  Rng rng(derive_seed(a.seed, 7));
  std::vector<std::size_t> ids(a.tokens);
  std::vector<Tag> labels(a.tokens);
  for (std::size_t i = 0; i < a.tokens; ++i) {
    ids[i] = rng.below(cfg.vocab_size);
    labels[i] = kAllTags[rng.below(kNumTags)];
  }
  const TaggerGradCheck check = check_tagger_gradients(params, ids, labels, a.step);
  for (std::size_t l = 0; l < check.leaf_names.size(); ++l) {
    char line[128];
    std::snprintf(line, sizeof line, "  %-24s max rel error %.3e\n", check.leaf_names[l].c_str(),
                  check.report.leaf_max_rel_error[l]);
    out << line;
  }
  char line[128];
  std::snprintf(line, sizeof line, "checked %zu elements, max rel error %.3e (threshold %.1e)\n",
                check.report.elements_checked, check.report.max_rel_error, a.threshold);
  out << line;
  if (!(check.report.max_rel_error < a.threshold)) {
    err << "error: gradient check failed\n";
    return 1;
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Acronym and long-form tagging with FGM adversarial training", "acrotag"};
  app.require_subcommand(1);

  // gen-data
  GenDataArgs gen;
  auto* g = app.add_subcommand("gen-data", "Generate a synthetic labeled corpus");
  g->add_option("--out", gen.out, "Output dataset file")->required();
  g->add_option("--count", gen.count, "Number of sentences")->capture_default_str();
  g->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  g->add_option("--role", gen.role, "Dataset role")
      ->check(CLI::IsMember({"train", "dev", "test"}))
      ->capture_default_str();
  g->add_option("--id-prefix", gen.id_prefix, "Id prefix (default TR, DEV or TEST by role)");
  g->add_option("--vocab-size", gen.synth.vocab_size, "Long-form words used, 0 = all")
      ->capture_default_str();
  g->add_option("--term-count", gen.synth.term_count,
                "Defined terms shared across the corpus, 0 = fresh term each time")
      ->capture_default_str();
  g->add_option("--definition-rate", gen.synth.definition_rate,
                "Share of sentences defining an acronym")
      ->capture_default_str();
  g->add_option("--standard-fraction", gen.synth.standard_fraction,
                "Share of definitions whose acronym is the word initials")
      ->capture_default_str();
  g->add_option("--distractor-rate", gen.synth.distractor_rate,
                "Probability of a non-acronym parenthetical")
      ->capture_default_str();
  g->add_option("--mention-rate", gen.synth.mention_rate,
                "Probability of an acronym used without definition")
      ->capture_default_str();
  g->add_flag("--no-labels", gen.no_labels, "Omit labels (test role only)");

  // train
  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a tagger (baseline or adversarial)");
  t->add_option("--train", tr.train, "Labeled training set")->required();
  t->add_option("--dev", tr.dev, "Labeled development set")->required();
  t->add_option("--out", tr.out, "Output weights file")->required();
  t->add_option("--vocab", tr.vocab,
                 "Also write the vocabulary to this file (it is always stored in the weights)");
  t->add_option("--report", tr.report, "Optional training report (JSON)");
  t->add_option("--config", tr.config, "Config file of key = value lines");
  std::map<std::string, std::string> raw;
  const std::pair<const char*, const char*> key_flags[] = {
      {"--embed-dim", "embed_dim"},       {"--num-blocks", "num_blocks"},
      {"--max-seq-len", "max_seq_len"},   {"--vocab-size", "vocab_size"},
      {"--min-count", "min_count"},       {"--seed", "seed"},
      {"--epochs", "epochs"},             {"--batch-size", "batch_size"},
      {"--learning-rate", "learning_rate"}, {"--beta1", "beta1"},
      {"--beta2", "beta2"},               {"--adam-epsilon", "adam_epsilon"},
      {"--adversarial", "adversarial"},   {"--epsilon,--fgm-epsilon", "fgm_epsilon"},
  };
  std::vector<std::pair<CLI::Option*, std::string>> key_options;
  for (const auto& [flag, key] : key_flags) {
    std::string doc;
    for (const ConfigKey& k : config_keys()) {
      if (k.name == key) doc = std::string(k.doc);
    }
    key_options.emplace_back(t->add_option(flag, raw[key], doc), key);
  }

  // predict / ensemble-predict
  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Tag a dataset with one trained model");
  p->add_option("--model", pr.models, "Weights file")->required()->expected(1);
  p->add_option("--vocab", pr.vocab, "Vocabulary file (default: the one stored in the weights)");
  p->add_option("--input", pr.input, "Dataset to tag (labels optional)")->required();
  p->add_option("--out", pr.out, "Output prediction file")->required();

  PredictArgs en;
  auto* e = app.add_subcommand("ensemble-predict",
                               "Tag a dataset with the average of several models");
  e->add_option("--model", en.models, "Weights files (repeat or list)")->required();
  e->add_option("--vocab", en.vocab,
                "Shared vocabulary file (default: the one stored in the weights)");
  e->add_option("--input", en.input, "Dataset to tag (labels optional)")->required();
  e->add_option("--out", en.out, "Output prediction file")->required();

  // rule-predict
  RuleArgs ru;
  auto* r = app.add_subcommand("rule-predict", "Tag a dataset with the rule baseline");
  r->add_option("--input", ru.input, "Dataset to tag (labels optional)")->required();
  r->add_option("--out", ru.out, "Output prediction file")->required();
  r->add_option("--min-acronym-len", ru.rules.min_acronym_len)->capture_default_str();
  r->add_option("--max-acronym-len", ru.rules.max_acronym_len)->capture_default_str();
  r->add_option("--window", ru.window, "Tokens scanned before '(' (0 = 2 + 2 * acronym length)")
      ->capture_default_str();
  r->add_option("--min-uppercase-fraction", ru.rules.min_uppercase_fraction)
      ->capture_default_str();

  // evaluate
  EvaluateArgs ev;
  auto* v = app.add_subcommand("evaluate", "Boundary-exact macro P/R/F1 of predictions");
  v->add_option("--gold", ev.gold, "Gold dataset")->required();
  v->add_option("--pred", ev.pred, "Prediction file")->required();
  v->add_option("--report", ev.report, "Optional report file (JSON)");

  // grad-check
  GradCheckArgs gc;
  auto* c = app.add_subcommand("grad-check",
                               "Compare tagger gradients with central finite differences");
  c->add_option("--embed-dim", gc.embed_dim)->capture_default_str();
  c->add_option("--num-blocks", gc.num_blocks)->capture_default_str();
  c->add_option("--tokens", gc.tokens)->capture_default_str();
  c->add_option("--vocab-size", gc.vocab_size)->capture_default_str();
  c->add_option("--seed", gc.seed)->capture_default_str();
  c->add_option("--step", gc.step)->capture_default_str();
  c->add_option("--threshold", gc.threshold)->capture_default_str();

  if (!args.empty() && !args.front().starts_with("-")) {
    const auto subs = app.get_subcommands([](const CLI::App*) { return true; });
    const bool known = std::any_of(subs.begin(), subs.end(), [&](const CLI::App* sub) {
      return sub->get_name() == args.front();
    });
    if (!known) {
      err << "error: unknown command '" << args.front() << "' (see --help)\n";
      return 2;
    }
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << " (see --help)\n";
    return 2;
  }

  try {
    if (g->parsed()) return cmd_gen_data(gen, out);
    if (t->parsed()) {
      for (const auto& [opt, key] : key_options) {
        if (opt->count() > 0) tr.overrides[key] = raw[key];
      }
      return cmd_train(tr, out);
    }
    if (p->parsed()) return cmd_predict(pr, out);
    if (e->parsed()) return cmd_ensemble_predict(en, out);
    if (r->parsed()) return cmd_rule_predict(ru, out);
    if (v->parsed()) return cmd_evaluate(ev, out);
    if (c->parsed()) return cmd_grad_check(gc, out, err);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace acrotag
