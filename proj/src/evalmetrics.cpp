#include "acrotag/evalmetrics.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include "json.hpp"

namespace acrotag {

ClassScore make_class_score(SpanKind kind, std::size_t tp, std::size_t predicted,
                            std::size_t gold) {
  ClassScore c{kind, tp, predicted, gold};
  c.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
  c.recall = gold == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold);
  const double pr = c.precision + c.recall;
  c.f1 = pr == 0.0 ? 0.0 : 2.0 * c.precision * c.recall / pr;
  return c;
}

EvalReport make_report(const ClassScore& short_form, const ClassScore& long_form) {
  EvalReport r;
  r.short_form = short_form;
  r.long_form = long_form;
  r.macro_f1 = (short_form.f1 + long_form.f1) / 2.0;
  return r;
}

namespace {

struct Counts {
  std::size_t tp = 0, predicted = 0, gold = 0;
};

// Spans order by (kind, start, end); matching is a sorted merge.
void accumulate(std::vector<Span> gold, std::vector<Span> pred, Counts& shorts, Counts& longs) {
  std::sort(gold.begin(), gold.end());
  std::sort(pred.begin(), pred.end());
  for (const Span& s : gold) ++(s.kind == SpanKind::Short ? shorts : longs).gold;
  for (const Span& s : pred) ++(s.kind == SpanKind::Short ? shorts : longs).predicted;
  std::vector<Span> common;
  std::set_intersection(gold.begin(), gold.end(), pred.begin(), pred.end(),
                        std::back_inserter(common));
  for (const Span& s : common) ++(s.kind == SpanKind::Short ? shorts : longs).tp;
}

}  // namespace

EvalReport score_spans(std::span<const std::vector<Span>> gold,
                       std::span<const std::vector<Span>> pred) {
  if (gold.size() != pred.size()) {
    throw DataError("score: " + std::to_string(gold.size()) + " gold samples vs " +
                    std::to_string(pred.size()) + " predicted");
  }
  Counts shorts, longs;
  for (std::size_t i = 0; i < gold.size(); ++i) accumulate(gold[i], pred[i], shorts, longs);
  return make_report(make_class_score(SpanKind::Short, shorts.tp, shorts.predicted, shorts.gold),
                     make_class_score(SpanKind::Long, longs.tp, longs.predicted, longs.gold));
}

EvalReport score(const Dataset& gold, const Dataset& pred) {
  std::unordered_map<std::string_view, const Sample*> by_id;
  for (const Sample& s : pred.samples) by_id.emplace(s.id, &s);

  std::vector<std::vector<Span>> gold_spans, pred_spans;
  std::size_t repairs = 0;
  for (const Sample& g : gold.samples) {
    auto it = by_id.find(g.id);
    if (it == by_id.end()) {
      throw DataError("score: id '" + g.id + "' is in the gold set but not in the predictions");
    }
    const Sample& p = *it->second;
    if (!g.labels) throw DataError("score: gold sample '" + g.id + "' has no labels");
    if (!p.labels) throw DataError("score: predicted sample '" + p.id + "' has no labels");
    if (p.labels->size() != g.labels->size()) {
      throw DataError("score: sample '" + g.id + "' has " + std::to_string(g.labels->size()) +
                      " gold labels but " + std::to_string(p.labels->size()) + " predicted");
    }
    gold_spans.push_back(bio_decode(*g.labels));
    DecodeResult d = bio_decode_counted(*p.labels);
    repairs += d.repairs;
    pred_spans.push_back(std::move(d.spans));
    by_id.erase(it);
  }
  if (!by_id.empty()) {
    // Report the first extra prediction in file order.
    for (const Sample& s : pred.samples) {
      if (by_id.contains(s.id)) {
        throw DataError("score: id '" + s.id + "' is in the predictions but not in the gold set");
      }
    }
  }
  EvalReport r = score_spans(gold_spans, pred_spans);
  r.prediction_repairs = repairs;
  return r;
}

std::string format_report(const EvalReport& r) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-6s %9s %9s %9s\n", "kind", "P", "R", "F1");
  out += line;
  for (const ClassScore* c : {&r.short_form, &r.long_form}) {
    std::snprintf(line, sizeof line, "%-6s %9.4f %9.4f %9.4f\n",
                  std::string(render_kind(c->kind)).c_str(), c->precision, c->recall, c->f1);
    out += line;
  }
  std::snprintf(line, sizeof line, "macro F1 %.4f\n", r.macro_f1);
  out += line;
  return out;
}

std::string report_to_json(const EvalReport& r) {
  auto cls = [](const ClassScore& c) {
    return nlohmann::json{{"kind", std::string(render_kind(c.kind))},
                          {"true_positives", c.true_positives},
                          {"predicted_count", c.predicted_count},
                          {"gold_count", c.gold_count},
                          {"precision", c.precision},
                          {"recall", c.recall},
                          {"f1", c.f1}};
  };
  nlohmann::json doc = {{"short", cls(r.short_form)},
                        {"long", cls(r.long_form)},
                        {"macro_f1", r.macro_f1},
                        {"prediction_repairs", r.prediction_repairs}};
  return doc.dump(2) + "\n";
}

}  // namespace acrotag
