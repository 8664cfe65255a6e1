#include "support/brute_force.hpp"

#include <stdexcept>

namespace oracle {

std::vector<RawSpan> decode_strings(const std::vector<std::string>& tags) {
  std::vector<RawSpan> spans;
  bool open = false;
  RawSpan cur;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& t = tags[i];
    const bool is_long = t.size() > 2 && t.substr(2) == "long";
    const bool begin = t[0] == 'B';
    const bool inside = t[0] == 'I';
    if (inside && open && cur.is_long == is_long) {
      cur.last = i;
      continue;
    }
    if (open) spans.push_back(cur);
    open = begin || inside;
    if (open) cur = RawSpan{is_long, i, i};
  }
  if (open) spans.push_back(cur);
  return spans;
}

namespace {

std::vector<std::string> as_strings(const std::vector<acrotag::Tag>& labels) {
  std::vector<std::string> out;
  for (acrotag::Tag t : labels) {
    switch (t) {
      case acrotag::Tag::O: out.push_back("O"); break;
      case acrotag::Tag::BShort: out.push_back("B-short"); break;
      case acrotag::Tag::IShort: out.push_back("I-short"); break;
      case acrotag::Tag::BLong: out.push_back("B-long"); break;
      case acrotag::Tag::ILong: out.push_back("I-long"); break;
    }
  }
  return out;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

acrotag::EvalReport brute_force_score(const acrotag::Dataset& gold, const acrotag::Dataset& pred) {
  if (gold.samples.size() != pred.samples.size()) throw std::runtime_error("oracle: size mismatch");
  std::size_t tp[2] = {0, 0}, npred[2] = {0, 0}, ngold[2] = {0, 0};
  for (const acrotag::Sample& g : gold.samples) {
    const acrotag::Sample* p = nullptr;
    for (const acrotag::Sample& cand : pred.samples) {
      if (cand.id == g.id) p = &cand;
    }
    if (p == nullptr) throw std::runtime_error("oracle: id mismatch");
    const auto gs = decode_strings(as_strings(*g.labels));
    const auto ps = decode_strings(as_strings(*p->labels));
    for (const RawSpan& a : gs) ++ngold[a.is_long];
    for (const RawSpan& b : ps) {
      ++npred[b.is_long];
      for (const RawSpan& a : gs) {
        if (a.is_long == b.is_long && a.first == b.first && a.last == b.last) ++tp[b.is_long];
      }
    }
  }
  acrotag::EvalReport r;
  acrotag::ClassScore* cls[2] = {&r.short_form, &r.long_form};
  for (int k = 0; k < 2; ++k) {
    acrotag::ClassScore& c = *cls[k];
    c.kind = k == 0 ? acrotag::SpanKind::Short : acrotag::SpanKind::Long;
    c.true_positives = tp[k];
    c.predicted_count = npred[k];
    c.gold_count = ngold[k];
    c.precision = ratio(tp[k], npred[k]);
    c.recall = ratio(tp[k], ngold[k]);
    c.f1 = c.precision + c.recall == 0.0
               ? 0.0
               : 2.0 * c.precision * c.recall / (c.precision + c.recall);
  }
  r.macro_f1 = (r.short_form.f1 + r.long_form.f1) / 2.0;
  return r;
}

}  // namespace oracle
