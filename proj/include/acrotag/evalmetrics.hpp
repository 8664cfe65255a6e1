#pragma once

// Boundary-exact span scoring. A predicted span counts only when a gold
// span of the same kind with the same start and end exists in the same
// sample. Counts are pooled over samples per kind; the macro F1 is the
// unweighted mean of the short-form and long-form F1.
//
// Zero-division convention: precision (recall) is 0 when nothing was
// predicted (nothing is gold); F1 is 0 when precision + recall is 0.

#include <span>
#include <string>
#include <vector>

#include "acrotag/corpus.hpp"

namespace acrotag {

struct ClassScore {
  SpanKind kind = SpanKind::Short;
  std::size_t true_positives = 0;
  std::size_t predicted_count = 0;
  std::size_t gold_count = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

ClassScore make_class_score(SpanKind kind, std::size_t true_positives,
                            std::size_t predicted_count, std::size_t gold_count);

struct EvalReport {
  ClassScore short_form;
  ClassScore long_form;
  double macro_f1 = 0.0;
  /// Ill-formed BIO tags repaired while decoding predictions (diagnostic).
  std::size_t prediction_repairs = 0;
};

EvalReport make_report(const ClassScore& short_form, const ClassScore& long_form);

/// Scores per-sample span lists; gold[i] and pred[i] describe one sample.
EvalReport score_spans(std::span<const std::vector<Span>> gold,
                       std::span<const std::vector<Span>> pred);

/// Pairs samples by id. Throws DataError when the id sets differ (naming
/// the first mismatched id) or a sample lacks labels.
EvalReport score(const Dataset& gold, const Dataset& pred);

/// Fixed-format table: kind, P, R, F1 to four decimals, then macro F1.
std::string format_report(const EvalReport& report);
std::string report_to_json(const EvalReport& report);

}  // namespace acrotag
