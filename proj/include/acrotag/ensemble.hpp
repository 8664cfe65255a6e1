#pragma once

// Average ensembles: members' per-token tag distributions are averaged in
// probability space before the argmax.

#include <span>
#include <vector>

#include "acrotag/tagger.hpp"

namespace acrotag {

struct EnsembleSet {
  std::vector<TaggerParams> members;
  Vocabulary vocab;
};

/// Throws ConfigError when the set is empty or a member's vocabulary size
/// differs from the shared vocabulary.
void validate(const EnsembleSet& set);

/// Elementwise unweighted mean of K same-shaped matrices. Each element is
/// summed in sorted order, so the result does not depend on member order.
Tensor average_probs(std::span<const Tensor> dists);

std::vector<Tag> ensemble_predict(const EnsembleSet& set, const Sample& sample);

Dataset ensemble_predict_dataset(const EnsembleSet& set, const Dataset& dataset);

}  // namespace acrotag
