#include "acrotag/ensemble.hpp"

#include <algorithm>

namespace acrotag {

void validate(const EnsembleSet& set) {
  if (set.members.empty()) throw ConfigError("ensemble: needs at least one member");
  for (std::size_t k = 0; k < set.members.size(); ++k) {
    const std::size_t v = set.members[k].config.vocab_size;
    if (v != set.vocab.size()) {
      throw ConfigError("ensemble: member " + std::to_string(k) + " has vocab_size " +
                        std::to_string(v) + " but the shared vocabulary has " +
                        std::to_string(set.vocab.size()) + " entries");
    }
  }
}

Tensor average_probs(std::span<const Tensor> dists) {
  if (dists.empty()) throw ad::ShapeError("average_probs: no distributions");
  for (const Tensor& d : dists) {
    if (!d.same_shape(dists[0])) {
      throw ad::ShapeError("average_probs: shape " + ad::shape_string(d.shape()) + " vs " +
                           ad::shape_string(dists[0].shape()));
    }
  }
  Tensor mean(dists[0].shape());
  std::vector<double> column(dists.size());
  const double k = static_cast<double>(dists.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    for (std::size_t m = 0; m < dists.size(); ++m) column[m] = dists[m][i];
    std::sort(column.begin(), column.end());
    double s = 0.0;
    for (double v : column) s += v;
    mean[i] = s / k;
  }
  return mean;
}

std::vector<Tag> ensemble_predict(const EnsembleSet& set, const Sample& sample) {
  validate(set);
  std::vector<Tensor> dists;
  dists.reserve(set.members.size());
  for (const TaggerParams& m : set.members) {
    dists.push_back(predict_probs(m, set.vocab, sample.tokens));
  }
  return argmax_tags(average_probs(dists));
}

Dataset ensemble_predict_dataset(const EnsembleSet& set, const Dataset& dataset) {
  Dataset out = dataset;
  for (Sample& s : out.samples) s.labels = ensemble_predict(set, s);
  return out;
}

}  // namespace acrotag
