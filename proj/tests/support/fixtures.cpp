#include "support/fixtures.hpp"

#include <filesystem>

namespace fixtures {

using acrotag::Tag;

std::vector<Tag> parse_tags(const std::vector<std::string>& tags) {
  std::vector<Tag> out;
  for (const std::string& t : tags) out.push_back(acrotag::parse_tag(t));
  return out;
}

acrotag::Sample lnl_sample() {
  acrotag::Sample s;
  s.id = "TR-0";
  s.tokens = {"Existing", "methods", "for", "learning", "with", "noisy", "labels", "(", "LNL",
              ")", "primarily", "take", "a", "loss", "correction", "approach", "."};
  std::vector<Tag> labels(s.tokens.size(), Tag::O);
  labels[3] = Tag::BLong;
  labels[4] = labels[5] = labels[6] = Tag::ILong;
  labels[8] = Tag::BShort;
  s.labels = labels;
  return s;
}

std::vector<std::string> case_tokens() {
  return {"this", "study", "were", "convolutional", "and/or", "recurrent", "neural", "nets", "(",
          "CNNs", ",", "RNNs", ",", "or", "CRNNs", ")", ","};
}

std::vector<Tag> case_gold() {
  return parse_tags({"O", "O", "O", "B-long", "I-long", "I-long", "I-long", "I-long", "O",
                     "B-short", "O", "B-short", "O", "O", "B-short", "O", "O"});
}

std::vector<Tag> case_without_at() {
  return parse_tags({"O", "O", "O", "O", "O", "B-long", "I-long", "I-long", "O", "B-short", "O",
                     "B-short", "O", "O", "B-short", "O", "O"});
}

std::vector<Tag> case_with_at() { return case_gold(); }

std::vector<Tag> random_well_formed(acrotag::Rng& rng, std::size_t length) {
  std::vector<Tag> out;
  while (out.size() < length) {
    const std::size_t pick = rng.below(3);
    if (pick == 0) {
      out.push_back(Tag::O);
      continue;
    }
    const bool is_long = pick == 2;
    const std::size_t span = std::min<std::size_t>(rng.between(1, 4), length - out.size());
    out.push_back(is_long ? Tag::BLong : Tag::BShort);
    for (std::size_t i = 1; i < span; ++i) out.push_back(is_long ? Tag::ILong : Tag::IShort);
  }
  return out;
}

std::vector<Tag> random_tags(acrotag::Rng& rng, std::size_t length) {
  std::vector<Tag> out(length);
  for (Tag& t : out) t = acrotag::kAllTags[rng.below(acrotag::kNumTags)];
  return out;
}

acrotag::Dataset random_dataset(acrotag::Rng& rng, std::size_t count, std::size_t max_len) {
  acrotag::Dataset ds;
  ds.role = acrotag::DatasetRole::Dev;
  for (std::size_t i = 0; i < count; ++i) {
    acrotag::Sample s;
    s.id = "S-" + std::to_string(i);
    const std::size_t n = rng.between(1, max_len);
    for (std::size_t t = 0; t < n; ++t) s.tokens.push_back("w" + std::to_string(rng.below(20)));
    s.labels = random_well_formed(rng, n);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("acrotag-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace fixtures
