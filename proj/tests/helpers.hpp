#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rulefilter/core.hpp"
#include "rulefilter/stats.hpp"
#include "rulefilter/synthetic.hpp"

namespace testing {

using namespace rulefilter;

inline Rule make_rule(RuleId id, const std::string& pattern, Label label) {
  return Rule{id, tokenize(pattern), label, RuleOrigin::external};
}

inline Instance make_instance(InstanceId id, const std::string& text, Label gold = kAbstain) {
  return Instance::from_text(id, text, gold == kAbstain ? std::nullopt : std::optional<Label>(gold));
}

// Random symmetric, nonnegative, zero-diagonal matrix with entries in [0, 1).
inline SimilarityMatrix random_similarity(std::size_t n, std::mt19937_64& rng) {
  SimilarityMatrix s(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) s.set_pair(i, j, uniform_unit(rng));
  }
  return s;
}

inline std::vector<RuleId> iota_ids(std::size_t n) {
  std::vector<RuleId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<RuleId>(i);
  return ids;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rulefilter_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing

namespace testing {

// Rules "r<c>" with a fixed random label, instances containing each rule's
// token with probability density. cols[c][i] is recorded at generation time.
struct RandomFirings {
  RuleSet rules;
  std::vector<Instance> docs;
  std::vector<std::vector<Label>> cols;
  std::vector<Label> gold;
};

inline RandomFirings random_firings(std::size_t n, std::size_t m, int classes,
                                    std::mt19937_64& rng) {
  RandomFirings out;
  const double density = 0.1 + 0.6 * uniform_unit(rng);
  std::vector<Label> labels;
  for (std::size_t c = 0; c < m; ++c) {
    labels.push_back(static_cast<Label>(uniform_index(rng, classes)) + 1);
    out.rules.add(make_rule(static_cast<RuleId>(c), "r" + std::to_string(c), labels.back()));
  }
  out.cols.assign(m, std::vector<Label>(n, kAbstain));
  for (std::size_t i = 0; i < n; ++i) {
    std::string text = "doc";
    for (std::size_t c = 0; c < m; ++c) {
      if (uniform_unit(rng) < density) {
        text += " r" + std::to_string(c);
        out.cols[c][i] = labels[c];
      }
    }
    out.gold.push_back(static_cast<Label>(uniform_index(rng, classes)) + 1);
    out.docs.push_back(make_instance(static_cast<InstanceId>(i), text, out.gold.back()));
  }
  return out;
}

}  // namespace testing
