#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rulefilter {

// Class labels run 1..K; 0 is the abstain symbol.
using Label = std::int32_t;
inline constexpr Label kAbstain = 0;

using InstanceId = std::int64_t;
using RuleId = std::int64_t;

// Lowercases and splits on every run of non-alphanumeric characters.
std::vector<std::string> tokenize(std::string_view text);

struct Instance {
  InstanceId id = 0;
  std::string text;
  std::vector<std::string> tokens;
  std::optional<Label> gold;

  static Instance from_text(InstanceId id, std::string text,
                            std::optional<Label> gold = std::nullopt);
};

struct Corpus {
  std::vector<Instance> labeled;
  std::vector<Instance> unlabeled;
  std::vector<Instance> validation;
  std::vector<Instance> test;
  int num_classes = 2;

  // Throws DataError if partitions overlap, a gold label is missing where
  // required, or a label falls outside 1..num_classes.
  void validate() const;
};

std::vector<Label> gold_labels(std::span<const Instance> instances);

// Largest gold label seen, at least 2.
int infer_num_classes(std::span<const Instance> instances);

enum class RuleOrigin { stump, classifier_weight, external };

std::string_view to_string(RuleOrigin origin);
RuleOrigin parse_rule_origin(std::string_view name);

struct Rule {
  RuleId id = 0;
  std::vector<std::string> pattern;
  Label label = kAbstain;
  RuleOrigin origin = RuleOrigin::external;

  std::string pattern_text() const;  // tokens joined by single spaces
};

// Ordered rules with unique ids. Used both for the candidate set and for
// committed subsets of it.
class RuleSet {
 public:
  RuleSet() = default;
  explicit RuleSet(std::vector<Rule> rules);

  void add(Rule rule);

  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }
  const Rule& operator[](std::size_t i) const { return rules_[i]; }
  auto begin() const { return rules_.begin(); }
  auto end() const { return rules_.end(); }
  const std::vector<Rule>& rules() const { return rules_; }

  std::optional<std::size_t> index_of(RuleId id) const;
  std::vector<RuleId> ids() const;

  // Rules at the given positions, in the order given.
  RuleSet subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<Rule> rules_;
  std::unordered_map<RuleId, std::size_t> index_;
};

// rule.label when the pattern occurs as a contiguous run of inst.tokens,
// otherwise kAbstain.
Label apply_rule(const Rule& rule, const Instance& inst);

// Dense instances x rules matrix of rule outputs, row-major.
class FiringMatrix {
 public:
  FiringMatrix() = default;
  FiringMatrix(std::vector<InstanceId> row_ids, std::vector<RuleId> col_ids);

  std::size_t rows() const { return row_ids_.size(); }
  std::size_t cols() const { return col_ids_.size(); }

  Label at(std::size_t row, std::size_t col) const {
    return cells_[row * cols() + col];
  }
  void set(std::size_t row, std::size_t col, Label value) {
    cells_[row * cols() + col] = value;
  }

  std::span<const Label> row(std::size_t r) const {
    return {cells_.data() + r * cols(), cols()};
  }
  std::vector<Label> column(std::size_t c) const;

  const std::vector<InstanceId>& row_ids() const { return row_ids_; }
  const std::vector<RuleId>& col_ids() const { return col_ids_; }

  // Matrix restricted to the given columns, in the order given.
  FiringMatrix select_columns(std::span<const std::size_t> cols) const;

 private:
  std::vector<InstanceId> row_ids_;
  std::vector<RuleId> col_ids_;
  std::vector<Label> cells_;
};

// Throws ConfigError on duplicate rule or instance ids.
FiringMatrix build_firing_matrix(const RuleSet& rules,
                                 std::span<const Instance> instances);

}  // namespace rulefilter
