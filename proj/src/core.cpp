#include "rulefilter/core.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "rulefilter/errors.hpp"

namespace rulefilter {

namespace {

// Bytes >= 0x80 are kept so UTF-8 words survive as single tokens.
bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c))
                                 : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Instance Instance::from_text(InstanceId id, std::string text,
                             std::optional<Label> gold) {
  Instance inst;
  inst.id = id;
  inst.tokens = tokenize(text);
  inst.text = std::move(text);
  inst.gold = gold;
  return inst;
}

void Corpus::validate() const {
  if (num_classes < 2) {
    throw DataError("corpus needs at least 2 classes, got " +
                    std::to_string(num_classes));
  }
  std::unordered_set<InstanceId> seen;
  auto check = [&](const std::vector<Instance>& part, const char* name,
                   bool needs_gold) {
    for (const auto& inst : part) {
      if (!seen.insert(inst.id).second) {
        throw DataError(std::string("instance id ") + std::to_string(inst.id) +
                        " appears twice (partition " + name + ")");
      }
      if (!inst.gold) {
        if (needs_gold) {
          throw DataError(std::string("instance ") + std::to_string(inst.id) +
                          " in " + name + " has no gold label");
        }
        continue;
      }
      if (*inst.gold < 1 || *inst.gold > num_classes) {
        throw DataError("instance " + std::to_string(inst.id) +
                        " has label " + std::to_string(*inst.gold) +
                        " outside 1.." + std::to_string(num_classes));
      }
    }
  };
  check(labeled, "labeled", true);
  check(unlabeled, "unlabeled", false);
  check(validation, "validation", true);
  check(test, "test", true);
}

std::vector<Label> gold_labels(std::span<const Instance> instances) {
  std::vector<Label> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    if (!inst.gold) {
      throw DataError("instance " + std::to_string(inst.id) +
                      " has no gold label");
    }
    out.push_back(*inst.gold);
  }
  return out;
}

int infer_num_classes(std::span<const Instance> instances) {
  int k = 2;
  for (const auto& inst : instances) {
    if (inst.gold) k = std::max(k, static_cast<int>(*inst.gold));
  }
  return k;
}

std::string_view to_string(RuleOrigin origin) {
  switch (origin) {
    case RuleOrigin::stump:
      return "stump";
    case RuleOrigin::classifier_weight:
      return "classifier_weight";
    case RuleOrigin::external:
      return "external";
  }
  return "external";
}

RuleOrigin parse_rule_origin(std::string_view name) {
  if (name == "stump") return RuleOrigin::stump;
  if (name == "classifier_weight") return RuleOrigin::classifier_weight;
  if (name == "external") return RuleOrigin::external;
  throw DataError("unknown rule origin '" + std::string(name) + "'");
}

std::string Rule::pattern_text() const {
  std::string out;
  for (const auto& tok : pattern) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

RuleSet::RuleSet(std::vector<Rule> rules) {
  rules_.reserve(rules.size());
  for (auto& r : rules) add(std::move(r));
}

void RuleSet::add(Rule rule) {
  if (rule.pattern.empty()) {
    throw ConfigError("rule " + std::to_string(rule.id) + " has an empty pattern");
  }
  if (rule.label <= kAbstain) {
    throw ConfigError("rule " + std::to_string(rule.id) +
                      " must carry a class label >= 1");
  }
  if (!index_.emplace(rule.id, rules_.size()).second) {
    throw ConfigError("duplicate rule id " + std::to_string(rule.id));
  }
  rules_.push_back(std::move(rule));
}

std::optional<std::size_t> RuleSet::index_of(RuleId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<RuleId> RuleSet::ids() const {
  std::vector<RuleId> out;
  out.reserve(rules_.size());
  for (const auto& r : rules_) out.push_back(r.id);
  return out;
}

RuleSet RuleSet::subset(std::span<const std::size_t> indices) const {
  RuleSet out;
  for (auto i : indices) out.add(rules_.at(i));
  return out;
}

Label apply_rule(const Rule& rule, const Instance& inst) {
  if (rule.pattern.empty()) return kAbstain;
  auto it = std::search(inst.tokens.begin(), inst.tokens.end(),
                        rule.pattern.begin(), rule.pattern.end());
  return it == inst.tokens.end() ? kAbstain : rule.label;
}

FiringMatrix::FiringMatrix(std::vector<InstanceId> row_ids,
                           std::vector<RuleId> col_ids)
    : row_ids_(std::move(row_ids)),
      col_ids_(std::move(col_ids)),
      cells_(row_ids_.size() * col_ids_.size(), kAbstain) {}

std::vector<Label> FiringMatrix::column(std::size_t c) const {
  std::vector<Label> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
  return out;
}

FiringMatrix FiringMatrix::select_columns(std::span<const std::size_t> cols) const {
  std::vector<RuleId> ids;
  ids.reserve(cols.size());
  for (auto c : cols) ids.push_back(col_ids_.at(c));
  FiringMatrix out(row_ids_, std::move(ids));
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) out.set(r, j, at(r, cols[j]));
  }
  return out;
}

FiringMatrix build_firing_matrix(const RuleSet& rules,
                                 std::span<const Instance> instances) {
  std::vector<InstanceId> row_ids;
  row_ids.reserve(instances.size());
  std::unordered_set<InstanceId> seen;
  for (const auto& inst : instances) {
    if (!seen.insert(inst.id).second) {
      throw ConfigError("duplicate instance id " + std::to_string(inst.id));
    }
    row_ids.push_back(inst.id);
  }
  FiringMatrix fm(std::move(row_ids), rules.ids());

  // Index rules by their first token so each instance only checks rules that
  // can start at one of its positions.
  std::unordered_map<std::string_view, std::vector<std::size_t>> by_head;
  for (std::size_t j = 0; j < rules.size(); ++j) {
    by_head[rules[j].pattern.front()].push_back(j);
  }

  for (std::size_t r = 0; r < instances.size(); ++r) {
    const auto& toks = instances[r].tokens;
    for (std::size_t pos = 0; pos < toks.size(); ++pos) {
      auto it = by_head.find(toks[pos]);
      if (it == by_head.end()) continue;
      for (auto j : it->second) {
        if (fm.at(r, j) != kAbstain) continue;
        const auto& pat = rules[j].pattern;
        if (pos + pat.size() > toks.size()) continue;
        if (std::equal(pat.begin(), pat.end(), toks.begin() + pos)) {
          fm.set(r, j, rules[j].label);
        }
      }
    }
  }
  return fm;
}

}  // namespace rulefilter
