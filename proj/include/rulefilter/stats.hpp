#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rulefilter/core.hpp"

namespace rulefilter {

// All fractions below are in [0, 1]. Pairwise and set statistics use |U| as
// the denominator.

struct PrecisionResult {
  double value = 0.0;
  bool no_fire = false;  // the rule never fired; value is 0 by convention
  std::size_t fires = 0;
  std::size_t correct = 0;
};

// firing[i] is the rule's output on instance i, gold[i] its gold label.
PrecisionResult find_precision(std::span<const Label> firing,
                               std::span<const Label> gold);
PrecisionResult find_precision(const Rule& rule, std::span<const Instance> labeled);

// Fraction of rows where at least one of the selected columns fires.
// Throws DataError on an empty instance set.
double find_coverage(const FiringMatrix& fm, std::span<const std::size_t> cols);
double find_coverage(const RuleSet& rules, std::span<const Instance> unlabeled);

double find_overlap(std::span<const Label> a, std::span<const Label> b);
double find_agreement(std::span<const Label> a, std::span<const Label> b);
double find_conflict(std::span<const Label> a, std::span<const Label> b);
double find_agreement(const Rule& a, const Rule& b, std::span<const Instance> unlabeled);
double find_conflict(const Rule& a, const Rule& b, std::span<const Instance> unlabeled);

// Fraction of rows on which the selected columns emit at most one distinct
// label. Rows with no or one firing count as non-conflicting.
double set_non_conflict(const FiringMatrix& fm, std::span<const std::size_t> cols);
double set_non_conflict(const RuleSet& rules, std::span<const Instance> unlabeled);

struct RuleStats {
  double precision = 0.0;
  bool no_fire = false;
  double labeled_coverage = 0.0;
  double unlabeled_coverage = 0.0;
  std::size_t fires_labeled = 0;
  std::size_t fires_unlabeled = 0;
};

struct PairStats {
  double joint_coverage = 0.0;
  double agreement = 0.0;
  double conflict = 0.0;
  double overlap = 0.0;
};

struct SetStats {
  double coverage = 0.0;
  double non_conflict = 1.0;
  double avg_precision = 0.0;
  double labeled_coverage = 0.0;
};

// Symmetric, nonnegative, zero-diagonal matrix over rule positions.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}

  // Row-major n x n values; throws ConfigError unless symmetric, nonnegative
  // and zero on the diagonal.
  static SimilarityMatrix from_dense(std::size_t n, std::vector<double> values);

  std::size_t size() const { return n_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  void set_pair(std::size_t i, std::size_t j, double value);

  double column_sum(std::size_t j) const;
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

// Statistics of a candidate rule set against a labeled and an unlabeled set,
// computed once and queried by rule position.
class CorpusStats {
 public:
  CorpusStats(const RuleSet& rules, std::span<const Instance> labeled,
              std::span<const Instance> unlabeled);

  std::size_t size() const { return rule_stats_.size(); }
  std::size_t labeled_size() const { return labeled_.rows(); }
  std::size_t unlabeled_size() const { return unlabeled_.rows(); }

  const RuleStats& rule(std::size_t i) const { return rule_stats_[i]; }
  PairStats pair(std::size_t i, std::size_t j) const;
  // Agreement divided by overlap instead of |U|; 0 when the rules never co-fire.
  double agreement_given_overlap(std::size_t i, std::size_t j) const;

  double coverage(std::span<const std::size_t> set) const;
  double non_conflict(std::span<const std::size_t> set) const;
  double labeled_coverage(std::span<const std::size_t> set) const;
  SetStats set(std::span<const std::size_t> set) const;

  const FiringMatrix& labeled_firing() const { return labeled_; }
  const FiringMatrix& unlabeled_firing() const { return unlabeled_; }

 private:
  std::uint32_t overlap_count(std::size_t i, std::size_t j) const {
    return overlap_[i * size() + j];
  }
  std::uint32_t agree_count(std::size_t i, std::size_t j) const {
    return agree_[i * size() + j];
  }

  FiringMatrix labeled_;
  FiringMatrix unlabeled_;
  std::vector<RuleStats> rule_stats_;
  std::vector<std::uint32_t> overlap_;  // co-firing counts on U
  std::vector<std::uint32_t> agree_;    // co-firing with equal labels on U
};

// s_ij = a_i + a_j + w * joint_coverage_ij + gamma * agreement_ij for i != j,
// zero on the diagonal. Throws ConfigError on negative weights or no rules.
SimilarityMatrix build_similarity_matrix(const CorpusStats& stats, double w,
                                         double gamma);
SimilarityMatrix build_similarity_matrix(const RuleSet& rules,
                                         std::span<const Instance> labeled,
                                         std::span<const Instance> unlabeled,
                                         double w, double gamma);

}  // namespace rulefilter
