#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rulefilter/core.hpp"

namespace rulefilter {

struct AggregatedLabels {
  std::vector<Label> labels;  // kAbstain where nothing fired or the vote tied
  double coverage = 0.0;      // fraction of instances with a non-abstain label
};

// Plurality of non-abstain labels per row; ties and empty rows abstain.
AggregatedLabels majority_vote(const FiringMatrix& fm);

enum class AbstainPolicy {
  covered_only,      // drop abstained instances before scoring
  abstain_as_wrong,  // an abstention is a miss for the gold class
};

struct ClassMetrics {
  Label label = kAbstain;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  double macro_f1 = 0.0;
  double micro_precision = 0.0;  // correct / non-abstain predictions
  double coverage = 0.0;         // non-abstain predictions / all instances
  std::size_t instances = 0;
  std::vector<ClassMetrics> per_class;  // classes 1..K
};

// Macro-F1 is the unweighted mean over the classes that occur in gold or in
// the scored predictions. Throws DataError on a length mismatch.
EvalReport macro_f1(std::span<const Label> predicted, std::span<const Label> gold,
                    int num_classes,
                    AbstainPolicy policy = AbstainPolicy::abstain_as_wrong);

struct TestPrecision {
  double value = 0.0;
  bool no_fire = false;
  std::size_t events = 0;   // (instance, rule) firings
  std::size_t correct = 0;
};

// Micro-precision over every firing event in the matrix.
TestPrecision test_set_precision(const FiringMatrix& fm, std::span<const Label> gold);
TestPrecision test_set_precision(const RuleSet& rules, std::span<const Instance> test);

struct WilcoxonResult {
  std::size_t n = 0;     // pairs with a nonzero difference
  double w_plus = 0.0;   // rank sum of positive differences x - y
  double w_minus = 0.0;
  double w = 0.0;        // min(w_plus, w_minus)
  double z = 0.0;        // normal approximation, signed by w_plus
  double p = 1.0;        // two-sided
};

// Paired signed-rank test with average ranks for tied |differences| and the
// normal approximation without tie or continuity correction. Throws
// DataError when fewer than 5 nonzero differences remain.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

// Two-sided exact p-value P(min(W+, W-) <= w_obs) under the sign-flip null,
// counted over all 2^n assignments of signs to the observed ranks.
double wilcoxon_exact_p(std::span<const double> x, std::span<const double> y);

}  // namespace rulefilter
