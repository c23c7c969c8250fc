#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "rulefilter/core.hpp"
#include "rulefilter/eval.hpp"
#include "rulefilter/stats.hpp"

namespace rulefilter {

enum class FilterVariant { gc, pca };

std::string_view to_string(FilterVariant v);
FilterVariant parse_filter_variant(std::string_view name);

// Coefficients of the precision, coverage and agreement terms of the
// precision/coverage/agreement objective.
struct PcaCoefficients {
  double precision = 1.0;
  double coverage = 1.0;
  double agreement = 1.0;

  // (w, 1 - w, gamma) with w in [0, 1].
  static PcaCoefficients strict(double w, double gamma);
};

struct FilterConfig {
  std::size_t k = 10;
  double w = 3.0;
  double gamma = 0.3;
  double lambda = 0.7;
  FilterVariant variant = FilterVariant::gc;
  PcaCoefficients pca;
  bool lazy = false;  // lazy greedy for the graph-cut objective

  void validate() const;
};

// Source of precision, coverage and set agreement values. Sets are given as
// rule positions in the candidate set.
class StatsOracle {
 public:
  virtual ~StatsOracle() = default;
  virtual std::size_t size() const = 0;
  virtual double precision(std::size_t rule) const = 0;
  virtual double coverage(std::span<const std::size_t> set) const = 0;
  virtual double non_conflict(std::span<const std::size_t> set) const = 0;
  virtual double labeled_coverage(std::span<const std::size_t> set) const = 0;
};

class CorpusStatsOracle final : public StatsOracle {
 public:
  explicit CorpusStatsOracle(const CorpusStats& stats) : stats_(stats) {}

  std::size_t size() const override { return stats_.size(); }
  double precision(std::size_t rule) const override { return stats_.rule(rule).precision; }
  double coverage(std::span<const std::size_t> set) const override {
    return stats_.coverage(set);
  }
  double non_conflict(std::span<const std::size_t> set) const override {
    return stats_.non_conflict(set);
  }
  double labeled_coverage(std::span<const std::size_t> set) const override {
    return stats_.labeled_coverage(set);
  }

 private:
  const CorpusStats& stats_;
};

// Postulated values keyed by set (order-insensitive). Querying a set with no
// entry throws ConfigError.
class TableStatsOracle final : public StatsOracle {
 public:
  struct SetValues {
    double coverage = 0.0;
    double non_conflict = 1.0;
    double labeled_coverage = 0.0;
  };

  explicit TableStatsOracle(std::vector<double> precisions);

  void set(std::vector<std::size_t> members, SetValues values);

  std::size_t size() const override { return precisions_.size(); }
  double precision(std::size_t rule) const override;
  double coverage(std::span<const std::size_t> set) const override;
  double non_conflict(std::span<const std::size_t> set) const override;
  double labeled_coverage(std::span<const std::size_t> set) const override;

 private:
  const SetValues& lookup(std::span<const std::size_t> set) const;

  std::vector<double> precisions_;
  std::map<std::vector<std::size_t>, SetValues> sets_;
};

struct TraceStep {
  RuleId rule = 0;
  std::size_t index = 0;        // position in the candidate set
  double gain = 0.0;            // marginal gain used for the choice
  double scratch_gain = 0.0;    // same gain recomputed from full evaluations
  double objective = 0.0;       // objective of the set after this step
  bool negative_gain = false;
};

struct SelectionTrace {
  std::vector<TraceStep> steps;
};

struct Selection {
  std::vector<std::size_t> chosen;  // candidate positions in selection order
  SelectionTrace trace;
};

// c_prec * mean precision + c_cov * coverage + c_agree * non-conflict.
// Throws ConfigError for an empty set.
double f_pca(std::span<const std::size_t> set, const StatsOracle& oracle,
             const PcaCoefficients& coeffs);

// Seeds with the best singleton, then adds the rule of largest marginal gain
// while the labeled coverage is below 1 and fewer than k rules are chosen.
// ids gives each candidate's rule id (ties go to the lowest id).
Selection fair_pca_select(std::span<const RuleId> ids, const StatsOracle& oracle,
                          const FilterConfig& cfg);

// Sum over i in R, j in F of s_ij minus lambda times the sum over i, j in F.
double f_gc(std::span<const std::size_t> set, const SimilarityMatrix& s, double lambda);

// Greedy graph-cut selection of exactly k rules, continuing through negative
// gains. Dispatches on cfg.lazy. Every step's incremental gain is checked
// against a from-scratch evaluation; a mismatch throws InvariantError.
Selection fair_gc_select(std::span<const RuleId> ids, const SimilarityMatrix& s,
                         const FilterConfig& cfg);
Selection fair_gc_select_naive(std::span<const RuleId> ids, const SimilarityMatrix& s,
                               const FilterConfig& cfg);
Selection fair_gc_select_lazy(std::span<const RuleId> ids, const SimilarityMatrix& s,
                              const FilterConfig& cfg);

struct WeightGrid {
  std::vector<double> w_values;
  std::vector<double> gamma_values;

  // w in {1, ..., 10}, gamma in {0, 0.1, ..., 1}.
  static WeightGrid standard();
};

struct TuningPoint {
  double w = 0.0;
  double gamma = 0.0;
  double macro_f1 = 0.0;
};

struct TuningResult {
  double w = 0.0;
  double gamma = 0.0;
  double macro_f1 = 0.0;
  std::vector<TuningPoint> points;
};

// Runs graph-cut selection for every grid point and keeps the pair whose
// majority-vote macro-F1 on the validation set is highest (ties to smaller w,
// then smaller gamma). k and lambda come from base.
TuningResult tune_weights(const RuleSet& rules, const Corpus& corpus,
                          const WeightGrid& grid, const FilterConfig& base);

}  // namespace rulefilter
