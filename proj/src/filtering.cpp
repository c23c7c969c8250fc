#include "rulefilter/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>

#include "rulefilter/errors.hpp"

namespace rulefilter {

std::string_view to_string(FilterVariant v) {
  return v == FilterVariant::gc ? "gc" : "pca";
}

FilterVariant parse_filter_variant(std::string_view name) {
  if (name == "gc") return FilterVariant::gc;
  if (name == "pca") return FilterVariant::pca;
  throw ConfigError("unknown filter variant '" + std::string(name) +
                    "' (expected gc or pca)");
}

PcaCoefficients PcaCoefficients::strict(double w, double gamma) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throw ConfigError("strict precision/coverage weighting needs w in [0, 1]");
  }
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
  return {w, 1.0 - w, gamma};
}

void FilterConfig::validate() const {
  if (!(w >= 0.0)) throw ConfigError("w must be nonnegative");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(pca.precision >= 0.0 && pca.coverage >= 0.0 && pca.agreement >= 0.0)) {
    throw ConfigError("objective coefficients must be nonnegative");
  }
}

TableStatsOracle::TableStatsOracle(std::vector<double> precisions)
    : precisions_(std::move(precisions)) {}

void TableStatsOracle::set(std::vector<std::size_t> members, SetValues values) {
  std::sort(members.begin(), members.end());
  sets_[std::move(members)] = values;
}

double TableStatsOracle::precision(std::size_t rule) const {
  if (rule >= precisions_.size()) throw ConfigError("rule index out of range");
  return precisions_[rule];
}

const TableStatsOracle::SetValues& TableStatsOracle::lookup(
    std::span<const std::size_t> set) const {
  std::vector<std::size_t> key(set.begin(), set.end());
  std::sort(key.begin(), key.end());
  auto it = sets_.find(key);
  if (it == sets_.end()) {
    std::ostringstream msg;
    msg << "no tabulated statistics for set {";
    for (std::size_t i = 0; i < key.size(); ++i) msg << (i ? "," : "") << key[i];
    msg << "}";
    throw ConfigError(msg.str());
  }
  return it->second;
}

double TableStatsOracle::coverage(std::span<const std::size_t> set) const {
  return lookup(set).coverage;
}
double TableStatsOracle::non_conflict(std::span<const std::size_t> set) const {
  return lookup(set).non_conflict;
}
double TableStatsOracle::labeled_coverage(std::span<const std::size_t> set) const {
  return lookup(set).labeled_coverage;
}

double f_pca(std::span<const std::size_t> set, const StatsOracle& oracle,
             const PcaCoefficients& coeffs) {
  if (set.empty()) throw ConfigError("precision/coverage objective undefined on the empty set");
  double precision_sum = 0.0;
  for (auto i : set) precision_sum += oracle.precision(i);
  return coeffs.precision * precision_sum / static_cast<double>(set.size()) +
         coeffs.coverage * oracle.coverage(set) +
         coeffs.agreement * oracle.non_conflict(set);
}

namespace {

void check_ids(std::span<const RuleId> ids, std::size_t n) {
  if (ids.size() != n) {
    throw ConfigError("rule ids (" + std::to_string(ids.size()) +
                      ") do not match the candidate count (" + std::to_string(n) + ")");
  }
}

// Candidate positions sorted by rule id, so strict '>' scans break ties low.
std::vector<std::size_t> id_order(std::span<const RuleId> ids) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  return order;
}

bool close_enough(double a, double b, double scale) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(scale)});
}

}  // namespace

Selection fair_pca_select(std::span<const RuleId> ids, const StatsOracle& oracle,
                          const FilterConfig& cfg) {
  cfg.validate();
  check_ids(ids, oracle.size());
  Selection sel;
  if (cfg.k == 0) return sel;
  if (oracle.size() == 0) throw ConfigError("candidate rule set is empty");

  const auto order = id_order(ids);
  std::vector<bool> taken(oracle.size(), false);

  std::size_t seed = order.front();
  double seed_value = 0.0;
  bool first = true;
  for (auto i : order) {
    const std::size_t one[] = {i};
    const double v = f_pca(one, oracle, cfg.pca);
    if (first || v > seed_value) {
      seed = i;
      seed_value = v;
      first = false;
    }
  }
  sel.chosen.push_back(seed);
  taken[seed] = true;
  sel.trace.steps.push_back(
      {ids[seed], seed, seed_value, seed_value, seed_value, seed_value < 0.0});

  double current = seed_value;
  std::vector<std::size_t> trial;
  while (sel.chosen.size() < cfg.k && sel.chosen.size() < oracle.size() &&
         oracle.labeled_coverage(sel.chosen) < 1.0) {
    std::size_t best = 0;
    double best_gain = 0.0;
    double best_value = 0.0;
    bool found = false;
    for (auto i : order) {
      if (taken[i]) continue;
      trial = sel.chosen;
      trial.push_back(i);
      const double value = f_pca(trial, oracle, cfg.pca);
      const double gain = value - current;
      if (!found || gain > best_gain) {
        best = i;
        best_gain = gain;
        best_value = value;
        found = true;
      }
    }
    sel.chosen.push_back(best);
    taken[best] = true;
    sel.trace.steps.push_back(
        {ids[best], best, best_gain, best_gain, best_value, best_gain < 0.0});
    current = best_value;
  }
  return sel;
}

double f_gc(std::span<const std::size_t> set, const SimilarityMatrix& s, double lambda) {
  double representation = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (auto j : set) representation += s.at(i, j);
  }
  double redundancy = 0.0;
  for (auto i : set) {
    for (auto j : set) redundancy += s.at(i, j);
  }
  return representation - lambda * redundancy;
}

namespace {

void check_gc_inputs(std::span<const RuleId> ids, const SimilarityMatrix& s,
                     const FilterConfig& cfg) {
  cfg.validate();
  check_ids(ids, s.size());
  if (cfg.k > s.size()) {
    throw ConfigError("budget k=" + std::to_string(cfg.k) + " exceeds the " +
                      std::to_string(s.size()) + " candidate rules");
  }
}

// Appends v to the selection after checking its incremental gain against a
// full re-evaluation of the objective.
void commit_gc_step(Selection& sel, std::span<const RuleId> ids,
                    const SimilarityMatrix& s, double lambda, std::size_t v,
                    double gain, double& current) {
  sel.chosen.push_back(v);
  const double next = f_gc(sel.chosen, s, lambda);
  const double scratch = next - current;
  if (!close_enough(gain, scratch, next)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "graph-cut gain mismatch for rule " << ids[v] << ": incremental " << gain
        << " vs recomputed " << scratch;
    throw InvariantError(msg.str());
  }
  sel.trace.steps.push_back({ids[v], v, gain, scratch, next, gain < 0.0});
  current = next;
}

std::vector<double> column_sums(const SimilarityMatrix& s) {
  std::vector<double> sums(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) sums[j] = s.column_sum(j);
  return sums;
}

}  // namespace

Selection fair_gc_select_naive(std::span<const RuleId> ids, const SimilarityMatrix& s,
                               const FilterConfig& cfg) {
  check_gc_inputs(ids, s, cfg);
  Selection sel;
  const auto order = id_order(ids);
  const auto colsum = column_sums(s);
  std::vector<double> to_selected(s.size(), 0.0);  // sum_{j in F} s_jv
  std::vector<bool> taken(s.size(), false);
  double current = 0.0;

  for (std::size_t step = 0; step < cfg.k; ++step) {
    std::size_t best = 0;
    double best_gain = 0.0;
    bool found = false;
    for (auto v : order) {
      if (taken[v]) continue;
      const double gain = colsum[v] - cfg.lambda * (2.0 * to_selected[v]);
      if (!found || gain > best_gain) {
        best = v;
        best_gain = gain;
        found = true;
      }
    }
    taken[best] = true;
    commit_gc_step(sel, ids, s, cfg.lambda, best, best_gain, current);
    for (std::size_t v = 0; v < s.size(); ++v) to_selected[v] += s.at(best, v);
  }
  return sel;
}

Selection fair_gc_select_lazy(std::span<const RuleId> ids, const SimilarityMatrix& s,
                              const FilterConfig& cfg) {
  check_gc_inputs(ids, s, cfg);
  Selection sel;
  const auto colsum = column_sums(s);
  double current = 0.0;

  struct Bound {
    double gain;
    RuleId id;
    std::size_t index;
    std::size_t fresh_at;  // selection size when gain was computed
  };
  // Max gain first, lowest id among equal gains.
  auto worse = [](const Bound& a, const Bound& b) {
    if (a.gain != b.gain) return a.gain < b.gain;
    return a.id > b.id;
  };
  std::priority_queue<Bound, std::vector<Bound>, decltype(worse)> heap(worse);
  for (std::size_t v = 0; v < s.size(); ++v) heap.push({colsum[v], ids[v], v, 0});

  // Summing in selection order reproduces the naive accumulator bit for bit.
  auto gain_of = [&](std::size_t v) {
    double to_selected = 0.0;
    for (auto j : sel.chosen) to_selected += s.at(j, v);
    return colsum[v] - cfg.lambda * (2.0 * to_selected);
  };

  while (sel.chosen.size() < cfg.k) {
    Bound top = heap.top();
    heap.pop();
    if (top.fresh_at == sel.chosen.size()) {
      commit_gc_step(sel, ids, s, cfg.lambda, top.index, top.gain, current);
      continue;
    }
    top.gain = gain_of(top.index);
    top.fresh_at = sel.chosen.size();
    heap.push(top);
  }
  return sel;
}

Selection fair_gc_select(std::span<const RuleId> ids, const SimilarityMatrix& s,
                         const FilterConfig& cfg) {
  return cfg.lazy ? fair_gc_select_lazy(ids, s, cfg) : fair_gc_select_naive(ids, s, cfg);
}

WeightGrid WeightGrid::standard() {
  WeightGrid g;
  for (int w = 1; w <= 10; ++w) g.w_values.push_back(w);
  for (int t = 0; t <= 10; ++t) g.gamma_values.push_back(t / 10.0);
  return g;
}

TuningResult tune_weights(const RuleSet& rules, const Corpus& corpus,
                          const WeightGrid& grid, const FilterConfig& base) {
  base.validate();
  if (grid.w_values.empty() || grid.gamma_values.empty()) {
    throw ConfigError("weight grid is empty");
  }
  if (corpus.validation.empty()) throw DataError("weight tuning needs a validation set");
  if (rules.empty()) throw ConfigError("candidate rule set is empty");

  const CorpusStats stats(rules, corpus.labeled, corpus.unlabeled);
  const auto val_fm = build_firing_matrix(rules, corpus.validation);
  const auto val_gold = gold_labels(corpus.validation);
  const auto ids = rules.ids();

  auto ws = grid.w_values;
  auto gammas = grid.gamma_values;
  std::sort(ws.begin(), ws.end());
  std::sort(gammas.begin(), gammas.end());

  TuningResult result;
  bool first = true;
  for (double w : ws) {
    for (double gamma : gammas) {
      FilterConfig cfg = base;
      cfg.w = w;
      cfg.gamma = gamma;
      const auto s = build_similarity_matrix(stats, w, gamma);
      const auto sel = fair_gc_select(ids, s, cfg);
      const auto votes = majority_vote(val_fm.select_columns(sel.chosen));
      const double f1 = macro_f1(votes.labels, val_gold, corpus.num_classes,
                                 AbstainPolicy::abstain_as_wrong)
                            .macro_f1;
      result.points.push_back({w, gamma, f1});
      if (first || f1 > result.macro_f1) {
        result.w = w;
        result.gamma = gamma;
        result.macro_f1 = f1;
        first = false;
      }
    }
  }
  return result;
}

}  // namespace rulefilter
