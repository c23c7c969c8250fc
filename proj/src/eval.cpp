#include "rulefilter/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>

#include "rulefilter/errors.hpp"

namespace rulefilter {

AggregatedLabels majority_vote(const FiringMatrix& fm) {
  AggregatedLabels out;
  out.labels.assign(fm.rows(), kAbstain);
  std::map<Label, std::size_t> counts;
  std::size_t covered = 0;
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    counts.clear();
    for (Label v : fm.row(r)) {
      if (v != kAbstain) ++counts[v];
    }
    Label best = kAbstain;
    std::size_t best_count = 0;
    bool tied = false;
    for (const auto& [label, n] : counts) {
      if (n > best_count) {
        best = label;
        best_count = n;
        tied = false;
      } else if (n == best_count) {
        tied = true;
      }
    }
    if (tied) best = kAbstain;
    out.labels[r] = best;
    covered += best != kAbstain;
  }
  out.coverage = fm.rows() == 0 ? 0.0 : static_cast<double>(covered) / fm.rows();
  return out;
}

EvalReport macro_f1(std::span<const Label> predicted, std::span<const Label> gold,
                    int num_classes, AbstainPolicy policy) {
  if (predicted.size() != gold.size()) {
    throw DataError("predictions (" + std::to_string(predicted.size()) +
                    ") and gold labels (" + std::to_string(gold.size()) +
                    ") differ in length");
  }
  EvalReport rep;
  rep.instances = gold.size();
  rep.per_class.resize(static_cast<std::size_t>(num_classes));
  for (int k = 1; k <= num_classes; ++k) rep.per_class[k - 1].label = k;

  std::vector<bool> present(static_cast<std::size_t>(num_classes), false);
  std::size_t predicted_count = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Label g = gold[i];
    const Label p = predicted[i];
    if (g < 1 || g > num_classes) {
      throw DataError("gold label " + std::to_string(g) + " outside 1.." +
                      std::to_string(num_classes));
    }
    if (p < kAbstain || p > num_classes) {
      throw DataError("predicted label " + std::to_string(p) + " outside 0.." +
                      std::to_string(num_classes));
    }
    if (p == kAbstain) {
      if (policy == AbstainPolicy::covered_only) continue;
      present[g - 1] = true;
      ++rep.per_class[g - 1].fn;
      continue;
    }
    ++predicted_count;
    present[g - 1] = true;
    present[p - 1] = true;
    if (p == g) {
      ++correct;
      ++rep.per_class[g - 1].tp;
    } else {
      ++rep.per_class[p - 1].fp;
      ++rep.per_class[g - 1].fn;
    }
  }

  double f1_sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t k = 0; k < rep.per_class.size(); ++k) {
    auto& c = rep.per_class[k];
    c.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / (c.tp + c.fp);
    c.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / (c.tp + c.fn);
    c.f1 = c.precision + c.recall == 0.0
               ? 0.0
               : 2.0 * c.precision * c.recall / (c.precision + c.recall);
    if (present[k]) {
      f1_sum += c.f1;
      ++classes;
    }
  }
  rep.macro_f1 = classes == 0 ? 0.0 : f1_sum / classes;
  rep.micro_precision =
      predicted_count == 0 ? 0.0 : static_cast<double>(correct) / predicted_count;
  rep.coverage = gold.empty() ? 0.0 : static_cast<double>(predicted_count) / gold.size();
  return rep;
}

TestPrecision test_set_precision(const FiringMatrix& fm, std::span<const Label> gold) {
  if (gold.size() != fm.rows()) throw DataError("gold labels do not match matrix rows");
  TestPrecision t;
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    for (Label v : fm.row(r)) {
      if (v == kAbstain) continue;
      ++t.events;
      t.correct += v == gold[r];
    }
  }
  t.no_fire = t.events == 0;
  t.value = t.no_fire ? 0.0 : static_cast<double>(t.correct) / t.events;
  return t;
}

TestPrecision test_set_precision(const RuleSet& rules, std::span<const Instance> test) {
  return test_set_precision(build_firing_matrix(rules, test), gold_labels(test));
}

namespace {

struct SignedRanks {
  std::vector<double> ranks;  // average ranks of |d|
  std::vector<bool> positive;
};

SignedRanks rank_differences(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("paired samples differ in length");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    if (diff != 0.0) d.push_back(diff);
  }
  if (d.empty()) throw DataError("all paired differences are zero");

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(d[a]) < std::abs(d[b]);
  });
  SignedRanks out;
  out.ranks.resize(d.size());
  out.positive.resize(d.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) out.ranks[order[t]] = avg;
    i = j + 1;
  }
  for (std::size_t i = 0; i < d.size(); ++i) out.positive[i] = d[i] > 0.0;
  return out;
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
  const auto sr = rank_differences(x, y);
  WilcoxonResult r;
  r.n = sr.ranks.size();
  if (r.n < 5) {
    throw DataError("signed-rank test needs at least 5 nonzero differences, got " +
                    std::to_string(r.n));
  }
  for (std::size_t i = 0; i < r.n; ++i) {
    (sr.positive[i] ? r.w_plus : r.w_minus) += sr.ranks[i];
  }
  r.w = std::min(r.w_plus, r.w_minus);
  const double n = static_cast<double>(r.n);
  const double mean = n * (n + 1.0) / 4.0;
  const double sd = std::sqrt(n * (n + 1.0) * (2.0 * n + 1.0) / 24.0);
  r.z = (r.w_plus - mean) / sd;
  r.p = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  return r;
}

double wilcoxon_exact_p(std::span<const double> x, std::span<const double> y) {
  const auto sr = rank_differences(x, y);
  const std::size_t n = sr.ranks.size();
  if (n > 60) throw ConfigError("exact signed-rank p-value limited to n <= 60");

  // Average ranks are multiples of 1/2, so doubled ranks are integers.
  std::vector<std::size_t> twice(n);
  std::size_t total = 0;
  double observed_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    twice[i] = static_cast<std::size_t>(std::llround(2.0 * sr.ranks[i]));
    total += twice[i];
    if (sr.positive[i]) observed_plus += sr.ranks[i];
  }
  const auto w_obs = static_cast<std::size_t>(
      std::llround(2.0 * std::min(observed_plus, total / 2.0 - observed_plus)));

  // ways[s]: sign assignments whose doubled positive rank sum is s.
  std::vector<long double> ways(total + 1, 0.0L);
  ways[0] = 1.0L;
  for (auto r : twice) {
    for (std::size_t s = total; s >= r; --s) {
      ways[s] += ways[s - r];
      if (s == r) break;
    }
  }
  long double hits = 0.0L;
  for (std::size_t s = 0; s <= total; ++s) {
    if (std::min(s, total - s) <= w_obs) hits += ways[s];
  }
  return static_cast<double>(hits / std::pow(2.0L, static_cast<long double>(n)));
}

}  // namespace rulefilter
