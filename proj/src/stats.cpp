#include "rulefilter/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rulefilter/errors.hpp"

namespace rulefilter {

namespace {

void require_rows(std::size_t n, const char* what) {
  if (n == 0) throw DataError(std::string(what) + " over an empty instance set");
}

void require_same_length(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size()) throw DataError("firing vectors differ in length");
}

std::vector<std::size_t> all_columns(std::size_t n) {
  std::vector<std::size_t> cols(n);
  for (std::size_t i = 0; i < n; ++i) cols[i] = i;
  return cols;
}

}  // namespace

PrecisionResult find_precision(std::span<const Label> firing,
                               std::span<const Label> gold) {
  require_same_length(firing, gold);
  PrecisionResult r;
  for (std::size_t i = 0; i < firing.size(); ++i) {
    if (firing[i] == kAbstain) continue;
    ++r.fires;
    if (firing[i] == gold[i]) ++r.correct;
  }
  r.no_fire = r.fires == 0;
  r.value = r.no_fire ? 0.0 : static_cast<double>(r.correct) / r.fires;
  return r;
}

PrecisionResult find_precision(const Rule& rule, std::span<const Instance> labeled) {
  const auto gold = gold_labels(labeled);
  std::vector<Label> firing;
  firing.reserve(labeled.size());
  for (const auto& inst : labeled) firing.push_back(apply_rule(rule, inst));
  return find_precision(firing, gold);
}

double find_coverage(const FiringMatrix& fm, std::span<const std::size_t> cols) {
  require_rows(fm.rows(), "coverage");
  std::size_t covered = 0;
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    for (auto c : cols) {
      if (fm.at(r, c) != kAbstain) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / fm.rows();
}

double find_coverage(const RuleSet& rules, std::span<const Instance> unlabeled) {
  const auto fm = build_firing_matrix(rules, unlabeled);
  return find_coverage(fm, all_columns(rules.size()));
}

double find_overlap(std::span<const Label> a, std::span<const Label> b) {
  require_same_length(a, b);
  require_rows(a.size(), "overlap");
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] != kAbstain && b[i] != kAbstain);
  return static_cast<double>(n) / a.size();
}

double find_agreement(std::span<const Label> a, std::span<const Label> b) {
  require_same_length(a, b);
  require_rows(a.size(), "agreement");
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] != kAbstain && a[i] == b[i]);
  return static_cast<double>(n) / a.size();
}

double find_conflict(std::span<const Label> a, std::span<const Label> b) {
  require_same_length(a, b);
  require_rows(a.size(), "conflict");
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    n += (a[i] != kAbstain && b[i] != kAbstain && a[i] != b[i]);
  }
  return static_cast<double>(n) / a.size();
}

double find_agreement(const Rule& a, const Rule& b, std::span<const Instance> unlabeled) {
  std::vector<Label> fa, fb;
  for (const auto& inst : unlabeled) {
    fa.push_back(apply_rule(a, inst));
    fb.push_back(apply_rule(b, inst));
  }
  return find_agreement(fa, fb);
}

double find_conflict(const Rule& a, const Rule& b, std::span<const Instance> unlabeled) {
  std::vector<Label> fa, fb;
  for (const auto& inst : unlabeled) {
    fa.push_back(apply_rule(a, inst));
    fb.push_back(apply_rule(b, inst));
  }
  return find_conflict(fa, fb);
}

double set_non_conflict(const FiringMatrix& fm, std::span<const std::size_t> cols) {
  require_rows(fm.rows(), "non-conflict");
  std::size_t ok = 0;
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    Label seen = kAbstain;
    bool conflict = false;
    for (auto c : cols) {
      const Label v = fm.at(r, c);
      if (v == kAbstain) continue;
      if (seen == kAbstain) {
        seen = v;
      } else if (v != seen) {
        conflict = true;
        break;
      }
    }
    ok += !conflict;
  }
  return static_cast<double>(ok) / fm.rows();
}

double set_non_conflict(const RuleSet& rules, std::span<const Instance> unlabeled) {
  const auto fm = build_firing_matrix(rules, unlabeled);
  return set_non_conflict(fm, all_columns(rules.size()));
}

SimilarityMatrix SimilarityMatrix::from_dense(std::size_t n, std::vector<double> values) {
  if (values.size() != n * n) {
    throw ConfigError("similarity matrix needs " + std::to_string(n * n) + " values");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i * n + i] != 0.0) throw ConfigError("similarity diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = values[i * n + j];
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw ConfigError("similarity entries must be finite and nonnegative");
      }
      if (v != values[j * n + i]) throw ConfigError("similarity matrix must be symmetric");
    }
  }
  SimilarityMatrix s;
  s.n_ = n;
  s.values_ = std::move(values);
  return s;
}

void SimilarityMatrix::set_pair(std::size_t i, std::size_t j, double value) {
  if (i == j) throw ConfigError("similarity diagonal is fixed at zero");
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ConfigError("similarity entries must be finite and nonnegative");
  }
  values_[i * n_ + j] = value;
  values_[j * n_ + i] = value;
}

double SimilarityMatrix::column_sum(std::size_t j) const {
  double total = 0.0;
  for (std::size_t i = 0; i < n_; ++i) total += at(i, j);
  return total;
}

CorpusStats::CorpusStats(const RuleSet& rules, std::span<const Instance> labeled,
                         std::span<const Instance> unlabeled)
    : labeled_(build_firing_matrix(rules, labeled)),
      unlabeled_(build_firing_matrix(rules, unlabeled)) {
  require_rows(unlabeled.size(), "rule statistics");
  const std::size_t m = rules.size();
  const auto gold = gold_labels(labeled);

  rule_stats_.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    auto& st = rule_stats_[j];
    const auto p = find_precision(labeled_.column(j), gold);
    st.precision = p.value;
    st.no_fire = p.no_fire;
    st.fires_labeled = p.fires;
    st.labeled_coverage =
        labeled.empty() ? 0.0 : static_cast<double>(p.fires) / labeled.size();
  }

  overlap_.assign(m * m, 0);
  agree_.assign(m * m, 0);
  std::vector<std::size_t> firing;
  for (std::size_t r = 0; r < unlabeled_.rows(); ++r) {
    const auto row = unlabeled_.row(r);
    firing.clear();
    for (std::size_t j = 0; j < m; ++j) {
      if (row[j] != kAbstain) firing.push_back(j);
    }
    for (auto a : firing) {
      ++rule_stats_[a].fires_unlabeled;
      for (auto b : firing) {
        ++overlap_[a * m + b];
        if (row[a] == row[b]) ++agree_[a * m + b];
      }
    }
  }
  for (auto& st : rule_stats_) {
    st.unlabeled_coverage = static_cast<double>(st.fires_unlabeled) / unlabeled_.rows();
  }
}

PairStats CorpusStats::pair(std::size_t i, std::size_t j) const {
  const double n = static_cast<double>(unlabeled_.rows());
  const std::uint32_t both = overlap_count(i, j);
  const std::uint32_t agree = agree_count(i, j);
  const std::size_t either =
      rule_stats_[i].fires_unlabeled + rule_stats_[j].fires_unlabeled - both;
  PairStats p;
  p.joint_coverage = (i == j ? rule_stats_[i].fires_unlabeled : either) / n;
  p.overlap = both / n;
  p.agreement = agree / n;
  p.conflict = (both - agree) / n;
  return p;
}

double CorpusStats::agreement_given_overlap(std::size_t i, std::size_t j) const {
  const std::uint32_t both = overlap_count(i, j);
  return both == 0 ? 0.0 : static_cast<double>(agree_count(i, j)) / both;
}

double CorpusStats::coverage(std::span<const std::size_t> set) const {
  return find_coverage(unlabeled_, set);
}

double CorpusStats::non_conflict(std::span<const std::size_t> set) const {
  return set_non_conflict(unlabeled_, set);
}

double CorpusStats::labeled_coverage(std::span<const std::size_t> set) const {
  if (labeled_.rows() == 0) return 0.0;
  return find_coverage(labeled_, set);
}

SetStats CorpusStats::set(std::span<const std::size_t> members) const {
  SetStats s;
  s.coverage = coverage(members);
  s.non_conflict = non_conflict(members);
  s.labeled_coverage = labeled_coverage(members);
  if (!members.empty()) {
    double total = 0.0;
    for (auto i : members) total += rule_stats_[i].precision;
    s.avg_precision = total / members.size();
  }
  return s;
}

SimilarityMatrix build_similarity_matrix(const CorpusStats& stats, double w,
                                         double gamma) {
  if (!(w >= 0.0) || !(gamma >= 0.0)) {
    throw ConfigError("similarity weights w and gamma must be nonnegative");
  }
  const std::size_t m = stats.size();
  if (m == 0) throw ConfigError("similarity matrix needs at least one rule");
  SimilarityMatrix s(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const auto p = stats.pair(i, j);
      s.set_pair(i, j,
                 stats.rule(i).precision + stats.rule(j).precision +
                     w * p.joint_coverage + gamma * p.agreement);
    }
  }
  return s;
}

SimilarityMatrix build_similarity_matrix(const RuleSet& rules,
                                         std::span<const Instance> labeled,
                                         std::span<const Instance> unlabeled,
                                         double w, double gamma) {
  if (rules.empty()) throw ConfigError("similarity matrix needs at least one rule");
  return build_similarity_matrix(CorpusStats(rules, labeled, unlabeled), w, gamma);
}

}  // namespace rulefilter
