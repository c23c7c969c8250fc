#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "rulefilter/errors.hpp"

using namespace testing;

namespace {

std::vector<Instance> docs_from_sets(std::size_t n, const std::vector<std::pair<std::string,
                                     std::vector<std::size_t>>>& fires) {
  std::vector<std::string> text(n, "doc");
  for (const auto& [token, rows] : fires) {
    for (auto r : rows) text[r] += " " + token;
  }
  std::vector<Instance> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_instance(static_cast<InstanceId>(i), text[i]));
  return out;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("precision by hand") {
  const std::vector<Label> firing{1, 1, 0, 1};
  const std::vector<Label> gold{1, 2, 1, 1};
  const auto p = find_precision(firing, gold);
  CHECK(p.value == 2.0 / 3.0);
  CHECK(p.fires == 3);
  CHECK_FALSE(p.no_fire);

  const std::vector<Label> all{2, 2};
  const std::vector<Label> gold2{2, 2};
  CHECK(find_precision(all, gold2).value == 1.0);

  const std::vector<Label> none{0, 0};
  const auto q = find_precision(none, gold2);
  CHECK(q.value == 0.0);
  CHECK(q.no_fire);
}

TEST_CASE("coverage by hand") {
  const auto u = docs_from_sets(10, {{"a", {0, 1, 2, 3}}, {"b", {2, 3, 4, 5}}});
  CHECK(find_coverage(RuleSet({make_rule(0, "a", 1), make_rule(1, "b", 1)}), u) == 0.6);
  CHECK(find_coverage(RuleSet(), u) == 0.0);
  CHECK(find_coverage(RuleSet({make_rule(0, "doc", 1)}), u) == 1.0);
  CHECK_THROWS_AS(find_coverage(RuleSet({make_rule(0, "a", 1)}), std::vector<Instance>{}),
                  DataError);
}

TEST_CASE("agreement and conflict by hand") {
  // both fire on 0..3; same label on 0..2 needs per-instance labels, so use spans
  const std::vector<Label> a{1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  const std::vector<Label> b{1, 1, 1, 2, 0, 0, 0, 0, 0, 0};
  CHECK(find_agreement(a, b) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(find_conflict(a, b) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(find_overlap(a, b) == doctest::Approx(0.4).epsilon(1e-15));

  const auto u = docs_from_sets(10, {{"x", {0, 1}}, {"y", {5, 6, 7}}});
  const auto rx = make_rule(0, "x", 1), ry = make_rule(1, "y", 2);
  CHECK(find_agreement(rx, ry, u) == 0.0);
  CHECK(find_agreement(ry, ry, u) == find_coverage(RuleSet({ry}), u));
  CHECK(find_conflict(ry, ry, u) == 0.0);
  const auto rz = make_rule(2, "doc", 1);
  CHECK(find_conflict(rx, rz, u) == 0.0);  // same class never conflicts
}

TEST_CASE("set non-conflict by hand") {
  const auto u = docs_from_sets(10, {{"p", {0}}});
  const auto p1 = make_rule(0, "p", 1), p2 = make_rule(1, "p", 2);
  CHECK(set_non_conflict(RuleSet({p1}), u) == 1.0);
  CHECK(set_non_conflict(RuleSet(), u) == 1.0);
  CHECK(set_non_conflict(RuleSet({p1, p2}), u) == 0.9);
}

TEST_CASE("similarity entry by hand") {
  // alpha 0.8 / 0.6, joint coverage 0.5, agreement 0.2 on |U| = 10
  std::vector<Instance> labeled;
  InstanceId id = 0;
  // rule i: token "i", class 1; fires on 5 labeled with 4 correct
  for (int k = 0; k < 5; ++k) labeled.push_back(make_instance(id++, "i", k < 4 ? 1 : 2));
  // rule j: token "j", class 1; fires on 5 labeled with 3 correct
  for (int k = 0; k < 5; ++k) labeled.push_back(make_instance(id++, "j", k < 3 ? 1 : 2));
  const auto u = docs_from_sets(10, {{"i", {0, 1, 2}}, {"j", {1, 2, 3, 4}}});
  RuleSet rs({make_rule(0, "i", 1), make_rule(1, "j", 1)});
  const auto s = build_similarity_matrix(rs, labeled, u, 3.0, 0.3);
  CHECK(s.at(0, 1) == doctest::Approx(2.96).epsilon(1e-12));
  CHECK(s.at(1, 0) == s.at(0, 1));
  CHECK(s.at(0, 0) == 0.0);
  CHECK_THROWS_AS(build_similarity_matrix(rs, labeled, u, -1.0, 0.3), ConfigError);
}

TEST_CASE("similarity matrix validation") {
  CHECK_THROWS_AS(SimilarityMatrix::from_dense(2, {0, 1, 2, 0}), ConfigError);
  CHECK_THROWS_AS(SimilarityMatrix::from_dense(2, {1, 1, 1, 0}), ConfigError);
  CHECK_THROWS_AS(SimilarityMatrix::from_dense(2, {0, -1, -1, 0}), ConfigError);
  const auto s = SimilarityMatrix::from_dense(3, {0, 2, 1, 2, 0, 3, 1, 3, 0});
  CHECK(s.column_sum(1) == 5.0);
}

TEST_CASE("span statistics match brute force on random matrices") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 50);
    const std::size_t m = 1 + uniform_index(rng, 8);
    // arbitrary per-cell labels, not tied to a rule
    oracle::Columns cols(m, std::vector<Label>(n));
    std::vector<Label> gold(n);
    for (auto& col : cols)
      for (auto& v : col) v = static_cast<Label>(uniform_index(rng, 4));
    for (auto& g : gold) g = static_cast<Label>(uniform_index(rng, 3)) + 1;
    for (std::size_t a = 0; a < m; ++a) {
      CHECK(find_precision(cols[a], gold).value == oracle::precision(cols[a], gold).value());
      for (std::size_t b = 0; b < m; ++b) {
        const auto agree = oracle::agreement(cols[a], cols[b]);
        const auto conflict = oracle::conflict(cols[a], cols[b]);
        const auto over = oracle::overlap(cols[a], cols[b]);
        CHECK(find_agreement(cols[a], cols[b]) == agree.value());
        CHECK(find_conflict(cols[a], cols[b]) == conflict.value());
        CHECK(find_overlap(cols[a], cols[b]) == over.value());
        CHECK(agree.num + conflict.num == over.num);
        CHECK(std::abs(find_agreement(cols[a], cols[b]) + find_conflict(cols[a], cols[b]) -
                       find_overlap(cols[a], cols[b])) <= 1e-12);
      }
    }
  }
}

TEST_CASE("corpus statistics match brute force") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 50);
    const std::size_t m = 1 + uniform_index(rng, 8);
    const auto rf = random_firings(n, m, 3, rng);
    const CorpusStats cs(rf.rules, rf.docs, rf.docs);
    const auto fm = build_firing_matrix(rf.rules, rf.docs);
    for (std::size_t c = 0; c < m; ++c) {
      CHECK(fm.column(c) == rf.cols[c]);
      CHECK(cs.rule(c).precision == oracle::precision(rf.cols[c], rf.gold).value());
      CHECK(cs.rule(c).unlabeled_coverage == oracle::coverage(rf.cols, {c}, n).value());
      for (std::size_t d = 0; d < m; ++d) {
        const auto p = cs.pair(c, d);
        CHECK(p.agreement == oracle::agreement(rf.cols[c], rf.cols[d]).value());
        CHECK(p.conflict == oracle::conflict(rf.cols[c], rf.cols[d]).value());
        CHECK(p.overlap == oracle::overlap(rf.cols[c], rf.cols[d]).value());
        CHECK(p.joint_coverage == oracle::coverage(rf.cols, {c, d}, n).value());
      }
    }
    // random subset
    std::vector<std::size_t> set;
    for (std::size_t c = 0; c < m; ++c) {
      if (uniform_unit(rng) < 0.5) set.push_back(c);
    }
    CHECK(cs.coverage(set) == oracle::coverage(rf.cols, set, n).value());
    CHECK(cs.non_conflict(set) == oracle::non_conflict(rf.cols, set, n).value());
    CHECK(find_coverage(fm, set) == oracle::coverage(rf.cols, set, n).value());
    CHECK(set_non_conflict(fm, set) == oracle::non_conflict(rf.cols, set, n).value());
  }
}

TEST_CASE("coverage is monotone and non-conflict stays in range") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rf = random_firings(40, 8, 3, rng);
    const auto fm = build_firing_matrix(rf.rules, rf.docs);
    std::vector<std::size_t> set;
    double last = 0.0;
    for (std::size_t c = 0; c < 8; ++c) {
      set.push_back(c);
      const double cov = find_coverage(fm, set);
      CHECK(cov >= last);
      last = cov;
      const double nc = set_non_conflict(fm, set);
      CHECK(nc >= 0.0);
      CHECK(nc <= 1.0);
    }
  }
}

TEST_CASE("non-conflict drops when a disagreeing rule joins on covered points") {
  const auto u = docs_from_sets(10, {{"a", {0, 1, 2, 3}}, {"b", {0, 1}}, {"c", {2}}});
  const RuleSet one({make_rule(0, "a", 1)});
  const RuleSet two({make_rule(0, "a", 1), make_rule(1, "b", 2)});
  const RuleSet three({make_rule(0, "a", 1), make_rule(1, "b", 2), make_rule(2, "c", 2)});
  CHECK(set_non_conflict(one, u) == 1.0);
  CHECK(set_non_conflict(two, u) == 0.8);
  CHECK(set_non_conflict(three, u) == 0.7);
}

TEST_CASE("similarity matrix is symmetric with zero diagonal on random data") {
  std::mt19937_64 rng(99);
  const auto rf = random_firings(30, 6, 2, rng);
  const CorpusStats cs(rf.rules, rf.docs, rf.docs);
  const auto s = build_similarity_matrix(cs, 3.0, 0.3);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(s.at(i, i) == 0.0);
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(s.at(i, j) == s.at(j, i));
      CHECK(s.at(i, j) >= 0.0);
      if (i != j) {
        const auto p = cs.pair(i, j);
        const double expect = cs.rule(i).precision + cs.rule(j).precision +
                              3.0 * p.joint_coverage + 0.3 * p.agreement;
        CHECK(s.at(i, j) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
}

}
