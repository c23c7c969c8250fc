#include "doctest.h"
#include "helpers.hpp"
#include "rulefilter/errors.hpp"

using namespace testing;

TEST_SUITE("core") {

TEST_CASE("tokenize lowercases and splits on punctuation") {
  CHECK(tokenize("Check OUT my-channel!!") ==
        std::vector<std::string>{"check", "out", "my", "channel"});
  CHECK(tokenize("  ").empty());
  CHECK(tokenize("a1 b2") == std::vector<std::string>{"a1", "b2"});
  // multibyte words stay whole
  CHECK(tokenize("caf\xc3\xa9 ok") == std::vector<std::string>{"caf\xc3\xa9", "ok"});
}

TEST_CASE("apply_rule matches contiguous token runs only") {
  const auto inst = make_instance(1, "please subscribe to my channel");
  CHECK(apply_rule(make_rule(0, "subscribe", 2), inst) == 2);
  CHECK(apply_rule(make_rule(0, "my channel", 1), inst) == 1);
  CHECK(apply_rule(make_rule(0, "subscribe channel", 1), inst) == kAbstain);
  // token match, not substring
  CHECK(apply_rule(make_rule(0, "chan", 1), inst) == kAbstain);
}

TEST_CASE("RuleSet rejects bad rules") {
  RuleSet rs;
  rs.add(make_rule(3, "x", 1));
  CHECK_THROWS_AS(rs.add(make_rule(3, "y", 1)), ConfigError);
  CHECK_THROWS_AS(rs.add(make_rule(4, "", 1)), ConfigError);
  CHECK_THROWS_AS(rs.add(make_rule(5, "z", 0)), ConfigError);
  CHECK(rs.index_of(3) == std::optional<std::size_t>(0));
  CHECK_FALSE(rs.index_of(9).has_value());
}

TEST_CASE("RuleSet subset keeps the given order") {
  RuleSet rs({make_rule(10, "a", 1), make_rule(11, "b", 2), make_rule(12, "c", 1)});
  const std::vector<std::size_t> pick{2, 0};
  const auto sub = rs.subset(pick);
  REQUIRE(sub.size() == 2);
  CHECK(sub[0].id == 12);
  CHECK(sub[1].id == 10);
}

TEST_CASE("firing matrix cells equal apply_rule") {
  RuleSet rs({make_rule(0, "good", 1), make_rule(1, "bad", 2), make_rule(2, "not good", 2)});
  std::vector<Instance> docs{make_instance(0, "good movie"), make_instance(1, "not good at all"),
                             make_instance(2, "bad bad"), make_instance(3, "nothing")};
  const auto fm = build_firing_matrix(rs, docs);
  REQUIRE(fm.rows() == 4);
  REQUIRE(fm.cols() == 3);
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    for (std::size_t c = 0; c < fm.cols(); ++c) CHECK(fm.at(r, c) == apply_rule(rs[c], docs[r]));
  }
  CHECK(fm.column(0) == std::vector<Label>{1, 1, 0, 0});
  const std::vector<std::size_t> cols{2};
  CHECK(fm.select_columns(cols).column(0) == std::vector<Label>{0, 2, 0, 0});
}

TEST_CASE("duplicate instance ids are rejected") {
  RuleSet rs({make_rule(0, "a", 1)});
  std::vector<Instance> docs{make_instance(7, "a"), make_instance(7, "b")};
  CHECK_THROWS_AS(build_firing_matrix(rs, docs), ConfigError);
}

TEST_CASE("corpus validation") {
  Corpus c;
  c.labeled = {make_instance(0, "a", 1)};
  c.unlabeled = {make_instance(1, "b")};
  c.test = {make_instance(2, "c", 2)};
  CHECK_NOTHROW(c.validate());
  c.test.push_back(make_instance(0, "dup", 1));
  CHECK_THROWS_AS(c.validate(), DataError);
  c.test.pop_back();
  c.labeled.push_back(make_instance(5, "no gold"));
  CHECK_THROWS_AS(c.validate(), DataError);
  c.labeled.pop_back();
  c.labeled.push_back(make_instance(5, "too big", 3));
  CHECK_THROWS_AS(c.validate(), DataError);
}

TEST_CASE("rule origin round trip") {
  for (auto o : {RuleOrigin::stump, RuleOrigin::classifier_weight, RuleOrigin::external}) {
    CHECK(parse_rule_origin(to_string(o)) == o);
  }
}

}
