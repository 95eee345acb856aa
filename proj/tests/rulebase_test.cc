// Copyright 2026 The harmkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "harmkit/rulebase.h"

namespace harmkit {
namespace {

Rule MakeRule(std::string id, Category c, int ordinal, std::string body,
              std::vector<std::string> hints = {}) {
  Rule r;
  r.id = std::move(id);
  r.category = c;
  r.ordinal = ordinal;
  r.title = r.id;
  r.body = std::move(body);
  r.hint_terms = std::move(hints);
  return r;
}

const std::string kTs = "2024-01-01T00:00:00Z";

TEST(RuleBase, AddIncrementsVersionAndLogs) {
  RuleBase rb;
  EXPECT_EQ(rb.version(), 0);
  auto one = rb.WithAdded(MakeRule("g1", Category::kGambling, 1, "一"), kTs);
  EXPECT_EQ(one.version(), 1);
  EXPECT_EQ(one.rules().size(), 1u);
  auto two = one.WithAdded(MakeRule("f1", Category::kFraud, 1, "二"), kTs);
  EXPECT_EQ(two.version(), 2);
  ASSERT_EQ(two.changelog().size(), 2u);
  EXPECT_EQ(two.changelog()[1].action, "add");
  EXPECT_EQ(two.changelog()[1].rule_id, "f1");
  EXPECT_EQ(two.Find("f1")->created_version, 2);
  // Snapshots are immutable.
  EXPECT_EQ(one.rules().size(), 1u);
}

TEST(RuleBase, DuplicateIdLeavesBaseUnchanged) {
  auto rb = RuleBase().WithAdded(MakeRule("g1", Category::kGambling, 1, "一"), kTs);
  const Json before = rb.ToJson();
  try {
    rb.WithAdded(MakeRule("g1", Category::kFraud, 1, "二"), kTs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConflict);
  }
  EXPECT_EQ(rb.ToJson(), before);
}

TEST(RuleBase, RejectsInvalidRules) {
  RuleBase rb;
  EXPECT_THROW(rb.WithAdded(MakeRule("", Category::kGambling, 1, "x"), kTs), Error);
  EXPECT_THROW(rb.WithAdded(MakeRule("n", Category::kNonViolation, 1, "x"), kTs), Error);
  EXPECT_THROW(rb.WithAdded(MakeRule("e", Category::kGambling, 1, ""), kTs), Error);
  EXPECT_THROW(rb.WithAdded(MakeRule("h", Category::kGambling, 1, "x", {""}), kTs), Error);
}

TEST(RuleBase, UpdateReadsBackAndRecordsPrevious) {
  auto rb = RuleBase().WithAdded(MakeRule("a1", Category::kAbuse, 1, "旧", {"骂"}), kTs);
  auto up = rb.WithUpdated("a1", "新", {"骂", "滚"}, kTs);
  EXPECT_EQ(up.Find("a1")->body, "新");
  EXPECT_LT(rb.version(), up.version());
  EXPECT_EQ(up.Find("a1")->last_modified_version, up.version());
  EXPECT_EQ(up.Find("a1")->created_version, 1);
  EXPECT_EQ(up.changelog().back().previous_body, "旧");
  EXPECT_EQ(up.changelog().back().previous_hint_terms, std::vector<std::string>{"骂"});
  try {
    up.WithUpdated("zz", "x", {}, kTs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
}

TEST(RuleBase, AppendOrdinal) {
  auto rb = RuleBase()
                .WithAdded(MakeRule("g-b", Category::kGambling, 4, "一"), kTs)
                .WithAdded(MakeRule("g-a", Category::kGambling, 0, "二"), kTs);
  EXPECT_EQ(rb.Find("g-a")->ordinal, 5);
}

TEST(RuleBase, JsonRoundTripAndValidation) {
  auto rb = RuleBase()
                .WithAdded(MakeRule("g1", Category::kGambling, 1, "一", {"时时彩"}), kTs)
                .WithUpdated("g1", "一改", {}, kTs);
  auto back = RuleBase::FromJson(Json::parse(rb.ToJson().dump()));
  EXPECT_EQ(back.version(), rb.version());
  EXPECT_EQ(back.rules(), rb.rules());
  EXPECT_EQ(back.changelog(), rb.changelog());
  Json bad = rb.ToJson();
  bad["rules"][0]["category"] = "Spam";
  EXPECT_THROW(RuleBase::FromJson(bad), Error);
  Json dup = rb.ToJson();
  dup["rules"].push_back(dup["rules"][0]);
  EXPECT_THROW(RuleBase::FromJson(dup), Error);
}

TEST(RuleBase, ShippedRulesLoad) {
  auto rb = LoadRuleBase(std::filesystem::path(HARMKIT_DATA_DIR) / "rules.json");
  EXPECT_GE(rb.rules().size(), 5u);
  for (Category c : kViolationCategories) EXPECT_FALSE(rb.RulesFor(c).empty());
  EXPECT_TRUE(rb.RulesFor(Category::kNonViolation).empty());
}

TEST(Render, EmptyBaseIsEmptyString) { EXPECT_EQ(RenderRules(RuleBase()), ""); }

TEST(Render, SingleGamblingRuleFormat) {
  auto rb = RuleBase().WithAdded(
      MakeRule("g1", Category::kGambling, 1, "使用赌博行业术语：包括“时时彩”等词汇。"), kTs);
  const std::string out = RenderRules(rb);
  EXPECT_EQ(out.rfind("博彩：\n1. ", 0), 0u);
  EXPECT_EQ(out, "博彩：\n1. 使用赌博行业术语：包括“时时彩”等词汇。");
  EXPECT_EQ(RenderRules(rb), out);
}

TEST(Render, MultipleCategoriesAndNumbering) {
  auto rb = RuleBase()
                .WithAdded(MakeRule("f2", Category::kFraud, 2, "乙"), kTs)
                .WithAdded(MakeRule("g1", Category::kGambling, 1, "甲"), kTs)
                .WithAdded(MakeRule("f1", Category::kFraud, 1, "丙"), kTs);
  EXPECT_EQ(RenderRules(rb), "博彩：\n1. 甲\n\n欺诈：\n1. 丙\n2. 乙");
  EXPECT_EQ(RenderRules(rb, {Category::kFraud}), "欺诈：\n1. 丙\n2. 乙");
}

TEST(Render, InsertionOrderDoesNotMatter) {
  std::vector<Rule> rules = {
      MakeRule("a", Category::kAbuse, 1, "一"), MakeRule("b", Category::kAbuse, 2, "二"),
      MakeRule("c", Category::kAbuse, 2, "三"), MakeRule("d", Category::kPornography, 1, "四"),
      MakeRule("e", Category::kIllicitAds, 7, "五")};
  std::string reference;
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    rng.Shuffle(rules);
    RuleBase rb;
    for (const auto& r : rules) rb = rb.WithAdded(r, kTs);
    const std::string out = RenderRules(rb);
    if (trial == 0) reference = out;
    EXPECT_EQ(out, reference);
  }
}

TEST(Hints, SingleMatchWithSpan) {
  auto rb = RuleBase().WithAdded(MakeRule("g1", Category::kGambling, 1, "x", {"时时彩"}), kTs);
  const std::string text = "今晚一起玩时时彩吧";
  auto m = MatchHints(rb, text);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(text.substr(m[0].begin, m[0].end - m[0].begin), "时时彩");
  EXPECT_EQ(m[0].begin, std::string("今晚一起玩").size());
  EXPECT_TRUE(MatchHints(rb, "今天天气不错").empty());
}

TEST(Hints, OverlappingTermsAgainstBruteForce) {
  auto rb = RuleBase()
                .WithAdded(MakeRule("g1", Category::kGambling, 1, "x", {"接龙", "红包接龙"}), kTs)
                .WithAdded(MakeRule("g2", Category::kGambling, 2, "y", {"龙龙", "包"}), kTs);
  const std::string text = "发红包接龙龙龙接龙";
  auto m = MatchHints(rb, text);
  // Oracle: test every (term, byte offset) pair.
  std::vector<HintMatch> expected;
  for (const Rule& r : rb.rules()) {
    for (const auto& t : r.hint_terms) {
      for (size_t i = 0; i + t.size() <= text.size(); ++i) {
        if (text.compare(i, t.size(), t) == 0) expected.push_back({r.id, t, i, i + t.size()});
      }
    }
  }
  std::sort(expected.begin(), expected.end(), [](const HintMatch& a, const HintMatch& b) {
    return std::tie(a.begin, a.end, a.rule_id, a.term) < std::tie(b.begin, b.end, b.rule_id, b.term);
  });
  EXPECT_EQ(m, expected);
  bool both = false;
  for (const auto& a : m) {
    for (const auto& b : m) both |= a.term == "接龙" && b.term == "红包接龙" && a.begin > b.begin && a.end == b.end;
  }
  EXPECT_TRUE(both);
  for (const auto& x : m) EXPECT_EQ(text.substr(x.begin, x.end - x.begin), x.term);
}

TEST(RuleBase, SaveLoadRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "harmkit_rulebase_test.json";
  auto rb = RuleBase().WithAdded(MakeRule("p1", Category::kPornography, 1, "内容"), kTs);
  SaveRuleBase(rb, path);
  EXPECT_EQ(LoadRuleBase(path).ToJson(), rb.ToJson());
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace harmkit
