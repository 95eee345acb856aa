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

#include <filesystem>
#include <map>

#include "harmkit/annotation.h"

namespace harmkit {
namespace {

std::string FixedTime() { return "2024-01-01T00:00:00Z"; }

RuleBase SeedRules() {
  RuleBase rb;
  for (Category c : kViolationCategories) {
    Rule r;
    r.id = std::string(EnglishName(c)) + "-r1";
    r.category = c;
    r.ordinal = 1;
    r.body = "规则 " + r.id;
    if (c == Category::kGambling) r.hint_terms = {"时时彩"};
    rb = rb.WithAdded(r, FixedTime());
  }
  return rb;
}

Corpus Pool(size_t per_category) {
  std::vector<Sample> samples;
  for (Category c : kAllCategories) {
    for (size_t i = 0; i < per_category; ++i) {
      const std::string id = std::string(EnglishName(c)) + "-" + std::to_string(i);
      std::string text = "样本 " + id;
      if (c == Category::kGambling && i == 0) text += " 一起玩时时彩";
      samples.push_back({id, text, c, "fixture", {}});
    }
  }
  return Corpus("pool", samples);
}

AnnotationDecision RetainFor(Category c) {
  return AnnotationDecision::RetainMatched(IsViolation(c) ? std::string(EnglishName(c)) + "-r1" : "");
}

// Retains `retain` and discards the rest of every category.
void DecideAll(AnnotationService& svc, const std::string& sid, const Corpus& pool,
               std::map<Category, size_t> retain) {
  std::map<Category, size_t> done;
  for (const auto& s : pool.samples()) {
    const bool keep = done[s.label]++ < retain[s.label];
    svc.Submit(sid, s.id, keep ? RetainFor(s.label) : AnnotationDecision::Discard("noise"), "ann");
  }
}

TEST(Session, FreshSessionAllUndecidedAndNextInOrder) {
  AnnotationService svc(SeedRules(), FixedTime);
  svc.AddSession("s", Pool(3));
  auto p = svc.GetProgress("s");
  for (const auto& c : p.per_category) {
    EXPECT_EQ(c.undecided, 3);
    EXPECT_EQ(c.retained + c.discarded, 0);
  }
  auto next = svc.Next("s", Category::kGambling);
  ASSERT_TRUE(next);
  EXPECT_EQ(next->sample.id, "Gambling-0");
  ASSERT_FALSE(next->hints.empty());
  EXPECT_EQ(next->hints[0].term, "时时彩");
  EXPECT_EQ(svc.Next("s", Category::kFraud)->sample.id, "Fraud-0");
  EXPECT_EQ(svc.Next("s", std::nullopt)->sample.id, "Gambling-0");
  EXPECT_THROW(svc.Next("nope", std::nullopt), Error);
}

TEST(Session, RetainAndDiscardCounted) {
  AnnotationService svc(SeedRules(), FixedTime);
  svc.AddSession("s", Pool(2));
  svc.Submit("s", "Fraud-0", RetainFor(Category::kFraud), "a");
  svc.Submit("s", "Fraud-1", AnnotationDecision::Discard(), "a");
  const auto& f = svc.GetProgress("s").per_category[Index(Category::kFraud)];
  EXPECT_EQ(f.retained, 1);
  EXPECT_EQ(f.discarded, 1);
  EXPECT_EQ(f.undecided, 0);
  EXPECT_FALSE(svc.Next("s", Category::kFraud).has_value());
}

TEST(Session, SecondDecisionConflictsAndStateUnchanged) {
  AnnotationService svc(SeedRules(), FixedTime);
  svc.AddSession("s", Pool(1));
  svc.Submit("s", "Abuse-0", AnnotationDecision::Discard(), "a");
  const size_t events = svc.events().size();
  try {
    svc.Submit("s", "Abuse-0", RetainFor(Category::kAbuse), "a");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConflict);
  }
  EXPECT_EQ(svc.StateOf("s", "Abuse-0"), SampleState::kDiscarded);
  EXPECT_EQ(svc.events().size(), events);
}

TEST(Session, ValidationErrors) {
  AnnotationService svc(SeedRules(), FixedTime);
  svc.AddSession("s", Pool(1));
  auto code = [&](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  EXPECT_EQ(code([&] { svc.Submit("s", "missing", AnnotationDecision::Discard(), "a"); }),
            ErrorCode::kNotFound);
  // Rule of another category.
  EXPECT_EQ(code([&] { svc.Submit("s", "Fraud-0", RetainFor(Category::kAbuse), "a"); }),
            ErrorCode::kValidation);
  EXPECT_EQ(code([&] { svc.Submit("s", "Fraud-0", AnnotationDecision::RetainMatched(""), "a"); }),
            ErrorCode::kValidation);
  Rule wrong;
  wrong.id = "x";
  wrong.category = Category::kGambling;
  wrong.body = "b";
  EXPECT_EQ(code([&] { svc.Submit("s", "Fraud-0", AnnotationDecision::AddRule(wrong), "a"); }),
            ErrorCode::kValidation);
  EXPECT_EQ(svc.StateOf("s", "Fraud-0"), SampleState::kUndecided);
  EXPECT_EQ(svc.rulebase().version(), 5);
  svc.Submit("s", "NonViolation-0", AnnotationDecision::RetainMatched(""), "a");
  EXPECT_EQ(svc.StateOf("s", "NonViolation-0"), SampleState::kRetained);
}

TEST(Session, RuleChangesBumpVersionAndRetain) {
  AnnotationService svc(SeedRules(), FixedTime);
  svc.AddSession("s", Pool(2));
  Rule r;
  r.id = "Fraud-r2";
  r.category = Category::kFraud;
  r.body = "冒充客服退款";
  r.hint_terms = {"退款"};
  EXPECT_EQ(svc.Submit("s", "Fraud-0", AnnotationDecision::AddRule(r), "a"), 6);
  EXPECT_EQ(svc.StateOf("s", "Fraud-0"), SampleState::kRetained);
  EXPECT_EQ(svc.Submit("s", "Fraud-1", AnnotationDecision::UpdateRule("Fraud-r2", "改", {}), "a"), 7);
  EXPECT_EQ(svc.rulebase().Find("Fraud-r2")->body, "改");
  EXPECT_EQ(svc.AddRuleDirect([] {
    Rule x;
    x.id = "Abuse-r2";
    x.category = Category::kAbuse;
    x.body = "辱骂";
    return x;
  }(), "a"), 8);
  EXPECT_EQ(svc.UpdateRuleDirect("Abuse-r2", "辱骂他人", {"滚"}, "a"), 9);
}

TEST(Finalize, DiscardedNeverAppearAndAllRetainedReturned) {
  AnnotationService svc(SeedRules(), FixedTime);
  const Corpus pool = Pool(7);
  svc.AddSession("s", pool);
  std::map<Category, size_t> keep;
  for (Category c : kAllCategories) keep[c] = 5;
  DecideAll(svc, "s", pool, keep);
  Corpus bench = svc.Finalize("s", 5, 1);
  EXPECT_EQ(bench.size(), 30u);
  for (const auto& s : bench.samples()) EXPECT_EQ(svc.StateOf("s", s.id), SampleState::kRetained);
  EXPECT_TRUE(svc.GetProgress("s").finalized);
  EXPECT_THROW(svc.Next("s", std::nullopt), Error);
  EXPECT_THROW(svc.Finalize("s", 5, 1), Error);
}

TEST(Finalize, ShortfallNamesFraudFourAndStaysActive) {
  AnnotationService svc(SeedRules(), FixedTime);
  const Corpus pool = Pool(6);
  svc.AddSession("s", pool);
  std::map<Category, size_t> keep;
  for (Category c : kAllCategories) keep[c] = 5;
  keep[Category::kFraud] = 4;
  DecideAll(svc, "s", pool, keep);
  try {
    svc.Finalize("s", 5, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShortfall);
    EXPECT_NE(std::string(e.what()).find("Fraud/4"), std::string::npos);
  }
  EXPECT_FALSE(svc.GetProgress("s").finalized);
  EXPECT_EQ(svc.Finalize("s", 4, 0).size(), 24u);
}

// Random actions against a plain map oracle, then a replay from the log.
TEST(Property, ProgressPartitionsAndReplayReproducesState) {
  const auto dir = std::filesystem::temp_directory_path() / "harmkit_annotation_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto log_path = dir / "decisions.jsonl";

  Rng rng(2024);
  const Corpus pool = Pool(10);
  AnnotationService svc(SeedRules(), FixedTime);
  svc.AddSession("s", pool);
  svc.AttachLog(log_path);
  std::map<std::string, SampleState> oracle;
  int64_t expected_version = 5;
  int rule_serial = 0;
  for (int step = 0; step < 200; ++step) {
    const Sample& s = pool.samples()[rng.UniformIndex(pool.size())];
    const bool decided = oracle.count(s.id) > 0;
    const size_t action = rng.UniformIndex(4);
    AnnotationDecision d = AnnotationDecision::Discard();
    bool adds_rule = false;
    if (action == 1) {
      d = RetainFor(s.label);
    } else if (action == 2 && IsViolation(s.label)) {
      Rule r;
      r.id = "new-" + std::to_string(rule_serial);
      r.category = s.label;
      r.body = "新规则 " + r.id;
      d = AnnotationDecision::AddRule(r);
      adds_rule = true;
    }
    try {
      svc.Submit("s", s.id, d, "ann");
      ASSERT_FALSE(decided);
      oracle[s.id] = action == 0 || action == 3 ? SampleState::kDiscarded : SampleState::kRetained;
      if (action == 2 && !IsViolation(s.label)) oracle[s.id] = SampleState::kDiscarded;
      if (adds_rule) {
        ++expected_version;
        ++rule_serial;
      }
    } catch (const Error& e) {
      ASSERT_TRUE(decided) << e.what();
      EXPECT_EQ(e.code(), ErrorCode::kConflict);
    }
    const auto p = svc.GetProgress("s");
    EXPECT_EQ(p.rulebase_version, expected_version);
    for (Category c : kAllCategories) {
      const auto& cp = p.per_category[Index(c)];
      EXPECT_EQ(cp.undecided + cp.retained + cp.discarded, 10);
    }
  }
  for (const auto& sample : pool.samples()) {
    auto it = oracle.find(sample.id);
    EXPECT_EQ(svc.StateOf("s", sample.id), it == oracle.end() ? SampleState::kUndecided : it->second);
  }

  AnnotationService fresh(SeedRules(), FixedTime);
  fresh.AddSession("s", pool);
  AnnotationService::Replay(fresh, AnnotationService::ParseLog(ReadFile(log_path)));
  EXPECT_EQ(fresh.rulebase().ToJson(), svc.rulebase().ToJson());
  EXPECT_EQ(ProgressToJson(fresh.GetProgress("s")), ProgressToJson(svc.GetProgress("s")));
  for (const auto& sample : pool.samples()) {
    EXPECT_EQ(fresh.StateOf("s", sample.id), svc.StateOf("s", sample.id));
  }
  EXPECT_EQ(fresh.events().size(), svc.events().size());
  std::filesystem::remove_all(dir);
}

TEST(Decision, JsonRoundTrip) {
  Rule r;
  r.id = "x";
  r.category = Category::kPornography;
  r.body = "b";
  for (const auto& d : {AnnotationDecision::RetainMatched("x"), AnnotationDecision::AddRule(r),
                        AnnotationDecision::UpdateRule("x", "new", {"h"}),
                        AnnotationDecision::Discard("dup")}) {
    EXPECT_EQ(DecisionToJson(DecisionFromJson(DecisionToJson(d))), DecisionToJson(d));
  }
  EXPECT_THROW(DecisionFromJson(Json{{"type", "maybe"}}), Error);
}

class ApiTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "harmkit_api_test";
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
    svc_.AddSession("s1", Pool(2));
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  HttpReply Call(const std::string& method, const std::string& path, const Json& body = nullptr,
                 std::map<std::string, std::string> query = {}) {
    return api_.Handle(method, path, query, body.is_null() ? "" : body.dump());
  }

  std::filesystem::path dir_;
  AnnotationService svc_{SeedRules(), FixedTime};
  AnnotationApi api_{svc_, std::filesystem::temp_directory_path() / "harmkit_api_test"};
};

TEST_F(ApiTest, AnnotationFlowOverHandle) {
  auto next = Call("GET", "/sessions/s1/next", nullptr, {{"category", "Gambling"}});
  ASSERT_EQ(next.status, 200);
  EXPECT_EQ(next.body["sample"]["id"], "Gambling-0");
  EXPECT_EQ(next.body["hints"][0]["term"], "时时彩");

  auto ok = Call("POST", "/sessions/s1/decisions",
                 {{"sample_id", "Gambling-0"},
                  {"decision", {{"type", "retain_matched"}, {"rule_id", "Gambling-r1"}}},
                  {"annotator", "ann"}});
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(ok.body["rulebase_version"], 5);

  auto again = Call("POST", "/sessions/s1/decisions",
                    {{"sample_id", "Gambling-0"}, {"decision", {{"type", "discard"}}}});
  EXPECT_EQ(again.status, 409);
  EXPECT_EQ(again.body["code"], "conflict");

  auto bad = Call("POST", "/sessions/s1/decisions", Json{{"decision", {{"type", "discard"}}}});
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(Call("GET", "/sessions/zz/progress").status, 404);
  EXPECT_EQ(Call("DELETE", "/rulebase").status, 404);

  auto added = Call("POST", "/rulebase/rules",
                    {{"rule", {{"id", "Fraud-r2"}, {"category", "Fraud"}, {"body", "刷单返利"}}},
                     {"annotator", "ann"}});
  EXPECT_EQ(added.body["rulebase_version"], 6);
  auto patched = Call("PATCH", "/rulebase/rules/Fraud-r2", {{"hint_terms", {"刷单"}}});
  EXPECT_EQ(patched.body["rulebase_version"], 7);
  auto rb = Call("GET", "/rulebase");
  EXPECT_EQ(rb.body["version"], 7);
  EXPECT_EQ(Call("PATCH", "/rulebase/rules/none", {{"body", "x"}}).status, 404);

  auto progress = Call("GET", "/sessions/s1/progress");
  EXPECT_EQ(progress.body["per_category"]["Gambling"]["retained"], 1);
  EXPECT_EQ(progress.body["status"], "active");
  EXPECT_EQ(Call("GET", "/sessions").body["sessions"], Json::array({"s1"}));
}

TEST_F(ApiTest, QueueEmptyShortfallAndFinalize) {
  const Corpus pool = Pool(2);
  for (const auto& s : pool.samples()) {
    const bool retain = s.id.back() == '0';
    Call("POST", "/sessions/s1/decisions",
         {{"sample_id", s.id},
          {"decision", retain ? DecisionToJson(RetainFor(s.label)) : Json{{"type", "discard"}}}});
  }
  auto empty = Call("GET", "/sessions/s1/next");
  EXPECT_EQ(empty.status, 404);
  EXPECT_EQ(empty.body["code"], "queue_empty");
  auto short_reply = Call("POST", "/sessions/s1/finalize", {{"m", 2}, {"seed", 1}});
  EXPECT_EQ(short_reply.status, 409);
  EXPECT_EQ(short_reply.body["code"], "shortfall");
  auto fin = Call("POST", "/sessions/s1/finalize", {{"m", 1}, {"seed", 1}});
  ASSERT_EQ(fin.status, 200);
  EXPECT_EQ(fin.body["count"], 6);
  const std::string written = ReadFile(fin.body["path"].get<std::string>());
  EXPECT_EQ(Sha256Hex(written), fin.body["sha256"]);
  EXPECT_EQ(LoadRuleBase(fin.body["rules_path"].get<std::string>()).version(), 5);
  EXPECT_EQ(Call("GET", "/sessions/s1/progress").body["status"], "finalized");
  EXPECT_EQ(Call("GET", "/sessions/s1/next").status, 409);
}

}  // namespace
}  // namespace harmkit
