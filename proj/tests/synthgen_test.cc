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

#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "harmkit/synthgen.h"

namespace harmkit {
namespace {

const std::filesystem::path kData(HARMKIT_DATA_DIR);

RuleBase ShippedRules() { return LoadRuleBase(kData / "rules.json"); }

Candidate MakeCandidate(std::string id, Category c, std::string response,
                        CandidateStatus status = CandidateStatus::kRaw) {
  Candidate cand;
  cand.scenario.id = std::move(id);
  cand.scenario.category = c;
  if (IsViolation(c)) cand.scenario.knowledge = {{std::string(EnglishName(c)) + "-1"}, "规则"};
  cand.response = std::move(response);
  cand.status = status;
  return cand;
}

std::vector<Candidate> PoolOf(size_t per_category) {
  std::vector<Candidate> out;
  for (Category c : kAllCategories) {
    for (size_t i = 0; i < per_category; ++i) {
      const std::string id = std::string(EnglishName(c)) + "-" + std::to_string(i);
      out.push_back(MakeCandidate(id, c, "内容 " + id));
    }
  }
  return out;
}

TEST(Tables, DefaultMatchesDataFileAndPublishedSizes) {
  const auto t = AttributeTables::Default();
  EXPECT_EQ(LoadAttributeTables(kData / "attribute_tables.json"), t);
  EXPECT_EQ(t.genders.size(), 3u);
  EXPECT_EQ(t.ages.size(), 10u);
  EXPECT_EQ(t.occupations.size(), 111u);
  EXPECT_EQ(t.educations.size(), 10u);
  EXPECT_EQ(t.lengths.size(), 11u);
  EXPECT_EQ(t.platforms.size(), 10u);
  EXPECT_EQ(t.perspectives.size(), 3u);
  EXPECT_EQ(t.evasions, (std::vector<std::string>{"拼音", "谐音词", "形似词", "emoji", "不规避"}));
  EXPECT_EQ(t.platforms, (std::vector<std::string>{"微博", "小红书", "QQ", "微信", "抖音", "B站",
                                                   "知乎", "快手", "豆瓣", "百度贴吧"}));
  EXPECT_EQ(t.lengths.back(), "50+");
  EXPECT_EQ(t.occupations.back(), "未知");
  EXPECT_EQ(AttributeTables::FromJson(t.ToJson()), t);
  Json bad = t.ToJson();
  bad["genders"] = Json::array();
  EXPECT_THROW(AttributeTables::FromJson(bad), Error);
}

TEST(SampleScenario, DeterministicAndWithinTables) {
  const auto t = AttributeTables::Default();
  const auto rb = ShippedRules();
  for (Category c : kAllCategories) {
    for (uint64_t seed = 0; seed < 50; ++seed) {
      auto s = SampleScenario(c, t, rb, seed);
      EXPECT_EQ(s, SampleScenario(c, t, rb, seed));
      auto in = [](const std::vector<std::string>& v, const std::string& x) {
        return std::find(v.begin(), v.end(), x) != v.end();
      };
      EXPECT_TRUE(in(t.genders, s.persona.gender));
      EXPECT_TRUE(in(t.occupations, s.persona.occupation));
      EXPECT_TRUE(in(t.platforms, s.text.platform));
      if (IsViolation(c)) {
        EXPECT_GE(s.knowledge.rule_ids.size(), 1u);
        EXPECT_LE(s.knowledge.rule_ids.size(), 2u);
        for (const auto& id : s.knowledge.rule_ids) EXPECT_EQ(rb.Find(id)->category, c);
      } else {
        EXPECT_TRUE(s.knowledge.rule_ids.empty());
        EXPECT_TRUE(s.knowledge.rule_text.empty());
      }
    }
  }
  EXPECT_THROW(SampleScenario(Category::kFraud, t, RuleBase(), 0), Error);
  EXPECT_NO_THROW(SampleScenario(Category::kNonViolation, t, RuleBase(), 0));
}

TEST(SampleScenario, GenderFrequenciesWithinThreeSigma) {
  const auto t = AttributeTables::Default();
  const auto rb = ShippedRules();
  std::map<std::string, int> counts;
  std::set<EvasionStrategy> strategies;
  const int n = 10000;
  for (auto& s : SampleScenarios(Category::kNonViolation, n, t, rb, 1)) {
    ++counts[s.persona.gender];
    strategies.insert(s.evasion.strategy);
  }
  const double p = 1.0 / 3.0;
  const double sigma = std::sqrt(n * p * (1 - p));
  ASSERT_EQ(counts.size(), 3u);
  for (const auto& [g, k] : counts) EXPECT_LE(std::fabs(k - n * p), 3 * sigma) << g;
  // NonViolation specs still draw any of the five strategies.
  EXPECT_EQ(strategies.size(), 5u);
}

TEST(SampleScenarios, IdsAndIndependentSeeds) {
  const auto specs =
      SampleScenarios(Category::kGambling, 5, AttributeTables::Default(), ShippedRules(), 3);
  ASSERT_EQ(specs.size(), 5u);
  EXPECT_EQ(specs[4].id, "Gambling-4");
  std::set<uint64_t> seeds;
  for (const auto& s : specs) seeds.insert(s.seed);
  EXPECT_EQ(seeds.size(), 5u);
  EXPECT_EQ(ScenarioFromJson(ScenarioToJson(specs[2])), specs[2]);
}

TEST(GenerationPrompt, SectionsAndSlots) {
  auto spec = SampleScenario(Category::kFraud, AttributeTables::Default(), ShippedRules(), 9);
  spec.text.platform = "微博";
  const std::string p = BuildGenerationPrompt(spec);
  EXPECT_NE(p.find("【角色设定】"), std::string::npos);
  EXPECT_NE(p.find("【生成要求】"), std::string::npos);
  EXPECT_NE(p.find("发布平台：微博"), std::string::npos);
  EXPECT_NE(p.find("违规类别：欺诈"), std::string::npos);
  EXPECT_NE(p.find(spec.knowledge.rule_text), std::string::npos);
  EXPECT_NE(p.find("说明：" + spec.evasion.description), std::string::npos);
  EXPECT_EQ(p, BuildGenerationPrompt(spec));

  auto normal = SampleScenario(Category::kNonViolation, AttributeTables::Default(), RuleBase(), 1);
  const std::string q = BuildGenerationPrompt(normal);
  EXPECT_NE(q.find("是否违规：不违规"), std::string::npos);
  EXPECT_NE(q.find("违反规则：无"), std::string::npos);
}

TEST(GenerationPrompt, EvasionDescriptionFilled) {
  const auto t = AttributeTables::Default();
  for (uint64_t seed = 0; seed < 40; ++seed) {
    auto s = SampleScenario(Category::kAbuse, t, ShippedRules(), seed);
    if (s.evasion.strategy == EvasionStrategy::kNone) {
      EXPECT_EQ(s.evasion.description, "该文本为正常文本，没有使用任何规避策略或手段。");
    } else {
      EXPECT_EQ(s.evasion.description, StrategyDescription(s.evasion.strategy));
      EXPECT_EQ(s.evasion.description.find("{"), std::string::npos);
    }
  }
}

TEST(GenerateCandidates, MockContract) {
  const auto specs =
      SampleScenarios(Category::kAbuse, 5, AttributeTables::Default(), ShippedRules(), 0);
  ProviderConfig cfg;
  cfg.max_parallelism = 1;
  cfg.max_retries = 0;
  LlmClient echo(cfg, MockFromScript(Json::parse(R"({"default":{"text":"固定回复"}})")));
  auto cands = GenerateCandidates(specs, echo, {.model = "t"});
  for (const auto& c : cands) {
    EXPECT_EQ(c.status, CandidateStatus::kRaw);
    EXPECT_EQ(c.response, "固定回复");
    EXPECT_EQ(c.teacher, "t");
  }
  LlmClient failing(cfg, MockFromScript(Json::parse(
                             R"({"responses":[{"index":1,"error":"auth"}],"default":{"text":"x"}})")));
  auto mixed = GenerateCandidates(specs, failing, {.model = "t"});
  EXPECT_EQ(mixed[1].status, CandidateStatus::kFailed);
  EXPECT_NE(mixed[1].reason.find("auth_error"), std::string::npos);
  size_t raw = 0;
  for (const auto& c : mixed) raw += c.status == CandidateStatus::kRaw;
  EXPECT_EQ(raw, 4u);
}

TEST(GenerateCandidates, PairingUnderRandomLatency) {
  const auto specs =
      SampleScenarios(Category::kIllicitAds, 100, AttributeTables::Default(), ShippedRules(), 2);
  auto mock = std::make_shared<MockTransport>([](const ChatRequest& req, size_t) {
    return ProviderReply{LlmStatus::kOk, "r-" + Sha256Hex(req.messages.back().content), {}, {}};
  });
  mock->set_latency([](size_t i) { return std::chrono::microseconds((i * 104729) % 1500); });
  ProviderConfig cfg;
  cfg.max_parallelism = 8;
  cfg.requests_per_minute = 100000;
  LlmClient client(cfg, mock);
  auto cands = GenerateCandidates(specs, client, {.model = "t"});
  ASSERT_EQ(cands.size(), specs.size());
  for (size_t i = 0; i < specs.size(); ++i) {
    EXPECT_EQ(cands[i].id(), specs[i].id);
    EXPECT_EQ(cands[i].response, "r-" + Sha256Hex(BuildGenerationPrompt(specs[i])));
  }
  EXPECT_LE(mock->peak_concurrency(), 8u);
}

TEST(Refusals, KeywordMatching) {
  const auto& kw = DefaultRefusalKeywords();
  EXPECT_EQ(FindRefusalKeyword("抱歉，我无法生成该内容", kw), "抱歉");
  EXPECT_EQ(FindRefusalKeyword("I'm sorry, but I can't help", kw), "I'm sorry");
  EXPECT_EQ(FindRefusalKeyword("i'M SORRY", kw), "I'm sorry");
  EXPECT_EQ(FindRefusalKeyword("周末去爬山，风景很好", kw), std::nullopt);
  EXPECT_EQ(LoadKeywords(kData / "refusal_keywords.json"), kw);
}

TEST(Refusals, FilterTouchesOnlyRawMatches) {
  std::vector<Candidate> cands = {
      MakeCandidate("a", Category::kFraud, "抱歉，我无法生成该内容"),
      MakeCandidate("b", Category::kFraud, "I'm sorry, but..."),
      MakeCandidate("c", Category::kFraud, "正常文本"),
      MakeCandidate("d", Category::kFraud, "", CandidateStatus::kFailed)};
  auto out = FilterRefusals(cands, DefaultRefusalKeywords());
  EXPECT_EQ(out[0].status, CandidateStatus::kFiltered);
  EXPECT_EQ(out[0].reason, "抱歉");
  EXPECT_EQ(out[1].reason, "I'm sorry");
  EXPECT_EQ(out[2].status, CandidateStatus::kRaw);
  EXPECT_EQ(out[3].status, CandidateStatus::kFailed);
  EXPECT_THROW(FilterRefusals(cands, {}), Error);
}

TEST(Dedup, PerCategoryOracleAndIdempotence) {
  Rng rng(5);
  std::vector<Candidate> cands;
  for (int i = 0; i < 300; ++i) {
    cands.push_back(MakeCandidate(std::to_string(i), kAllCategories[rng.UniformIndex(6)],
                                  "t" + std::to_string(rng.UniformIndex(30))));
  }
  auto out = DedupCandidates(cands);
  std::set<std::pair<size_t, std::string>> seen;
  for (size_t i = 0; i < cands.size(); ++i) {
    const bool first = seen.insert({Index(cands[i].category()), cands[i].response}).second;
    EXPECT_EQ(out[i].status, first ? CandidateStatus::kRaw : CandidateStatus::kFiltered);
  }
  EXPECT_EQ(ExportCandidates(DedupCandidates(out)), ExportCandidates(out));
}

TEST(Assemble, ExactCountsAndShortfall) {
  auto pool = PoolOf(5);
  auto all = AssembleDataset(pool, 5, 1);
  EXPECT_EQ(all.size(), 30u);
  for (const auto& c : all) EXPECT_EQ(c.status, CandidateStatus::kAccepted);
  auto some = AssembleDataset(pool, 3, 1);
  EXPECT_EQ(ExportCandidates(some), ExportCandidates(AssembleDataset(pool, 3, 1)));
  std::map<Category, int> per;
  for (const auto& c : some) ++per[c.category()];
  for (Category c : kAllCategories) EXPECT_EQ(per[c], 3);

  pool[Index(Category::kFraud) * 5].status = CandidateStatus::kFiltered;
  try {
    AssembleDataset(pool, 5, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShortfall);
    EXPECT_NE(std::string(e.what()).find("Fraud short by 1"), std::string::npos);
  }
}

TEST(Assemble, OversampledCount) {
  EXPECT_EQ(OversampledCount(30, 1.3), 39u);
  EXPECT_EQ(OversampledCount(3000, 1.3), 3900u);
  EXPECT_EQ(OversampledCount(10, 1.05), 11u);
  EXPECT_EQ(OversampledCount(7, 1.0), 7u);
  EXPECT_THROW(OversampledCount(7, 0.5), Error);
}

TEST(Sft, RecordsFollowDetectionTemplate) {
  auto accepted = AssembleDataset(PoolOf(1), 1, 0);
  const auto rb = ShippedRules();
  auto records = BuildSftRecords(accepted, rb);
  ASSERT_EQ(records.size(), 6u);
  std::set<std::string> targets;
  std::set<std::string> labels;
  for (Category c : kAllCategories) labels.insert(std::string(ChineseLabel(c)));
  for (size_t i = 0; i < records.size(); ++i) {
    targets.insert(records[i].target);
    EXPECT_TRUE(labels.count(records[i].target));
    EXPECT_NE(records[i].input.find(accepted[i].response), std::string::npos);
    EXPECT_NE(records[i].input.find(RenderRules(rb)), std::string::npos);
    EXPECT_EQ(records[i].provenance, accepted[i].id());
  }
  EXPECT_EQ(targets.size(), 6u);
  const std::string jsonl = SftRecordsToJsonl(records);
  EXPECT_EQ(SplitLines(jsonl)[0].rfind("{\"input\":", 0), 0u);
  auto back = ParseSftRecords(jsonl);
  ASSERT_EQ(back.size(), 6u);
  EXPECT_EQ(back[3].input, records[3].input);
  EXPECT_THROW(BuildSftRecords(accepted, RuleBase()), Error);
  EXPECT_THROW(BuildSftRecords(PoolOf(1), rb), Error);
}

TEST(Candidates, JsonlRoundTrip) {
  auto pool = PoolOf(2);
  pool[0].status = CandidateStatus::kFiltered;
  pool[0].reason = "抱歉";
  auto back = ParseCandidates(ExportCandidates(pool));
  EXPECT_EQ(ExportCandidates(back), ExportCandidates(pool));
}

TEST(Pipeline, DeterministicEndToEndWithMock) {
  auto run = [] {
    const auto t = AttributeTables::Default();
    const auto rb = ShippedRules();
    std::vector<ScenarioSpec> specs;
    for (Category c : kAllCategories) {
      auto s = SampleScenarios(c, OversampledCount(4, 1.5), t, rb, 11);
      specs.insert(specs.end(), s.begin(), s.end());
    }
    ProviderConfig cfg;
    cfg.max_parallelism = 4;
    LlmClient client(cfg, MockFromScript(Json::parse(
                              R"({"responses":[{"contains":"- 发布平台：豆瓣","text":"抱歉，我无法生成该内容。"}]})")));
    auto cands = GenerateCandidates(specs, client, {.model = "t"});
    cands = DedupCandidates(FilterRefusals(std::move(cands), DefaultRefusalKeywords()));
    auto accepted = AssembleDataset(cands, 4, 11);
    for (const auto& c : accepted) {
      EXPECT_EQ(FindRefusalKeyword(c.response, DefaultRefusalKeywords()), std::nullopt);
    }
    return SftRecordsToJsonl(BuildSftRecords(accepted, rb));
  };
  const std::string a = run();
  EXPECT_EQ(SplitLines(a).size(), 24u);
  EXPECT_EQ(Sha256Hex(a), Sha256Hex(run()));
}

}  // namespace
}  // namespace harmkit
