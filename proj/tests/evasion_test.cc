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

#include "harmkit/evasion.h"

namespace harmkit {
namespace {

SubstitutionLexicon MotherLexicon() {
  SubstitutionLexicon::Substitutes subs;
  subs[static_cast<size_t>(EvasionStrategy::kHomophone)] = {"木琴"};
  return SubstitutionLexicon({{"母亲", subs}});
}

SubstitutionLexicon ShippedLexicon() {
  const std::filesystem::path dir(HARMKIT_DATA_DIR);
  return AddPinyinFromTable(LoadLexicon(dir / "lexicon.json"),
                            LoadPinyinTable(dir / "pinyin_table.json"));
}

// Rebuilds the output from the input and the reported replacements.
std::string Reconstruct(std::string_view input, const PerturbResult& r) {
  std::string out;
  size_t cursor = 0;
  for (const auto& rep : r.replacements) {
    out.append(input.substr(cursor, rep.begin - cursor));
    EXPECT_EQ(out.size(), rep.output_begin);
    EXPECT_EQ(input.substr(rep.begin, rep.end - rep.begin), rep.original);
    out += rep.replacement;
    cursor = rep.end;
  }
  out.append(input.substr(cursor));
  return out;
}

TEST(Perturb, HomophoneReplacesKeyword) {
  auto lex = MotherLexicon();
  for (uint64_t seed : {0u, 1u, 99u}) {
    EXPECT_EQ(Perturb("骂我母亲", EvasionStrategy::kHomophone, lex, seed).text, "骂我木琴");
  }
}

TEST(Perturb, RepeatedTermGivesTwoRecords) {
  auto r = Perturb("母亲母亲", EvasionStrategy::kHomophone, MotherLexicon(), 3);
  EXPECT_EQ(r.text, "木琴木琴");
  ASSERT_EQ(r.replacements.size(), 2u);
  EXPECT_EQ(r.replacements[0].begin, 0u);
  EXPECT_EQ(r.replacements[1].begin, 6u);
  EXPECT_EQ(r.replacements[1].output_begin, 6u);
}

TEST(Perturb, MissingStrategyReportsSkippedTerm) {
  auto r = Perturb("骂我母亲", EvasionStrategy::kEmoji, MotherLexicon(), 0);
  EXPECT_EQ(r.text, "骂我母亲");
  EXPECT_EQ(r.skipped_terms, std::vector<std::string>{"母亲"});
}

TEST(Perturb, NoneIsIdentityOnArbitraryText) {
  auto lex = ShippedLexicon();
  Rng rng(6);
  const std::vector<std::string> pieces = {"赌博", "母亲", "a", "😀", "微信", " ", "好", "\n", "博彩网站"};
  for (int t = 0; t < 200; ++t) {
    std::string text;
    const size_t n = rng.UniformIndex(12);
    for (size_t i = 0; i < n; ++i) text += pieces[rng.UniformIndex(pieces.size())];
    auto r = Perturb(text, EvasionStrategy::kNone, lex, rng.Next());
    EXPECT_EQ(r.text, text);
    EXPECT_TRUE(r.replacements.empty());
  }
}

TEST(Perturb, SpansReconstructOutputForEveryStrategy) {
  auto lex = ShippedLexicon();
  Rng rng(7);
  std::vector<std::string> pieces = {"，", "今天", "x", "🎲", "的"};
  for (const auto& [term, subs] : lex.entries()) pieces.push_back(term);
  for (int t = 0; t < 300; ++t) {
    std::string text;
    const size_t n = 1 + rng.UniformIndex(10);
    for (size_t i = 0; i < n; ++i) text += pieces[rng.UniformIndex(pieces.size())];
    for (EvasionStrategy s : kAllStrategies) {
      const uint64_t seed = rng.Next();
      auto r = Perturb(text, s, lex, seed);
      EXPECT_EQ(Reconstruct(text, r), r.text);
      EXPECT_EQ(Perturb(text, s, lex, seed).text, r.text);
      EXPECT_TRUE(IsValidUtf8(r.text));
      for (const auto& rep : r.replacements) {
        const auto& allowed = lex.SubstitutesFor(rep.original, s);
        EXPECT_NE(std::find(allowed.begin(), allowed.end(), rep.replacement), allowed.end());
      }
    }
  }
}

TEST(Perturb, LongestTermWins) {
  SubstitutionLexicon::Substitutes a, b;
  a[static_cast<size_t>(EvasionStrategy::kHomograph)] = {"X"};
  b[static_cast<size_t>(EvasionStrategy::kHomograph)] = {"Y"};
  SubstitutionLexicon lex({{"博彩", a}, {"博彩网站", b}});
  EXPECT_EQ(Perturb("去博彩网站和博彩", EvasionStrategy::kHomograph, lex, 0).text, "去Y和X");
}

TEST(Lexicon, ValidationAndPinyinFill) {
  SubstitutionLexicon::Substitutes same;
  same[0] = {"母亲"};
  EXPECT_THROW(SubstitutionLexicon({{"母亲", same}}), Error);
  EXPECT_THROW(SubstitutionLexicon::FromJson(Json{{"母亲", {{"bogus", {"x"}}}}}), Error);

  PinyinTable table = {{U'赌', "du"}, {U'博', "bo"}};
  SubstitutionLexicon::Substitutes empty;
  empty[1] = {"堵博"};
  auto filled = AddPinyinFromTable(SubstitutionLexicon({{"赌博", empty}}), table);
  EXPECT_EQ(filled.SubstitutesFor("赌博", EvasionStrategy::kPinyin),
            (std::vector<std::string>{"dubo", "db"}));
  auto lex = ShippedLexicon();
  EXPECT_EQ(SubstitutionLexicon::FromJson(lex.ToJson()).entries(), lex.entries());
  EXPECT_EQ(lex.SubstitutesFor("母亲", EvasionStrategy::kHomophone), std::vector<std::string>{"木琴"});
}

TEST(Strategy, DescriptionsAndNames) {
  EXPECT_NE(StrategyDescription(EvasionStrategy::kPinyin).find("使用拼音来规避"), std::string::npos);
  EXPECT_EQ(StrategyDescription(EvasionStrategy::kNone), "该文本为正常文本，没有使用任何规避策略或手段。");
  EXPECT_EQ(StrategyDescription(EvasionStrategy::kEmoji), StrategyDescription(EvasionStrategy::kEmoji));
  for (EvasionStrategy s : kAllStrategies) {
    EXPECT_EQ(ParseStrategy(StrategyKey(s)), s);
    EXPECT_EQ(ParseStrategy(StrategyChineseName(s)), s);
  }
  EXPECT_FALSE(ParseStrategy("rot13").has_value());
}

}  // namespace
}  // namespace harmkit
