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

#ifndef HARMKIT_EVASION_H_
#define HARMKIT_EVASION_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "harmkit/common.h"

namespace harmkit {

enum class EvasionStrategy : int {
  kPinyin = 0,
  kHomophone = 1,
  kHomograph = 2,
  kEmoji = 3,
  kNone = 4,
};

inline constexpr std::array<EvasionStrategy, 5> kAllStrategies = {
    EvasionStrategy::kPinyin, EvasionStrategy::kHomophone,
    EvasionStrategy::kHomograph, EvasionStrategy::kEmoji,
    EvasionStrategy::kNone};

// "拼音", "谐音词", "形似词", "emoji", "不规避"
std::string_view StrategyChineseName(EvasionStrategy s);
// "pinyin", "homophone", "homograph", "emoji", "none"
std::string_view StrategyKey(EvasionStrategy s);
// Accepts the key or the Chinese name.
std::optional<EvasionStrategy> ParseStrategy(std::string_view name);

// The prompt sentence describing a strategy.
std::string StrategyDescription(EvasionStrategy s);

// Sensitive term -> substitutes per strategy (kNone has no list).
class SubstitutionLexicon {
 public:
  using Substitutes = std::array<std::vector<std::string>, 4>;

  SubstitutionLexicon() = default;
  // Throws kValidation on empty terms/substitutes or a substitute equal to
  // its term.
  explicit SubstitutionLexicon(std::map<std::string, Substitutes> entries);

  const std::map<std::string, Substitutes>& entries() const { return entries_; }
  const std::vector<std::string>& SubstitutesFor(const std::string& term,
                                                 EvasionStrategy s) const;

  Json ToJson() const;
  static SubstitutionLexicon FromJson(const Json& json);

 private:
  std::map<std::string, Substitutes> entries_;
};

SubstitutionLexicon LoadLexicon(const std::filesystem::path& path);

// Character -> toneless pinyin syllable.
using PinyinTable = std::map<char32_t, std::string>;
PinyinTable LoadPinyinTable(const std::filesystem::path& path);
PinyinTable PinyinTableFromJson(const Json& json);

// Fills empty pinyin lists for terms whose every character is in the table:
// the joined syllables ("dubo"), plus the initials ("db") for multi-character
// terms.
SubstitutionLexicon AddPinyinFromTable(const SubstitutionLexicon& lex,
                                       const PinyinTable& table);

struct Replacement {
  size_t begin = 0;  // byte span in the input
  size_t end = 0;
  size_t output_begin = 0;  // byte offset of the replacement in the output
  std::string original;
  std::string replacement;
};

struct PerturbResult {
  std::string text;
  std::vector<Replacement> replacements;
  // Lexicon terms present in the input that have no substitute for the
  // requested strategy.
  std::vector<std::string> skipped_terms;
};

// Scans left to right over Unicode scalars; at each position the longest
// term having substitutes for the strategy is replaced by a seeded uniform
// choice among them. Bytes outside replaced spans are copied unchanged.
PerturbResult Perturb(std::string_view text, EvasionStrategy strategy,
                      const SubstitutionLexicon& lex, uint64_t seed);

}  // namespace harmkit

#endif  // HARMKIT_EVASION_H_
