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

#ifndef HARMKIT_RULEBASE_H_
#define HARMKIT_RULEBASE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "harmkit/category.h"
#include "harmkit/common.h"

namespace harmkit {

struct Rule {
  std::string id;
  Category category = Category::kGambling;
  // Display order within the category; <= 0 on add means "append".
  int ordinal = 0;
  std::string title;
  // Full rule prose, rendered verbatim after its number.
  std::string body;
  // Annotator hints only; they never decide a label.
  std::vector<std::string> hint_terms;
  int64_t created_version = 0;
  int64_t last_modified_version = 0;

  bool operator==(const Rule&) const = default;
};

struct ChangelogEntry {
  int64_t version = 0;
  std::string action;  // "add" | "update"
  std::string rule_id;
  std::string timestamp;
  // Body and hints before an update; empty for adds.
  std::optional<std::string> previous_body;
  std::vector<std::string> previous_hint_terms;

  bool operator==(const ChangelogEntry&) const = default;
};

// A versioned, immutable snapshot of the knowledge rule base. Mutations
// return a new snapshot whose version is exactly one higher.
class RuleBase {
 public:
  RuleBase() = default;

  int64_t version() const { return version_; }
  const std::vector<Rule>& rules() const { return rules_; }
  const std::vector<ChangelogEntry>& changelog() const { return changelog_; }
  bool empty() const { return rules_.empty(); }

  const Rule* Find(const std::string& id) const;
  // Sorted by (ordinal, id).
  std::vector<const Rule*> RulesFor(Category c) const;

  // Throws kConflict on a duplicate id, kValidation on an invalid rule.
  RuleBase WithAdded(Rule rule, const std::string& timestamp) const;
  // Throws kNotFound for an unknown id, kValidation on invalid content.
  RuleBase WithUpdated(const std::string& id, std::string new_body,
                       std::vector<std::string> new_hints,
                       const std::string& timestamp) const;

  Json ToJson() const;
  // Validates every rule and the version/changelog invariants.
  static RuleBase FromJson(const Json& json);

 private:
  int64_t version_ = 0;
  std::vector<Rule> rules_;
  std::vector<ChangelogEntry> changelog_;
};

std::string UtcTimestamp();

// Free-function forms of the mutations, stamped with the current time.
RuleBase AddRule(const RuleBase& rb, Rule rule);
RuleBase UpdateRule(const RuleBase& rb, const std::string& id,
                    std::string new_body, std::vector<std::string> new_hints);

// Per category (enum order): the Chinese label and a full-width colon, then
// the rule bodies numbered from 1 in (ordinal, id) order. Category blocks
// are separated by a blank line; no trailing newline. Categories without
// rules are skipped, so an empty base renders "".
std::string RenderRules(const RuleBase& rb, const std::set<Category>& categories);
std::string RenderRules(const RuleBase& rb);

struct HintMatch {
  std::string rule_id;
  std::string term;
  size_t begin = 0;  // byte offsets, [begin, end)
  size_t end = 0;

  bool operator==(const HintMatch&) const = default;
};

// Every case-sensitive occurrence of every hint term, overlapping ones
// included, sorted by (begin, end, rule id, term).
std::vector<HintMatch> MatchHints(const RuleBase& rb, std::string_view text);

Json RuleToJson(const Rule& rule);
Rule RuleFromJson(const Json& json);
Json HintMatchToJson(const HintMatch& match);

RuleBase LoadRuleBase(const std::filesystem::path& path);
void SaveRuleBase(const RuleBase& rb, const std::filesystem::path& path);

}  // namespace harmkit

#endif  // HARMKIT_RULEBASE_H_
