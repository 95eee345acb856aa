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

#include "harmkit/rulebase.h"

#include <algorithm>
#include <ctime>
#include <tuple>

namespace harmkit {

namespace {

void ValidateContent(const std::string& id, Category category,
                     const std::string& body,
                     const std::vector<std::string>& hints) {
  if (id.empty()) {
    throw Error(ErrorCode::kValidation, "rule id must be non-empty");
  }
  if (!IsViolation(category)) {
    throw Error(ErrorCode::kValidation,
                "rules cannot target the non-violation category",
                Json{{"id", id}});
  }
  if (body.empty() || !IsValidUtf8(body)) {
    throw Error(ErrorCode::kValidation,
                "rule body must be non-empty UTF-8", Json{{"id", id}});
  }
  for (const auto& h : hints) {
    if (h.empty() || !IsValidUtf8(h)) {
      throw Error(ErrorCode::kValidation,
                  "hint terms must be non-empty UTF-8", Json{{"id", id}});
    }
  }
}

}  // namespace

const Rule* RuleBase::Find(const std::string& id) const {
  for (const Rule& r : rules_) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::vector<const Rule*> RuleBase::RulesFor(Category c) const {
  std::vector<const Rule*> out;
  for (const Rule& r : rules_) {
    if (r.category == c) out.push_back(&r);
  }
  std::sort(out.begin(), out.end(), [](const Rule* a, const Rule* b) {
    return std::tie(a->ordinal, a->id) < std::tie(b->ordinal, b->id);
  });
  return out;
}

RuleBase RuleBase::WithAdded(Rule rule, const std::string& timestamp) const {
  ValidateContent(rule.id, rule.category, rule.body, rule.hint_terms);
  if (Find(rule.id) != nullptr) {
    throw Error(ErrorCode::kConflict, "rule id already exists: " + rule.id,
                Json{{"id", rule.id}});
  }
  RuleBase next = *this;
  next.version_ = version_ + 1;
  if (rule.ordinal <= 0) {
    int max_ordinal = 0;
    for (const Rule& r : rules_) {
      if (r.category == rule.category) max_ordinal = std::max(max_ordinal, r.ordinal);
    }
    rule.ordinal = max_ordinal + 1;
  }
  rule.created_version = next.version_;
  rule.last_modified_version = next.version_;
  next.changelog_.push_back({next.version_, "add", rule.id, timestamp, std::nullopt, {}});
  next.rules_.push_back(std::move(rule));
  return next;
}

RuleBase RuleBase::WithUpdated(const std::string& id, std::string new_body,
                               std::vector<std::string> new_hints,
                               const std::string& timestamp) const {
  const Rule* existing = Find(id);
  if (existing == nullptr) {
    throw Error(ErrorCode::kNotFound, "unknown rule id: " + id, Json{{"id", id}});
  }
  ValidateContent(id, existing->category, new_body, new_hints);
  RuleBase next = *this;
  next.version_ = version_ + 1;
  for (Rule& r : next.rules_) {
    if (r.id != id) continue;
    next.changelog_.push_back(
        {next.version_, "update", id, timestamp, r.body, r.hint_terms});
    r.body = std::move(new_body);
    r.hint_terms = std::move(new_hints);
    r.last_modified_version = next.version_;
  }
  return next;
}

Json RuleToJson(const Rule& rule) {
  return Json{{"id", rule.id},
              {"category", EnglishName(rule.category)},
              {"ordinal", rule.ordinal},
              {"title", rule.title},
              {"body", rule.body},
              {"hint_terms", rule.hint_terms},
              {"created_version", rule.created_version},
              {"last_modified_version", rule.last_modified_version}};
}

Rule RuleFromJson(const Json& json) {
  try {
    Rule rule;
    rule.id = json.at("id").get<std::string>();
    const auto name = json.at("category").get<std::string>();
    auto category = ParseCategoryName(name);
    if (!category) {
      throw Error(ErrorCode::kValidation, "unknown rule category: " + name,
                  Json{{"id", rule.id}});
    }
    rule.category = *category;
    rule.ordinal = json.value("ordinal", 0);
    rule.title = json.value("title", std::string());
    rule.body = json.at("body").get<std::string>();
    rule.hint_terms = json.value("hint_terms", std::vector<std::string>{});
    rule.created_version = json.value("created_version", int64_t{0});
    rule.last_modified_version = json.value("last_modified_version", int64_t{0});
    ValidateContent(rule.id, rule.category, rule.body, rule.hint_terms);
    return rule;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed rule: ") + e.what());
  }
}

Json RuleBase::ToJson() const {
  Json rules = Json::array();
  for (const Rule& r : rules_) rules.push_back(RuleToJson(r));
  Json log = Json::array();
  for (const ChangelogEntry& e : changelog_) {
    Json entry{{"version", e.version},
               {"action", e.action},
               {"rule_id", e.rule_id},
               {"timestamp", e.timestamp}};
    if (e.previous_body) {
      entry["previous_body"] = *e.previous_body;
      entry["previous_hint_terms"] = e.previous_hint_terms;
    }
    log.push_back(std::move(entry));
  }
  return Json{{"version", version_}, {"rules", std::move(rules)}, {"changelog", std::move(log)}};
}

RuleBase RuleBase::FromJson(const Json& json) {
  RuleBase rb;
  try {
    rb.version_ = json.at("version").get<int64_t>();
    for (const auto& r : json.at("rules")) {
      Rule rule = RuleFromJson(r);
      if (rb.Find(rule.id) != nullptr) {
        throw Error(ErrorCode::kValidation, "duplicate rule id: " + rule.id);
      }
      rb.rules_.push_back(std::move(rule));
    }
    for (const auto& e : json.value("changelog", Json::array())) {
      ChangelogEntry entry;
      entry.version = e.at("version").get<int64_t>();
      entry.action = e.at("action").get<std::string>();
      entry.rule_id = e.at("rule_id").get<std::string>();
      entry.timestamp = e.value("timestamp", std::string());
      if (e.contains("previous_body")) {
        entry.previous_body = e.at("previous_body").get<std::string>();
        entry.previous_hint_terms =
            e.value("previous_hint_terms", std::vector<std::string>{});
      }
      rb.changelog_.push_back(std::move(entry));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed rule base: ") + e.what());
  }
  if (rb.version_ < 0 ||
      static_cast<int64_t>(rb.changelog_.size()) > rb.version_) {
    throw Error(ErrorCode::kValidation,
                "rule base changelog is longer than its version");
  }
  int64_t last = 0;
  for (const auto& e : rb.changelog_) {
    if (e.version <= last || e.version > rb.version_) {
      throw Error(ErrorCode::kValidation, "rule base changelog versions out of order");
    }
    last = e.version;
  }
  return rb;
}

std::string UtcTimestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RuleBase AddRule(const RuleBase& rb, Rule rule) {
  return rb.WithAdded(std::move(rule), UtcTimestamp());
}

RuleBase UpdateRule(const RuleBase& rb, const std::string& id,
                    std::string new_body, std::vector<std::string> new_hints) {
  return rb.WithUpdated(id, std::move(new_body), std::move(new_hints), UtcTimestamp());
}

std::string RenderRules(const RuleBase& rb, const std::set<Category>& categories) {
  std::string out;
  for (Category c : kViolationCategories) {
    if (!categories.contains(c)) continue;
    const auto rules = rb.RulesFor(c);
    if (rules.empty()) continue;
    if (!out.empty()) out += "\n\n";
    out += ChineseLabel(c);
    out += "：";
    for (size_t i = 0; i < rules.size(); ++i) {
      out += "\n";
      out += std::to_string(i + 1);
      out += ". ";
      out += rules[i]->body;
    }
  }
  return out;
}

std::string RenderRules(const RuleBase& rb) {
  return RenderRules(rb, std::set<Category>(kAllCategories.begin(), kAllCategories.end()));
}

std::vector<HintMatch> MatchHints(const RuleBase& rb, std::string_view text) {
  std::vector<HintMatch> matches;
  for (const Rule& rule : rb.rules()) {
    for (const std::string& term : rule.hint_terms) {
      for (size_t pos = text.find(term); pos != std::string_view::npos;
           pos = text.find(term, pos + 1)) {
        matches.push_back({rule.id, term, pos, pos + term.size()});
      }
    }
  }
  std::sort(matches.begin(), matches.end(), [](const HintMatch& a, const HintMatch& b) {
    return std::tie(a.begin, a.end, a.rule_id, a.term) <
           std::tie(b.begin, b.end, b.rule_id, b.term);
  });
  matches.erase(std::unique(matches.begin(), matches.end()), matches.end());
  return matches;
}

Json HintMatchToJson(const HintMatch& match) {
  return Json{{"rule_id", match.rule_id},
              {"term", match.term},
              {"begin", match.begin},
              {"end", match.end}};
}

RuleBase LoadRuleBase(const std::filesystem::path& path) {
  return RuleBase::FromJson(ParseJsonFile(path));
}

void SaveRuleBase(const RuleBase& rb, const std::filesystem::path& path) {
  WriteFile(path, rb.ToJson().dump(2) + "\n");
}

}  // namespace harmkit
