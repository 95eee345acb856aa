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

#include "harmkit/evasion.h"

#include <algorithm>

namespace harmkit {

namespace {

constexpr std::array<std::string_view, 5> kChineseNames = {
    "拼音", "谐音词", "形似词", "emoji", "不规避"};
constexpr std::array<std::string_view, 5> kKeys = {
    "pinyin", "homophone", "homograph", "emoji", "none"};

size_t ScalarCount(std::string_view s) { return DecodeUtf8(s).size(); }

}  // namespace

std::string_view StrategyChineseName(EvasionStrategy s) {
  return kChineseNames[static_cast<size_t>(s)];
}

std::string_view StrategyKey(EvasionStrategy s) {
  return kKeys[static_cast<size_t>(s)];
}

std::optional<EvasionStrategy> ParseStrategy(std::string_view name) {
  for (EvasionStrategy s : kAllStrategies) {
    if (name == StrategyKey(s) || name == StrategyChineseName(s)) return s;
  }
  return std::nullopt;
}

std::string StrategyDescription(EvasionStrategy s) {
  if (s == EvasionStrategy::kNone) {
    return "该文本为正常文本，没有使用任何规避策略或手段。";
  }
  return "该文本使用关键词替换策略，使用" + std::string(StrategyChineseName(s)) +
         "来规避部分敏感词汇或内容。";
}

SubstitutionLexicon::SubstitutionLexicon(std::map<std::string, Substitutes> entries)
    : entries_(std::move(entries)) {
  for (const auto& [term, subs] : entries_) {
    if (term.empty() || !IsValidUtf8(term)) {
      throw Error(ErrorCode::kValidation, "lexicon term must be non-empty UTF-8");
    }
    for (const auto& list : subs) {
      for (const auto& sub : list) {
        if (sub.empty() || !IsValidUtf8(sub)) {
          throw Error(ErrorCode::kValidation,
                      "empty substitute for lexicon term " + term,
                      Json{{"term", term}});
        }
        if (sub == term) {
          throw Error(ErrorCode::kValidation,
                      "substitute equals its term: " + term, Json{{"term", term}});
        }
      }
    }
  }
}

const std::vector<std::string>& SubstitutionLexicon::SubstitutesFor(
    const std::string& term, EvasionStrategy s) const {
  static const std::vector<std::string> kEmpty;
  if (s == EvasionStrategy::kNone) return kEmpty;
  auto it = entries_.find(term);
  if (it == entries_.end()) return kEmpty;
  return it->second[static_cast<size_t>(s)];
}

Json SubstitutionLexicon::ToJson() const {
  Json out = Json::object();
  for (const auto& [term, subs] : entries_) {
    Json entry = Json::object();
    for (size_t i = 0; i < subs.size(); ++i) entry[std::string(kKeys[i])] = subs[i];
    out[term] = std::move(entry);
  }
  return out;
}

SubstitutionLexicon SubstitutionLexicon::FromJson(const Json& json) {
  if (!json.is_object()) {
    throw Error(ErrorCode::kValidation, "lexicon must be a JSON object");
  }
  std::map<std::string, Substitutes> entries;
  for (const auto& [term, value] : json.items()) {
    if (!value.is_object()) {
      throw Error(ErrorCode::kValidation, "lexicon entry must be an object",
                  Json{{"term", term}});
    }
    for (const auto& [key, unused] : value.items()) {
      if (std::find(kKeys.begin(), kKeys.begin() + 4, key) == kKeys.begin() + 4) {
        throw Error(ErrorCode::kValidation, "unknown strategy key in lexicon",
                    Json{{"term", term}, {"key", key}});
      }
    }
    Substitutes subs;
    for (size_t i = 0; i < subs.size(); ++i) {
      auto it = value.find(std::string(kKeys[i]));
      if (it == value.end()) continue;
      if (!it->is_array()) {
        throw Error(ErrorCode::kValidation, "substitutes must be a list",
                    Json{{"term", term}});
      }
      for (const auto& s : *it) {
        if (!s.is_string()) {
          throw Error(ErrorCode::kValidation, "substitutes must be strings",
                      Json{{"term", term}});
        }
        subs[i].push_back(s.get<std::string>());
      }
    }
    entries.emplace(term, std::move(subs));
  }
  return SubstitutionLexicon(std::move(entries));
}

SubstitutionLexicon LoadLexicon(const std::filesystem::path& path) {
  return SubstitutionLexicon::FromJson(ParseJsonFile(path));
}

PinyinTable PinyinTableFromJson(const Json& json) {
  PinyinTable table;
  for (const auto& [key, value] : json.items()) {
    const auto chars = DecodeUtf8(key);
    if (chars.size() != 1 || !value.is_string() || value.get<std::string>().empty()) {
      throw Error(ErrorCode::kValidation,
                  "pinyin table entries map one character to a syllable",
                  Json{{"key", key}});
    }
    table.emplace(chars[0].scalar, value.get<std::string>());
  }
  return table;
}

PinyinTable LoadPinyinTable(const std::filesystem::path& path) {
  return PinyinTableFromJson(ParseJsonFile(path));
}

SubstitutionLexicon AddPinyinFromTable(const SubstitutionLexicon& lex,
                                       const PinyinTable& table) {
  auto entries = lex.entries();
  for (auto& [term, subs] : entries) {
    auto& list = subs[static_cast<size_t>(EvasionStrategy::kPinyin)];
    if (!list.empty()) continue;
    std::string joined;
    std::string initials;
    bool covered = true;
    const auto chars = DecodeUtf8(term);
    for (const auto& ch : chars) {
      auto it = table.find(ch.scalar);
      if (it == table.end()) {
        covered = false;
        break;
      }
      joined += it->second;
      initials += it->second.front();
    }
    if (!covered || joined == term) continue;
    list.push_back(joined);
    if (chars.size() > 1 && initials != term) list.push_back(initials);
  }
  return SubstitutionLexicon(std::move(entries));
}

PerturbResult Perturb(std::string_view text, EvasionStrategy strategy,
                      const SubstitutionLexicon& lex, uint64_t seed) {
  PerturbResult result;
  if (strategy == EvasionStrategy::kNone) {
    result.text = std::string(text);
    return result;
  }

  struct Candidate {
    const std::string* term;
    const std::vector<std::string>* subs;
    size_t scalars;
  };
  std::vector<Candidate> candidates;
  for (const auto& [term, subs] : lex.entries()) {
    const auto& list = subs[static_cast<size_t>(strategy)];
    if (list.empty()) {
      if (text.find(term) != std::string_view::npos) result.skipped_terms.push_back(term);
      continue;
    }
    candidates.push_back({&term, &list, ScalarCount(term)});
  }
  // Longest first; the map order breaks ties.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.scalars > b.scalars; });

  Rng rng(seed);
  const auto chars = DecodeUtf8(text);
  size_t ci = 0;
  while (ci < chars.size()) {
    const size_t pos = chars[ci].offset;
    const Candidate* hit = nullptr;
    for (const Candidate& c : candidates) {
      if (text.compare(pos, c.term->size(), *c.term) == 0) {
        hit = &c;
        break;
      }
    }
    if (hit == nullptr) {
      result.text.append(text.substr(pos, chars[ci].length));
      ++ci;
      continue;
    }
    const std::string& sub = (*hit->subs)[rng.UniformIndex(hit->subs->size())];
    result.replacements.push_back(
        {pos, pos + hit->term->size(), result.text.size(), *hit->term, sub});
    result.text += sub;
    ci += hit->scalars;
  }
  return result;
}

}  // namespace harmkit
