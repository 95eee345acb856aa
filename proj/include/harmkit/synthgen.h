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

#ifndef HARMKIT_SYNTHGEN_H_
#define HARMKIT_SYNTHGEN_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "harmkit/category.h"
#include "harmkit/evasion.h"
#include "harmkit/llmclient.h"
#include "harmkit/rulebase.h"

namespace harmkit {

// Option lists for scenario attributes.
struct AttributeTables {
  std::vector<std::string> genders;
  std::vector<std::string> ages;
  std::vector<std::string> occupations;
  std::vector<std::string> educations;
  std::vector<std::string> lengths;
  std::vector<std::string> platforms;
  std::vector<std::string> perspectives;
  std::vector<std::string> evasions;  // Chinese strategy names
  // [0] has a {规避手段} slot; [1] is the plain-text sentence.
  std::vector<std::string> evasion_descriptions;

  // The published option tables.
  static AttributeTables Default();
  static AttributeTables FromJson(const Json& json);
  Json ToJson() const;

  bool operator==(const AttributeTables&) const = default;
};

AttributeTables LoadAttributeTables(const std::filesystem::path& path);

struct Persona {
  std::string gender;
  std::string age;
  std::string occupation;
  std::string education;
  bool operator==(const Persona&) const = default;
};

struct TextAttributes {
  std::string length;
  std::string perspective;
  std::string platform;
  bool operator==(const TextAttributes&) const = default;
};

struct EvasionAttribute {
  EvasionStrategy strategy = EvasionStrategy::kNone;
  std::string description;
  bool operator==(const EvasionAttribute&) const = default;
};

struct KnowledgeAttribute {
  std::vector<std::string> rule_ids;
  std::string rule_text;
  bool operator==(const KnowledgeAttribute&) const = default;
};

struct ScenarioSpec {
  std::string id;
  Category category = Category::kNonViolation;
  Persona persona;
  TextAttributes text;
  EvasionAttribute evasion;
  // Empty for NonViolation; 1-2 rules of the category otherwise.
  KnowledgeAttribute knowledge;
  uint64_t seed = 0;

  bool operator==(const ScenarioSpec&) const = default;
};

// Draws every attribute independently and uniformly. Violation categories
// also draw one or two of their rules (uniform count, then uniform choice).
// Throws kValidation if a violation category has no rules.
ScenarioSpec SampleScenario(Category category, const AttributeTables& tables,
                            const RuleBase& rb, uint64_t seed);
// `count` specs with ids "{Category}-{i}" and per-spec derived seeds.
std::vector<ScenarioSpec> SampleScenarios(Category category, size_t count,
                                          const AttributeTables& tables,
                                          const RuleBase& rb, uint64_t seed);

std::string BuildGenerationPrompt(const ScenarioSpec& spec);

Json ScenarioToJson(const ScenarioSpec& spec);
ScenarioSpec ScenarioFromJson(const Json& json);

enum class CandidateStatus { kRaw, kFailed, kFiltered, kAccepted };
std::string_view CandidateStatusName(CandidateStatus s);

struct Candidate {
  ScenarioSpec scenario;
  std::string prompt;
  std::string response;
  std::string teacher;
  CandidateStatus status = CandidateStatus::kRaw;
  std::string reason;  // filter keyword, "duplicate" or failure detail

  const std::string& id() const { return scenario.id; }
  Category category() const { return scenario.category; }
};

Json CandidateToJson(const Candidate& c);
Candidate CandidateFromJson(const Json& json);
std::string ExportCandidates(std::span<const Candidate> cands);
std::vector<Candidate> ParseCandidates(std::string_view jsonl);

struct GenConfig {
  std::string model;
  double temperature = 1.0;
  std::optional<int> top_k = 1;
  int max_tokens = 512;
};

// One candidate per spec, aligned with the input. Provider failures mark the
// candidate kFailed with the reason.
std::vector<Candidate> GenerateCandidates(std::span<const ScenarioSpec> specs,
                                          LlmClient& client, const GenConfig& config);

// The refusal keyword table (English then Chinese entries).
const std::vector<std::string>& DefaultRefusalKeywords();
std::vector<std::string> LoadKeywords(const std::filesystem::path& path);

// First keyword (list order) contained in the response; ASCII-only keywords
// match case-insensitively, others exactly.
std::optional<std::string> FindRefusalKeyword(std::string_view response,
                                              std::span<const std::string> keywords);

// Raw candidates whose response contains a keyword become kFiltered with the
// keyword as reason; everything else is unchanged. Throws kValidation on an
// empty keyword list.
std::vector<Candidate> FilterRefusals(std::vector<Candidate> cands,
                                      std::span<const std::string> keywords);

// Within each category, later Raw candidates repeating an earlier Raw
// response byte for byte become kFiltered("duplicate").
std::vector<Candidate> DedupCandidates(std::vector<Candidate> cands);

// Exactly n kAccepted candidates per category, uniformly without
// replacement from the surviving kRaw ones; grouped by category, input order
// within. Throws kShortfall naming each category and its deficit.
std::vector<Candidate> AssembleDataset(std::span<const Candidate> cands, size_t n,
                                       uint64_t seed);

// Number of specs to generate per category for a target n.
size_t OversampledCount(size_t n, double factor);

struct SftRecord {
  std::string input;
  std::string target;  // Chinese category label
  std::string provenance;
};

// input = detection prompt with the rendered rule base and the candidate
// response. Throws kValidation on an empty rule base.
std::vector<SftRecord> BuildSftRecords(std::span<const Candidate> accepted, const RuleBase& rb);
std::string SftRecordsToJsonl(std::span<const SftRecord> records);
std::vector<SftRecord> ParseSftRecords(std::string_view jsonl);
size_t ExportSft(std::span<const Candidate> accepted, const RuleBase& rb,
                 const std::filesystem::path& path);

}  // namespace harmkit

#endif  // HARMKIT_SYNTHGEN_H_
