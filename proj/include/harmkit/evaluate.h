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

#ifndef HARMKIT_EVALUATE_H_
#define HARMKIT_EVALUATE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "harmkit/category.h"
#include "harmkit/corpus.h"
#include "harmkit/llmclient.h"
#include "harmkit/rulebase.h"

namespace harmkit {

struct DetectionPrompt {
  std::string text;
  bool with_knowledge = false;
};

// Fills the zero-shot detection template. With a rule base the "规则:" section
// carries RenderRules(*rb); without one that section is omitted and the
// instruction text is otherwise identical. Throws kValidation on empty
// content.
DetectionPrompt BuildDetectionPrompt(const RuleBase* rb, std::string_view content);
DetectionPrompt BuildDetectionPromptFromRendered(std::optional<std::string_view> rules_text,
                                                 std::string_view content);

// Exact match of the trimmed output first, then the earliest label occurring
// as a substring (ties by label order). nullopt means Unparsed.
std::optional<Category> ParseCategory(std::string_view raw);

struct Prediction {
  std::string sample_id;
  std::string raw;
  std::optional<Category> parsed;
};

// Rows are true categories, columns predictions. Unparsed predictions are
// counted per true category outside the 6x6 grid.
struct ConfusionMatrix {
  std::array<std::array<int64_t, kNumCategories>, kNumCategories> counts{};
  std::array<int64_t, kNumCategories> unparsed{};

  int64_t Support(Category truth) const;
  int64_t Total() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

// Throws kValidation on a length mismatch.
ConfusionMatrix Tally(std::span<const Category> truths,
                      std::span<const Prediction> preds);

struct CategoryScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int64_t support = 0;
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  int64_t unparsed = 0;
};

struct Scores {
  std::array<CategoryScore, kNumCategories> per_category{};
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
};

// Unparsed predictions are false negatives for the true category and false
// positives for none; 0/0 ratios are 0. Macro-F1 is the unweighted mean over
// all six categories; weighted-F1 weights by support.
Scores F1Scores(const ConfusionMatrix& cm);

struct EvalConfig {
  std::string model;
  bool with_knowledge = true;
  double temperature = 0.0;
  uint64_t seed = 0;
  int max_tokens = 64;
};

struct EvalLogRecord {
  std::string id;
  Category truth = Category::kNonViolation;
  std::string prompt_hash;
  std::string raw;
  std::optional<Category> parsed;
  // Set when the provider never returned; such samples are excluded.
  std::optional<std::string> error;
};

struct EvalReport {
  Scores scores;
  ConfusionMatrix matrix;
  int64_t evaluated = 0;
  int64_t excluded = 0;
  int64_t unparsed = 0;
  EvalConfig config;
  int64_t rulebase_version = 0;
};

struct EvalRun {
  EvalReport report;
  std::vector<EvalLogRecord> log;
};

// Queries the model for every sample (temperature 0 by default), parses,
// tallies and scores.
EvalRun EvaluateModel(LlmClient& client, const Corpus& corpus, const RuleBase* rb,
                      const EvalConfig& config);

// Scoring is a pure function of the per-sample log.
EvalReport ReportFromLog(std::span<const EvalLogRecord> log, const EvalConfig& config,
                         int64_t rulebase_version);

Json EvalLogRecordToJson(const EvalLogRecord& r);
EvalLogRecord EvalLogRecordFromJson(const Json& j);
std::string ExportEvalLog(std::span<const EvalLogRecord> log);
std::vector<EvalLogRecord> ParseEvalLog(std::string_view jsonl);

Json EvalReportToJson(const EvalReport& report);
EvalReport EvalReportFromJson(const Json& json);
// One header row and one score row: per-category F1 then Macro-F1.
std::string RenderReportTable(const EvalReport& report, std::string_view row_name);

}  // namespace harmkit

#endif  // HARMKIT_EVALUATE_H_
