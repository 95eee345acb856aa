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

#ifndef HARMKIT_ANNOTATION_H_
#define HARMKIT_ANNOTATION_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "harmkit/corpus.h"
#include "harmkit/rulebase.h"

namespace harmkit {

enum class DecisionKind { kRetainMatched, kRetainWithRuleChange, kDiscard };
std::string_view DecisionKindName(DecisionKind k);

struct RuleChange {
  enum class Action { kAdd, kUpdate };
  Action action = Action::kAdd;
  Rule rule;  // kAdd
  // kUpdate
  std::string rule_id;
  std::string body;
  std::vector<std::string> hint_terms;
};

struct AnnotationDecision {
  DecisionKind kind = DecisionKind::kDiscard;
  // kRetainMatched; empty only for NonViolation samples.
  std::string rule_id;
  std::optional<RuleChange> change;  // kRetainWithRuleChange
  std::string reason;                // kDiscard, optional

  static AnnotationDecision RetainMatched(std::string rule_id);
  static AnnotationDecision AddRule(Rule rule);
  static AnnotationDecision UpdateRule(std::string rule_id, std::string body,
                                       std::vector<std::string> hint_terms);
  static AnnotationDecision Discard(std::string reason = {});
};

Json DecisionToJson(const AnnotationDecision& d);
AnnotationDecision DecisionFromJson(const Json& json);

enum class SampleState { kUndecided, kRetained, kDiscarded };

struct DecisionRecord {
  AnnotationDecision decision;
  std::string annotator;
  std::string timestamp;
  int64_t rulebase_version = 0;  // after the decision
};

struct CategoryProgress {
  int64_t undecided = 0;
  int64_t retained = 0;
  int64_t discarded = 0;
};

struct Progress {
  std::array<CategoryProgress, kNumCategories> per_category{};
  int64_t rulebase_version = 0;
  bool finalized = false;
};
Json ProgressToJson(const Progress& p);

struct NextSample {
  Sample sample;
  std::vector<HintMatch> hints;
};

// One annotation pool served in stable ingest order.
class AnnotationSession {
 public:
  AnnotationSession(std::string id, Corpus pool);

  const std::string& id() const { return id_; }
  const Corpus& pool() const { return pool_; }
  bool finalized() const { return finalized_; }
  const std::map<std::string, DecisionRecord>& decisions() const { return decisions_; }

  SampleState StateOf(const std::string& sample_id) const;
  // First undecided sample (optionally within a category); nullptr when
  // the queue is empty.
  const Sample* Next(std::optional<Category> category) const;
  Corpus Retained() const;
  Progress Tally(int64_t rulebase_version) const;

 private:
  friend class AnnotationService;

  std::string id_;
  Corpus pool_;
  std::map<std::string, DecisionRecord> decisions_;
  bool finalized_ = false;
};

// Event-sourced annotation state: the rule base plus a set of sessions.
// Every mutation is an event; events are appended to an optional JSONL log
// and Replay() rebuilds identical state from the initial inputs. All methods
// are thread-safe; mutations are serialized.
class AnnotationService {
 public:
  using TimeSource = std::function<std::string()>;

  explicit AnnotationService(RuleBase initial, TimeSource now = UtcTimestamp);

  void AddSession(std::string id, Corpus pool);
  // Appends every subsequent event to `path` (created if missing).
  void AttachLog(const std::filesystem::path& path);

  std::vector<std::string> SessionIds() const;
  RuleBase rulebase() const;

  // Throws kNotFound for an unknown session, kConflict when finalized.
  std::optional<NextSample> Next(const std::string& session_id,
                                 std::optional<Category> category) const;
  // Returns the rule base version after the decision. Throws kNotFound,
  // kConflict (already decided or finalized) or kValidation; state is
  // unchanged on error.
  int64_t Submit(const std::string& session_id, const std::string& sample_id,
                 const AnnotationDecision& decision, const std::string& annotator);
  Progress GetProgress(const std::string& session_id) const;
  // Balanced sample of m retained per category. Throws kShortfall listing
  // each deficient category and its retained count; the session stays
  // active then.
  Corpus Finalize(const std::string& session_id, size_t m, uint64_t seed);

  int64_t AddRuleDirect(const Rule& rule, const std::string& annotator);
  int64_t UpdateRuleDirect(const std::string& rule_id, const std::string& body,
                           const std::vector<std::string>& hint_terms,
                           const std::string& annotator);

  SampleState StateOf(const std::string& session_id, const std::string& sample_id) const;
  const std::vector<Json>& events() const { return events_; }

  // Applies a logged event sequence to a fresh service.
  static void Replay(AnnotationService& fresh, const std::vector<Json>& events);
  static std::vector<Json> ParseLog(std::string_view jsonl);

 private:
  AnnotationSession& SessionOrThrow(const std::string& id);
  const AnnotationSession& SessionOrThrow(const std::string& id) const;
  // Validates and applies one event atomically, then records it.
  Json ApplyLocked(const Json& event);

  mutable std::mutex mu_;
  RuleBase rb_;
  TimeSource now_;
  std::map<std::string, AnnotationSession> sessions_;
  std::vector<Json> events_;
  std::optional<std::ofstream> log_;
};

struct HttpReply {
  int status = 200;
  Json body;
};

// Transport-independent router for the annotation HTTP API. Finalized
// benchmarks are written to `output_dir` as {session}-benchmark.jsonl.
class AnnotationApi {
 public:
  AnnotationApi(AnnotationService& service, std::filesystem::path output_dir);

  HttpReply Handle(const std::string& method, const std::string& path,
                   const std::map<std::string, std::string>& query, const std::string& body);

 private:
  HttpReply Route(const std::string& method, const std::vector<std::string>& parts,
                  const std::map<std::string, std::string>& query, const std::string& body);

  AnnotationService& service_;
  std::filesystem::path output_dir_;
};

// Blocks serving the API until the process is stopped.
void RunAnnotationServer(AnnotationApi& api, const std::string& host, int port);

}  // namespace harmkit

#endif  // HARMKIT_ANNOTATION_H_
