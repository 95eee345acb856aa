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

#include "harmkit/annotation.h"

#include <algorithm>

namespace harmkit {

namespace {

Json RuleChangeToJson(const RuleChange& c) {
  if (c.action == RuleChange::Action::kAdd) {
    return Json{{"action", "add"}, {"rule", RuleToJson(c.rule)}};
  }
  return Json{{"action", "update"},
              {"rule_id", c.rule_id},
              {"body", c.body},
              {"hint_terms", c.hint_terms}};
}

RuleChange RuleChangeFromJson(const Json& j) {
  RuleChange c;
  const std::string action = j.at("action").get<std::string>();
  if (action == "add") {
    c.action = RuleChange::Action::kAdd;
    c.rule = RuleFromJson(j.at("rule"));
  } else if (action == "update") {
    c.action = RuleChange::Action::kUpdate;
    c.rule_id = j.at("rule_id").get<std::string>();
    c.body = j.at("body").get<std::string>();
    c.hint_terms = j.value("hint_terms", std::vector<std::string>{});
  } else {
    throw Error(ErrorCode::kValidation, "unknown rule change action: " + action);
  }
  return c;
}

Category RequireCategory(const std::string& name) {
  auto c = ParseCategoryName(name);
  if (!c) throw Error(ErrorCode::kValidation, "unknown category: " + name);
  return *c;
}

std::vector<std::string> SplitPath(const std::string& path) {
  std::vector<std::string> parts;
  size_t i = 0;
  while (i < path.size()) {
    size_t j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    if (j > i) parts.push_back(path.substr(i, j - i));
    i = j + 1;
  }
  return parts;
}

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict:
    case ErrorCode::kShortfall: return 409;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

HttpReply ErrorReply(int status, std::string code, std::string message, Json detail = Json::object()) {
  return {status, Json{{"code", std::move(code)}, {"message", std::move(message)}, {"detail", std::move(detail)}}};
}

Json ParseBody(const std::string& body) {
  Json j = Json::parse(body.empty() ? std::string("{}") : body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kValidation, "request body must be a JSON object");
  }
  return j;
}

}  // namespace

std::string_view DecisionKindName(DecisionKind k) {
  switch (k) {
    case DecisionKind::kRetainMatched: return "retain_matched";
    case DecisionKind::kRetainWithRuleChange: return "retain_with_rule_change";
    case DecisionKind::kDiscard: return "discard";
  }
  return "discard";
}

AnnotationDecision AnnotationDecision::RetainMatched(std::string rule_id) {
  AnnotationDecision d;
  d.kind = DecisionKind::kRetainMatched;
  d.rule_id = std::move(rule_id);
  return d;
}

AnnotationDecision AnnotationDecision::AddRule(Rule rule) {
  AnnotationDecision d;
  d.kind = DecisionKind::kRetainWithRuleChange;
  RuleChange c;
  c.action = RuleChange::Action::kAdd;
  c.rule = std::move(rule);
  d.change = std::move(c);
  return d;
}

AnnotationDecision AnnotationDecision::UpdateRule(std::string rule_id, std::string body,
                                                  std::vector<std::string> hint_terms) {
  AnnotationDecision d;
  d.kind = DecisionKind::kRetainWithRuleChange;
  RuleChange c;
  c.action = RuleChange::Action::kUpdate;
  c.rule_id = std::move(rule_id);
  c.body = std::move(body);
  c.hint_terms = std::move(hint_terms);
  d.change = std::move(c);
  return d;
}

AnnotationDecision AnnotationDecision::Discard(std::string reason) {
  AnnotationDecision d;
  d.kind = DecisionKind::kDiscard;
  d.reason = std::move(reason);
  return d;
}

Json DecisionToJson(const AnnotationDecision& d) {
  Json j{{"type", DecisionKindName(d.kind)}};
  switch (d.kind) {
    case DecisionKind::kRetainMatched: j["rule_id"] = d.rule_id; break;
    case DecisionKind::kRetainWithRuleChange: j["change"] = RuleChangeToJson(*d.change); break;
    case DecisionKind::kDiscard: j["reason"] = d.reason; break;
  }
  return j;
}

AnnotationDecision DecisionFromJson(const Json& json) {
  try {
    const std::string type = json.at("type").get<std::string>();
    if (type == "retain_matched") {
      return AnnotationDecision::RetainMatched(json.value("rule_id", std::string()));
    }
    if (type == "retain_with_rule_change") {
      AnnotationDecision d;
      d.kind = DecisionKind::kRetainWithRuleChange;
      d.change = RuleChangeFromJson(json.at("change"));
      return d;
    }
    if (type == "discard") return AnnotationDecision::Discard(json.value("reason", std::string()));
    throw Error(ErrorCode::kValidation, "unknown decision type: " + type);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed decision: ") + e.what());
  }
}

Json ProgressToJson(const Progress& p) {
  Json per = Json::object();
  for (Category c : kAllCategories) {
    const auto& cp = p.per_category[Index(c)];
    per[std::string(EnglishName(c))] = {
        {"undecided", cp.undecided}, {"retained", cp.retained}, {"discarded", cp.discarded}};
  }
  return Json{{"per_category", per},
              {"rulebase_version", p.rulebase_version},
              {"status", p.finalized ? "finalized" : "active"}};
}

AnnotationSession::AnnotationSession(std::string id, Corpus pool)
    : id_(std::move(id)), pool_(std::move(pool)) {}

SampleState AnnotationSession::StateOf(const std::string& sample_id) const {
  auto it = decisions_.find(sample_id);
  if (it == decisions_.end()) return SampleState::kUndecided;
  return it->second.decision.kind == DecisionKind::kDiscard ? SampleState::kDiscarded
                                                            : SampleState::kRetained;
}

const Sample* AnnotationSession::Next(std::optional<Category> category) const {
  for (const Sample& s : pool_.samples()) {
    if (category && s.label != *category) continue;
    if (!decisions_.contains(s.id)) return &s;
  }
  return nullptr;
}

Corpus AnnotationSession::Retained() const {
  std::vector<Sample> kept;
  for (const Sample& s : pool_.samples()) {
    if (StateOf(s.id) == SampleState::kRetained) kept.push_back(s);
  }
  return Corpus(pool_.name(), std::move(kept));
}

Progress AnnotationSession::Tally(int64_t rulebase_version) const {
  Progress p;
  p.rulebase_version = rulebase_version;
  p.finalized = finalized_;
  for (const Sample& s : pool_.samples()) {
    auto& cp = p.per_category[Index(s.label)];
    switch (StateOf(s.id)) {
      case SampleState::kUndecided: ++cp.undecided; break;
      case SampleState::kRetained: ++cp.retained; break;
      case SampleState::kDiscarded: ++cp.discarded; break;
    }
  }
  return p;
}

AnnotationService::AnnotationService(RuleBase initial, TimeSource now)
    : rb_(std::move(initial)), now_(std::move(now)) {}

void AnnotationService::AddSession(std::string id, Corpus pool) {
  std::lock_guard lock(mu_);
  if (id.empty()) throw Error(ErrorCode::kValidation, "session id is empty");
  if (sessions_.contains(id)) throw Error(ErrorCode::kConflict, "session already exists: " + id);
  sessions_.emplace(id, AnnotationSession(id, std::move(pool)));
}

void AnnotationService::AttachLog(const std::filesystem::path& path) {
  std::lock_guard lock(mu_);
  log_.emplace(path, std::ios::app | std::ios::binary);
  if (!*log_) throw Error(ErrorCode::kIo, "cannot open decision log: " + path.string());
}

std::vector<std::string> AnnotationService::SessionIds() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return ids;
}

RuleBase AnnotationService::rulebase() const {
  std::lock_guard lock(mu_);
  return rb_;
}

AnnotationSession& AnnotationService::SessionOrThrow(const std::string& id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "unknown session: " + id);
  return it->second;
}

const AnnotationSession& AnnotationService::SessionOrThrow(const std::string& id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "unknown session: " + id);
  return it->second;
}

std::optional<NextSample> AnnotationService::Next(const std::string& session_id,
                                                  std::optional<Category> category) const {
  std::lock_guard lock(mu_);
  const auto& session = SessionOrThrow(session_id);
  if (session.finalized()) throw Error(ErrorCode::kConflict, "session is finalized: " + session_id);
  const Sample* s = session.Next(category);
  if (s == nullptr) return std::nullopt;
  return NextSample{*s, MatchHints(rb_, s->text)};
}

int64_t AnnotationService::Submit(const std::string& session_id, const std::string& sample_id,
                                  const AnnotationDecision& decision,
                                  const std::string& annotator) {
  std::lock_guard lock(mu_);
  Json event{{"type", "decision"},
             {"session", session_id},
             {"sample_id", sample_id},
             {"decision", DecisionToJson(decision)},
             {"annotator", annotator},
             {"timestamp", now_()}};
  return ApplyLocked(event)["rulebase_version"].get<int64_t>();
}

Progress AnnotationService::GetProgress(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  return SessionOrThrow(session_id).Tally(rb_.version());
}

Corpus AnnotationService::Finalize(const std::string& session_id, size_t m, uint64_t seed) {
  std::lock_guard lock(mu_);
  Json event{{"type", "finalize"},
             {"session", session_id},
             {"m", m},
             {"seed", seed},
             {"timestamp", now_()}};
  ApplyLocked(event);
  return BalancedSample(SessionOrThrow(session_id).Retained(), m, seed);
}

int64_t AnnotationService::AddRuleDirect(const Rule& rule, const std::string& annotator) {
  std::lock_guard lock(mu_);
  Json event{{"type", "rule_add"},
             {"rule", RuleToJson(rule)},
             {"annotator", annotator},
             {"timestamp", now_()}};
  return ApplyLocked(event)["rulebase_version"].get<int64_t>();
}

int64_t AnnotationService::UpdateRuleDirect(const std::string& rule_id, const std::string& body,
                                            const std::vector<std::string>& hint_terms,
                                            const std::string& annotator) {
  std::lock_guard lock(mu_);
  Json event{{"type", "rule_update"},
             {"rule_id", rule_id},
             {"body", body},
             {"hint_terms", hint_terms},
             {"annotator", annotator},
             {"timestamp", now_()}};
  return ApplyLocked(event)["rulebase_version"].get<int64_t>();
}

SampleState AnnotationService::StateOf(const std::string& session_id,
                                       const std::string& sample_id) const {
  std::lock_guard lock(mu_);
  return SessionOrThrow(session_id).StateOf(sample_id);
}

Json AnnotationService::ApplyLocked(const Json& event) {
  const std::string type = event.at("type").get<std::string>();
  const std::string ts = event.at("timestamp").get<std::string>();
  RuleBase next_rb = rb_;

  if (type == "rule_add") {
    next_rb = rb_.WithAdded(RuleFromJson(event.at("rule")), ts);
  } else if (type == "rule_update") {
    next_rb = rb_.WithUpdated(event.at("rule_id").get<std::string>(),
                              event.at("body").get<std::string>(),
                              event.at("hint_terms").get<std::vector<std::string>>(), ts);
  } else if (type == "decision") {
    auto& session = SessionOrThrow(event.at("session").get<std::string>());
    const std::string sample_id = event.at("sample_id").get<std::string>();
    if (session.finalized()) {
      throw Error(ErrorCode::kConflict, "session is finalized: " + session.id());
    }
    const Sample* sample = session.pool().Find(sample_id);
    if (sample == nullptr) {
      throw Error(ErrorCode::kNotFound, "unknown sample: " + sample_id,
                  Json{{"sample_id", sample_id}});
    }
    if (session.decisions_.contains(sample_id)) {
      throw Error(ErrorCode::kConflict, "sample already decided: " + sample_id,
                  Json{{"sample_id", sample_id}});
    }
    const AnnotationDecision decision = DecisionFromJson(event.at("decision"));
    const std::string category(EnglishName(sample->label));
    if (decision.kind == DecisionKind::kRetainMatched) {
      if (decision.rule_id.empty()) {
        if (IsViolation(sample->label)) {
          throw Error(ErrorCode::kValidation, "retaining a violation sample needs a rule id");
        }
      } else {
        const Rule* rule = rb_.Find(decision.rule_id);
        if (rule == nullptr) {
          throw Error(ErrorCode::kValidation, "unknown rule: " + decision.rule_id,
                      Json{{"rule_id", decision.rule_id}});
        }
        if (rule->category != sample->label) {
          throw Error(ErrorCode::kValidation,
                      "rule " + rule->id + " does not belong to category " + category);
        }
      }
    } else if (decision.kind == DecisionKind::kRetainWithRuleChange) {
      const RuleChange& change = *decision.change;
      if (change.action == RuleChange::Action::kAdd) {
        if (change.rule.category != sample->label) {
          throw Error(ErrorCode::kValidation, "new rule must belong to category " + category);
        }
        next_rb = rb_.WithAdded(change.rule, ts);
      } else {
        const Rule* rule = rb_.Find(change.rule_id);
        if (rule != nullptr && rule->category != sample->label) {
          throw Error(ErrorCode::kValidation,
                      "rule " + rule->id + " does not belong to category " + category);
        }
        next_rb = rb_.WithUpdated(change.rule_id, change.body, change.hint_terms, ts);
      }
    }
    session.decisions_[sample_id] = DecisionRecord{decision, event.at("annotator").get<std::string>(),
                                                   ts, next_rb.version()};
  } else if (type == "finalize") {
    auto& session = SessionOrThrow(event.at("session").get<std::string>());
    if (session.finalized()) {
      throw Error(ErrorCode::kConflict, "session is finalized: " + session.id());
    }
    const size_t m = event.at("m").get<size_t>();
    if (m == 0) throw Error(ErrorCode::kValidation, "m must be positive");
    const Corpus retained = session.Retained();
    Json deficits = Json::array();
    std::string message = "not enough retained samples to finalize:";
    for (Category c : kAllCategories) {
      const size_t have = retained.CountOf(c);
      if (have < m) {
        deficits.push_back({{"category", EnglishName(c)}, {"retained", have}, {"required", m}});
        message += " " + std::string(EnglishName(c)) + "/" + std::to_string(have);
      }
    }
    if (!deficits.empty()) {
      throw Error(ErrorCode::kShortfall, message, Json{{"deficits", deficits}});
    }
    session.finalized_ = true;
  } else {
    throw Error(ErrorCode::kValidation, "unknown event type: " + type);
  }

  rb_ = std::move(next_rb);
  Json recorded = event;
  recorded["seq"] = events_.size();
  events_.push_back(recorded);
  if (log_) {
    *log_ << recorded.dump() << '\n';
    log_->flush();
  }
  return Json{{"rulebase_version", rb_.version()}};
}

void AnnotationService::Replay(AnnotationService& fresh, const std::vector<Json>& events) {
  std::lock_guard lock(fresh.mu_);
  for (const Json& e : events) {
    Json stripped = e;
    stripped.erase("seq");
    fresh.ApplyLocked(stripped);
  }
}

std::vector<Json> AnnotationService::ParseLog(std::string_view jsonl) {
  std::vector<Json> out;
  size_t line_no = 0;
  for (const auto& line : SplitLines(jsonl)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorCode::kValidation,
                  "decision log line " + std::to_string(line_no) + " is not a JSON object");
    }
    out.push_back(std::move(j));
  }
  return out;
}

AnnotationApi::AnnotationApi(AnnotationService& service, std::filesystem::path output_dir)
    : service_(service), output_dir_(std::move(output_dir)) {}

HttpReply AnnotationApi::Handle(const std::string& method, const std::string& path,
                                const std::map<std::string, std::string>& query,
                                const std::string& body) {
  try {
    return Route(method, SplitPath(path), query, body);
  } catch (const Error& e) {
    return {StatusFor(e.code()), e.ToJson()};
  } catch (const Json::exception& e) {
    return ErrorReply(400, "validation_error", std::string("malformed request: ") + e.what());
  } catch (const std::exception& e) {
    return ErrorReply(500, "internal", e.what());
  }
}

HttpReply AnnotationApi::Route(const std::string& method, const std::vector<std::string>& parts,
                               const std::map<std::string, std::string>& query,
                               const std::string& body) {
  if (parts.size() == 3 && parts[0] == "sessions") {
    const std::string& sid = parts[1];
    const std::string& action = parts[2];
    if (method == "GET" && action == "next") {
      std::optional<Category> category;
      if (auto it = query.find("category"); it != query.end() && !it->second.empty()) {
        category = RequireCategory(it->second);
      }
      auto next = service_.Next(sid, category);
      if (!next) {
        return ErrorReply(404, "queue_empty", "no undecided samples remain",
                          Json{{"session", sid},
                               {"category", category ? Json(EnglishName(*category)) : Json()}});
      }
      Json hints = Json::array();
      for (const auto& h : next->hints) hints.push_back(HintMatchToJson(h));
      return {200, Json{{"sample", SampleToJson(next->sample)}, {"hints", hints}}};
    }
    if (method == "POST" && action == "decisions") {
      const Json j = ParseBody(body);
      const int64_t version =
          service_.Submit(sid, j.at("sample_id").get<std::string>(),
                          DecisionFromJson(j.at("decision")), j.value("annotator", std::string()));
      return {200, Json{{"ok", true}, {"rulebase_version", version}}};
    }
    if (method == "GET" && action == "progress") {
      return {200, ProgressToJson(service_.GetProgress(sid))};
    }
    if (method == "POST" && action == "finalize") {
      const Json j = ParseBody(body);
      const int64_t m = j.at("m").get<int64_t>();
      if (m <= 0) throw Error(ErrorCode::kValidation, "m must be positive");
      const Corpus bench = service_.Finalize(sid, static_cast<size_t>(m), j.value("seed", uint64_t{0}));
      const std::string contents = ExportJsonl(bench);
      Json reply{{"ok", true}, {"count", bench.size()}, {"sha256", Sha256Hex(contents)}};
      if (!output_dir_.empty()) {
        const auto path = output_dir_ / (sid + "-benchmark.jsonl");
        WriteFile(path, contents);
        reply["path"] = path.string();
        const auto rules_path = output_dir_ / (sid + "-rules.json");
        SaveRuleBase(service_.rulebase(), rules_path);
        reply["rules_path"] = rules_path.string();
      }
      return {200, reply};
    }
  }
  if (parts.size() == 1 && parts[0] == "rulebase" && method == "GET") {
    return {200, service_.rulebase().ToJson()};
  }
  if (parts.size() == 2 && parts[0] == "rulebase" && parts[1] == "rules" && method == "POST") {
    const Json j = ParseBody(body);
    const int64_t version = service_.AddRuleDirect(RuleFromJson(j.contains("rule") ? j["rule"] : j),
                                                   j.value("annotator", std::string()));
    return {200, Json{{"ok", true}, {"rulebase_version", version}}};
  }
  if (parts.size() == 3 && parts[0] == "rulebase" && parts[1] == "rules" && method == "PATCH") {
    const Json j = ParseBody(body);
    const RuleBase current = service_.rulebase();
    const Rule* rule = current.Find(parts[2]);
    if (rule == nullptr) throw Error(ErrorCode::kNotFound, "unknown rule: " + parts[2]);
    const int64_t version = service_.UpdateRuleDirect(
        parts[2], j.value("body", rule->body),
        j.value("hint_terms", rule->hint_terms), j.value("annotator", std::string()));
    return {200, Json{{"ok", true}, {"rulebase_version", version}}};
  }
  if (parts.size() == 1 && parts[0] == "sessions" && method == "GET") {
    return {200, Json{{"sessions", service_.SessionIds()}}};
  }
  return ErrorReply(404, "not_found", "no route for " + method + " /" + [&] {
    std::string p;
    for (size_t i = 0; i < parts.size(); ++i) p += (i ? "/" : "") + parts[i];
    return p;
  }());
}

}  // namespace harmkit
