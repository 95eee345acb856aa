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

#include "harmkit/llmclient.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace harmkit {

void ValidateRequest(const ChatRequest& req) {
  if (req.messages.empty()) {
    throw Error(ErrorCode::kValidation, "chat request has no messages");
  }
  if (!(req.temperature >= 0.0)) {
    throw Error(ErrorCode::kValidation, "temperature must be >= 0");
  }
  if (req.max_tokens <= 0) {
    throw Error(ErrorCode::kValidation, "max_tokens must be positive");
  }
}

ChatRequest UserPrompt(std::string model, std::string prompt, double temperature) {
  ChatRequest req;
  req.model = std::move(model);
  req.messages.push_back({"user", std::move(prompt)});
  req.temperature = temperature;
  return req;
}

Json ChatRequestToJson(const ChatRequest& req) {
  Json messages = Json::array();
  for (const auto& m : req.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  Json body{{"model", req.model},
            {"messages", std::move(messages)},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens}};
  if (req.top_k) body["top_k"] = *req.top_k;
  if (req.top_p) body["top_p"] = *req.top_p;
  return body;
}

void ValidateConfig(const ProviderConfig& cfg) {
  if (cfg.requests_per_minute <= 0 || cfg.max_parallelism <= 0 ||
      cfg.max_retries < 0 || cfg.timeout.count() <= 0) {
    throw Error(ErrorCode::kConfig,
                "provider limits must be positive (rpm, parallelism, timeout) and "
                "retries non-negative");
  }
}

Json ProviderConfigToJson(const ProviderConfig& cfg) {
  return Json{{"endpoint", cfg.endpoint},
              {"model", cfg.model},
              {"api_key_env", cfg.api_key_env},
              {"rpm", cfg.requests_per_minute},
              {"retries", cfg.max_retries},
              {"timeout_ms", cfg.timeout.count()},
              {"parallelism", cfg.max_parallelism}};
}

ProviderConfig ProviderConfigFromJson(const Json& json) {
  ProviderConfig cfg;
  try {
    cfg.endpoint = json.value("endpoint", std::string());
    cfg.model = json.value("model", std::string());
    cfg.api_key_env = json.value("api_key_env", std::string());
    cfg.requests_per_minute = json.value("rpm", cfg.requests_per_minute);
    cfg.max_retries = json.value("retries", cfg.max_retries);
    cfg.timeout = std::chrono::milliseconds(json.value("timeout_ms", int64_t{60000}));
    cfg.max_parallelism = json.value("parallelism", cfg.max_parallelism);
    cfg.backoff_base = std::chrono::milliseconds(json.value("backoff_ms", int64_t{500}));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("malformed provider config: ") + e.what());
  }
  ValidateConfig(cfg);
  return cfg;
}

std::string_view LlmStatusName(LlmStatus s) {
  switch (s) {
    case LlmStatus::kOk:
      return "ok";
    case LlmStatus::kAuthError:
      return "auth_error";
    case LlmStatus::kRateLimited:
      return "rate_limited";
    case LlmStatus::kTimeout:
      return "timeout";
    case LlmStatus::kServerError:
      return "server_error";
    case LlmStatus::kMalformedResponse:
      return "malformed_response";
    case LlmStatus::kContentRefused:
      return "content_refused";
  }
  return "unknown";
}

bool IsRetryable(LlmStatus s) {
  return s == LlmStatus::kRateLimited || s == LlmStatus::kTimeout ||
         s == LlmStatus::kServerError;
}

namespace {

class SteadyClock : public Clock {
 public:
  std::chrono::steady_clock::time_point Now() override {
    return std::chrono::steady_clock::now();
  }
  void SleepFor(std::chrono::nanoseconds d) override { std::this_thread::sleep_for(d); }
};

}  // namespace

std::shared_ptr<Clock> SystemClock() {
  static auto clock = std::make_shared<SteadyClock>();
  return clock;
}

RateLimiter::RateLimiter(int per_minute, std::shared_ptr<Clock> clock)
    : per_minute_(per_minute), clock_(std::move(clock)) {}

void RateLimiter::Acquire() {
  constexpr auto kWindow = std::chrono::minutes(1);
  while (true) {
    std::chrono::nanoseconds wait{0};
    {
      std::lock_guard lock(mu_);
      const auto now = clock_->Now();
      while (!issued_.empty() && now - issued_.front() >= kWindow) issued_.pop_front();
      if (static_cast<int>(issued_.size()) < per_minute_) {
        issued_.push_back(now);
        return;
      }
      wait = issued_.front() + kWindow - now;
    }
    clock_->SleepFor(wait);
  }
}

LlmClient::LlmClient(ProviderConfig cfg, std::shared_ptr<Transport> transport,
                     std::shared_ptr<Clock> clock, uint64_t jitter_seed)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      clock_(std::move(clock)),
      limiter_(cfg_.requests_per_minute, clock_),
      jitter_(jitter_seed) {
  ValidateConfig(cfg_);
}

std::chrono::milliseconds LlmClient::BackoffDelay(int retry_index) {
  const int64_t base = cfg_.backoff_base.count();
  int64_t delay = base;
  for (int i = 0; i < retry_index && delay < cfg_.backoff_max.count(); ++i) delay *= 2;
  delay = std::min<int64_t>(delay, cfg_.backoff_max.count());
  int64_t jitter = 0;
  if (base > 0) {
    std::lock_guard lock(jitter_mu_);
    jitter = static_cast<int64_t>(jitter_.UniformIndex(static_cast<size_t>(base)));
  }
  return std::chrono::milliseconds(delay + jitter);
}

template <typename Reply>
Reply LlmClient::WithRetries(const std::function<Reply()>& call, int& attempts,
                             std::vector<LlmStatus>* log) {
  Reply reply;
  for (int attempt = 0;; ++attempt) {
    limiter_.Acquire();
    reply = call();
    ++attempts;
    if (log != nullptr) log->push_back(reply.status);
    if (reply.status == LlmStatus::kOk || !IsRetryable(reply.status) ||
        attempt >= cfg_.max_retries) {
      return reply;
    }
    clock_->SleepFor(BackoffDelay(attempt));
  }
}

CompletionResult LlmClient::Complete(const ChatRequest& req) {
  CompletionResult result;
  try {
    ValidateRequest(req);
  } catch (const Error& e) {
    result.status = LlmStatus::kMalformedResponse;
    result.message = e.what();
    return result;
  }
  const auto start = clock_->Now();
  ProviderReply reply = WithRetries<ProviderReply>(
      [&] { return transport_->Chat(cfg_, req); }, result.attempts, &result.attempt_log);
  result.latency =
      std::chrono::duration_cast<std::chrono::milliseconds>(clock_->Now() - start);
  result.status = reply.status;
  result.text = std::move(reply.text);
  result.usage = reply.usage;
  result.message = std::move(reply.message);
  return result;
}

std::vector<CompletionResult> LlmClient::CompleteBatch(std::span<const ChatRequest> reqs) {
  std::vector<CompletionResult> results(reqs.size());
  if (reqs.empty()) return results;
  const size_t workers =
      std::min(reqs.size(), static_cast<size_t>(cfg_.max_parallelism));
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i = next++; i < reqs.size(); i = next++) results[i] = Complete(reqs[i]);
  };
  if (workers == 1) {
    work();
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return results;
}

EmbedResult LlmClient::Embed(std::span<const std::string> texts) {
  EmbedResult result;
  if (texts.empty()) return result;
  EmbedReply reply = WithRetries<EmbedReply>(
      [&] {
        EmbedReply r = transport_->Embed(cfg_, texts);
        if (r.status != LlmStatus::kOk) return r;
        if (r.vectors.size() != texts.size()) {
          return EmbedReply{LlmStatus::kMalformedResponse, {},
                            "embedding count does not match input count"};
        }
        for (const auto& v : r.vectors) {
          if (v.empty() || v.size() != r.vectors.front().size()) {
            return EmbedReply{LlmStatus::kMalformedResponse, {},
                              "provider returned embeddings of differing dimension"};
          }
          for (double x : v) {
            if (!std::isfinite(x)) {
              return EmbedReply{LlmStatus::kMalformedResponse, {},
                                "provider returned a non-finite embedding"};
            }
          }
        }
        return r;
      },
      result.attempts, nullptr);
  result.status = reply.status;
  result.vectors = std::move(reply.vectors);
  result.message = std::move(reply.message);
  return result;
}

MockTransport::MockTransport(ChatFn chat, EmbedFn embed)
    : chat_(std::move(chat)), embed_(std::move(embed)) {}

ProviderReply MockTransport::Chat(const ProviderConfig&, const ChatRequest& req) {
  size_t index = 0;
  {
    std::lock_guard lock(mu_);
    index = calls_++;
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
  }
  if (latency_) std::this_thread::sleep_for(latency_(index));
  ProviderReply reply = chat_ ? chat_(req, index)
                              : ProviderReply{LlmStatus::kServerError, {}, {}, "no mock"};
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  return reply;
}

EmbedReply MockTransport::Embed(const ProviderConfig&, std::span<const std::string> texts) {
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  if (embed_) return embed_(texts);
  EmbedReply reply;
  for (const auto& t : texts) reply.vectors.push_back(MockEmbedding(t, 32));
  return reply;
}

size_t MockTransport::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

size_t MockTransport::peak_concurrency() const {
  std::lock_guard lock(mu_);
  return peak_;
}

void MockTransport::set_latency(std::function<std::chrono::microseconds(size_t)> fn) {
  latency_ = std::move(fn);
}

Vector MockEmbedding(std::string_view text, size_t dim) {
  Vector v(dim, 0.0);
  const auto chars = DecodeUtf8(text);
  for (size_t n = 1; n <= 3; ++n) {
    for (size_t i = 0; i + n <= chars.size(); ++i) {
      const size_t begin = chars[i].offset;
      const size_t end = chars[i + n - 1].offset + chars[i + n - 1].length;
      const uint64_t h = Fnv1a64(text.substr(begin, end - begin), n);
      v[h % dim] += (h >> 63) ? 1.0 : -1.0;
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

namespace {

std::optional<LlmStatus> StatusFromName(const std::string& name) {
  for (LlmStatus s : {LlmStatus::kAuthError, LlmStatus::kRateLimited, LlmStatus::kTimeout,
                      LlmStatus::kServerError, LlmStatus::kMalformedResponse,
                      LlmStatus::kContentRefused}) {
    if (LlmStatusName(s) == name) return s;
  }
  if (name == "auth") return LlmStatus::kAuthError;
  if (name == "malformed") return LlmStatus::kMalformedResponse;
  if (name == "refused") return LlmStatus::kContentRefused;
  return std::nullopt;
}

ProviderReply ReplyFromAction(const Json& action, const ChatRequest& req) {
  if (auto err = action.find("error"); err != action.end()) {
    auto status = StatusFromName(err->get<std::string>());
    if (!status) {
      throw Error(ErrorCode::kConfig, "unknown mock error kind: " + err->get<std::string>());
    }
    return {*status, {}, {}, "scripted failure"};
  }
  if (action.value("digest", false)) {
    const std::string& prompt = req.messages.back().content;
    return {LlmStatus::kOk, "mock-response-" + Sha256Hex(prompt).substr(0, 16), {}, {}};
  }
  if (auto text = action.find("text"); text != action.end()) {
    return {LlmStatus::kOk, text->get<std::string>(), {}, {}};
  }
  throw Error(ErrorCode::kConfig, "mock action needs one of error/digest/text");
}

}  // namespace

std::shared_ptr<MockTransport> MockFromScript(const Json& script) {
  if (!script.is_object()) throw Error(ErrorCode::kConfig, "mock script must be an object");
  auto rules = script.value("responses", Json::array());
  auto fallback = script.value("default", Json{{"digest", true}});
  const size_t dim = script.value("embedding_dim", size_t{32});
  // Validate actions eagerly so a bad script fails at load time.
  ChatRequest probe = UserPrompt("probe", "probe", 0.0);
  for (const auto& r : rules) ReplyFromAction(r, probe);
  ReplyFromAction(fallback, probe);

  auto chat = [rules, fallback](const ChatRequest& req, size_t index) {
    const std::string& prompt = req.messages.back().content;
    for (const auto& r : rules) {
      if (auto idx = r.find("index"); idx != r.end() && idx->get<size_t>() != index) continue;
      if (auto sub = r.find("contains");
          sub != r.end() && prompt.find(sub->get<std::string>()) == std::string::npos) {
        continue;
      }
      if (!r.contains("index") && !r.contains("contains")) continue;
      return ReplyFromAction(r, req);
    }
    return ReplyFromAction(fallback, req);
  };
  auto embed = [dim](std::span<const std::string> texts) {
    EmbedReply reply;
    for (const auto& t : texts) reply.vectors.push_back(MockEmbedding(t, dim));
    return reply;
  };
  return std::make_shared<MockTransport>(chat, embed);
}

}  // namespace harmkit
