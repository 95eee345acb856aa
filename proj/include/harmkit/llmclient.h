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

#ifndef HARMKIT_LLMCLIENT_H_
#define HARMKIT_LLMCLIENT_H_

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "harmkit/clustering.h"
#include "harmkit/common.h"

namespace harmkit {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::optional<int> top_k;
  std::optional<double> top_p;
  int max_tokens = 1024;
};

// Throws kValidation when messages are empty, temperature < 0 or
// max_tokens <= 0.
void ValidateRequest(const ChatRequest& req);
ChatRequest UserPrompt(std::string model, std::string prompt, double temperature);

// Wire body in the chat-completions shape.
Json ChatRequestToJson(const ChatRequest& req);

struct ProviderConfig {
  std::string endpoint;  // base URL, e.g. https://api.example.com/v1
  std::string model;
  // Name of the environment variable holding the key; never the key itself.
  std::string api_key_env;
  int requests_per_minute = 60;
  int max_retries = 3;
  std::chrono::milliseconds timeout{60000};
  int max_parallelism = 4;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds backoff_max{30000};
};

// Throws kConfig on non-positive limits.
void ValidateConfig(const ProviderConfig& cfg);
Json ProviderConfigToJson(const ProviderConfig& cfg);
ProviderConfig ProviderConfigFromJson(const Json& json);

enum class LlmStatus {
  kOk,
  kAuthError,          // not retried
  kRateLimited,        // retried
  kTimeout,            // retried
  kServerError,        // 5xx and transport failures; retried
  kMalformedResponse,  // not retried
  kContentRefused,     // provider-side content filter; not retried
};

std::string_view LlmStatusName(LlmStatus s);
bool IsRetryable(LlmStatus s);

struct Usage {
  int64_t prompt_tokens = 0;
  int64_t completion_tokens = 0;
};

// One provider round trip.
struct ProviderReply {
  LlmStatus status = LlmStatus::kOk;
  std::string text;
  Usage usage;
  std::string message;
};

struct EmbedReply {
  LlmStatus status = LlmStatus::kOk;
  std::vector<Vector> vectors;
  std::string message;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual ProviderReply Chat(const ProviderConfig& cfg, const ChatRequest& req) = 0;
  virtual EmbedReply Embed(const ProviderConfig& cfg,
                           std::span<const std::string> texts) = 0;
};

// HTTP(S) transport speaking the chat-completions and embeddings JSON
// protocol: POST {endpoint}/chat/completions and {endpoint}/embeddings.
std::shared_ptr<Transport> MakeHttpTransport();

// Maps an HTTP status and body to a reply. Exposed for testing.
ProviderReply ParseChatResponse(int http_status, const std::string& body);
EmbedReply ParseEmbedResponse(int http_status, const std::string& body,
                              size_t expected_count);

struct CompletionResult {
  LlmStatus status = LlmStatus::kOk;
  std::string text;
  Usage usage;
  std::chrono::milliseconds latency{0};
  int attempts = 0;
  // Status of every attempt, in order.
  std::vector<LlmStatus> attempt_log;
  std::string message;

  bool ok() const { return status == LlmStatus::kOk; }
};

struct EmbedResult {
  LlmStatus status = LlmStatus::kOk;
  std::vector<Vector> vectors;
  int attempts = 0;
  std::string message;

  bool ok() const { return status == LlmStatus::kOk; }
};

// Time source and sleeper, replaceable in tests.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::chrono::steady_clock::time_point Now() = 0;
  virtual void SleepFor(std::chrono::nanoseconds d) = 0;
};
std::shared_ptr<Clock> SystemClock();

// Sliding one-minute window: at most `per_minute` acquisitions in any 60 s.
class RateLimiter {
 public:
  RateLimiter(int per_minute, std::shared_ptr<Clock> clock);
  void Acquire();

 private:
  int per_minute_;
  std::shared_ptr<Clock> clock_;
  std::mutex mu_;
  std::deque<std::chrono::steady_clock::time_point> issued_;
};

// Thread-safe client with retries (exponential backoff plus seeded jitter),
// a shared rate limiter and bounded batch parallelism.
class LlmClient {
 public:
  LlmClient(ProviderConfig cfg, std::shared_ptr<Transport> transport,
            std::shared_ptr<Clock> clock = SystemClock(), uint64_t jitter_seed = 0);

  const ProviderConfig& config() const { return cfg_; }

  CompletionResult Complete(const ChatRequest& req);
  // Result i corresponds to request i.
  std::vector<CompletionResult> CompleteBatch(std::span<const ChatRequest> reqs);
  EmbedResult Embed(std::span<const std::string> texts);

  std::chrono::milliseconds BackoffDelay(int retry_index);

 private:
  template <typename Reply>
  Reply WithRetries(const std::function<Reply()>& call, int& attempts,
                    std::vector<LlmStatus>* log);

  ProviderConfig cfg_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<Clock> clock_;
  RateLimiter limiter_;
  std::mutex jitter_mu_;
  Rng jitter_;
};

// Deterministic in-process provider. Replies come from a callback taking the
// request and its zero-based call index (in arrival order).
class MockTransport : public Transport {
 public:
  using ChatFn = std::function<ProviderReply(const ChatRequest&, size_t call_index)>;
  using EmbedFn = std::function<EmbedReply(std::span<const std::string>)>;

  explicit MockTransport(ChatFn chat, EmbedFn embed = nullptr);

  ProviderReply Chat(const ProviderConfig& cfg, const ChatRequest& req) override;
  EmbedReply Embed(const ProviderConfig& cfg, std::span<const std::string> texts) override;

  size_t calls() const;
  size_t peak_concurrency() const;

  // Simulated latency per call, for concurrency tests.
  void set_latency(std::function<std::chrono::microseconds(size_t call_index)> fn);

 private:
  ChatFn chat_;
  EmbedFn embed_;
  std::function<std::chrono::microseconds(size_t)> latency_;
  mutable std::mutex mu_;
  size_t calls_ = 0;
  size_t in_flight_ = 0;
  size_t peak_ = 0;
};

// Hashed character-trigram embedding, L2-normalised; a stand-in encoder for
// offline runs.
Vector MockEmbedding(std::string_view text, size_t dim);

// Builds a mock from a script:
// {
//   "responses": [
//     {"index": 2, "error": "timeout"},          // by call index
//     {"contains": "时时彩", "text": "博彩"},      // by prompt substring
//     ...
//   ],
//   "default": {"text": "..."} | {"digest": true} | {"error": "..."},
//   "embedding_dim": 32
// }
// Rules are tried in order; "digest" answers with a deterministic text
// derived from the prompt hash.
std::shared_ptr<MockTransport> MockFromScript(const Json& script);

}  // namespace harmkit

#endif  // HARMKIT_LLMCLIENT_H_
