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

#include "httplib.h"

#include <cstdlib>

#include "harmkit/llmclient.h"

namespace harmkit {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string base_path;
};

Endpoint SplitEndpoint(const std::string& url) {
  const size_t scheme_end = url.find("://");
  const size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const size_t path_start = url.find('/', host_start);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  ep.base_path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  return ep;
}

LlmStatus StatusForHttp(int status) {
  if (status == 401 || status == 403) return LlmStatus::kAuthError;
  if (status == 408) return LlmStatus::kTimeout;
  if (status == 429) return LlmStatus::kRateLimited;
  if (status >= 500) return LlmStatus::kServerError;
  return LlmStatus::kMalformedResponse;
}

bool MentionsContentFilter(const Json& body) {
  if (!body.is_object()) return false;
  auto err = body.find("error");
  if (err == body.end() || !err->is_object()) return false;
  const std::string code = err->value("code", std::string());
  const std::string type = err->value("type", std::string());
  return code == "content_filter" || code == "content_policy_violation" ||
         type == "content_filter";
}

class HttpTransport : public Transport {
 public:
  ProviderReply Chat(const ProviderConfig& cfg, const ChatRequest& req) override {
    std::string body;
    int status = 0;
    if (auto failure = Post(cfg, "/chat/completions", ChatRequestToJson(req).dump(), body, status)) {
      return *failure;
    }
    return ParseChatResponse(status, body);
  }

  EmbedReply Embed(const ProviderConfig& cfg, std::span<const std::string> texts) override {
    Json payload{{"model", cfg.model},
                 {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    std::string body;
    int status = 0;
    if (auto failure = Post(cfg, "/embeddings", payload.dump(), body, status)) {
      return EmbedReply{failure->status, {}, failure->message};
    }
    return ParseEmbedResponse(status, body, texts.size());
  }

 private:
  // Returns a failure reply when no HTTP response was obtained.
  std::optional<ProviderReply> Post(const ProviderConfig& cfg, const std::string& route,
                                    const std::string& payload, std::string& body,
                                    int& status) {
    httplib::Headers headers;
    if (!cfg.api_key_env.empty()) {
      const char* key = std::getenv(cfg.api_key_env.c_str());
      if (key == nullptr || *key == '\0') {
        return ProviderReply{LlmStatus::kAuthError, {}, {},
                             "credential environment variable is not set: " + cfg.api_key_env};
      }
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const Endpoint ep = SplitEndpoint(cfg.endpoint);
    httplib::Client client(ep.origin);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    auto res = client.Post(ep.base_path + route, headers, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      return ProviderReply{timed_out ? LlmStatus::kTimeout : LlmStatus::kServerError, {}, {},
                           "transport failure: " + httplib::to_string(err)};
    }
    status = res->status;
    body = res->body;
    return std::nullopt;
  }
};

}  // namespace

ProviderReply ParseChatResponse(int http_status, const std::string& body) {
  Json parsed = Json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (http_status != 200) {
    if (MentionsContentFilter(parsed)) {
      return {LlmStatus::kContentRefused, {}, {}, "provider content filter"};
    }
    return {StatusForHttp(http_status), {}, {}, "HTTP " + std::to_string(http_status)};
  }
  if (parsed.is_discarded() || !parsed.is_object()) {
    return {LlmStatus::kMalformedResponse, {}, {}, "response is not a JSON object"};
  }
  auto choices = parsed.find("choices");
  if (choices == parsed.end() || !choices->is_array() || choices->empty()) {
    return {LlmStatus::kMalformedResponse, {}, {}, "response has no choices"};
  }
  const Json& choice = choices->front();
  if (choice.value("finish_reason", std::string()) == "content_filter") {
    return {LlmStatus::kContentRefused, {}, {}, "provider content filter"};
  }
  auto message = choice.find("message");
  if (message == choice.end() || !message->is_object() || !message->contains("content") ||
      !(*message)["content"].is_string()) {
    return {LlmStatus::kMalformedResponse, {}, {}, "choice has no message content"};
  }
  ProviderReply reply;
  reply.text = (*message)["content"].get<std::string>();
  if (auto usage = parsed.find("usage"); usage != parsed.end() && usage->is_object()) {
    reply.usage.prompt_tokens = usage->value("prompt_tokens", int64_t{0});
    reply.usage.completion_tokens = usage->value("completion_tokens", int64_t{0});
  }
  return reply;
}

EmbedReply ParseEmbedResponse(int http_status, const std::string& body,
                              size_t expected_count) {
  if (http_status != 200) {
    return {StatusForHttp(http_status), {}, "HTTP " + std::to_string(http_status)};
  }
  Json parsed = Json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("data") || !parsed["data"].is_array()) {
    return {LlmStatus::kMalformedResponse, {}, "response has no data array"};
  }
  const auto& data = parsed["data"];
  if (data.size() != expected_count) {
    return {LlmStatus::kMalformedResponse, {}, "embedding count mismatch"};
  }
  EmbedReply reply;
  reply.vectors.resize(expected_count);
  for (size_t i = 0; i < data.size(); ++i) {
    const size_t slot = data[i].value("index", i);
    if (slot >= expected_count || !data[i].contains("embedding") ||
        !data[i]["embedding"].is_array()) {
      return {LlmStatus::kMalformedResponse, {}, "bad embedding record"};
    }
    try {
      reply.vectors[slot] = data[i]["embedding"].get<Vector>();
    } catch (const Json::exception&) {
      return {LlmStatus::kMalformedResponse, {}, "non-numeric embedding"};
    }
  }
  for (const auto& v : reply.vectors) {
    if (v.empty() || v.size() != reply.vectors.front().size()) {
      return {LlmStatus::kMalformedResponse, {}, "embedding dimension mismatch"};
    }
  }
  return reply;
}

std::shared_ptr<Transport> MakeHttpTransport() { return std::make_shared<HttpTransport>(); }

}  // namespace harmkit
