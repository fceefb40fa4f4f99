//
// Copyright 2026 The cefrsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "cefrsynth/llm_gateway.h"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "cefrsynth/error.h"
#include "fmt/format.h"
#include "httplib.h"
#include "nlohmann/json.hpp"

namespace cefrsynth {

void ChatRequest::Validate() const {
  if (system_message.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "system_message must not be empty");
  }
  if (user_message.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "user_message must not be empty");
  }
  if (!std::isfinite(temperature) || temperature < 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("temperature must be finite and >= 0, got {}",
                            temperature));
  }
  if (max_output_tokens <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_output_tokens must be positive");
  }
}

HttpTransport DefaultHttpTransport() {
  return [](const std::string& url, const HttpHeaders& headers,
            const std::string& body,
            std::chrono::milliseconds timeout) -> HttpResult {
    const size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      return {0, "", fmt::format("endpoint '{}' lacks a scheme", url)};
    }
    const size_t path_begin = url.find('/', scheme_end + 3);
    const std::string origin =
        path_begin == std::string::npos ? url : url.substr(0, path_begin);
    const std::string path =
        path_begin == std::string::npos ? "/" : url.substr(path_begin);
    httplib::Client client(origin);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
        timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    httplib::Headers http_headers;
    for (const auto& [key, value] : headers) http_headers.emplace(key, value);
    auto result = client.Post(path, http_headers, body, "application/json");
    if (!result) return {0, "", httplib::to_string(result.error())};
    return {result->status, result->body, ""};
  };
}

HttpChatClient::HttpChatClient(GatewayConfig config, HttpTransport transport,
                               SleepFn sleep)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleep_(std::move(sleep)),
      slots_(std::clamp<std::ptrdiff_t>(config_.max_concurrency, 1, kMaxSlots)) {
  if (config_.max_concurrency < 1 || config_.max_concurrency > kMaxSlots) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("max_concurrency must be in [1, {}]", kMaxSlots));
  }
  if (config_.retry_cap < 0) {
    throw Error(ErrorCode::kInvalidArgument, "retry_cap must be >= 0");
  }
  if (!transport_) transport_ = DefaultHttpTransport();
  if (!sleep_) {
    sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

std::string HttpChatClient::BuildRequestBody(const ChatRequest& request,
                                             std::string_view model_id) {
  nlohmann::ordered_json body;
  body["model"] = model_id;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "system"}, {"content", request.system_message}},
       {{"role", "user"}, {"content", request.user_message}}});
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_output_tokens;
  return body.dump();
}

std::string HttpChatClient::ParseResponseText(std::string_view body,
                                              TokenUsage* usage) {
  try {
    const nlohmann::json root = nlohmann::json::parse(body);
    const nlohmann::json& content =
        root.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) {
      throw Error(ErrorCode::kMalformedResponse,
                  "first choice has no string content");
    }
    if (usage != nullptr && root.contains("usage") && root["usage"].is_object()) {
      const nlohmann::json& u = root["usage"];
      usage->prompt_tokens = u.value("prompt_tokens", int64_t{0});
      usage->completion_tokens = u.value("completion_tokens", int64_t{0});
      usage->total_tokens = u.value("total_tokens", int64_t{0});
    }
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse,
                fmt::format("unexpected provider response: {}", e.what()));
  }
}

namespace {

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<256>& slots) : slots_(slots) {
    slots_.acquire();
  }
  ~SlotGuard() { slots_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<256>& slots_;
};

}  // namespace

ChatResponse HttpChatClient::Complete(const ChatRequest& request) {
  request.Validate();
  const std::string model =
      request.model_id.empty() ? config_.model_id : request.model_id;
  if (config_.endpoint_url.empty() || model.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "gateway needs endpoint_url and model_id in its configuration");
  }
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::kAuthentication,
                fmt::format("environment variable {} is not set",
                            config_.api_key_env));
  }
  const HttpHeaders headers = {{"Authorization", std::string("Bearer ") + key}};
  const std::string body = BuildRequestBody(request, model);

  SlotGuard guard(slots_);
  const auto start = std::chrono::steady_clock::now();
  int failures = 0;
  while (true) {
    const HttpResult result =
        transport_(config_.endpoint_url, headers, body, config_.timeout);
    if (result.status == 200) {
      ChatResponse response;
      response.text = ParseResponseText(result.body, &response.usage);
      response.attempts = failures + 1;
      response.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      return response;
    }
    if (result.status == 401 || result.status == 403) {
      throw Error(ErrorCode::kAuthentication,
                  fmt::format("provider rejected credentials (HTTP {})",
                              result.status));
    }
    const bool transient = result.status == 0 || result.status == 429 ||
                           result.status >= 500;
    if (!transient) {
      throw Error(ErrorCode::kProvider,
                  fmt::format("provider returned HTTP {}", result.status));
    }
    ++failures;
    if (failures > config_.retry_cap) {
      if (result.status == 429) {
        throw Error(ErrorCode::kRateLimited,
                    fmt::format("rate limited after {} attempts", failures));
      }
      throw Error(ErrorCode::kProvider,
                  fmt::format("giving up after {} attempts: {}", failures,
                              result.status == 0
                                  ? result.error
                                  : fmt::format("HTTP {}", result.status)));
    }
    sleep_(config_.backoff_base * (int64_t{1} << std::min(failures - 1, 20)));
  }
}

}  // namespace cefrsynth
