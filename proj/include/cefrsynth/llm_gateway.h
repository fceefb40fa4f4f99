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

#ifndef CEFRSYNTH_LLM_GATEWAY_H_
#define CEFRSYNTH_LLM_GATEWAY_H_

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cefrsynth {

struct ChatRequest {
  std::string system_message;
  std::string user_message;
  double temperature = 0.7;
  int64_t max_output_tokens = 1200;
  // Empty means the client's configured model.
  std::string model_id;
  // Honoured by the mock only; never sent over the wire.
  std::optional<uint64_t> seed;

  // Throws Error(kInvalidArgument) on an empty message, a non-finite or
  // negative temperature, or a non-positive token limit.
  void Validate() const;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct TokenUsage {
  int64_t prompt_tokens = 0;
  int64_t completion_tokens = 0;
  int64_t total_tokens = 0;
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;
  std::chrono::milliseconds latency{0};
  int attempts = 1;
};

// Implementations must be safe to call from several threads at once.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse Complete(const ChatRequest& request) = 0;
  // Requests a caller may usefully keep in flight.
  virtual int max_concurrency() const { return 1; }
  virtual std::string name() const = 0;
};

// status 0 marks a transport failure described by `error`.
struct HttpResult {
  int status = 0;
  std::string body;
  std::string error;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;
using HttpTransport = std::function<HttpResult(
    const std::string& url, const HttpHeaders& headers, const std::string& body,
    std::chrono::milliseconds timeout)>;

// POSTs JSON over http or https.
HttpTransport DefaultHttpTransport();

struct GatewayConfig {
  std::string endpoint_url;
  std::string model_id;
  int max_concurrency = 4;
  int retry_cap = 5;
  std::chrono::milliseconds timeout{120000};
  std::chrono::milliseconds backoff_base{500};
  std::string api_key_env = "CEFRSYNTH_API_KEY";
};

// Client for OpenAI-compatible chat-completion endpoints. Retries 429, 5xx
// and transport failures with exponential backoff; at most retry_cap retries
// per request.
class HttpChatClient : public ChatClient {
 public:
  using SleepFn = std::function<void(std::chrono::milliseconds)>;

  explicit HttpChatClient(GatewayConfig config,
                          HttpTransport transport = DefaultHttpTransport(),
                          SleepFn sleep = nullptr);

  ChatResponse Complete(const ChatRequest& request) override;
  int max_concurrency() const override { return config_.max_concurrency; }
  std::string name() const override { return "http:" + config_.model_id; }

  // {model, messages: [{role, content}], temperature, max_tokens}.
  static std::string BuildRequestBody(const ChatRequest& request,
                                      std::string_view model_id);
  // First choice's message content. Throws Error(kMalformedResponse).
  static std::string ParseResponseText(std::string_view body, TokenUsage* usage);

 private:
  static constexpr std::ptrdiff_t kMaxSlots = 256;

  GatewayConfig config_;
  HttpTransport transport_;
  SleepFn sleep_;
  std::counting_semaphore<kMaxSlots> slots_;
};

}  // namespace cefrsynth

#endif  // CEFRSYNTH_LLM_GATEWAY_H_
