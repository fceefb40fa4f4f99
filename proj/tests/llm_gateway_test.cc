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

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cefrsynth/error.h"
#include "cefrsynth/mock_llm.h"
#include "cefrsynth/text.h"
#include "gtest/gtest.h"
#include "httplib.h"
#include "nlohmann/json.hpp"

namespace cefrsynth {
namespace {

using ::std::chrono::milliseconds;

constexpr char kKeyEnv[] = "CEFRSYNTH_TEST_KEY";

ChatRequest Request(std::string level = "B1") {
  ChatRequest request;
  request.system_message = "You write essays.";
  request.user_message = "Target CEFR level: " + level + "\nTopic: Travel\n";
  return request;
}

std::string OkBody(const std::string& text) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"},
                                                   {"content", text}}}}}},
                        {"usage", {{"prompt_tokens", 5},
                                   {"completion_tokens", 7},
                                   {"total_tokens", 12}}}}
      .dump();
}

GatewayConfig Config() {
  GatewayConfig config;
  config.endpoint_url = "http://example.invalid/v1/chat/completions";
  config.model_id = "test-model";
  config.api_key_env = kKeyEnv;
  config.retry_cap = 3;
  return config;
}

class GatewayTest : public ::testing::Test {
 protected:
  void SetUp() override { setenv(kKeyEnv, "secret", 1); }
  void TearDown() override { unsetenv(kKeyEnv); }
};

// Replays a fixed list of statuses, then succeeds.
struct ScriptedTransport {
  std::vector<int> statuses;
  std::shared_ptr<std::atomic<int>> calls = std::make_shared<std::atomic<int>>(0);

  HttpTransport Make() {
    return [statuses = statuses, calls = calls](
               const std::string&, const HttpHeaders&, const std::string&,
               milliseconds) -> HttpResult {
      const size_t i = static_cast<size_t>((*calls)++);
      if (i < statuses.size()) return {statuses[i], "{}", "scripted"};
      return {200, OkBody("نص"), ""};
    };
  }
};

TEST(ChatRequestTest, ValidatesPreconditions) {
  ChatRequest request = Request();
  EXPECT_NO_THROW(request.Validate());
  request.user_message.clear();
  EXPECT_THROW(request.Validate(), Error);
  request = Request();
  request.temperature = std::nan("");
  EXPECT_THROW(request.Validate(), Error);
  request = Request();
  request.max_output_tokens = 0;
  EXPECT_THROW(request.Validate(), Error);
}

TEST_F(GatewayTest, BuildsChatCompletionBody) {
  ChatRequest request = Request();
  request.seed = 42;
  const auto body =
      nlohmann::json::parse(HttpChatClient::BuildRequestBody(request, "m"));
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], request.user_message);
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.7);
  EXPECT_EQ(body["max_tokens"], 1200);
  EXPECT_FALSE(body.contains("seed"));
}

TEST_F(GatewayTest, RetriesThenSucceeds) {
  ScriptedTransport script{{429, 429}};
  std::vector<milliseconds> sleeps;
  HttpChatClient client(Config(), script.Make(),
                        [&](milliseconds d) { sleeps.push_back(d); });
  const ChatResponse response = client.Complete(Request());
  EXPECT_EQ(response.text, "نص");
  EXPECT_EQ(response.attempts, 3);
  EXPECT_EQ(response.usage.total_tokens, 12);
  EXPECT_EQ(sleeps, (std::vector<milliseconds>{milliseconds(500), milliseconds(1000)}));
}

TEST_F(GatewayTest, RetryCapIsHonoured) {
  ScriptedTransport script{{429, 429, 429, 429, 429}};
  HttpChatClient client(Config(), script.Make(), [](milliseconds) {});
  try {
    client.Complete(Request());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRateLimited);
  }
  EXPECT_EQ(*script.calls, 4);  // one attempt plus retry_cap retries
}

TEST_F(GatewayTest, ServerErrorsExhaustToProvider) {
  ScriptedTransport script{{503, 0, 500, 502}};
  HttpChatClient client(Config(), script.Make(), [](milliseconds) {});
  try {
    client.Complete(Request());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProvider);
  }
}

TEST_F(GatewayTest, AuthenticationFailures) {
  ScriptedTransport script{{401}};
  HttpChatClient client(Config(), script.Make(), [](milliseconds) {});
  try {
    client.Complete(Request());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAuthentication);
  }
  EXPECT_EQ(*script.calls, 1);

  unsetenv(kKeyEnv);
  try {
    client.Complete(Request());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAuthentication);
  }
}

TEST_F(GatewayTest, NonRetryableStatusIsProviderError) {
  ScriptedTransport script{{400}};
  HttpChatClient client(Config(), script.Make(), [](milliseconds) {});
  EXPECT_THROW(client.Complete(Request()), Error);
  EXPECT_EQ(*script.calls, 1);
}

TEST_F(GatewayTest, MalformedResponse) {
  HttpChatClient client(
      Config(),
      [](const std::string&, const HttpHeaders&, const std::string&,
         milliseconds) -> HttpResult { return {200, R"({"choices":[]})", ""}; },
      [](milliseconds) {});
  try {
    client.Complete(Request());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedResponse);
  }
}

TEST_F(GatewayTest, RequiresEndpointAndModel) {
  GatewayConfig config = Config();
  config.model_id.clear();
  HttpChatClient client(config, ScriptedTransport{}.Make(), [](milliseconds) {});
  EXPECT_THROW(client.Complete(Request()), Error);
}

TEST_F(GatewayTest, LimitsInFlightRequests) {
  GatewayConfig config = Config();
  config.max_concurrency = 2;
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  HttpChatClient client(
      config,
      [&](const std::string&, const HttpHeaders&, const std::string&,
          milliseconds) -> HttpResult {
        const int now = ++in_flight;
        int expected = peak.load();
        while (now > expected && !peak.compare_exchange_weak(expected, now)) {
        }
        std::this_thread::sleep_for(milliseconds(5));
        --in_flight;
        return {200, OkBody("x"), ""};
      },
      [](milliseconds) {});
  std::vector<std::jthread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] { client.Complete(Request()); });
  }
  threads.clear();
  EXPECT_LE(peak.load(), 2);
}

TEST_F(GatewayTest, DefaultTransportAgainstLocalServer) {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string auth_header;
  std::mutex mu;
  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                {
                  std::lock_guard lock(mu);
                  auth_header = req.get_header_value("Authorization");
                }
                if (hits++ < 2) {
                  res.status = 429;
                  return;
                }
                res.set_content(OkBody("مرحبا"), "application/json");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  GatewayConfig config = Config();
  config.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  config.backoff_base = milliseconds(1);
  HttpChatClient client(config);
  const ChatResponse response = client.Complete(Request());
  server.stop();
  thread.join();

  EXPECT_EQ(response.text, "مرحبا");
  EXPECT_EQ(response.attempts, 3);
  EXPECT_EQ(auth_header, "Bearer secret");
}

TEST(MockChatClientTest, DeterministicForSameSeed) {
  MockChatClient a(7), b(7), c(8);
  const ChatRequest request = Request();
  const std::string text = a.Complete(request).text;
  EXPECT_EQ(a.Complete(request).text, text);
  EXPECT_EQ(b.Complete(request).text, text);
  EXPECT_NE(c.Complete(request).text, text);
  ChatRequest seeded = request;
  seeded.seed = 7;
  EXPECT_EQ(c.Complete(seeded).text, text);
}

TEST(MockChatClientTest, WordCountsStayInBand) {
  MockChatClient client(3);
  for (CefrLevel level : kAssessableLevels) {
    const auto [lo, hi] = MockWordBand(level);
    for (int i = 0; i < 20; ++i) {
      ChatRequest request = Request(std::string(LevelName(level)));
      request.user_message += std::to_string(i);
      int words = 0;
      for (const std::string& t : Tokenize(client.Complete(request).text)) {
        words += !IsPunctuationToken(t);
      }
      EXPECT_GE(words, lo) << LevelName(level);
      EXPECT_LE(words, hi) << LevelName(level);
    }
  }
}

TEST(MockChatClientTest, A1BandBracketsTheReferenceMean) {
  // 39367 words over 470 essays is about 84 words per essay.
  const auto [lo, hi] = MockWordBand(CefrLevel::kA1);
  EXPECT_LE(lo, 39367 / 470);
  EXPECT_GE(hi, 39367 / 470 + 1);
  EXPECT_NEAR(MockTarget(CefrLevel::kA1).mean_words, 39367.0 / 470.0, 1e-9);
}

TEST(MockChatClientTest, MissingLevelMarkerIsAnError) {
  MockChatClient client;
  ChatRequest request = Request();
  request.user_message = "Topic: Travel";
  EXPECT_THROW(client.Complete(request), Error);
}

TEST(MockChatClientTest, ParsesMarkers) {
  EXPECT_EQ(FindLevelMarker("x\nTarget CEFR level: C1\n"), CefrLevel::kC1);
  EXPECT_EQ(FindLevelMarker("no marker"), std::nullopt);
  EXPECT_EQ(FindTopicMarker("Topic: Food and Drink\nmore"), "Food and Drink");
}

TEST(MockChatClientTest, HigherLevelsWriteLongerSentences) {
  MockChatClient client(1);
  auto mean_sentence = [&](CefrLevel level) {
    double words = 0, sentences = 0;
    for (int i = 0; i < 30; ++i) {
      ChatRequest request = Request(std::string(LevelName(level)));
      request.user_message += std::to_string(i);
      const std::string text = client.Complete(request).text;
      sentences += static_cast<double>(SplitSentences(text).size());
      for (const std::string& t : Tokenize(text)) words += !IsPunctuationToken(t);
    }
    return words / sentences;
  };
  EXPECT_LT(mean_sentence(CefrLevel::kA1), mean_sentence(CefrLevel::kB2));
  EXPECT_LT(mean_sentence(CefrLevel::kB2), mean_sentence(CefrLevel::kC2) + 1.0);
}

}  // namespace
}  // namespace cefrsynth
