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

#ifndef CEFRSYNTH_MOCK_LLM_H_
#define CEFRSYNTH_MOCK_LLM_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cefrsynth/corpus.h"
#include "cefrsynth/llm_gateway.h"

namespace cefrsynth {

// Word material the mock draws essays from. `words` is ordered from common to
// rare; higher levels sample from a longer prefix.
struct MockTemplateBank {
  std::vector<std::string> words;
  std::vector<std::string> subordinators;
  std::vector<std::string> connectors;

  static const MockTemplateBank& Default();
};

// Length targets per level: mean words per essay and mean words per sentence.
struct MockLevelTarget {
  double mean_words = 0;
  double mean_sentence_words = 0;
};

MockLevelTarget MockTarget(CefrLevel level);

// Inclusive word-count band the mock stays within for a level.
std::pair<int, int> MockWordBand(CefrLevel level);

// Marker parsing shared by the mock and tests. The level marker is
// "Target CEFR level: <band>"; the topic marker is "Topic: <text>".
std::optional<CefrLevel> FindLevelMarker(std::string_view text);
std::optional<std::string> FindTopicMarker(std::string_view text);

// Offline stand-in for an LLM. Output is a pure function of the request and
// the seed (the request's seed when set, else the client's).
class MockChatClient : public ChatClient {
 public:
  explicit MockChatClient(uint64_t seed = 0, int max_concurrency = 8,
                          MockTemplateBank bank = MockTemplateBank::Default());

  ChatResponse Complete(const ChatRequest& request) override;
  int max_concurrency() const override { return max_concurrency_; }
  std::string name() const override { return "mock"; }

 private:
  uint64_t seed_;
  int max_concurrency_;
  MockTemplateBank bank_;
};

}  // namespace cefrsynth

#endif  // CEFRSYNTH_MOCK_LLM_H_
