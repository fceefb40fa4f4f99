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

#ifndef CEFRSYNTH_GENERATION_H_
#define CEFRSYNTH_GENERATION_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cefrsynth/corpus.h"
#include "cefrsynth/llm_gateway.h"
#include "cefrsynth/profiling.h"

namespace cefrsynth {

enum class PromptTier { kBeginner, kIntermediate, kAdvanced };

std::string_view TierName(PromptTier tier);
// Accepts "Beginner", "Intermediate", "Advanced". Throws Error(kSchema).
PromptTier ParseTier(std::string_view name);
std::array<CefrLevel, 2> TierLevels(PromptTier tier);
PromptTier TierOf(CefrLevel level);

struct EssayPrompt {
  std::string id;
  std::string topic;
  PromptTier tier = PromptTier::kBeginner;
  std::string text_ar;
  std::optional<std::string> text_en;

  friend bool operator==(const EssayPrompt&, const EssayPrompt&) = default;
};

class PromptBank {
 public:
  PromptBank() = default;
  // Throws Error(kDuplicateId) or Error(kSchema) for an empty text_ar.
  explicit PromptBank(std::vector<EssayPrompt> prompts);

  const std::vector<EssayPrompt>& prompts() const { return prompts_; }
  size_t size() const { return prompts_.size(); }
  const EssayPrompt* Find(std::string_view id) const;

  // topic -> counts indexed by tier.
  std::map<std::string, std::array<int64_t, 3>> CountsByTopicTier() const;
  std::array<int64_t, 3> TierTotals() const;

 private:
  std::vector<EssayPrompt> prompts_;
  std::unordered_map<std::string, size_t> index_;
};

// JSON array [{id, topic, tier, text_ar, text_en}]. An empty document is an
// empty bank.
PromptBank ParsePromptBank(std::string_view json);
PromptBank LoadPromptBank(const std::filesystem::path& path);
std::string SerializePromptBank(const PromptBank& bank);

struct GenerationJob {
  const EssayPrompt* prompt = nullptr;
  CefrLevel target_level = CefrLevel::kA1;
  int essays_per_prompt = 10;
  std::optional<LevelProfile> profile;
  std::string guidelines;
};

// True for levels that never carry a profile in the request.
bool IsProfileFreeLevel(CefrLevel level);

// Pure. Control instructions and guidelines go to the system message; the
// level, profile and prompt go to the user message. A profile on an A1 or C2
// job is dropped and a warning appended.
ChatRequest BuildGenerationRequest(const GenerationJob& job,
                                   std::vector<std::string>* warnings = nullptr);

// Essays requested per level.
struct GenerationPlan {
  std::map<CefrLevel, int64_t> quotas;
  int64_t Total() const;
};

// {"quotas": {"A1": 470, ...}} or the bare quota object.
GenerationPlan ParsePlan(std::string_view json);
GenerationPlan LoadPlan(const std::filesystem::path& path);

struct GenerationOptions {
  std::string guidelines;
  std::vector<LevelProfile> profiles;
  uint64_t seed = 0;
  // 0 uses the client's max_concurrency.
  int max_concurrency = 0;
  double temperature = 0.7;
  int64_t max_output_tokens = 1200;
  std::string model_id;
};

struct GenerationFailure {
  std::string essay_id;
  std::string prompt_id;
  CefrLevel level = CefrLevel::kA1;
  std::string error;
};

struct GenerationSummary {
  std::map<CefrLevel, int64_t> planned;
  std::map<CefrLevel, int64_t> produced;
  std::vector<GenerationFailure> failures;
  int64_t exact_duplicates = 0;
  std::vector<std::string> warnings;
};

struct GenerationResult {
  Corpus corpus;
  GenerationSummary summary;
};

// Each level's quota is dealt round-robin over the prompts of its tier, in
// bank order. Essays come out ordered by (prompt, level, repetition) whatever
// the completion order; failed jobs are reported, never replaced.
GenerationResult GenerateCorpus(const PromptBank& bank,
                                const GenerationPlan& plan, ChatClient& client,
                                const GenerationOptions& options);

std::string SerializeGenerationSummary(const GenerationSummary& summary);

struct QualityGateReport {
  std::vector<std::string> ids;
  std::vector<CefrLevel> predicted;
  std::vector<CefrLevel> gold;
  double agreement = 0;
  std::map<CefrLevel, double> per_level_agreement;
  std::map<CefrLevel, int64_t> per_level_count;
  std::vector<std::string> mismatched_ids;
};

// Nearest-profile prediction for every essay with an assessable gold level.
// Throws Error(kInvalidArgument) when there is nothing to check.
QualityGateReport QualityGate(const Corpus& corpus,
                              std::span<const LevelProfile> profiles);

std::string SerializeQualityGate(const QualityGateReport& report);

}  // namespace cefrsynth

#endif  // CEFRSYNTH_GENERATION_H_
