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

#ifndef CEFRSYNTH_INJECTION_H_
#define CEFRSYNTH_INJECTION_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cefrsynth/corpus.h"
#include "cefrsynth/error_model.h"
#include "cefrsynth/error_taxonomy.h"
#include "cefrsynth/llm_gateway.h"
#include "cefrsynth/random.h"

namespace cefrsynth {

// Per-token error-type predictor.
class ErrorClassifier {
 public:
  virtual ~ErrorClassifier() = default;
  // One distribution per token, each including the no-error outcome.
  virtual std::vector<TypeDistribution> Predict(
      std::span<const std::string> tokens) const = 0;
  virtual std::string name() const = 0;
};

// Adapts the count-based ErrorTypeModel. The model must outlive the adapter.
class NativeClassifier : public ErrorClassifier {
 public:
  explicit NativeClassifier(const ErrorTypeModel& model) : model_(model) {}
  std::vector<TypeDistribution> Predict(
      std::span<const std::string> tokens) const override;
  std::string name() const override { return "native-count"; }

 private:
  const ErrorTypeModel& model_;
};

// Replays predictions computed by an external model. Each JSON line is
// {"tokens": [...], "distributions": [{"NONE": p, "<tag>": p, ...}, ...]};
// Predict() looks the token sequence up and throws Error(kNotFound) when it
// was not precomputed.
class PrecomputedClassifier : public ErrorClassifier {
 public:
  static PrecomputedClassifier Parse(std::string_view jsonl);
  static PrecomputedClassifier Load(const std::filesystem::path& path);

  std::vector<TypeDistribution> Predict(
      std::span<const std::string> tokens) const override;
  std::string name() const override { return "precomputed"; }

 private:
  std::map<std::vector<std::string>, std::vector<TypeDistribution>> table_;
};

std::vector<TypeDistribution> PredictErrorTypes(
    std::span<const std::string> tokens, const ErrorClassifier& classifier);

// Mass on tags outside the profile's support moves to no-error. Supported
// tags are reweighted by the profile's tag_dist and rescaled so their total
// mass is unchanged.
TypeDistribution FilterByLevel(const TypeDistribution& distribution,
                               const ErrorProfile& profile);
std::vector<TypeDistribution> FilterByLevel(
    std::span<const TypeDistribution> distributions, const ErrorProfile& profile);

enum class InjectionPath { kControlled, kLlmPerType };

std::string_view InjectionPathName(InjectionPath path);
InjectionPath ParseInjectionPath(std::string_view name);

struct InjectionPlan {
  CefrLevel level = CefrLevel::kB1;
  ErrorProfile profile;
  uint64_t seed = 0;
  std::optional<int> max_errors;
  InjectionPath path = InjectionPath::kControlled;
  RealizeMode mode = RealizeMode::kMostProbable;

  // Throws Error(kInvalidArgument) when profile.level differs from level.
  void Validate() const;
};

struct InjectedSpan {
  size_t position = 0;  // token index in the original essay
  std::string source;
  std::string target;
  ErrorTag tag = ErrorTag::Unknown();
  std::string pattern;  // realization pattern key; empty on the LLM path
};

struct InjectionSkip {
  size_t position = 0;
  ErrorTag tag = ErrorTag::Unknown();
};

struct InjectionRecord {
  std::string essay_id;
  std::string output_id;
  InjectionPath path = InjectionPath::kControlled;
  int64_t target_errors = 0;
  std::vector<InjectedSpan> spans;
  std::vector<InjectionSkip> skips;
  // Set when an LLM step failed; spans describe the last good intermediate.
  bool partial = false;
  std::string failure;
  std::optional<double> verified_similarity;
};

// Suffix appended to the ids of injected essays.
inline constexpr std::string_view kInjectedSuffix = "-inj";

// Errors to inject: round(avg * words / mean_essay_words), or round(avg) when
// the profile has no mean length, capped by max_errors and the word count.
int64_t TargetErrorCount(const ErrorProfile& profile, int64_t n_words,
                         std::optional<int> max_errors);

// Two-step controlled injection. Tag counts follow the profile by systematic
// sampling; each tag goes to the realizable tokens it is most probable for.
std::pair<Essay, InjectionRecord> InjectControlled(
    const Essay& essay, const InjectionPlan& plan,
    const ErrorClassifier& classifier, const RealizationModel& realization);

struct SampledInstruction {
  ErrorTag tag = ErrorTag::Unknown();
  ErrorInstruction instruction;
  int64_t count = 0;
};

// round(avg_errors_per_essay) draws over tags weighted by avg_count_by_tag,
// grouped by tag in order of first draw. Throws Error(kNotFound) for a
// supported tag missing from the repository.
std::vector<SampledInstruction> SampleErrorInstructions(
    const ErrorProfile& profile, const InstructionRepository& repository,
    Rng& rng);

// Pure. Carries the markers "Error tag: <tag>" and "Number of errors: <n>".
ChatRequest BuildInjectionPrompt(std::string_view essay_text, const ErrorTag& tag,
                                 const ErrorInstruction& instruction,
                                 int64_t count);

// One gateway call per sampled instruction, each fed the previous output. The
// record comes from re-aligning the final text against the original.
std::pair<Essay, InjectionRecord> InjectViaLlm(
    const Essay& essay, const InjectionPlan& plan, ChatClient& client,
    const InstructionRepository& repository = InstructionRepository::Default());

// Test double that follows injection prompts literally with the built-in
// orthographic rules, changing the first eligible tokens.
class LiteralInjectionClient : public ChatClient {
 public:
  ChatResponse Complete(const ChatRequest& request) override;
  int max_concurrency() const override { return 8; }
  std::string name() const override { return "literal-injection-mock"; }
};

struct EssayFidelity {
  std::string id;
  int64_t n_errors = 0;
  double similarity = 0;
};

struct FidelityReport {
  double threshold = 0.8;
  std::vector<EssayFidelity> essays;
  std::map<ErrorTag, double> distribution;  // aggregate injected tag shares
  double aggregate_similarity = 0;
  double total_variation = 0;
  // Over essays with at least one detected error.
  double mean_similarity = 0;
  double fraction_above_threshold = 0;
  int64_t essays_without_errors = 0;
};

// Re-aligns every injected essay of `injected` against its pair in
// `original` and compares detected tags with the profile. With only_level set,
// pairs whose original has another holistic level are skipped.
FidelityReport VerifyInjection(const Corpus& original, const Corpus& injected,
                               const ErrorProfile& profile,
                               double threshold = 0.8,
                               std::optional<CefrLevel> only_level = std::nullopt);

std::string SerializeFidelityReport(const FidelityReport& report);

struct InjectionRunOptions {
  InjectionPath path = InjectionPath::kControlled;
  uint64_t seed = 0;
  std::optional<int> max_errors;
  RealizeMode mode = RealizeMode::kMostProbable;
  int max_concurrency = 1;
};

struct InjectionRun {
  // Originals followed by their injected copies.
  Corpus corpus;
  std::vector<InjectionRecord> records;
  std::vector<std::string> skipped_ids;
};

// Injects every essay whose holistic level has a profile. The controlled path
// needs classifier and realization; the LLM path needs client.
InjectionRun InjectCorpus(const Corpus& corpus,
                          std::span<const ErrorProfile> profiles,
                          const InjectionRunOptions& options,
                          const ErrorClassifier* classifier,
                          const RealizationModel* realization,
                          ChatClient* client,
                          const InstructionRepository& repository =
                              InstructionRepository::Default());

std::string SerializeInjectionRecords(std::span<const InjectionRecord> records);

}  // namespace cefrsynth

#endif  // CEFRSYNTH_INJECTION_H_
