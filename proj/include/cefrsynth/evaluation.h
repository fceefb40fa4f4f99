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

#ifndef CEFRSYNTH_EVALUATION_H_
#define CEFRSYNTH_EVALUATION_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cefrsynth/corpus.h"
#include "cefrsynth/profiling.h"

namespace cefrsynth {

// Quadratic weighted kappa over labels in [0, num_classes). Weights are
// (i - j)^2 / (k - 1)^2. When the expected disagreement is zero the value is
// 1.0 for identical sequences and 0.0 otherwise.
double Qwk(std::span<const int> predicted, std::span<const int> gold,
           int num_classes);

struct MacroMetrics {
  double accuracy = 0;
  double precision = 0;  // mean over classes present in gold
  double recall = 0;
  double f1 = 0;         // mean of per-class F1
  // confusion[gold][predicted].
  std::vector<std::vector<int64_t>> confusion;
};

// Per-class precision with no predicted positives counts as 0.
MacroMetrics ComputeMacroMetrics(std::span<const int> predicted,
                                 std::span<const int> gold, int num_classes);

struct Prediction {
  std::string id;
  CefrLevel level = CefrLevel::kB1;
};

// One assessable band per essay id, in insertion order.
class PredictionSet {
 public:
  PredictionSet() = default;
  explicit PredictionSet(std::string source) : source_(std::move(source)) {}

  // Throws Error(kDuplicateId) or Error(kInvalidArgument) for an
  // Unassessable band.
  void Add(std::string id, CefrLevel level);

  std::optional<CefrLevel> Find(std::string_view id) const;
  const std::vector<Prediction>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<Prediction> entries_;
  std::unordered_map<std::string, size_t> index_;
};

enum class EvalSetting { kAverageReference, kMultiReference };

std::string_view EvalSettingName(EvalSetting setting);

inline constexpr std::string_view kMultiReferenceRule =
    "closest-member:exact>distance>lower-band";

struct EvalReport {
  EvalSetting setting = EvalSetting::kAverageReference;
  std::string rule;
  std::string source;
  int64_t n = 0;
  double qwk = 0;
  int64_t qwk_n = 0;         // essays with a numeric gold
  int64_t unassessable = 0;  // forced misses excluded from QWK
  double accuracy = 0;
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;
  // Rows are gold, columns predicted, both over A1..C2 then Unassessable.
  std::vector<std::vector<int64_t>> confusion;
};

// Gold is the rounded rater average, else level_gold. Every essay in the
// corpus (or in `split` when given) must have a prediction.
EvalReport EvaluateAverageReference(const PredictionSet& predictions,
                                    const Corpus& corpus,
                                    std::optional<Split> split = std::nullopt);

// Gold is the triple member closest to the prediction.
EvalReport EvaluateMultiReference(const PredictionSet& predictions,
                                  const Corpus& corpus,
                                  std::optional<Split> split = std::nullopt);

// Triple member chosen as the multi-reference gold for `predicted`.
CefrLevel EffectiveGold(const RaterTriple& triple, CefrLevel predicted);

// Nearest-profile predictions. Essays whose feature vector is degenerate get
// the corpus-majority band and are listed in degenerate_ids.
PredictionSet BaselineProfileScorer(const Corpus& corpus,
                                    std::span<const LevelProfile> profiles,
                                    std::vector<std::string>* degenerate_ids =
                                        nullptr);

// JSON lines {"id": ..., "band": ...}. When corpus is given every id must
// exist in it.
PredictionSet ParsePredictions(std::string_view jsonl,
                               const Corpus* corpus = nullptr,
                               std::string source = "external");
PredictionSet LoadPredictions(const std::filesystem::path& path,
                              const Corpus* corpus = nullptr);
std::string SerializePredictions(const PredictionSet& predictions);

std::string SerializeReports(std::span<const EvalReport> reports);
std::string FormatReportTable(std::span<const EvalReport> reports);

}  // namespace cefrsynth

#endif  // CEFRSYNTH_EVALUATION_H_
