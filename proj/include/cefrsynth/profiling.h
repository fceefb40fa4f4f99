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

#ifndef CEFRSYNTH_PROFILING_H_
#define CEFRSYNTH_PROFILING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cefrsynth/corpus.h"

namespace cefrsynth {

// Linguistic features of one essay, or component-wise means over a level.
// Counts are stored as doubles so level aggregates share the type.
struct FeatureVector {
  double n_words = 0;              // non-punctuation tokens
  double n_sentences = 0;
  double n_tokens = 0;             // all tokens, punctuation included
  double n_vocab = 0;              // distinct tokens
  double avg_word_len = 0;         // code points per word
  double avg_sent_len = 0;         // words per sentence
  double ttr = 0;                  // n_vocab / n_tokens
  double sentence_complexity = 0;  // mean per-sentence depth
  // Relative POS frequencies; empty when no tagger was supplied.
  std::map<std::string, double> pos_freq;

  static constexpr size_t kNumericSize = 8;

  std::vector<double> Numeric() const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct LevelProfile {
  CefrLevel level = CefrLevel::kB1;
  FeatureVector features;
  int64_t support = 0;
};

// Returns a non-negative depth for one sentence.
using DepthFn = std::function<double(std::string_view sentence)>;

// Returns one POS tag per token.
using PosFn =
    std::function<std::vector<std::string>(std::span<const std::string> tokens)>;

// Distinct / total; 0 for an empty sequence.
double TypeTokenRatio(std::span<const std::string> tokens);

// Mean of depth_fn over the sentences; 0 when there are none. A failing or
// negative depth is rethrown as Error naming the sentence index.
double SentenceComplexity(std::span<const std::string> sentences,
                          const DepthFn& depth_fn);

// Approximate clause depth: one level for a non-empty sentence, plus one per
// open subordinating marker or bracket. Coordinators and clause punctuation
// close one level. This is a heuristic, not a parse.
double HeuristicClauseDepth(std::string_view sentence);

FeatureVector ExtractFeatures(std::string_view text,
                              const DepthFn& depth_fn = HeuristicClauseDepth,
                              const PosFn& pos_fn = nullptr);

FeatureVector ExtractFeatures(const Essay& essay,
                              const DepthFn& depth_fn = HeuristicClauseDepth,
                              const PosFn& pos_fn = nullptr);

// Component-wise mean over the essays whose holistic level is `level`.
// Throws Error(kNotFound) when the level has no essays.
LevelProfile BuildLevelProfile(const Corpus& corpus, CefrLevel level,
                               const DepthFn& depth_fn = HeuristicClauseDepth,
                               const PosFn& pos_fn = nullptr);

// Profiles for every assessable level present in the corpus.
std::vector<LevelProfile> BuildLevelProfiles(
    const Corpus& corpus, const DepthFn& depth_fn = HeuristicClauseDepth,
    const PosFn& pos_fn = nullptr);

// Plain cosine of two equal-length vectors. Throws Error(kDegenerate) for a
// zero vector and Error(kInvalidArgument) for a length mismatch.
double CosineSimilarity(std::span<const double> p, std::span<const double> q);

// Cosine over the numeric features, plus POS frequencies when both vectors
// carry them.
double CosineSimilarity(const FeatureVector& p, const FeatureVector& q);

// Divides each feature by its maximum over a set of level profiles, so count
// features do not swamp ratio features.
class FeatureScaler {
 public:
  explicit FeatureScaler(std::span<const LevelProfile> profiles);

  // Scaled numeric features, followed by scaled POS frequencies over the
  // scaler's tag inventory when include_pos is set.
  std::vector<double> Scale(const FeatureVector& v, bool include_pos) const;

 private:
  std::vector<double> numeric_max_;
  std::map<std::string, double> pos_max_;
};

// Level whose profile is most cosine-similar to v after scaling. Ties go to
// the lower band. Throws Error(kDegenerate) for a zero vector and
// Error(kInvalidArgument) for an empty profile set.
CefrLevel AssignNearestLevel(const FeatureVector& v,
                             std::span<const LevelProfile> profiles);

// Similarity of v to every profile, in profile order, as used by
// AssignNearestLevel.
std::vector<double> ProfileSimilarities(const FeatureVector& v,
                                        std::span<const LevelProfile> profiles);

// Fraction of positions where predicted equals gold.
double Agreement(std::span<const CefrLevel> predicted,
                 std::span<const CefrLevel> gold);

// Profile files: {"version": "profile-v1", "<band>": {fields...}, ...}.
std::string SerializeProfiles(std::span<const LevelProfile> profiles);
std::vector<LevelProfile> ParseProfiles(std::string_view json);
void SaveProfiles(std::span<const LevelProfile> profiles,
                  const std::filesystem::path& path);
std::vector<LevelProfile> LoadProfiles(const std::filesystem::path& path);

}  // namespace cefrsynth

#endif  // CEFRSYNTH_PROFILING_H_
