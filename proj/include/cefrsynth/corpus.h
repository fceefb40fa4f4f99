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

#ifndef CEFRSYNTH_CORPUS_H_
#define CEFRSYNTH_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cefrsynth {

// CEFR proficiency band. The six assessable bands map to scores 1..6;
// kUnassessable has no numeric score.
enum class CefrLevel { kA1, kA2, kB1, kB2, kC1, kC2, kUnassessable };

inline constexpr std::array<CefrLevel, 6> kAssessableLevels = {
    CefrLevel::kA1, CefrLevel::kA2, CefrLevel::kB1,
    CefrLevel::kB2, CefrLevel::kC1, CefrLevel::kC2};

// "A1" ... "C2", "UNASSESSABLE".
std::string_view LevelName(CefrLevel level);

// Inverse of LevelName. Throws Error(kSchema) on anything else.
CefrLevel ParseLevel(std::string_view name);
std::optional<CefrLevel> TryParseLevel(std::string_view name);

bool IsAssessable(CefrLevel level);

// A1=1 ... C2=6. Throws Error(kUnassessable) for kUnassessable.
int NumericScore(CefrLevel level);

// Inverse of NumericScore. Throws Error(kInvalidArgument) outside 1..6.
CefrLevel LevelFromScore(int score);

using RaterTriple = std::array<CefrLevel, 3>;

// Band of round(mean score), halves rounding up. Throws Error(kUnassessable)
// when any rating is unassessable.
CefrLevel RoundedAverageLevel(const RaterTriple& triple);

enum class Provenance { kHuman, kGenerated, kInjected };

std::string_view ProvenanceName(Provenance provenance);
Provenance ParseProvenance(std::string_view name);

enum class Split { kTrain, kDev, kTest };

std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

// Optional manual annotation carried by an erroneous essay: the correct
// source span, the erroneous target span (either may be empty), and a tag.
struct EditAnnotation {
  std::string source;
  std::string target;
  std::string tag;

  friend bool operator==(const EditAnnotation&, const EditAnnotation&) = default;
};

struct Essay {
  std::string id;
  std::string text;
  std::string topic;
  std::optional<std::string> prompt_id;
  std::optional<CefrLevel> level_gold;
  std::optional<RaterTriple> rater_triple;
  Provenance provenance = Provenance::kHuman;
  // For an erroneous essay, the id of its corrected counterpart.
  std::optional<std::string> paired_id;
  std::optional<Split> split;
  std::vector<EditAnnotation> edit_tags;

  friend bool operator==(const Essay&, const Essay&) = default;
};

// Holistic gold label: the rounded rater average when a triple exists
// (kUnassessable if any rater marked it so), else level_gold.
std::optional<CefrLevel> HolisticLevel(const Essay& essay);

// An ordered, immutable collection of essays with unique ids whose
// paired_id references all resolve inside the collection.
class Corpus {
 public:
  Corpus() = default;

  // Validates every invariant; throws Error on violation.
  explicit Corpus(std::vector<Essay> essays);

  const std::vector<Essay>& essays() const { return essays_; }
  size_t size() const { return essays_.size(); }
  bool empty() const { return essays_.empty(); }

  // nullptr when absent.
  const Essay* Find(std::string_view id) const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.essays_ == b.essays_;
  }

 private:
  std::vector<Essay> essays_;
  std::unordered_map<std::string, size_t> index_;
};

// Reads a JSON-lines corpus. Errors carry the 1-based line number and the
// offending field.
Corpus LoadCorpus(const std::filesystem::path& path);
Corpus ParseCorpus(std::string_view jsonl);

std::string SerializeCorpus(const Corpus& corpus);
void SaveCorpus(const Corpus& corpus, const std::filesystem::path& path);

struct SplitRatios {
  double train = 0.7;
  double dev = 0.15;
  double test = 0.15;
};

// Labels every essay train/dev/test. dev and test sizes are round(ratio * N)
// and train takes the remainder. Stratified by holistic level when any
// essay is labeled; deterministic for a given seed.
Corpus SplitCorpus(const Corpus& corpus, const SplitRatios& ratios,
                   uint64_t seed);

// Gold-level histogram, with kUnassessable counted separately. Essays
// without any label are counted under `unlabeled`.
struct LevelCounts {
  std::map<CefrLevel, int64_t> counts;
  int64_t unlabeled = 0;
  int64_t total = 0;
};

LevelCounts CountLevels(const Corpus& corpus);

}  // namespace cefrsynth

#endif  // CEFRSYNTH_CORPUS_H_
