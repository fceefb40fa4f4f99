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

#ifndef CEFRSYNTH_ERROR_MODEL_H_
#define CEFRSYNTH_ERROR_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cefrsynth/corpus.h"
#include "cefrsynth/error_taxonomy.h"
#include "cefrsynth/random.h"

namespace cefrsynth {

// ---------------------------------------------------------------------------
// Alignment

// A run of correct tokens aligned to a run of erroneous tokens. Shapes are
// 1-1, 2-1, 1-2, 1-0 and 0-1 (correct count - erroneous count).
struct AlignedSpan {
  size_t correct_begin = 0;
  size_t correct_len = 0;
  size_t erroneous_begin = 0;
  size_t erroneous_len = 0;
  double cost = 0.0;

  bool IsIdentity() const { return cost == 0.0; }
};

// Minimum-cost monotone alignment. 1-1 spans cost the normalized character
// edit distance of the two words; 1-0 and 0-1 cost 1; 2-1 and 1-2 cost a
// fixed 0.5 plus the distance between the joined words and the other side.
// The total cost is zero iff the sequences are identical.
std::vector<AlignedSpan> AlignPair(std::span<const std::string> correct,
                                   std::span<const std::string> erroneous);

double AlignmentCost(std::span<const AlignedSpan> spans);

// Normalized (by the longer word) optimal-string-alignment distance between
// code-point sequences, in [0, 1].
double NormalizedCharDistance(std::string_view a, std::string_view b);

// ---------------------------------------------------------------------------
// Tagging

// Character-level classification of a one-word edit into orthographic
// classes (OA OC OD OH OM OR OT OW and their combinations). Punctuation
// pairs are P; word pairs too dissimilar for a spelling error are UNK.
ErrorTag TagWordPair(std::string_view correct, std::string_view erroneous);

// Tags a non-identity span by its shape (2-1 SPLIT, 1-2 MERGE, 0-1 DELETE,
// 1-0 XM, or P for punctuation) or by TagWordPair. Throws
// Error(kInvalidArgument) for an identity span.
ErrorTag TagError(const AlignedSpan& span, std::span<const std::string> correct,
                  std::span<const std::string> erroneous);

// ---------------------------------------------------------------------------
// Transformations

struct Transformation {
  std::optional<std::string> source;  // absent for an inserted word
  std::optional<std::string> target;  // absent for a dropped word
  ErrorTag tag = ErrorTag::Unknown();
};

// Aligned correct/erroneous view of one pair from a corpus.
struct AlignedPair {
  const Essay* erroneous = nullptr;
  const Essay* correct = nullptr;
  std::vector<std::string> correct_tokens;
  std::vector<std::string> erroneous_tokens;
  std::vector<AlignedSpan> spans;
};

// Every essay with a paired_id, aligned against its counterpart. Throws
// Error(kNotFound) for an unresolvable pairing.
std::vector<AlignedPair> AlignCorpusPairs(const Corpus& corpus);

// Source and target text of a span ("" for an empty side).
std::pair<std::string, std::string> SpanText(
    const AlignedSpan& span, std::span<const std::string> correct,
    std::span<const std::string> erroneous);

// Tags a span, preferring an essay's own annotations when one matches the
// span's source and target text.
ErrorTag TagSpan(const AlignedSpan& span, const AlignedPair& pair);

// One transformation per non-identity span over all pairs.
std::vector<Transformation> ExtractTransformations(const Corpus& corpus);
std::vector<Transformation> ExtractTransformations(
    std::span<const AlignedPair> pairs);

using WordCounts = std::map<std::string, int64_t>;

// Correct words that survive unchanged (identity 1-1 spans) in the pairs.
WordCounts CountCleanWords(std::span<const AlignedPair> pairs);

// ---------------------------------------------------------------------------
// Error-type model: P(error type | word)

struct TypeDistribution {
  double no_error = 1.0;
  std::map<ErrorTag, double> tags;

  double Total() const;
  // Most probable tag, or nullopt when no-error dominates. Ties go to the
  // smaller tag key.
  std::optional<ErrorTag> Argmax() const;
};

class ErrorTypeModel {
 public:
  // Per-word MLE over observed outcomes with additive smoothing; unseen
  // words fall back to the global outcome distribution. Transformations
  // without a source word feed the global distribution only. Throws
  // Error(kInvalidArgument) on empty data.
  static ErrorTypeModel Train(std::span<const Transformation> transformations,
                              const WordCounts& clean_word_counts,
                              double smoothing = 0.1);

  TypeDistribution Predict(std::string_view word) const;
  const TypeDistribution& backoff() const { return backoff_; }
  double smoothing() const { return smoothing_; }
  bool Knows(std::string_view word) const;

  std::string Serialize() const;
  static ErrorTypeModel Parse(std::string_view json);

 private:
  struct WordStats {
    int64_t clean = 0;
    std::map<ErrorTag, int64_t> tags;
  };

  TypeDistribution Smooth(const WordStats& stats) const;

  double smoothing_ = 0.1;
  std::vector<ErrorTag> outcome_tags_;
  std::map<std::string, WordStats, std::less<>> lexicon_;
  WordStats global_;
  TypeDistribution backoff_;
};

// ---------------------------------------------------------------------------
// Realization model: P(transformation | error type)

// A reusable corruption. Character rules generalize a single-character
// edit; word pairs memorize a whole substitution; the rest cover word-level
// shapes (joining, detaching a prefix, inserting or dropping a word).
struct RealizationPattern {
  enum class Kind {
    kSubstitute,   // replace `from` by `to` at `anchor`
    kInsert,       // insert `to` after `context` (or at start)
    kDelete,       // delete `from` at `anchor`, after `context` when set
    kSwap,         // swap the adjacent pair `from`
    kWordPair,     // `from` -> `to`, whole word
    kJoinNext,     // glue the word to the following word
    kDetachPrefix, // split prefix `from` off the word
    kInsertWord,   // add word `to` after the word
    kDropWord,     // remove the word
  };
  enum class Anchor { kAny, kStart, kEnd };

  Kind kind = Kind::kWordPair;
  Anchor anchor = Anchor::kAny;
  std::string from;
  std::string to;
  std::string context;

  // Stable textual identity, used for ordering and display.
  std::string Key() const;

  // The corrupted form of `word`, or nullopt when the pattern does not apply.
  // kJoinNext needs `next`. kDropWord yields "".
  std::optional<std::string> Apply(
      std::string_view word,
      std::optional<std::string_view> next = std::nullopt) const;

  friend bool operator==(const RealizationPattern& a,
                         const RealizationPattern& b) {
    return a.Key() == b.Key();
  }
};

// Generalizes a transformation into a pattern: a character rule for a
// single-character word edit, a word-level shape for SPLIT, MERGE, DELETE
// and missing words, else a memorized word pair.
RealizationPattern DerivePattern(const Transformation& transformation);

enum class RealizeMode { kMostProbable, kSample };

struct Realization {
  // Corrupted text ("" for a dropped word); nullopt when nothing applied.
  std::optional<std::string> output;
  std::string pattern_key;
  bool from_fallback = false;
  bool joins_next = false;
};

class RealizationModel {
 public:
  struct Entry {
    RealizationPattern pattern;
    int64_t count = 0;
    double probability = 0.0;
  };

  // count(pattern, tag) / count(tag), unsmoothed. Throws
  // Error(kInvalidArgument) on empty data.
  static RealizationModel Train(std::span<const Transformation> transformations);

  // A model with no learned patterns; only the built-in orthographic rules.
  static RealizationModel FallbackOnly();

  // Learned patterns for `tag`, most probable first. Throws
  // Error(kNotFound) when the tag was never observed.
  const std::vector<Entry>& Distribution(const ErrorTag& tag) const;
  bool HasTag(const ErrorTag& tag) const;
  int64_t TagCount(const ErrorTag& tag) const;
  std::vector<ErrorTag> Tags() const;

  // Corrupts `word` as `tag`. Most-probable mode takes the first applicable
  // learned pattern; sample mode draws among applicable ones by probability.
  // With no applicable pattern the built-in rule for the tag's orthographic
  // classes is tried. Throws Error(kNotFound) when the tag has neither
  // learned patterns nor a built-in rule.
  Realization Realize(std::string_view word, const ErrorTag& tag,
                      RealizeMode mode, Rng& rng,
                      std::optional<std::string_view> next = std::nullopt) const;

  // True when Realize can succeed for (word, tag).
  bool CanRealize(std::string_view word, const ErrorTag& tag,
                  std::optional<std::string_view> next = std::nullopt) const;

  std::string Serialize() const;
  static RealizationModel Parse(std::string_view json);

 private:
  std::map<ErrorTag, std::vector<Entry>> table_;
  std::map<ErrorTag, int64_t> tag_counts_;
};

// Built-in corruption for an orthographic tag (combinations apply each
// component in turn). nullopt when the tag has no rule or it does not apply.
std::optional<std::string> ApplyFallbackRule(std::string_view word,
                                             const ErrorTag& tag);
bool HasFallbackRule(const ErrorTag& tag);

// ---------------------------------------------------------------------------
// Error profiles

struct ErrorProfile {
  CefrLevel level = CefrLevel::kB1;
  std::map<ErrorTag, double> tag_dist;
  double avg_errors_per_essay = 0.0;
  std::map<ErrorTag, double> avg_count_by_tag;
  int64_t support = 0;
  // Mean word count of the clean essays; 0 when unknown.
  double mean_essay_words = 0.0;
};

struct TaggedEssay {
  std::string id;
  CefrLevel level = CefrLevel::kB1;
  std::vector<ErrorTag> tags;
  int64_t n_words = 0;
};

// Erroneous essays with their span tags; level taken from the essay or,
// failing that, from its corrected counterpart. Unlabeled or unassessable
// pairs are skipped.
std::vector<TaggedEssay> TagCorpus(std::span<const AlignedPair> pairs);

// Throws Error(kNotFound) with no essays at the level and Error(kDegenerate)
// when they contain no errors.
ErrorProfile BuildErrorProfile(std::span<const TaggedEssay> essays,
                               CefrLevel level);

// Profiles for every level with at least one erroneous essay; error-free
// levels are skipped.
std::vector<ErrorProfile> BuildErrorProfiles(std::span<const TaggedEssay> essays);

std::string SerializeErrorProfiles(std::span<const ErrorProfile> profiles);
std::vector<ErrorProfile> ParseErrorProfiles(std::string_view json);
std::vector<ErrorProfile> LoadErrorProfiles(const std::filesystem::path& path);

// Cosine similarity of two tag distributions over the union of their keys.
// 0 when either is empty.
double TagCosine(const std::map<ErrorTag, double>& a,
                 const std::map<ErrorTag, double>& b);

}  // namespace cefrsynth

#endif  // CEFRSYNTH_ERROR_MODEL_H_
