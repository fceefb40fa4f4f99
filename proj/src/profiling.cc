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

#include "cefrsynth/profiling.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "cefrsynth/error.h"
#include "cefrsynth/file_util.h"
#include "cefrsynth/text.h"
#include "cefrsynth/utf8.h"
#include "fmt/format.h"
#include "nlohmann/json.hpp"

namespace cefrsynth {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kProfileVersion = "profile-v1";

const std::unordered_set<std::string>& Subordinators() {
  static const auto* const kWords = new std::unordered_set<std::string>{
      "أن",    "أنّ",   "إن",     "إنّ",    "لأن",    "لأنّ",   "بأن",
      "وأن",   "فإن",   "وإن",    "كي",     "لكي",    "حتى",    "الذي",
      "التي",  "الذين", "اللذان", "اللتان", "اللواتي", "اللاتي", "عندما",
      "حين",   "حينما", "بينما",  "حيث",    "إذا",    "إذ",     "لو",
      "لولا",  "كلما",  "مما",    "ممن",    "لما",    "كأن",    "كأنّ",
      "that",  "which", "who",    "whom",   "whose",  "because", "when",
      "while", "if",    "although", "though", "since", "unless", "whereas",
      "where"};
  return *kWords;
}

const std::unordered_set<std::string>& Coordinators() {
  static const auto* const kWords = new std::unordered_set<std::string>{
      "و", "ثم", "لكن", "لكنّ", "ولكن", "أو", "أم", "بل", "ف",
      "and", "but", "or", "so", "yet"};
  return *kWords;
}

std::string Lowercase(std::string_view token) {
  std::string out(token);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace

std::vector<double> FeatureVector::Numeric() const {
  return {n_words,      n_sentences,  n_tokens, n_vocab,
          avg_word_len, avg_sent_len, ttr,      sentence_complexity};
}

double TypeTokenRatio(std::span<const std::string> tokens) {
  if (tokens.empty()) return 0.0;
  std::unordered_set<std::string_view> distinct(tokens.begin(), tokens.end());
  return static_cast<double>(distinct.size()) /
         static_cast<double>(tokens.size());
}

double SentenceComplexity(std::span<const std::string> sentences,
                          const DepthFn& depth_fn) {
  if (sentences.empty()) return 0.0;
  double total = 0.0;
  for (size_t i = 0; i < sentences.size(); ++i) {
    double depth = 0.0;
    try {
      depth = depth_fn(sentences[i]);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("depth provider failed on sentence {}: {}", i,
                              e.what()));
    }
    if (!(depth >= 0.0) || !std::isfinite(depth)) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("depth provider returned {} for sentence {}",
                              depth, i));
    }
    total += depth;
  }
  return total / static_cast<double>(sentences.size());
}

double HeuristicClauseDepth(std::string_view sentence) {
  const std::vector<Token> tokens = TokenizeWithOffsets(sentence);
  bool has_word = false;
  for (const Token& token : tokens) has_word |= !token.is_punctuation;
  if (!has_word) return 0.0;
  int current = 1;
  int deepest = 1;
  for (const Token& token : tokens) {
    if (token.is_punctuation) {
      if (token.text == "(" || token.text == "[" || token.text == "«") {
        ++current;
      } else if (token.text == ")" || token.text == "]" || token.text == "»" ||
                 token.text == "," || token.text == "،" ||
                 token.text == ";" || token.text == "؛") {
        current = std::max(1, current - 1);
      }
    } else {
      const std::string word = Lowercase(token.text);
      if (Subordinators().contains(word)) {
        ++current;
      } else if (Coordinators().contains(word)) {
        current = std::max(1, current - 1);
      }
    }
    deepest = std::max(deepest, current);
  }
  return static_cast<double>(deepest);
}

FeatureVector ExtractFeatures(std::string_view text, const DepthFn& depth_fn,
                              const PosFn& pos_fn) {
  FeatureVector v;
  const std::vector<std::string> tokens = Tokenize(text);
  const std::vector<std::string> sentences = SplitSentences(text);
  size_t word_chars = 0;
  for (const std::string& token : tokens) {
    if (IsPunctuationToken(token)) continue;
    v.n_words += 1;
    word_chars += utf8::Length(token);
  }
  v.n_tokens = static_cast<double>(tokens.size());
  v.n_vocab = static_cast<double>(
      std::set<std::string_view>(tokens.begin(), tokens.end()).size());
  v.n_sentences = static_cast<double>(sentences.size());
  v.avg_word_len = v.n_words > 0 ? word_chars / v.n_words : 0.0;
  v.avg_sent_len = v.n_sentences > 0 ? v.n_words / v.n_sentences : 0.0;
  v.ttr = TypeTokenRatio(tokens);
  v.sentence_complexity = SentenceComplexity(sentences, depth_fn);
  if (pos_fn && !tokens.empty()) {
    const std::vector<std::string> tags = pos_fn(tokens);
    if (tags.size() != tokens.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("POS provider returned {} tags for {} tokens",
                              tags.size(), tokens.size()));
    }
    for (const std::string& tag : tags) v.pos_freq[tag] += 1.0;
    for (auto& [tag, freq] : v.pos_freq) freq /= static_cast<double>(tags.size());
  }
  return v;
}

FeatureVector ExtractFeatures(const Essay& essay, const DepthFn& depth_fn,
                              const PosFn& pos_fn) {
  return ExtractFeatures(essay.text, depth_fn, pos_fn);
}

namespace {

LevelProfile MeanProfile(CefrLevel level,
                         std::span<const FeatureVector> members) {
  LevelProfile profile;
  profile.level = level;
  profile.support = static_cast<int64_t>(members.size());
  const double n = static_cast<double>(members.size());
  std::vector<double> sums(FeatureVector::kNumericSize, 0.0);
  for (const FeatureVector& v : members) {
    const std::vector<double> numeric = v.Numeric();
    for (size_t i = 0; i < numeric.size(); ++i) sums[i] += numeric[i];
    for (const auto& [tag, freq] : v.pos_freq) profile.features.pos_freq[tag] += freq;
  }
  FeatureVector& f = profile.features;
  f.n_words = sums[0] / n;
  f.n_sentences = sums[1] / n;
  f.n_tokens = sums[2] / n;
  f.n_vocab = sums[3] / n;
  f.avg_word_len = sums[4] / n;
  f.avg_sent_len = sums[5] / n;
  f.ttr = sums[6] / n;
  f.sentence_complexity = sums[7] / n;
  for (auto& [tag, freq] : f.pos_freq) freq /= n;
  return profile;
}

}  // namespace

LevelProfile BuildLevelProfile(const Corpus& corpus, CefrLevel level,
                               const DepthFn& depth_fn, const PosFn& pos_fn) {
  if (!IsAssessable(level)) {
    throw Error(ErrorCode::kInvalidArgument,
                "profiles exist only for assessable levels");
  }
  std::vector<FeatureVector> members;
  for (const Essay& essay : corpus.essays()) {
    if (HolisticLevel(essay) == level) {
      members.push_back(ExtractFeatures(essay, depth_fn, pos_fn));
    }
  }
  if (members.empty()) {
    throw Error(ErrorCode::kNotFound,
                fmt::format("no essays at level {}; profile unavailable",
                            LevelName(level)));
  }
  return MeanProfile(level, members);
}

std::vector<LevelProfile> BuildLevelProfiles(const Corpus& corpus,
                                             const DepthFn& depth_fn,
                                             const PosFn& pos_fn) {
  std::map<CefrLevel, std::vector<FeatureVector>> by_level;
  for (const Essay& essay : corpus.essays()) {
    auto level = HolisticLevel(essay);
    if (level && IsAssessable(*level)) {
      by_level[*level].push_back(ExtractFeatures(essay, depth_fn, pos_fn));
    }
  }
  std::vector<LevelProfile> profiles;
  for (const auto& [level, members] : by_level) {
    profiles.push_back(MeanProfile(level, members));
  }
  return profiles;
}

double CosineSimilarity(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("cosine of vectors with sizes {} and {}", p.size(),
                            q.size()));
  }
  double dot = 0.0;
  double pp = 0.0;
  double qq = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    dot += p[i] * q[i];
    pp += p[i] * p[i];
    qq += q[i] * q[i];
  }
  if (pp == 0.0 || qq == 0.0) {
    throw Error(ErrorCode::kDegenerate, "cosine similarity of a zero vector");
  }
  const double cosine = dot / (std::sqrt(pp) * std::sqrt(qq));
  return std::clamp(cosine, -1.0, 1.0);
}

double CosineSimilarity(const FeatureVector& p, const FeatureVector& q) {
  std::vector<double> a = p.Numeric();
  std::vector<double> b = q.Numeric();
  if (!p.pos_freq.empty() && !q.pos_freq.empty()) {
    std::set<std::string> tags;
    for (const auto& [tag, freq] : p.pos_freq) tags.insert(tag);
    for (const auto& [tag, freq] : q.pos_freq) tags.insert(tag);
    for (const std::string& tag : tags) {
      auto pi = p.pos_freq.find(tag);
      auto qi = q.pos_freq.find(tag);
      a.push_back(pi == p.pos_freq.end() ? 0.0 : pi->second);
      b.push_back(qi == q.pos_freq.end() ? 0.0 : qi->second);
    }
  }
  return CosineSimilarity(a, b);
}

FeatureScaler::FeatureScaler(std::span<const LevelProfile> profiles)
    : numeric_max_(FeatureVector::kNumericSize, 0.0) {
  for (const LevelProfile& profile : profiles) {
    const std::vector<double> numeric = profile.features.Numeric();
    for (size_t i = 0; i < numeric.size(); ++i) {
      numeric_max_[i] = std::max(numeric_max_[i], std::abs(numeric[i]));
    }
    for (const auto& [tag, freq] : profile.features.pos_freq) {
      double& slot = pos_max_[tag];
      slot = std::max(slot, std::abs(freq));
    }
  }
  for (double& m : numeric_max_) {
    if (m == 0.0) m = 1.0;
  }
  for (auto& [tag, m] : pos_max_) {
    if (m == 0.0) m = 1.0;
  }
}

std::vector<double> FeatureScaler::Scale(const FeatureVector& v,
                                         bool include_pos) const {
  std::vector<double> out = v.Numeric();
  for (size_t i = 0; i < out.size(); ++i) out[i] /= numeric_max_[i];
  if (include_pos) {
    for (const auto& [tag, m] : pos_max_) {
      auto it = v.pos_freq.find(tag);
      out.push_back(it == v.pos_freq.end() ? 0.0 : it->second / m);
    }
  }
  return out;
}

std::vector<double> ProfileSimilarities(const FeatureVector& v,
                                        std::span<const LevelProfile> profiles) {
  if (profiles.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no level profiles supplied");
  }
  const FeatureScaler scaler(profiles);
  std::vector<double> similarities;
  similarities.reserve(profiles.size());
  for (const LevelProfile& profile : profiles) {
    const bool include_pos =
        !v.pos_freq.empty() && !profile.features.pos_freq.empty();
    similarities.push_back(CosineSimilarity(scaler.Scale(v, include_pos),
                                            scaler.Scale(profile.features,
                                                         include_pos)));
  }
  return similarities;
}

CefrLevel AssignNearestLevel(const FeatureVector& v,
                             std::span<const LevelProfile> profiles) {
  const std::vector<double> similarities = ProfileSimilarities(v, profiles);
  constexpr double kTieTolerance = 1e-12;
  size_t best = 0;
  for (size_t i = 1; i < profiles.size(); ++i) {
    const double delta = similarities[i] - similarities[best];
    if (delta > kTieTolerance ||
        (std::abs(delta) <= kTieTolerance &&
         profiles[i].level < profiles[best].level)) {
      best = i;
    }
  }
  return profiles[best].level;
}

double Agreement(std::span<const CefrLevel> predicted,
                 std::span<const CefrLevel> gold) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("agreement over {} predictions and {} gold labels",
                            predicted.size(), gold.size()));
  }
  if (gold.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "agreement of an empty sequence");
  }
  size_t matches = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] == gold[i]) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(gold.size());
}

std::string SerializeProfiles(std::span<const LevelProfile> profiles) {
  ordered_json root;
  root["version"] = kProfileVersion;
  std::vector<const LevelProfile*> sorted;
  for (const LevelProfile& p : profiles) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const LevelProfile* a, const LevelProfile* b) {
              return a->level < b->level;
            });
  for (const LevelProfile* p : sorted) {
    const FeatureVector& f = p->features;
    ordered_json entry;
    entry["support"] = p->support;
    entry["n_words"] = f.n_words;
    entry["n_sentences"] = f.n_sentences;
    entry["n_tokens"] = f.n_tokens;
    entry["n_vocab"] = f.n_vocab;
    entry["avg_word_len"] = f.avg_word_len;
    entry["avg_sent_len"] = f.avg_sent_len;
    entry["ttr"] = f.ttr;
    entry["sentence_complexity"] = f.sentence_complexity;
    entry["pos_freq"] = ordered_json::object();
    for (const auto& [tag, freq] : f.pos_freq) entry["pos_freq"][tag] = freq;
    root[std::string(LevelName(p->level))] = std::move(entry);
  }
  return root.dump(2) + "\n";
}

std::vector<LevelProfile> ParseProfiles(std::string_view json) {
  ordered_json root;
  try {
    root = ordered_json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, fmt::format("malformed profile file: {}", e.what()));
  }
  if (!root.is_object() || root.value("version", "") != kProfileVersion) {
    throw Error(ErrorCode::kSchema,
                fmt::format("profile file must carry version '{}'",
                            kProfileVersion));
  }
  std::vector<LevelProfile> profiles;
  for (auto it = root.begin(); it != root.end(); ++it) {
    if (it.key() == "version") continue;
    auto level = TryParseLevel(it.key());
    if (!level || !IsAssessable(*level)) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("profile file: unknown band key '{}'", it.key()));
    }
    const ordered_json& entry = it.value();
    try {
      LevelProfile profile;
      profile.level = *level;
      profile.support = entry.at("support").get<int64_t>();
      FeatureVector& f = profile.features;
      f.n_words = entry.at("n_words").get<double>();
      f.n_sentences = entry.at("n_sentences").get<double>();
      f.n_tokens = entry.at("n_tokens").get<double>();
      f.n_vocab = entry.at("n_vocab").get<double>();
      f.avg_word_len = entry.at("avg_word_len").get<double>();
      f.avg_sent_len = entry.at("avg_sent_len").get<double>();
      f.ttr = entry.at("ttr").get<double>();
      f.sentence_complexity = entry.at("sentence_complexity").get<double>();
      if (entry.contains("pos_freq")) {
        for (auto pos = entry["pos_freq"].begin(); pos != entry["pos_freq"].end();
             ++pos) {
          f.pos_freq[pos.key()] = pos.value().get<double>();
        }
      }
      if (profile.support < 1) {
        throw Error(ErrorCode::kSchema, "support must be at least 1");
      }
      profiles.push_back(std::move(profile));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("profile '{}': {}", it.key(), e.what()));
    }
  }
  return profiles;
}

void SaveProfiles(std::span<const LevelProfile> profiles,
                  const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeProfiles(profiles));
}

std::vector<LevelProfile> LoadProfiles(const std::filesystem::path& path) {
  return ParseProfiles(ReadFile(path));
}

}  // namespace cefrsynth
