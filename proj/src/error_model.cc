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

#include "cefrsynth/error_model.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include "cefrsynth/error.h"
#include "cefrsynth/file_util.h"
#include "cefrsynth/text.h"
#include "cefrsynth/utf8.h"
#include "fmt/format.h"
#include "nlohmann/json.hpp"

namespace cefrsynth {

using ordered_json = nlohmann::ordered_json;

namespace {

// Arabic letters referenced by the orthographic rules.
constexpr char32_t kAlef = 0x0627;             // ا
constexpr char32_t kAlefHamzaAbove = 0x0623;   // أ
constexpr char32_t kAlefHamzaBelow = 0x0625;   // إ
constexpr char32_t kAlefMadda = 0x0622;        // آ
constexpr char32_t kHamza = 0x0621;            // ء
constexpr char32_t kWawHamza = 0x0624;         // ؤ
constexpr char32_t kYehHamza = 0x0626;         // ئ
constexpr char32_t kWaw = 0x0648;              // و
constexpr char32_t kYeh = 0x064A;              // ي
constexpr char32_t kAlefMaksura = 0x0649;      // ى
constexpr char32_t kTehMarbuta = 0x0629;       // ة
constexpr char32_t kHeh = 0x0647;              // ه
constexpr char32_t kTeh = 0x062A;              // ت

bool IsHamzaSeat(char32_t c) {
  return c == kAlef || c == kAlefHamzaAbove || c == kAlefHamzaBelow ||
         c == kAlefMadda || c == kHamza || c == kWawHamza || c == kYehHamza;
}

bool PairIs(char32_t a, char32_t b, char32_t x, char32_t y) {
  return (a == x && b == y) || (a == y && b == x);
}

bool IsTaMarbutaPair(char32_t a, char32_t b) {
  return PairIs(a, b, kTehMarbuta, kHeh) || PairIs(a, b, kTehMarbuta, kTeh);
}

bool IsAlefMaksuraPair(char32_t a, char32_t b) {
  return PairIs(a, b, kYeh, kAlefMaksura) || PairIs(a, b, kAlefMaksura, kAlef);
}

bool IsHamzaPair(char32_t a, char32_t b) {
  if (IsHamzaSeat(a) && IsHamzaSeat(b)) return true;
  return PairIs(a, b, kWawHamza, kWaw) || PairIs(a, b, kYehHamza, kYeh) ||
         PairIs(a, b, kYehHamza, kAlefMaksura);
}

// Edit costs in tenths, so ties are exact.
constexpr int kSpecialSubCost = 5;
constexpr int kSubCost = 10;
constexpr int kIndelCost = 10;
constexpr int kSwapCost = 9;

int SubstitutionCost(char32_t a, char32_t b) {
  if (a == b) return 0;
  if (IsTaMarbutaPair(a, b) || IsAlefMaksuraPair(a, b) || IsHamzaPair(a, b)) {
    return kSpecialSubCost;
  }
  return kSubCost;
}

enum class CharOp { kMatch, kSub, kIns, kDel, kSwap };

struct CharEdit {
  CharOp op;
  size_t pos;     // index into the source (insertions: before this index)
  char32_t a;     // source char (sub/del/swap first)
  char32_t b;     // target char (sub/ins/swap second)
};

// Weighted optimal-string-alignment script from s to t, without matches.
std::vector<CharEdit> EditScript(const std::u32string& s,
                                 const std::u32string& t) {
  const size_t n = s.size();
  const size_t m = t.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i) * kIndelCost;
  for (size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j) * kIndelCost;
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      int best = d[i - 1][j - 1] + SubstitutionCost(s[i - 1], t[j - 1]);
      best = std::min(best, d[i - 1][j] + kIndelCost);
      best = std::min(best, d[i][j - 1] + kIndelCost);
      if (i > 1 && j > 1 && s[i - 1] == t[j - 2] && s[i - 2] == t[j - 1] &&
          s[i - 1] != s[i - 2]) {
        best = std::min(best, d[i - 2][j - 2] + kSwapCost);
      }
      d[i][j] = best;
    }
  }
  std::vector<CharEdit> script;
  size_t i = n;
  size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && s[i - 1] == t[j - 1] && d[i][j] == d[i - 1][j - 1]) {
      --i;
      --j;
      continue;
    }
    if (i > 0 && j > 0 && s[i - 1] != t[j - 1] &&
        d[i][j] == d[i - 1][j - 1] + SubstitutionCost(s[i - 1], t[j - 1])) {
      script.push_back({CharOp::kSub, i - 1, s[i - 1], t[j - 1]});
      --i;
      --j;
      continue;
    }
    if (j > 0 && d[i][j] == d[i][j - 1] + kIndelCost) {
      script.push_back({CharOp::kIns, i, 0, t[j - 1]});
      --j;
      continue;
    }
    if (i > 0 && d[i][j] == d[i - 1][j] + kIndelCost) {
      script.push_back({CharOp::kDel, i - 1, s[i - 1], 0});
      --i;
      continue;
    }
    // Only a swap remains.
    script.push_back({CharOp::kSwap, i - 2, s[i - 2], s[i - 1]});
    i -= 2;
    j -= 2;
  }
  std::reverse(script.begin(), script.end());
  return script;
}

// Plain OSA distance with unit costs. Rows live on the stack for words of
// ordinary length; this runs once per cell of every alignment table.
size_t OsaDistance(const std::u32string& s, const std::u32string& t) {
  const size_t n = s.size();
  const size_t m = t.size();
  constexpr size_t kStackRow = 64;
  std::array<uint32_t, 3 * kStackRow> stack_rows;
  std::vector<uint32_t> heap_rows;
  uint32_t* rows = stack_rows.data();
  if (m + 1 > kStackRow) {
    heap_rows.resize(3 * (m + 1));
    rows = heap_rows.data();
  }
  const size_t width = m + 1 > kStackRow ? m + 1 : kStackRow;
  uint32_t* prev2 = rows;
  uint32_t* prev = rows + width;
  uint32_t* cur = rows + 2 * width;
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<uint32_t>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<uint32_t>(i);
    for (size_t j = 1; j <= m; ++j) {
      uint32_t best = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      best = std::min(best, prev[j] + 1);
      best = std::min(best, cur[j - 1] + 1);
      if (i > 1 && j > 1 && s[i - 1] == t[j - 2] && s[i - 2] == t[j - 1]) {
        best = std::min(best, prev2[j - 2] + 1);
      }
      cur[j] = best;
    }
    std::swap(prev2, prev);
    std::swap(prev, cur);
  }
  return prev[m];
}

double NormalizedDistance(const std::u32string& a, const std::u32string& b) {
  if (a == b) return 0.0;
  const size_t longest = std::max(a.size(), b.size());
  return static_cast<double>(OsaDistance(a, b)) / static_cast<double>(longest);
}

bool IsPunctuationWord(const std::u32string& word) {
  if (word.empty()) return false;
  for (char32_t c : word) {
    if (!utf8::IsPunctuation(c)) return false;
  }
  return true;
}

std::string JoinTokens(std::span<const std::string> tokens, size_t begin,
                       size_t len) {
  std::string out;
  for (size_t k = 0; k < len; ++k) {
    if (k > 0) out += ' ';
    out += tokens[begin + k];
  }
  return out;
}

std::string Encode(const std::u32string& s) { return utf8::Encode(s); }

}  // namespace

double NormalizedCharDistance(std::string_view a, std::string_view b) {
  return NormalizedDistance(utf8::Decode(a), utf8::Decode(b));
}

// ---------------------------------------------------------------------------
// Alignment

std::vector<AlignedSpan> AlignPair(std::span<const std::string> correct,
                                   std::span<const std::string> erroneous) {
  const size_t n = correct.size();
  const size_t m = erroneous.size();
  std::vector<std::u32string> c(n), e(m);
  std::vector<bool> c_punct(n), e_punct(m);
  for (size_t i = 0; i < n; ++i) {
    c[i] = utf8::Decode(correct[i]);
    c_punct[i] = IsPunctuationWord(c[i]);
  }
  for (size_t j = 0; j < m; ++j) {
    e[j] = utf8::Decode(erroneous[j]);
    e_punct[j] = IsPunctuationWord(e[j]);
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr double kEps = 1e-12;
  constexpr double kJoinPenalty = 0.5;
  // back[i][j] = (di, dj) of the span ending at (i, j).
  std::vector<std::vector<double>> cost(n + 1, std::vector<double>(m + 1, kInf));
  std::vector<std::vector<std::pair<uint8_t, uint8_t>>> back(
      n + 1, std::vector<std::pair<uint8_t, uint8_t>>(m + 1, {0, 0}));
  cost[0][0] = 0.0;

  auto length_bound = [](size_t a, size_t b) {
    const size_t longest = std::max(a, b);
    if (longest == 0) return 0.0;
    return static_cast<double>(a > b ? a - b : b - a) /
           static_cast<double>(longest);
  };

  for (size_t i = 0; i <= n; ++i) {
    for (size_t j = 0; j <= m; ++j) {
      if (i == 0 && j == 0) continue;
      double best = kInf;
      std::pair<uint8_t, uint8_t> step{0, 0};
      auto consider = [&](double candidate, uint8_t di, uint8_t dj) {
        if (candidate < best - kEps) {
          best = candidate;
          step = {di, dj};
        }
      };
      // Indels first so the bound below can skip most substitutions. Ties
      // still resolve as substitution, then deletion, then insertion.
      double indel = kInf;
      if (i >= 1) indel = std::min(indel, cost[i - 1][j] + 1.0);
      if (j >= 1) indel = std::min(indel, cost[i][j - 1] + 1.0);
      if (i >= 1 && j >= 1) {
        const double base = cost[i - 1][j - 1];
        if (c[i - 1] == e[j - 1]) {
          consider(base, 1, 1);
        } else if (base + length_bound(c[i - 1].size(), e[j - 1].size()) <=
                   indel + kEps) {
          consider(base + NormalizedDistance(c[i - 1], e[j - 1]), 1, 1);
        }
      }
      if (i >= 1) consider(cost[i - 1][j] + 1.0, 1, 0);
      if (j >= 1) consider(cost[i][j - 1] + 1.0, 0, 1);
      // A join whose piece already matches exactly is a keep plus an indel.
      if (i >= 2 && j >= 1 && !c_punct[i - 2] && !c_punct[i - 1] &&
          !e_punct[j - 1] && c[i - 2] != e[j - 1] && c[i - 1] != e[j - 1]) {
        const double base = cost[i - 2][j - 1] + kJoinPenalty;
        const size_t joined_len = c[i - 2].size() + c[i - 1].size();
        if (base + length_bound(joined_len, e[j - 1].size()) < best - kEps) {
          consider(base + NormalizedDistance(c[i - 2] + c[i - 1], e[j - 1]), 2,
                   1);
        }
      }
      if (i >= 1 && j >= 2 && !c_punct[i - 1] && !e_punct[j - 2] &&
          !e_punct[j - 1] && c[i - 1] != e[j - 2] && c[i - 1] != e[j - 1]) {
        const double base = cost[i - 1][j - 2] + kJoinPenalty;
        const size_t joined_len = e[j - 2].size() + e[j - 1].size();
        if (base + length_bound(c[i - 1].size(), joined_len) < best - kEps) {
          consider(base + NormalizedDistance(c[i - 1], e[j - 2] + e[j - 1]), 1,
                   2);
        }
      }
      cost[i][j] = best;
      back[i][j] = step;
    }
  }

  std::vector<AlignedSpan> spans;
  size_t i = n;
  size_t j = m;
  while (i > 0 || j > 0) {
    const auto [di, dj] = back[i][j];
    AlignedSpan span;
    span.correct_begin = i - di;
    span.correct_len = di;
    span.erroneous_begin = j - dj;
    span.erroneous_len = dj;
    span.cost = cost[i][j] - cost[i - di][j - dj];
    if (span.cost < 0.0) span.cost = 0.0;
    if (span.cost == 0.0 && !(di == 1 && dj == 1)) span.cost = kEps;
    spans.push_back(span);
    i -= di;
    j -= dj;
  }
  std::reverse(spans.begin(), spans.end());
  return spans;
}

double AlignmentCost(std::span<const AlignedSpan> spans) {
  double total = 0.0;
  for (const AlignedSpan& span : spans) total += span.cost;
  return total;
}

// ---------------------------------------------------------------------------
// Tagging

ErrorTag TagWordPair(std::string_view correct, std::string_view erroneous) {
  const std::u32string s = utf8::Decode(correct);
  const std::u32string t = utf8::Decode(erroneous);
  if (s == t) {
    throw Error(ErrorCode::kInvalidArgument, "identical words carry no error");
  }
  const bool s_punct = IsPunctuationWord(s);
  const bool t_punct = IsPunctuationWord(t);
  if (s_punct && t_punct) return ErrorTag::Parse("P");
  if (s_punct || t_punct || s.empty() || t.empty()) return ErrorTag::Unknown();
  if (NormalizedDistance(s, t) > 0.5) return ErrorTag::Unknown();

  std::set<std::string> atoms;
  for (const CharEdit& edit : EditScript(s, t)) {
    switch (edit.op) {
      case CharOp::kMatch:
        break;
      case CharOp::kSub:
        if (IsTaMarbutaPair(edit.a, edit.b)) {
          atoms.insert("OT");
        } else if (IsAlefMaksuraPair(edit.a, edit.b)) {
          atoms.insert("OA");
        } else if (IsHamzaPair(edit.a, edit.b)) {
          atoms.insert("OH");
        } else {
          atoms.insert("OR");
        }
        break;
      case CharOp::kIns:
        if (edit.b == kAlef && edit.pos == s.size() && edit.pos > 0 &&
            s[edit.pos - 1] == kWaw) {
          atoms.insert("OW");
        } else {
          atoms.insert("OD");
        }
        break;
      case CharOp::kDel:
        if (edit.a == kAlef && edit.pos + 1 == s.size() && edit.pos > 0 &&
            s[edit.pos - 1] == kWaw) {
          atoms.insert("OW");
        } else {
          atoms.insert("OM");
        }
        break;
      case CharOp::kSwap:
        atoms.insert("OC");
        break;
    }
  }
  if (atoms.empty()) return ErrorTag::Unknown();
  std::string fine;
  for (const std::string& atom : atoms) {
    if (!fine.empty()) fine += '+';
    fine += atom;
  }
  return ErrorTag::Parse(fine);
}

ErrorTag TagError(const AlignedSpan& span, std::span<const std::string> correct,
                  std::span<const std::string> erroneous) {
  if (span.IsIdentity()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot tag an identity span");
  }
  const size_t cl = span.correct_len;
  const size_t el = span.erroneous_len;
  if (cl == 2 && el == 1) return ErrorTag::Parse("SPLIT");
  if (cl == 1 && el == 2) return ErrorTag::Parse("MERGE");
  if (cl == 0 && el == 1) {
    return IsPunctuationToken(erroneous[span.erroneous_begin])
               ? ErrorTag::Parse("P")
               : ErrorTag::Parse("DELETE");
  }
  if (cl == 1 && el == 0) {
    return IsPunctuationToken(correct[span.correct_begin])
               ? ErrorTag::Parse("P")
               : ErrorTag::Parse("XM");
  }
  if (cl == 1 && el == 1) {
    return TagWordPair(correct[span.correct_begin],
                       erroneous[span.erroneous_begin]);
  }
  return ErrorTag::Unknown();
}

// ---------------------------------------------------------------------------
// Transformations

std::vector<AlignedPair> AlignCorpusPairs(const Corpus& corpus) {
  std::vector<AlignedPair> pairs;
  for (const Essay& essay : corpus.essays()) {
    if (!essay.paired_id) continue;
    const Essay* correct = corpus.Find(*essay.paired_id);
    if (correct == nullptr) {
      throw Error(ErrorCode::kNotFound,
                  fmt::format("essay '{}' pairs with unknown id '{}'", essay.id,
                              *essay.paired_id));
    }
    AlignedPair pair;
    pair.erroneous = &essay;
    pair.correct = correct;
    pair.correct_tokens = Tokenize(correct->text);
    pair.erroneous_tokens = Tokenize(essay.text);
    pair.spans = AlignPair(pair.correct_tokens, pair.erroneous_tokens);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::pair<std::string, std::string> SpanText(
    const AlignedSpan& span, std::span<const std::string> correct,
    std::span<const std::string> erroneous) {
  return {JoinTokens(correct, span.correct_begin, span.correct_len),
          JoinTokens(erroneous, span.erroneous_begin, span.erroneous_len)};
}

ErrorTag TagSpan(const AlignedSpan& span, const AlignedPair& pair) {
  if (!pair.erroneous->edit_tags.empty()) {
    const auto [source, target] =
        SpanText(span, pair.correct_tokens, pair.erroneous_tokens);
    for (const EditAnnotation& annotation : pair.erroneous->edit_tags) {
      if (annotation.source == source && annotation.target == target) {
        return ErrorTag::Parse(annotation.tag);
      }
    }
  }
  return TagError(span, pair.correct_tokens, pair.erroneous_tokens);
}

std::vector<Transformation> ExtractTransformations(
    std::span<const AlignedPair> pairs) {
  std::vector<Transformation> out;
  for (const AlignedPair& pair : pairs) {
    for (const AlignedSpan& span : pair.spans) {
      if (span.IsIdentity()) continue;
      auto [source, target] =
          SpanText(span, pair.correct_tokens, pair.erroneous_tokens);
      Transformation t;
      if (span.correct_len > 0) t.source = std::move(source);
      if (span.erroneous_len > 0) t.target = std::move(target);
      t.tag = TagSpan(span, pair);
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<Transformation> ExtractTransformations(const Corpus& corpus) {
  return ExtractTransformations(AlignCorpusPairs(corpus));
}

WordCounts CountCleanWords(std::span<const AlignedPair> pairs) {
  WordCounts counts;
  for (const AlignedPair& pair : pairs) {
    for (const AlignedSpan& span : pair.spans) {
      if (span.IsIdentity() && span.correct_len == 1) {
        ++counts[pair.correct_tokens[span.correct_begin]];
      }
    }
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Error-type model

double TypeDistribution::Total() const {
  double total = no_error;
  for (const auto& [tag, p] : tags) total += p;
  return total;
}

std::optional<ErrorTag> TypeDistribution::Argmax() const {
  std::optional<ErrorTag> best;
  double best_p = no_error;
  for (const auto& [tag, p] : tags) {
    if (p > best_p) {
      best = tag;
      best_p = p;
    }
  }
  return best;
}

namespace {

std::string FirstWord(const std::string& text) {
  const size_t space = text.find(' ');
  return space == std::string::npos ? text : text.substr(0, space);
}

}  // namespace

ErrorTypeModel ErrorTypeModel::Train(
    std::span<const Transformation> transformations,
    const WordCounts& clean_word_counts, double smoothing) {
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw Error(ErrorCode::kInvalidArgument, "smoothing must be >= 0");
  }
  ErrorTypeModel model;
  model.smoothing_ = smoothing;
  std::set<ErrorTag> outcomes;
  int64_t events = 0;
  for (const Transformation& t : transformations) {
    outcomes.insert(t.tag);
    ++model.global_.tags[t.tag];
    ++events;
    if (t.source) ++model.lexicon_[FirstWord(*t.source)].tags[t.tag];
  }
  for (const auto& [word, count] : clean_word_counts) {
    if (count < 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("negative clean count for '{}'", word));
    }
    if (count == 0) continue;
    model.lexicon_[word].clean += count;
    model.global_.clean += count;
    events += count;
  }
  if (events == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "error-type model needs at least one training event");
  }
  model.outcome_tags_.assign(outcomes.begin(), outcomes.end());
  model.backoff_ = model.Smooth(model.global_);
  return model;
}

TypeDistribution ErrorTypeModel::Smooth(const WordStats& stats) const {
  const double outcomes = static_cast<double>(outcome_tags_.size() + 1);
  double total = static_cast<double>(stats.clean);
  for (const auto& [tag, count] : stats.tags) total += static_cast<double>(count);
  const double denominator = total + smoothing_ * outcomes;
  TypeDistribution d;
  if (denominator <= 0.0) return d;
  d.no_error = (static_cast<double>(stats.clean) + smoothing_) / denominator;
  for (const ErrorTag& tag : outcome_tags_) {
    auto it = stats.tags.find(tag);
    const double count = it == stats.tags.end() ? 0.0 : static_cast<double>(it->second);
    d.tags[tag] = (count + smoothing_) / denominator;
  }
  return d;
}

TypeDistribution ErrorTypeModel::Predict(std::string_view word) const {
  auto it = lexicon_.find(word);
  if (it == lexicon_.end()) return backoff_;
  return Smooth(it->second);
}

bool ErrorTypeModel::Knows(std::string_view word) const {
  return lexicon_.find(word) != lexicon_.end();
}

std::string ErrorTypeModel::Serialize() const {
  ordered_json root;
  root["version"] = "error-type-model-v1";
  root["smoothing"] = smoothing_;
  ordered_json outcomes = ordered_json::array();
  for (const ErrorTag& tag : outcome_tags_) outcomes.push_back(tag.Key());
  root["outcomes"] = std::move(outcomes);
  auto stats_json = [](const WordStats& stats) {
    ordered_json entry;
    entry["clean"] = stats.clean;
    entry["tags"] = ordered_json::object();
    for (const auto& [tag, count] : stats.tags) entry["tags"][tag.Key()] = count;
    return entry;
  };
  auto dist_json = [](const TypeDistribution& d) {
    ordered_json entry;
    entry["NONE"] = d.no_error;
    for (const auto& [tag, p] : d.tags) entry[tag.Key()] = p;
    return entry;
  };
  root["backoff"] = dist_json(backoff_);
  root["global"] = stats_json(global_);
  ordered_json lexicon = ordered_json::object();
  for (const auto& [word, stats] : lexicon_) {
    ordered_json entry = stats_json(stats);
    entry["probabilities"] = dist_json(Smooth(stats));
    lexicon[word] = std::move(entry);
  }
  root["lexicon"] = std::move(lexicon);
  return root.dump(1) + "\n";
}

ErrorTypeModel ErrorTypeModel::Parse(std::string_view json) {
  try {
    const ordered_json root = ordered_json::parse(json);
    if (root.value("version", "") != "error-type-model-v1") {
      throw Error(ErrorCode::kSchema, "error-type model: unsupported version");
    }
    ErrorTypeModel model;
    model.smoothing_ = root.at("smoothing").get<double>();
    for (const auto& tag : root.at("outcomes")) {
      model.outcome_tags_.push_back(ErrorTag::Parse(tag.get<std::string>()));
    }
    auto parse_stats = [](const ordered_json& entry) {
      WordStats stats;
      stats.clean = entry.at("clean").get<int64_t>();
      for (auto it = entry.at("tags").begin(); it != entry.at("tags").end(); ++it) {
        stats.tags[ErrorTag::Parse(it.key())] = it.value().get<int64_t>();
      }
      return stats;
    };
    model.global_ = parse_stats(root.at("global"));
    const ordered_json& lexicon = root.at("lexicon");
    for (auto it = lexicon.begin(); it != lexicon.end(); ++it) {
      model.lexicon_[it.key()] = parse_stats(it.value());
    }
    model.backoff_ = model.Smooth(model.global_);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, fmt::format("error-type model: {}", e.what()));
  }
}

// ---------------------------------------------------------------------------
// Realization patterns

namespace {

std::string_view KindName(RealizationPattern::Kind kind) {
  using Kind = RealizationPattern::Kind;
  switch (kind) {
    case Kind::kSubstitute:
      return "substitute";
    case Kind::kInsert:
      return "insert";
    case Kind::kDelete:
      return "delete";
    case Kind::kSwap:
      return "swap";
    case Kind::kWordPair:
      return "word_pair";
    case Kind::kJoinNext:
      return "join_next";
    case Kind::kDetachPrefix:
      return "detach_prefix";
    case Kind::kInsertWord:
      return "insert_word";
    case Kind::kDropWord:
      return "drop_word";
  }
  return "word_pair";
}

RealizationPattern::Kind ParseKind(std::string_view name) {
  using Kind = RealizationPattern::Kind;
  for (Kind kind : {Kind::kSubstitute, Kind::kInsert, Kind::kDelete,
                    Kind::kSwap, Kind::kWordPair, Kind::kJoinNext,
                    Kind::kDetachPrefix, Kind::kInsertWord, Kind::kDropWord}) {
    if (KindName(kind) == name) return kind;
  }
  throw Error(ErrorCode::kSchema, fmt::format("unknown pattern kind '{}'", name));
}

std::string_view AnchorName(RealizationPattern::Anchor anchor) {
  switch (anchor) {
    case RealizationPattern::Anchor::kAny:
      return "any";
    case RealizationPattern::Anchor::kStart:
      return "start";
    case RealizationPattern::Anchor::kEnd:
      return "end";
  }
  return "any";
}

RealizationPattern::Anchor ParseAnchor(std::string_view name) {
  if (name == "any") return RealizationPattern::Anchor::kAny;
  if (name == "start") return RealizationPattern::Anchor::kStart;
  if (name == "end") return RealizationPattern::Anchor::kEnd;
  throw Error(ErrorCode::kSchema, fmt::format("unknown anchor '{}'", name));
}

char32_t Single(const std::string& s) {
  const std::u32string decoded = utf8::Decode(s);
  return decoded.size() == 1 ? decoded[0] : 0;
}

}  // namespace

std::string RealizationPattern::Key() const {
  const std::string_view anchor_name = AnchorName(anchor);
  switch (kind) {
    case Kind::kSubstitute:
      return fmt::format("sub@{}:{}>{}", anchor_name, from, to);
    case Kind::kInsert:
      return fmt::format("ins@{}:{}+{}", anchor_name, context, to);
    case Kind::kDelete:
      return fmt::format("del@{}:{}-{}", anchor_name, context, from);
    case Kind::kSwap:
      return fmt::format("swap:{}", from);
    case Kind::kWordPair:
      return fmt::format("pair:{}>{}", from, to);
    case Kind::kJoinNext:
      return "join";
    case Kind::kDetachPrefix:
      return fmt::format("detach:{}", from);
    case Kind::kInsertWord:
      return fmt::format("extra:{}", to);
    case Kind::kDropWord:
      return "drop";
  }
  return "";
}

std::optional<std::string> RealizationPattern::Apply(
    std::string_view word, std::optional<std::string_view> next) const {
  std::u32string w = utf8::Decode(word);
  if (w.empty()) return std::nullopt;
  switch (kind) {
    case Kind::kSubstitute: {
      const char32_t a = Single(from);
      const char32_t b = Single(to);
      if (a == 0 || b == 0) return std::nullopt;
      if (anchor == Anchor::kStart) {
        if (w.front() != a) return std::nullopt;
        w.front() = b;
      } else if (anchor == Anchor::kEnd) {
        if (w.back() != a) return std::nullopt;
        w.back() = b;
      } else {
        size_t k = 1;
        while (k + 1 < w.size() && w[k] != a) ++k;
        if (k + 1 >= w.size()) return std::nullopt;
        w[k] = b;
      }
      return Encode(w);
    }
    case Kind::kInsert: {
      const char32_t x = Single(to);
      if (x == 0) return std::nullopt;
      if (anchor == Anchor::kStart) {
        if (w.front() == x) return std::nullopt;
        w.insert(w.begin(), x);
        return Encode(w);
      }
      const char32_t left = Single(context);
      if (left == 0) return std::nullopt;
      if (anchor == Anchor::kEnd) {
        if (w.back() != left) return std::nullopt;
        w.push_back(x);
        return Encode(w);
      }
      for (size_t k = 0; k + 1 < w.size(); ++k) {
        if (w[k] == left && w[k + 1] != x) {
          w.insert(w.begin() + static_cast<std::ptrdiff_t>(k + 1), x);
          return Encode(w);
        }
      }
      return std::nullopt;
    }
    case Kind::kDelete: {
      const char32_t x = Single(from);
      if (x == 0 || w.size() < 2) return std::nullopt;
      if (anchor == Anchor::kStart) {
        if (w.front() != x) return std::nullopt;
        w.erase(w.begin());
        return Encode(w);
      }
      if (anchor == Anchor::kEnd) {
        if (w.back() != x) return std::nullopt;
        if (!context.empty() && w[w.size() - 2] != Single(context)) {
          return std::nullopt;
        }
        w.pop_back();
        return Encode(w);
      }
      for (size_t k = 1; k + 1 < w.size(); ++k) {
        if (w[k] == x) {
          w.erase(w.begin() + static_cast<std::ptrdiff_t>(k));
          return Encode(w);
        }
      }
      return std::nullopt;
    }
    case Kind::kSwap: {
      const std::u32string pair = utf8::Decode(from);
      if (pair.size() != 2 || pair[0] == pair[1]) return std::nullopt;
      for (size_t k = 0; k + 1 < w.size(); ++k) {
        if (w[k] == pair[0] && w[k + 1] == pair[1]) {
          std::swap(w[k], w[k + 1]);
          return Encode(w);
        }
      }
      return std::nullopt;
    }
    case Kind::kWordPair:
      if (word != from) return std::nullopt;
      return to;
    case Kind::kJoinNext:
      if (!next || next->empty() || IsPunctuationToken(*next) ||
          IsPunctuationToken(word)) {
        return std::nullopt;
      }
      return std::string(word) + std::string(*next);
    case Kind::kDetachPrefix: {
      const std::u32string prefix = utf8::Decode(from);
      if (prefix.empty() || w.size() < prefix.size() + 2 ||
          w.compare(0, prefix.size(), prefix) != 0) {
        return std::nullopt;
      }
      return from + " " + Encode(w.substr(prefix.size()));
    }
    case Kind::kInsertWord:
      if (to.empty()) return std::nullopt;
      return std::string(word) + " " + to;
    case Kind::kDropWord:
      return std::string();
  }
  return std::nullopt;
}

RealizationPattern DerivePattern(const Transformation& t) {
  using Kind = RealizationPattern::Kind;
  using Anchor = RealizationPattern::Anchor;
  RealizationPattern pattern;
  if (!t.source && t.target) {
    pattern.kind = Kind::kInsertWord;
    pattern.to = *t.target;
    return pattern;
  }
  if (t.source && !t.target) {
    pattern.kind = Kind::kDropWord;
    return pattern;
  }
  if (!t.source || !t.target) {
    throw Error(ErrorCode::kInvalidArgument,
                "transformation has neither source nor target");
  }
  const std::string& source = *t.source;
  const std::string& target = *t.target;
  pattern.kind = Kind::kWordPair;
  pattern.from = source;
  pattern.to = target;

  const size_t source_space = source.find(' ');
  const size_t target_space = target.find(' ');
  if (source_space != std::string::npos) {
    std::string joined = source;
    joined.erase(source_space, 1);
    if (joined == target && source.find(' ', source_space + 1) == std::string::npos) {
      RealizationPattern join;
      join.kind = Kind::kJoinNext;
      return join;
    }
    return pattern;
  }
  if (target_space != std::string::npos) {
    const std::string prefix = target.substr(0, target_space);
    const std::string rest = target.substr(target_space + 1);
    if (prefix + rest == source && rest.find(' ') == std::string::npos) {
      RealizationPattern detach;
      detach.kind = Kind::kDetachPrefix;
      detach.from = prefix;
      if (detach.Apply(source)) return detach;
    }
    return pattern;
  }

  const std::u32string s = utf8::Decode(source);
  const std::u32string u = utf8::Decode(target);
  const std::vector<CharEdit> script = EditScript(s, u);
  if (script.size() != 1) return pattern;
  const CharEdit& edit = script.front();
  RealizationPattern rule;
  switch (edit.op) {
    case CharOp::kSub:
      rule.kind = Kind::kSubstitute;
      rule.anchor = edit.pos == 0                ? Anchor::kStart
                    : edit.pos + 1 == s.size()   ? Anchor::kEnd
                                                 : Anchor::kAny;
      rule.from = utf8::Encode(edit.a);
      rule.to = utf8::Encode(edit.b);
      break;
    case CharOp::kIns:
      rule.kind = Kind::kInsert;
      rule.to = utf8::Encode(edit.b);
      if (edit.pos == 0) {
        rule.anchor = Anchor::kStart;
      } else {
        rule.anchor = edit.pos == s.size() ? Anchor::kEnd : Anchor::kAny;
        rule.context = utf8::Encode(s[edit.pos - 1]);
      }
      break;
    case CharOp::kDel:
      rule.kind = Kind::kDelete;
      rule.from = utf8::Encode(edit.a);
      if (edit.pos == 0) {
        rule.anchor = Anchor::kStart;
      } else if (edit.pos + 1 == s.size()) {
        rule.anchor = Anchor::kEnd;
        rule.context = utf8::Encode(s[edit.pos - 1]);
      } else {
        rule.anchor = Anchor::kAny;
      }
      break;
    case CharOp::kSwap:
      rule.kind = Kind::kSwap;
      rule.from = utf8::Encode(std::u32string{edit.a, edit.b});
      break;
    case CharOp::kMatch:
      return pattern;
  }
  // A rule that does not reproduce on its own source word is not a
  // generalization of it.
  if (rule.Apply(source)) return rule;
  return pattern;
}

// ---------------------------------------------------------------------------
// Built-in orthographic rules

namespace {

std::optional<std::u32string> FallbackAtom(std::u32string w,
                                           std::string_view atom) {
  if (w.empty()) return std::nullopt;
  if (atom == "OT") {
    if (w.size() < 2 || w.back() != kTehMarbuta) return std::nullopt;
    w.back() = kHeh;
    return w;
  }
  if (atom == "OA") {
    if (w.size() < 2) return std::nullopt;
    if (w.back() == kYeh) {
      w.back() = kAlefMaksura;
      return w;
    }
    if (w.back() == kAlefMaksura) {
      w.back() = kAlef;
      return w;
    }
    return std::nullopt;
  }
  if (atom == "OH") {
    for (char32_t& c : w) {
      if (c == kAlefHamzaAbove || c == kAlefHamzaBelow || c == kAlefMadda) {
        c = kAlef;
        return w;
      }
    }
    if (w.size() >= 2 && w.front() == kAlef) {
      w.front() = kAlefHamzaAbove;
      return w;
    }
    for (char32_t& c : w) {
      if (c == kWawHamza) {
        c = kWaw;
        return w;
      }
      if (c == kYehHamza) {
        c = kYeh;
        return w;
      }
    }
    return std::nullopt;
  }
  if (atom == "OW") {
    if (w.size() < 3 || w.back() != kAlef || w[w.size() - 2] != kWaw) {
      return std::nullopt;
    }
    w.pop_back();
    return w;
  }
  if (atom == "OD") {
    if (w.size() < 2 || IsHamzaSeat(w[0]) || w[0] == kWaw || w[1] == kAlef ||
        IsHamzaSeat(w[1])) {
      return std::nullopt;
    }
    w.insert(w.begin() + 1, kAlef);
    return w;
  }
  if (atom == "OM") {
    if (w.size() < 4) return std::nullopt;
    w.erase(w.begin() + 1);
    return w;
  }
  if (atom == "OR") {
    static const std::pair<char32_t, char32_t> kConfusable[] = {
        {U'ص', U'س'}, {U'س', U'ص'}, {U'ض', U'ظ'}, {U'ظ', U'ض'},
        {U'ط', U'ت'}, {U'ت', U'ط'}, {U'ذ', U'ز'}, {U'ز', U'ذ'},
        {U'ث', U'س'}, {U'ق', U'ك'}, {U'ك', U'ق'}, {U'د', U'ض'},
    };
    for (char32_t& c : w) {
      for (const auto& [from, to] : kConfusable) {
        if (c == from) {
          c = to;
          return w;
        }
      }
    }
    return std::nullopt;
  }
  if (atom == "OC") {
    if (w.size() < 4 || w[1] == w[2]) return std::nullopt;
    std::swap(w[1], w[2]);
    return w;
  }
  return std::nullopt;
}

bool HasFallbackAtom(std::string_view atom) {
  return atom == "OT" || atom == "OA" || atom == "OH" || atom == "OW" ||
         atom == "OD" || atom == "OM" || atom == "OR" || atom == "OC";
}

}  // namespace

bool HasFallbackRule(const ErrorTag& tag) {
  const std::vector<std::string> atoms = tag.Atoms();
  if (atoms.empty()) return false;
  for (const std::string& atom : atoms) {
    if (!HasFallbackAtom(atom)) return false;
  }
  return true;
}

std::optional<std::string> ApplyFallbackRule(std::string_view word,
                                             const ErrorTag& tag) {
  if (!HasFallbackRule(tag)) return std::nullopt;
  std::u32string w = utf8::Decode(word);
  for (const std::string& atom : tag.Atoms()) {
    auto next = FallbackAtom(std::move(w), atom);
    if (!next) return std::nullopt;
    w = std::move(*next);
  }
  return utf8::Encode(w);
}

// ---------------------------------------------------------------------------
// Realization model

RealizationModel RealizationModel::Train(
    std::span<const Transformation> transformations) {
  if (transformations.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "realization model needs at least one transformation");
  }
  std::map<ErrorTag, std::map<std::string, std::pair<RealizationPattern, int64_t>>>
      counts;
  RealizationModel model;
  for (const Transformation& t : transformations) {
    RealizationPattern pattern = DerivePattern(t);
    auto& slot = counts[t.tag][pattern.Key()];
    if (slot.second == 0) slot.first = std::move(pattern);
    ++slot.second;
    ++model.tag_counts_[t.tag];
  }
  for (auto& [tag, patterns] : counts) {
    const double total = static_cast<double>(model.tag_counts_[tag]);
    std::vector<Entry>& entries = model.table_[tag];
    for (auto& [key, slot] : patterns) {
      entries.push_back(
          {slot.first, slot.second, static_cast<double>(slot.second) / total});
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) {
                       if (a.count != b.count) return a.count > b.count;
                       return a.pattern.Key() < b.pattern.Key();
                     });
  }
  return model;
}

RealizationModel RealizationModel::FallbackOnly() { return RealizationModel(); }

const std::vector<RealizationModel::Entry>& RealizationModel::Distribution(
    const ErrorTag& tag) const {
  auto it = table_.find(tag);
  if (it == table_.end()) {
    throw Error(ErrorCode::kNotFound,
                fmt::format("no realization distribution for tag '{}'", tag.Key()));
  }
  return it->second;
}

bool RealizationModel::HasTag(const ErrorTag& tag) const {
  return table_.contains(tag);
}

int64_t RealizationModel::TagCount(const ErrorTag& tag) const {
  auto it = tag_counts_.find(tag);
  return it == tag_counts_.end() ? 0 : it->second;
}

std::vector<ErrorTag> RealizationModel::Tags() const {
  std::vector<ErrorTag> tags;
  for (const auto& [tag, entries] : table_) tags.push_back(tag);
  return tags;
}

Realization RealizationModel::Realize(std::string_view word, const ErrorTag& tag,
                                      RealizeMode mode, Rng& rng,
                                      std::optional<std::string_view> next) const {
  auto it = table_.find(tag);
  if (it == table_.end() && !HasFallbackRule(tag)) {
    throw Error(ErrorCode::kNotFound,
                fmt::format("unknown error tag '{}' for realization", tag.Key()));
  }
  Realization result;
  if (it != table_.end()) {
    std::vector<const Entry*> applicable;
    std::vector<std::string> outputs;
    for (const Entry& entry : it->second) {
      if (auto out = entry.pattern.Apply(word, next)) {
        applicable.push_back(&entry);
        outputs.push_back(std::move(*out));
      }
    }
    if (!applicable.empty()) {
      size_t pick = 0;
      if (mode == RealizeMode::kSample && applicable.size() > 1) {
        std::vector<double> weights;
        for (const Entry* entry : applicable) weights.push_back(entry->probability);
        pick = rng.Categorical(weights);
      }
      result.output = std::move(outputs[pick]);
      result.pattern_key = applicable[pick]->pattern.Key();
      result.joins_next =
          applicable[pick]->pattern.kind == RealizationPattern::Kind::kJoinNext;
      return result;
    }
  }
  if (auto out = ApplyFallbackRule(word, tag)) {
    result.output = std::move(out);
    result.pattern_key = "fallback:" + tag.Key();
    result.from_fallback = true;
  }
  return result;
}

bool RealizationModel::CanRealize(std::string_view word, const ErrorTag& tag,
                                  std::optional<std::string_view> next) const {
  auto it = table_.find(tag);
  if (it != table_.end()) {
    for (const Entry& entry : it->second) {
      if (entry.pattern.Apply(word, next)) return true;
    }
  }
  return ApplyFallbackRule(word, tag).has_value();
}

std::string RealizationModel::Serialize() const {
  ordered_json root;
  root["version"] = "realization-model-v1";
  ordered_json tags = ordered_json::object();
  for (const auto& [tag, entries] : table_) {
    ordered_json tag_json;
    tag_json["count"] = TagCount(tag);
    ordered_json patterns = ordered_json::array();
    for (const Entry& entry : entries) {
      ordered_json p;
      p["kind"] = KindName(entry.pattern.kind);
      p["anchor"] = AnchorName(entry.pattern.anchor);
      p["from"] = entry.pattern.from;
      p["to"] = entry.pattern.to;
      p["context"] = entry.pattern.context;
      p["count"] = entry.count;
      p["probability"] = entry.probability;
      patterns.push_back(std::move(p));
    }
    tag_json["patterns"] = std::move(patterns);
    tags[tag.Key()] = std::move(tag_json);
  }
  root["tags"] = std::move(tags);
  return root.dump(1) + "\n";
}

RealizationModel RealizationModel::Parse(std::string_view json) {
  try {
    const ordered_json root = ordered_json::parse(json);
    if (root.value("version", "") != "realization-model-v1") {
      throw Error(ErrorCode::kSchema, "realization model: unsupported version");
    }
    RealizationModel model;
    const ordered_json& tags = root.at("tags");
    for (auto it = tags.begin(); it != tags.end(); ++it) {
      const ErrorTag tag = ErrorTag::Parse(it.key());
      const int64_t total = it.value().at("count").get<int64_t>();
      model.tag_counts_[tag] = total;
      std::vector<Entry>& entries = model.table_[tag];
      int64_t sum = 0;
      for (const auto& p : it.value().at("patterns")) {
        Entry entry;
        entry.pattern.kind = ParseKind(p.at("kind").get<std::string>());
        entry.pattern.anchor = ParseAnchor(p.value("anchor", "any"));
        entry.pattern.from = p.value("from", "");
        entry.pattern.to = p.value("to", "");
        entry.pattern.context = p.value("context", "");
        entry.count = p.at("count").get<int64_t>();
        entry.probability =
            static_cast<double>(entry.count) / static_cast<double>(total);
        sum += entry.count;
        entries.push_back(std::move(entry));
      }
      if (sum != total || total <= 0) {
        throw Error(ErrorCode::kSchema,
                    fmt::format("realization model: counts for '{}' do not sum "
                                "to the tag count",
                                it.key()));
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, fmt::format("realization model: {}", e.what()));
  }
}

// ---------------------------------------------------------------------------
// Error profiles

std::vector<TaggedEssay> TagCorpus(std::span<const AlignedPair> pairs) {
  std::vector<TaggedEssay> out;
  for (const AlignedPair& pair : pairs) {
    std::optional<CefrLevel> level = HolisticLevel(*pair.erroneous);
    if (!level) level = HolisticLevel(*pair.correct);
    if (!level || !IsAssessable(*level)) continue;
    TaggedEssay tagged;
    tagged.id = pair.erroneous->id;
    tagged.level = *level;
    for (const std::string& token : pair.correct_tokens) {
      if (!IsPunctuationToken(token)) ++tagged.n_words;
    }
    for (const AlignedSpan& span : pair.spans) {
      if (!span.IsIdentity()) tagged.tags.push_back(TagSpan(span, pair));
    }
    out.push_back(std::move(tagged));
  }
  return out;
}

ErrorProfile BuildErrorProfile(std::span<const TaggedEssay> essays,
                               CefrLevel level) {
  ErrorProfile profile;
  profile.level = level;
  std::map<ErrorTag, int64_t> counts;
  int64_t total = 0;
  int64_t words = 0;
  for (const TaggedEssay& essay : essays) {
    if (essay.level != level) continue;
    ++profile.support;
    words += essay.n_words;
    for (const ErrorTag& tag : essay.tags) {
      ++counts[tag];
      ++total;
    }
  }
  if (profile.support == 0) {
    throw Error(ErrorCode::kNotFound,
                fmt::format("no erroneous essays at level {}", LevelName(level)));
  }
  if (total == 0) {
    throw Error(ErrorCode::kDegenerate,
                fmt::format("level {} has no errors; its tag distribution is "
                            "undefined",
                            LevelName(level)));
  }
  const double n = static_cast<double>(profile.support);
  for (const auto& [tag, count] : counts) {
    profile.tag_dist[tag] = static_cast<double>(count) / static_cast<double>(total);
    profile.avg_count_by_tag[tag] = static_cast<double>(count) / n;
  }
  profile.avg_errors_per_essay = static_cast<double>(total) / n;
  profile.mean_essay_words = static_cast<double>(words) / n;
  return profile;
}

std::vector<ErrorProfile> BuildErrorProfiles(std::span<const TaggedEssay> essays) {
  std::set<CefrLevel> levels;
  for (const TaggedEssay& essay : essays) levels.insert(essay.level);
  std::vector<ErrorProfile> profiles;
  for (CefrLevel level : levels) {
    try {
      profiles.push_back(BuildErrorProfile(essays, level));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerate) throw;
    }
  }
  return profiles;
}

std::string SerializeErrorProfiles(std::span<const ErrorProfile> profiles) {
  ordered_json root;
  root["version"] = "error-profile-v1";
  std::vector<const ErrorProfile*> sorted;
  for (const ErrorProfile& p : profiles) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const ErrorProfile* a, const ErrorProfile* b) {
              return a->level < b->level;
            });
  for (const ErrorProfile* p : sorted) {
    ordered_json entry;
    entry["support"] = p->support;
    entry["avg_errors_per_essay"] = p->avg_errors_per_essay;
    entry["mean_essay_words"] = p->mean_essay_words;
    entry["tag_dist"] = ordered_json::object();
    for (const auto& [tag, v] : p->tag_dist) entry["tag_dist"][tag.Key()] = v;
    entry["avg_count_by_tag"] = ordered_json::object();
    for (const auto& [tag, v] : p->avg_count_by_tag) {
      entry["avg_count_by_tag"][tag.Key()] = v;
    }
    root[std::string(LevelName(p->level))] = std::move(entry);
  }
  return root.dump(2) + "\n";
}

std::vector<ErrorProfile> ParseErrorProfiles(std::string_view json) {
  ordered_json root;
  try {
    root = ordered_json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema,
                fmt::format("malformed error profile file: {}", e.what()));
  }
  if (!root.is_object() || root.value("version", "") != "error-profile-v1") {
    throw Error(ErrorCode::kSchema,
                "error profile file must carry version 'error-profile-v1'");
  }
  std::vector<ErrorProfile> profiles;
  for (auto it = root.begin(); it != root.end(); ++it) {
    if (it.key() == "version") continue;
    auto level = TryParseLevel(it.key());
    if (!level || !IsAssessable(*level)) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("error profile file: unknown band '{}'", it.key()));
    }
    try {
      const ordered_json& entry = it.value();
      ErrorProfile p;
      p.level = *level;
      p.support = entry.value("support", int64_t{0});
      p.avg_errors_per_essay = entry.at("avg_errors_per_essay").get<double>();
      p.mean_essay_words = entry.value("mean_essay_words", 0.0);
      double dist_sum = 0.0;
      for (auto t = entry.at("tag_dist").begin(); t != entry.at("tag_dist").end();
           ++t) {
        const double v = t.value().get<double>();
        if (v < 0.0) throw Error(ErrorCode::kSchema, "negative probability");
        p.tag_dist[ErrorTag::Parse(t.key())] = v;
        dist_sum += v;
      }
      double count_sum = 0.0;
      if (entry.contains("avg_count_by_tag")) {
        for (auto t = entry["avg_count_by_tag"].begin();
             t != entry["avg_count_by_tag"].end(); ++t) {
          const double v = t.value().get<double>();
          p.avg_count_by_tag[ErrorTag::Parse(t.key())] = v;
          count_sum += v;
        }
      } else {
        for (const auto& [tag, v] : p.tag_dist) {
          p.avg_count_by_tag[tag] = v * p.avg_errors_per_essay;
          count_sum += v * p.avg_errors_per_essay;
        }
      }
      if (!p.tag_dist.empty() && std::abs(dist_sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::kSchema,
                    fmt::format("tag_dist sums to {}, not 1", dist_sum));
      }
      if (std::abs(count_sum - p.avg_errors_per_essay) > 1e-6) {
        throw Error(ErrorCode::kSchema,
                    fmt::format("avg_count_by_tag sums to {}, not {}", count_sum,
                                p.avg_errors_per_essay));
      }
      profiles.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("error profile '{}': {}", it.key(), e.what()));
    } catch (const Error& e) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("error profile '{}': {}", it.key(), e.what()));
    }
  }
  return profiles;
}

std::vector<ErrorProfile> LoadErrorProfiles(const std::filesystem::path& path) {
  return ParseErrorProfiles(ReadFile(path));
}

double TagCosine(const std::map<ErrorTag, double>& a,
                 const std::map<ErrorTag, double>& b) {
  double dot = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (const auto& [tag, v] : a) {
    aa += v * v;
    auto it = b.find(tag);
    if (it != b.end()) dot += v * it->second;
  }
  for (const auto& [tag, v] : b) bb += v * v;
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

}  // namespace cefrsynth
