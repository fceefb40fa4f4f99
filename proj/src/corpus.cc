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

#include "cefrsynth/corpus.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "cefrsynth/error.h"
#include "cefrsynth/file_util.h"
#include "cefrsynth/random.h"
#include "cefrsynth/utf8.h"
#include "fmt/format.h"
#include "nlohmann/json.hpp"

namespace cefrsynth {

using ordered_json = nlohmann::ordered_json;

std::string_view LevelName(CefrLevel level) {
  switch (level) {
    case CefrLevel::kA1:
      return "A1";
    case CefrLevel::kA2:
      return "A2";
    case CefrLevel::kB1:
      return "B1";
    case CefrLevel::kB2:
      return "B2";
    case CefrLevel::kC1:
      return "C1";
    case CefrLevel::kC2:
      return "C2";
    case CefrLevel::kUnassessable:
      return "UNASSESSABLE";
  }
  return "UNASSESSABLE";
}

std::optional<CefrLevel> TryParseLevel(std::string_view name) {
  for (CefrLevel level : kAssessableLevels) {
    if (LevelName(level) == name) return level;
  }
  if (name == "UNASSESSABLE") return CefrLevel::kUnassessable;
  return std::nullopt;
}

CefrLevel ParseLevel(std::string_view name) {
  if (auto level = TryParseLevel(name)) return *level;
  throw Error(ErrorCode::kSchema, fmt::format("unknown band '{}'", name));
}

bool IsAssessable(CefrLevel level) { return level != CefrLevel::kUnassessable; }

int NumericScore(CefrLevel level) {
  if (!IsAssessable(level)) {
    throw Error(ErrorCode::kUnassessable,
                "UNASSESSABLE has no numeric score");
  }
  return static_cast<int>(level) + 1;
}

CefrLevel LevelFromScore(int score) {
  if (score < 1 || score > 6) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("score {} outside 1..6", score));
  }
  return static_cast<CefrLevel>(score - 1);
}

CefrLevel RoundedAverageLevel(const RaterTriple& triple) {
  int sum = 0;
  for (CefrLevel rating : triple) {
    if (!IsAssessable(rating)) {
      throw Error(ErrorCode::kUnassessable,
                  "rater triple contains UNASSESSABLE; essay is unassessable");
    }
    sum += NumericScore(rating);
  }
  // round(sum / 3) with halves up, in integer arithmetic. A sum of three
  // integers never lands on .5, but the rule is kept explicit.
  const int rounded = (2 * sum + 3) / 6;
  return LevelFromScore(rounded);
}

std::string_view ProvenanceName(Provenance provenance) {
  switch (provenance) {
    case Provenance::kHuman:
      return "human";
    case Provenance::kGenerated:
      return "generated";
    case Provenance::kInjected:
      return "injected";
  }
  return "human";
}

Provenance ParseProvenance(std::string_view name) {
  if (name == "human") return Provenance::kHuman;
  if (name == "generated") return Provenance::kGenerated;
  if (name == "injected") return Provenance::kInjected;
  throw Error(ErrorCode::kSchema, fmt::format("unknown provenance '{}'", name));
}

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kSchema, fmt::format("unknown split '{}'", name));
}

std::optional<CefrLevel> HolisticLevel(const Essay& essay) {
  if (essay.rater_triple) {
    for (CefrLevel rating : *essay.rater_triple) {
      if (!IsAssessable(rating)) return CefrLevel::kUnassessable;
    }
    return RoundedAverageLevel(*essay.rater_triple);
  }
  return essay.level_gold;
}

Corpus::Corpus(std::vector<Essay> essays) : essays_(std::move(essays)) {
  index_.reserve(essays_.size());
  for (size_t i = 0; i < essays_.size(); ++i) {
    const Essay& essay = essays_[i];
    if (essay.id.empty()) {
      throw Error(ErrorCode::kSchema, fmt::format("essay #{} has an empty id", i));
    }
    if (utf8::TrimWhitespace(essay.text).empty()) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("essay '{}' has empty text", essay.id));
    }
    if (essay.provenance == Provenance::kInjected && !essay.paired_id) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("injected essay '{}' lacks paired_id", essay.id));
    }
    if (!index_.emplace(essay.id, i).second) {
      throw Error(ErrorCode::kDuplicateId,
                  fmt::format("duplicate essay id '{}'", essay.id));
    }
  }
  for (const Essay& essay : essays_) {
    if (essay.paired_id && !index_.contains(*essay.paired_id)) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("essay '{}' pairs with unknown id '{}'", essay.id,
                              *essay.paired_id));
    }
  }
}

const Essay* Corpus::Find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &essays_[it->second];
}

namespace {

[[noreturn]] void SchemaError(size_t line, std::string_view field,
                              std::string_view what) {
  throw Error(ErrorCode::kSchema,
              fmt::format("line {}: field '{}': {}", line, field, what));
}

std::optional<std::string> OptionalString(const ordered_json& record,
                                          const char* field, size_t line) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) SchemaError(line, field, "expected a string");
  return it->get<std::string>();
}

CefrLevel LevelField(const ordered_json& value, std::string_view field,
                     size_t line) {
  if (!value.is_string()) SchemaError(line, field, "expected a band string");
  const std::string name = value.get<std::string>();
  auto level = TryParseLevel(name);
  if (!level) SchemaError(line, field, fmt::format("unknown band '{}'", name));
  return *level;
}

Essay ParseRecord(const ordered_json& record, size_t line) {
  if (!record.is_object()) SchemaError(line, "<record>", "expected an object");
  Essay essay;
  auto id = OptionalString(record, "id", line);
  if (!id || id->empty()) SchemaError(line, "id", "missing or empty");
  essay.id = std::move(*id);
  auto text = OptionalString(record, "text", line);
  if (!text) SchemaError(line, "text", "missing");
  if (utf8::TrimWhitespace(*text).empty()) {
    SchemaError(line, "text", "empty after trimming whitespace");
  }
  essay.text = std::move(*text);
  essay.topic = OptionalString(record, "topic", line).value_or("");
  essay.prompt_id = OptionalString(record, "prompt_id", line);
  if (auto it = record.find("level_gold"); it != record.end() && !it->is_null()) {
    essay.level_gold = LevelField(*it, "level_gold", line);
  }
  if (auto it = record.find("rater_triple");
      it != record.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 3) {
      SchemaError(line, "rater_triple", "expected an array of exactly 3 bands");
    }
    RaterTriple triple;
    for (size_t k = 0; k < 3; ++k) {
      triple[k] = LevelField((*it)[k], "rater_triple", line);
    }
    essay.rater_triple = triple;
  }
  if (auto provenance = OptionalString(record, "provenance", line)) {
    try {
      essay.provenance = ParseProvenance(*provenance);
    } catch (const Error& e) {
      SchemaError(line, "provenance", e.what());
    }
  }
  essay.paired_id = OptionalString(record, "paired_id", line);
  if (essay.provenance == Provenance::kInjected && !essay.paired_id) {
    SchemaError(line, "paired_id", "required when provenance is 'injected'");
  }
  if (auto split = OptionalString(record, "split", line)) {
    try {
      essay.split = ParseSplit(*split);
    } catch (const Error& e) {
      SchemaError(line, "split", e.what());
    }
  }
  if (auto it = record.find("edit_tags"); it != record.end() && !it->is_null()) {
    if (!it->is_array()) SchemaError(line, "edit_tags", "expected an array");
    for (const auto& entry : *it) {
      if (!entry.is_object()) SchemaError(line, "edit_tags", "expected objects");
      EditAnnotation annotation;
      annotation.source = OptionalString(entry, "source", line).value_or("");
      annotation.target = OptionalString(entry, "target", line).value_or("");
      auto tag = OptionalString(entry, "tag", line);
      if (!tag || tag->empty()) SchemaError(line, "edit_tags", "entry lacks tag");
      annotation.tag = std::move(*tag);
      essay.edit_tags.push_back(std::move(annotation));
    }
  }
  return essay;
}

ordered_json ToJson(const Essay& essay) {
  ordered_json record;
  record["id"] = essay.id;
  record["text"] = essay.text;
  record["topic"] = essay.topic;
  record["prompt_id"] =
      essay.prompt_id ? ordered_json(*essay.prompt_id) : ordered_json(nullptr);
  record["level_gold"] = essay.level_gold
                             ? ordered_json(LevelName(*essay.level_gold))
                             : ordered_json(nullptr);
  if (essay.rater_triple) {
    ordered_json triple = ordered_json::array();
    for (CefrLevel rating : *essay.rater_triple) {
      triple.push_back(LevelName(rating));
    }
    record["rater_triple"] = std::move(triple);
  } else {
    record["rater_triple"] = nullptr;
  }
  record["provenance"] = ProvenanceName(essay.provenance);
  record["paired_id"] =
      essay.paired_id ? ordered_json(*essay.paired_id) : ordered_json(nullptr);
  if (essay.split) record["split"] = SplitName(*essay.split);
  if (!essay.edit_tags.empty()) {
    ordered_json tags = ordered_json::array();
    for (const EditAnnotation& annotation : essay.edit_tags) {
      tags.push_back({{"source", annotation.source},
                      {"target", annotation.target},
                      {"tag", annotation.tag}});
    }
    record["edit_tags"] = std::move(tags);
  }
  return record;
}

}  // namespace

Corpus ParseCorpus(std::string_view jsonl) {
  std::vector<Essay> essays;
  std::unordered_map<std::string, size_t> first_line;
  size_t line_number = 0;
  size_t pos = 0;
  while (pos <= jsonl.size()) {
    size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(pos, end - pos);
    ++line_number;
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (utf8::TrimWhitespace(line).empty()) {
      if (end == jsonl.size()) break;
      continue;
    }
    ordered_json record;
    try {
      record = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("line {}: malformed JSON: {}", line_number,
                              e.what()));
    }
    Essay essay = ParseRecord(record, line_number);
    auto [it, inserted] = first_line.emplace(essay.id, line_number);
    if (!inserted) {
      throw Error(ErrorCode::kDuplicateId,
                  fmt::format("line {}: field 'id': duplicate id '{}' (first "
                              "seen on line {})",
                              line_number, essay.id, it->second));
    }
    essays.push_back(std::move(essay));
    if (end == jsonl.size()) break;
  }
  return Corpus(std::move(essays));
}

Corpus LoadCorpus(const std::filesystem::path& path) {
  return ParseCorpus(ReadFile(path));
}

std::string SerializeCorpus(const Corpus& corpus) {
  std::string out;
  for (const Essay& essay : corpus.essays()) {
    out += ToJson(essay).dump();
    out += '\n';
  }
  return out;
}

void SaveCorpus(const Corpus& corpus, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeCorpus(corpus));
}

Corpus SplitCorpus(const Corpus& corpus, const SplitRatios& ratios,
                   uint64_t seed) {
  const double parts[] = {ratios.train, ratios.dev, ratios.test};
  for (double r : parts) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "split ratios must be finite and non-negative");
    }
  }
  if (std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("split ratios sum to {} instead of 1",
                            ratios.train + ratios.dev + ratios.test));
  }
  const int64_t n = static_cast<int64_t>(corpus.size());
  // round half up
  int64_t dev = static_cast<int64_t>(std::floor(ratios.dev * n + 0.5));
  int64_t test = static_cast<int64_t>(std::floor(ratios.test * n + 0.5));
  dev = std::min(dev, n);
  test = std::min(test, n - dev);
  const int64_t targets[3] = {n - dev - test, dev, test};

  // Order essays stratum by stratum (shuffled within each stratum), then deal
  // labels along that order so every prefix tracks the global proportions.
  // That makes each stratum's share proportional up to rounding.
  Rng rng(DeriveSeed(seed, "split"));
  std::vector<size_t> order(corpus.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  bool labeled = false;
  for (const Essay& essay : corpus.essays()) {
    if (HolisticLevel(essay)) labeled = true;
  }
  if (labeled) {
    std::map<int, std::vector<size_t>> strata;
    for (size_t i = 0; i < corpus.size(); ++i) {
      auto level = HolisticLevel(corpus.essays()[i]);
      strata[level ? static_cast<int>(*level) : -1].push_back(i);
    }
    order.clear();
    for (auto& [key, members] : strata) {
      rng.Shuffle(std::span<size_t>(members));
      order.insert(order.end(), members.begin(), members.end());
    }
  } else {
    rng.Shuffle(std::span<size_t>(order));
  }

  std::vector<Essay> essays = corpus.essays();
  int64_t assigned[3] = {0, 0, 0};
  for (int64_t step = 0; step < n; ++step) {
    int best = -1;
    double best_deficit = 0.0;
    for (int s = 0; s < 3; ++s) {
      if (assigned[s] >= targets[s]) continue;
      const double deficit =
          static_cast<double>(targets[s]) * static_cast<double>(step + 1) /
              static_cast<double>(n) -
          static_cast<double>(assigned[s]);
      if (best < 0 || deficit > best_deficit) {
        best = s;
        best_deficit = deficit;
      }
    }
    ++assigned[best];
    essays[order[static_cast<size_t>(step)]].split = static_cast<Split>(best);
  }
  return Corpus(std::move(essays));
}

LevelCounts CountLevels(const Corpus& corpus) {
  LevelCounts result;
  for (const Essay& essay : corpus.essays()) {
    ++result.total;
    auto level = HolisticLevel(essay);
    if (!level) {
      ++result.unlabeled;
    } else {
      ++result.counts[*level];
    }
  }
  return result;
}

}  // namespace cefrsynth
