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

#include "cefrsynth/evaluation.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "cefrsynth/error.h"
#include "cefrsynth/file_util.h"
#include "fmt/format.h"
#include "nlohmann/json.hpp"

namespace cefrsynth {

namespace {

void CheckLabels(std::span<const int> predicted, std::span<const int> gold,
                 int num_classes) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{} predictions for {} gold labels",
                            predicted.size(), gold.size()));
  }
  if (gold.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no labels to score");
  }
  if (num_classes < 1) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one class");
  }
  for (size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] < 0 || predicted[i] >= num_classes || gold[i] < 0 ||
        gold[i] >= num_classes) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("label out of range at position {}", i));
    }
  }
}

// Index of a level in the 7-class confusion layout.
int ClassIndex(CefrLevel level) { return static_cast<int>(level); }

constexpr int kConfusionClasses = 7;
constexpr int kOrdinalClasses = 6;

}  // namespace

double Qwk(std::span<const int> predicted, std::span<const int> gold,
           int num_classes) {
  CheckLabels(predicted, gold, num_classes);
  const size_t k = static_cast<size_t>(num_classes);
  std::vector<double> observed(k * k, 0.0);
  std::vector<double> row(k, 0.0);
  std::vector<double> col(k, 0.0);
  for (size_t i = 0; i < gold.size(); ++i) {
    observed[static_cast<size_t>(gold[i]) * k + static_cast<size_t>(predicted[i])] += 1;
    row[static_cast<size_t>(gold[i])] += 1;
    col[static_cast<size_t>(predicted[i])] += 1;
  }
  const double n = static_cast<double>(gold.size());
  double numerator = 0.0;
  double denominator = 0.0;
  if (k > 1) {
    const double scale = static_cast<double>((k - 1) * (k - 1));
    for (size_t i = 0; i < k; ++i) {
      for (size_t j = 0; j < k; ++j) {
        const double d = static_cast<double>(i) - static_cast<double>(j);
        const double w = d * d / scale;
        numerator += w * observed[i * k + j];
        denominator += w * row[i] * col[j] / n;
      }
    }
  }
  if (denominator == 0.0) {
    return std::equal(predicted.begin(), predicted.end(), gold.begin()) ? 1.0
                                                                        : 0.0;
  }
  return std::clamp(1.0 - numerator / denominator, -1.0, 1.0);
}

MacroMetrics ComputeMacroMetrics(std::span<const int> predicted,
                                 std::span<const int> gold, int num_classes) {
  CheckLabels(predicted, gold, num_classes);
  const size_t k = static_cast<size_t>(num_classes);
  MacroMetrics m;
  m.confusion.assign(k, std::vector<int64_t>(k, 0));
  int64_t correct = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    ++m.confusion[static_cast<size_t>(gold[i])][static_cast<size_t>(predicted[i])];
    if (gold[i] == predicted[i]) ++correct;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  int present = 0;
  for (size_t c = 0; c < k; ++c) {
    int64_t gold_count = 0;
    int64_t predicted_count = 0;
    for (size_t j = 0; j < k; ++j) {
      gold_count += m.confusion[c][j];
      predicted_count += m.confusion[j][c];
    }
    if (gold_count == 0) continue;
    ++present;
    const double tp = static_cast<double>(m.confusion[c][c]);
    const double p = predicted_count == 0 ? 0.0 : tp / static_cast<double>(predicted_count);
    const double r = tp / static_cast<double>(gold_count);
    m.precision += p;
    m.recall += r;
    m.f1 += p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  m.precision /= present;
  m.recall /= present;
  m.f1 /= present;
  return m;
}

// ---------------------------------------------------------------------------

void PredictionSet::Add(std::string id, CefrLevel level) {
  if (!IsAssessable(level)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("prediction for '{}' must be an assessable band", id));
  }
  if (index_.contains(id)) {
    throw Error(ErrorCode::kDuplicateId,
                fmt::format("duplicate prediction for '{}'", id));
  }
  index_.emplace(id, entries_.size());
  entries_.push_back({std::move(id), level});
}

std::optional<CefrLevel> PredictionSet::Find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].level;
}

std::string_view EvalSettingName(EvalSetting setting) {
  return setting == EvalSetting::kAverageReference ? "average_reference"
                                                   : "multi_reference";
}

CefrLevel EffectiveGold(const RaterTriple& triple, CefrLevel predicted) {
  std::optional<CefrLevel> best;
  int best_distance = 0;
  for (CefrLevel member : triple) {
    if (!IsAssessable(member)) continue;
    const int distance = std::abs(NumericScore(member) - NumericScore(predicted));
    if (!best || distance < best_distance ||
        (distance == best_distance && member < *best)) {
      best = member;
      best_distance = distance;
    }
  }
  return best.value_or(CefrLevel::kUnassessable);
}

namespace {

EvalReport Evaluate(const PredictionSet& predictions, const Corpus& corpus,
                    std::optional<Split> split, EvalSetting setting) {
  std::vector<int> predicted;
  std::vector<int> gold;
  std::vector<int> ordinal_predicted;
  std::vector<int> ordinal_gold;
  EvalReport report;
  report.setting = setting;
  report.source = predictions.source();
  report.rule = setting == EvalSetting::kAverageReference
                    ? "rounded-average:half-up"
                    : std::string(kMultiReferenceRule);
  for (const Essay& essay : corpus.essays()) {
    if (split && essay.split != split) continue;
    const std::optional<CefrLevel> p = predictions.Find(essay.id);
    if (!p) {
      throw Error(ErrorCode::kNotFound,
                  fmt::format("no prediction for essay '{}'", essay.id));
    }
    CefrLevel g;
    if (setting == EvalSetting::kMultiReference) {
      if (!essay.rater_triple) {
        throw Error(ErrorCode::kInvalidArgument,
                    fmt::format("essay '{}' has no rater triple", essay.id));
      }
      g = EffectiveGold(*essay.rater_triple, *p);
    } else {
      const std::optional<CefrLevel> holistic = HolisticLevel(essay);
      if (!holistic) {
        throw Error(ErrorCode::kInvalidArgument,
                    fmt::format("essay '{}' has neither a rater triple nor a "
                                "gold level",
                                essay.id));
      }
      g = *holistic;
    }
    predicted.push_back(ClassIndex(*p));
    gold.push_back(ClassIndex(g));
    if (IsAssessable(g)) {
      ordinal_predicted.push_back(ClassIndex(*p));
      ordinal_gold.push_back(ClassIndex(g));
    } else {
      ++report.unassessable;
    }
  }
  if (gold.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no essays to evaluate");
  }
  // Predictions are always assessable, so Unassessable gold is never matched.
  const MacroMetrics m = ComputeMacroMetrics(predicted, gold, kConfusionClasses);
  report.n = static_cast<int64_t>(gold.size());
  report.accuracy = m.accuracy;
  report.macro_precision = m.precision;
  report.macro_recall = m.recall;
  report.macro_f1 = m.f1;
  report.confusion = m.confusion;
  report.qwk_n = static_cast<int64_t>(ordinal_gold.size());
  report.qwk = ordinal_gold.empty()
                   ? 0.0
                   : Qwk(ordinal_predicted, ordinal_gold, kOrdinalClasses);
  return report;
}

}  // namespace

EvalReport EvaluateAverageReference(const PredictionSet& predictions,
                                    const Corpus& corpus,
                                    std::optional<Split> split) {
  return Evaluate(predictions, corpus, split, EvalSetting::kAverageReference);
}

EvalReport EvaluateMultiReference(const PredictionSet& predictions,
                                  const Corpus& corpus,
                                  std::optional<Split> split) {
  return Evaluate(predictions, corpus, split, EvalSetting::kMultiReference);
}

PredictionSet BaselineProfileScorer(const Corpus& corpus,
                                    std::span<const LevelProfile> profiles,
                                    std::vector<std::string>* degenerate_ids) {
  PredictionSet out("baseline-profile");
  if (corpus.empty()) return out;
  if (profiles.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "baseline scorer needs profiles");
  }
  std::map<CefrLevel, int64_t> counts;
  for (const Essay& essay : corpus.essays()) {
    const auto level = HolisticLevel(essay);
    if (level && IsAssessable(*level)) ++counts[*level];
  }
  CefrLevel majority = profiles.front().level;
  for (const LevelProfile& profile : profiles) {
    majority = std::min(majority, profile.level);
  }
  int64_t best = 0;
  for (const auto& [level, count] : counts) {
    if (count > best) {
      best = count;
      majority = level;
    }
  }
  for (const Essay& essay : corpus.essays()) {
    CefrLevel level;
    try {
      level = AssignNearestLevel(ExtractFeatures(essay), profiles);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerate) throw;
      level = majority;
      if (degenerate_ids != nullptr) degenerate_ids->push_back(essay.id);
    }
    out.Add(essay.id, level);
  }
  return out;
}

PredictionSet ParsePredictions(std::string_view jsonl, const Corpus* corpus,
                               std::string source) {
  PredictionSet out(std::move(source));
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < jsonl.size()) {
    size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("line {}: malformed JSON: {}", line_no, e.what()));
    }
    if (!row.is_object() || !row.contains("id") || !row["id"].is_string() ||
        !row.contains("band") || !row["band"].is_string()) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("line {}: expected string fields 'id' and 'band'",
                              line_no));
    }
    const std::string id = row["id"].get<std::string>();
    const std::string band = row["band"].get<std::string>();
    const auto level = TryParseLevel(band);
    if (!level || !IsAssessable(*level)) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("line {}: unknown band '{}'", line_no, band));
    }
    if (corpus != nullptr && corpus->Find(id) == nullptr) {
      throw Error(ErrorCode::kNotFound,
                  fmt::format("line {}: essay id '{}' is not in the corpus",
                              line_no, id));
    }
    try {
      out.Add(id, *level);
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

PredictionSet LoadPredictions(const std::filesystem::path& path,
                              const Corpus* corpus) {
  return ParsePredictions(ReadFile(path), corpus, path.filename().string());
}

std::string SerializePredictions(const PredictionSet& predictions) {
  std::string out;
  for (const Prediction& p : predictions.entries()) {
    nlohmann::ordered_json row;
    row["id"] = p.id;
    row["band"] = LevelName(p.level);
    out += row.dump();
    out += '\n';
  }
  return out;
}

std::string SerializeReports(std::span<const EvalReport> reports) {
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (int c = 0; c < kConfusionClasses; ++c) {
    classes.push_back(LevelName(static_cast<CefrLevel>(c)));
  }
  nlohmann::ordered_json root;
  root["version"] = "eval-report-v1";
  root["reports"] = nlohmann::ordered_json::array();
  for (const EvalReport& r : reports) {
    nlohmann::ordered_json entry;
    entry["setting"] = EvalSettingName(r.setting);
    entry["rule"] = r.rule;
    entry["source"] = r.source;
    entry["n"] = r.n;
    entry["qwk"] = r.qwk;
    entry["qwk_x100"] = r.qwk * 100.0;
    entry["qwk_n"] = r.qwk_n;
    entry["unassessable_forced_misses"] = r.unassessable;
    entry["accuracy"] = r.accuracy;
    entry["macro_precision"] = r.macro_precision;
    entry["macro_recall"] = r.macro_recall;
    entry["macro_f1"] = r.macro_f1;
    entry["classes"] = classes;
    entry["confusion"] = r.confusion;
    root["reports"].push_back(std::move(entry));
  }
  return root.dump(2) + "\n";
}

std::string FormatReportTable(std::span<const EvalReport> reports) {
  std::string out = fmt::format("{:<18} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
                                "setting", "n", "QWK", "Acc", "F1", "P", "R");
  for (const EvalReport& r : reports) {
    out += fmt::format("{:<18} {:>6} {:>8.2f} {:>8.2f} {:>8.2f} {:>8.2f} {:>8.2f}\n",
                       EvalSettingName(r.setting), r.n, r.qwk * 100.0,
                       r.accuracy * 100.0, r.macro_f1 * 100.0,
                       r.macro_precision * 100.0, r.macro_recall * 100.0);
  }
  return out;
}

}  // namespace cefrsynth
