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

#include "cefrsynth/generation.h"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_set>

#include "cefrsynth/error.h"
#include "cefrsynth/file_util.h"
#include "cefrsynth/random.h"
#include "cefrsynth/utf8.h"
#include "fmt/format.h"
#include "nlohmann/json.hpp"

namespace cefrsynth {

using ordered_json = nlohmann::ordered_json;

std::string_view TierName(PromptTier tier) {
  switch (tier) {
    case PromptTier::kBeginner:
      return "Beginner";
    case PromptTier::kIntermediate:
      return "Intermediate";
    case PromptTier::kAdvanced:
      return "Advanced";
  }
  return "Beginner";
}

PromptTier ParseTier(std::string_view name) {
  for (PromptTier tier : {PromptTier::kBeginner, PromptTier::kIntermediate,
                          PromptTier::kAdvanced}) {
    if (TierName(tier) == name) return tier;
  }
  throw Error(ErrorCode::kSchema, fmt::format("unknown tier '{}'", name));
}

std::array<CefrLevel, 2> TierLevels(PromptTier tier) {
  switch (tier) {
    case PromptTier::kBeginner:
      return {CefrLevel::kA1, CefrLevel::kA2};
    case PromptTier::kIntermediate:
      return {CefrLevel::kB1, CefrLevel::kB2};
    case PromptTier::kAdvanced:
      return {CefrLevel::kC1, CefrLevel::kC2};
  }
  return {CefrLevel::kA1, CefrLevel::kA2};
}

PromptTier TierOf(CefrLevel level) {
  switch (level) {
    case CefrLevel::kA1:
    case CefrLevel::kA2:
      return PromptTier::kBeginner;
    case CefrLevel::kB1:
    case CefrLevel::kB2:
      return PromptTier::kIntermediate;
    case CefrLevel::kC1:
    case CefrLevel::kC2:
      return PromptTier::kAdvanced;
    case CefrLevel::kUnassessable:
      break;
  }
  throw Error(ErrorCode::kInvalidArgument, "Unassessable has no prompt tier");
}

PromptBank::PromptBank(std::vector<EssayPrompt> prompts)
    : prompts_(std::move(prompts)) {
  for (size_t i = 0; i < prompts_.size(); ++i) {
    const EssayPrompt& p = prompts_[i];
    if (p.id.empty()) {
      throw Error(ErrorCode::kSchema, fmt::format("prompt {} has an empty id", i));
    }
    if (utf8::TrimWhitespace(p.text_ar).empty()) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("prompt '{}' has an empty text_ar", p.id));
    }
    if (!index_.emplace(p.id, i).second) {
      throw Error(ErrorCode::kDuplicateId,
                  fmt::format("duplicate prompt id '{}'", p.id));
    }
  }
}

const EssayPrompt* PromptBank::Find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &prompts_[it->second];
}

std::map<std::string, std::array<int64_t, 3>> PromptBank::CountsByTopicTier()
    const {
  std::map<std::string, std::array<int64_t, 3>> counts;
  for (const EssayPrompt& p : prompts_) {
    auto& row = counts.try_emplace(p.topic, std::array<int64_t, 3>{0, 0, 0})
                    .first->second;
    ++row[static_cast<size_t>(p.tier)];
  }
  return counts;
}

std::array<int64_t, 3> PromptBank::TierTotals() const {
  std::array<int64_t, 3> totals{0, 0, 0};
  for (const EssayPrompt& p : prompts_) ++totals[static_cast<size_t>(p.tier)];
  return totals;
}

PromptBank ParsePromptBank(std::string_view json) {
  if (utf8::TrimWhitespace(json).empty()) return PromptBank();
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema,
                fmt::format("malformed prompt bank: {}", e.what()));
  }
  if (!root.is_array()) {
    throw Error(ErrorCode::kSchema, "prompt bank must be a JSON array");
  }
  std::vector<EssayPrompt> prompts;
  for (size_t i = 0; i < root.size(); ++i) {
    const nlohmann::json& entry = root[i];
    auto field = [&](const char* name) -> std::string {
      if (!entry.is_object() || !entry.contains(name) || !entry[name].is_string()) {
        throw Error(ErrorCode::kSchema,
                    fmt::format("prompt {}: field '{}' must be a string", i, name));
      }
      return entry[name].get<std::string>();
    };
    EssayPrompt p;
    p.id = field("id");
    p.topic = field("topic");
    try {
      p.tier = ParseTier(field("tier"));
    } catch (const Error& e) {
      throw Error(ErrorCode::kSchema, fmt::format("prompt {}: {}", i, e.what()));
    }
    p.text_ar = field("text_ar");
    if (entry.contains("text_en") && entry["text_en"].is_string()) {
      p.text_en = entry["text_en"].get<std::string>();
    }
    prompts.push_back(std::move(p));
  }
  return PromptBank(std::move(prompts));
}

PromptBank LoadPromptBank(const std::filesystem::path& path) {
  return ParsePromptBank(ReadFile(path));
}

std::string SerializePromptBank(const PromptBank& bank) {
  ordered_json root = ordered_json::array();
  for (const EssayPrompt& p : bank.prompts()) {
    ordered_json entry;
    entry["id"] = p.id;
    entry["topic"] = p.topic;
    entry["tier"] = TierName(p.tier);
    entry["text_ar"] = p.text_ar;
    entry["text_en"] = p.text_en ? ordered_json(*p.text_en) : ordered_json(nullptr);
    root.push_back(std::move(entry));
  }
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

bool IsProfileFreeLevel(CefrLevel level) {
  return level == CefrLevel::kA1 || level == CefrLevel::kC2;
}

ChatRequest BuildGenerationRequest(const GenerationJob& job,
                                   std::vector<std::string>* warnings) {
  if (job.prompt == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "generation job has no prompt");
  }
  if (job.essays_per_prompt < 1) {
    throw Error(ErrorCode::kInvalidArgument, "essays_per_prompt must be >= 1");
  }
  if (!IsAssessable(job.target_level) ||
      TierOf(job.target_level) != job.prompt->tier) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("level {} does not belong to the {} tier of prompt "
                            "'{}'",
                            LevelName(job.target_level), TierName(job.prompt->tier),
                            job.prompt->id));
  }
  const std::string_view guidelines = utf8::TrimWhitespace(job.guidelines);
  if (guidelines.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "CEFR guidelines must not be empty");
  }
  const std::string_view level = LevelName(job.target_level);

  ChatRequest request;
  request.system_message = fmt::format(
      "You write Arabic essays that imitate learners of Arabic at a given CEFR "
      "level.\n"
      "Control instructions:\n"
      "1. Write exactly one essay in Modern Standard Arabic in response to the "
      "essay prompt.\n"
      "2. Match the vocabulary range, sentence length and grammatical "
      "complexity expected at the target level, not above it.\n"
      "3. When a linguistic profile is given, keep the essay's statistics close "
      "to it.\n"
      "4. Output only the Arabic essay text: no title, no translation, no "
      "English, no commentary.\n"
      "CEFR guidelines:\n{}\n",
      guidelines);

  std::string user = fmt::format("Target CEFR level: {}\n", level);
  bool with_profile = job.profile.has_value();
  if (with_profile && IsProfileFreeLevel(job.target_level)) {
    with_profile = false;
    if (warnings != nullptr) {
      warnings->push_back(fmt::format(
          "profile ignored for {} job on prompt '{}': {} requests use the "
          "guidelines only",
          level, job.prompt->id, level));
    }
  }
  if (with_profile) {
    const LevelProfile& p = *job.profile;
    if (p.level != job.target_level) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("profile for {} attached to a {} job",
                              LevelName(p.level), level));
    }
    const FeatureVector& f = p.features;
    user += fmt::format(
        "Linguistic profile for {}:\n"
        "- words per essay: {}\n"
        "- sentences per essay: {}\n"
        "- vocabulary size: {}\n"
        "- average word length: {}\n"
        "- average sentence length: {}\n"
        "- type-token ratio: {}\n"
        "- sentence complexity: {}\n",
        level, f.n_words, f.n_sentences, f.n_vocab, f.avg_word_len,
        f.avg_sent_len, f.ttr, f.sentence_complexity);
  } else {
    user += "Follow the CEFR guidelines for this level.\n";
  }
  user += fmt::format("Topic: {}\nEssay prompt (Arabic): {}\n", job.prompt->topic,
                      job.prompt->text_ar);
  request.user_message = std::move(user);
  return request;
}

int64_t GenerationPlan::Total() const {
  int64_t total = 0;
  for (const auto& [level, quota] : quotas) total += quota;
  return total;
}

GenerationPlan ParsePlan(std::string_view json) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, fmt::format("malformed plan: {}", e.what()));
  }
  const nlohmann::json& quotas =
      root.is_object() && root.contains("quotas") ? root["quotas"] : root;
  if (!quotas.is_object()) {
    throw Error(ErrorCode::kSchema, "plan must map bands to quotas");
  }
  GenerationPlan plan;
  for (auto it = quotas.begin(); it != quotas.end(); ++it) {
    const auto level = TryParseLevel(it.key());
    if (!level || !IsAssessable(*level)) {
      throw Error(ErrorCode::kSchema, fmt::format("plan: unknown band '{}'", it.key()));
    }
    if (!it.value().is_number_integer() || it.value().get<int64_t>() <= 0) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("plan: quota for {} must be a positive integer",
                              it.key()));
    }
    plan.quotas[*level] = it.value().get<int64_t>();
  }
  return plan;
}

GenerationPlan LoadPlan(const std::filesystem::path& path) {
  return ParsePlan(ReadFile(path));
}

namespace {

struct PlannedEssay {
  size_t prompt_index;
  CefrLevel level;
  int repetition;
  std::string id;
};

std::vector<PlannedEssay> ExpandPlan(const PromptBank& bank,
                                     const GenerationPlan& plan) {
  std::map<std::pair<size_t, CefrLevel>, int64_t> per_prompt;
  for (const auto& [level, quota] : plan.quotas) {
    if (quota <= 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("quota for {} must be positive", LevelName(level)));
    }
    const PromptTier tier = TierOf(level);
    std::vector<size_t> eligible;
    for (size_t i = 0; i < bank.size(); ++i) {
      if (bank.prompts()[i].tier == tier) eligible.push_back(i);
    }
    if (eligible.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("no {} prompts for level {}", TierName(tier),
                              LevelName(level)));
    }
    const int64_t n = static_cast<int64_t>(eligible.size());
    for (int64_t k = 0; k < n; ++k) {
      const int64_t count = quota / n + (k < quota % n ? 1 : 0);
      if (count > 0) per_prompt[{eligible[static_cast<size_t>(k)], level}] = count;
    }
  }
  std::vector<PlannedEssay> out;
  for (const auto& [key, count] : per_prompt) {
    const auto [prompt_index, level] = key;
    for (int rep = 0; rep < count; ++rep) {
      out.push_back({prompt_index, level, rep,
                     fmt::format("gen-{}-{}-{:02d}", bank.prompts()[prompt_index].id,
                                 LevelName(level), rep)});
    }
  }
  return out;
}

}  // namespace

GenerationResult GenerateCorpus(const PromptBank& bank,
                                const GenerationPlan& plan, ChatClient& client,
                                const GenerationOptions& options) {
  const std::vector<PlannedEssay> planned = ExpandPlan(bank, plan);
  GenerationSummary summary;
  for (const auto& [level, quota] : plan.quotas) summary.planned[level] = quota;

  std::map<CefrLevel, const LevelProfile*> profiles;
  for (const LevelProfile& p : options.profiles) profiles[p.level] = &p;

  // Requests are built up front so warnings and precondition errors surface
  // before any call is made.
  std::vector<ChatRequest> requests;
  std::set<std::string> warnings;
  requests.reserve(planned.size());
  for (const PlannedEssay& item : planned) {
    GenerationJob job;
    job.prompt = &bank.prompts()[item.prompt_index];
    job.target_level = item.level;
    job.guidelines = options.guidelines;
    if (auto it = profiles.find(item.level); it != profiles.end()) {
      job.profile = *it->second;
    }
    std::vector<std::string> job_warnings;
    ChatRequest request = BuildGenerationRequest(job, &job_warnings);
    for (std::string& w : job_warnings) warnings.insert(std::move(w));
    request.temperature = options.temperature;
    request.max_output_tokens = options.max_output_tokens;
    request.model_id = options.model_id;
    request.seed = DeriveSeed(options.seed, item.id);
    requests.push_back(std::move(request));
  }
  summary.warnings.assign(warnings.begin(), warnings.end());

  std::vector<std::optional<std::string>> texts(planned.size());
  std::vector<std::string> errors(planned.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < planned.size(); i = next++) {
      try {
        ChatResponse response = client.Complete(requests[i]);
        const std::string_view trimmed = utf8::TrimWhitespace(response.text);
        if (trimmed.empty()) {
          errors[i] = "empty response";
        } else {
          texts[i] = std::string(trimmed);
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int concurrency = std::max(
      1, options.max_concurrency > 0 ? options.max_concurrency
                                     : client.max_concurrency());
  const size_t n_threads =
      std::min<size_t>(static_cast<size_t>(concurrency), planned.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }

  std::vector<Essay> essays;
  std::unordered_set<std::string> seen;
  for (size_t i = 0; i < planned.size(); ++i) {
    const PlannedEssay& item = planned[i];
    const EssayPrompt& prompt = bank.prompts()[item.prompt_index];
    if (!texts[i]) {
      summary.failures.push_back({item.id, prompt.id, item.level, errors[i]});
      continue;
    }
    if (!seen.insert(*texts[i]).second) ++summary.exact_duplicates;
    Essay essay;
    essay.id = item.id;
    essay.text = std::move(*texts[i]);
    essay.topic = prompt.topic;
    essay.prompt_id = prompt.id;
    essay.level_gold = item.level;
    essay.provenance = Provenance::kGenerated;
    ++summary.produced[item.level];
    essays.push_back(std::move(essay));
  }
  return {Corpus(std::move(essays)), std::move(summary)};
}

std::string SerializeGenerationSummary(const GenerationSummary& summary) {
  ordered_json root;
  ordered_json levels = ordered_json::object();
  int64_t planned_total = 0;
  int64_t produced_total = 0;
  for (CefrLevel level : kAssessableLevels) {
    auto planned = summary.planned.find(level);
    auto produced = summary.produced.find(level);
    const int64_t p = planned == summary.planned.end() ? 0 : planned->second;
    const int64_t q = produced == summary.produced.end() ? 0 : produced->second;
    if (p == 0 && q == 0) continue;
    planned_total += p;
    produced_total += q;
    levels[std::string(LevelName(level))] = {{"planned", p}, {"produced", q}};
  }
  root["levels"] = std::move(levels);
  root["planned_total"] = planned_total;
  root["produced_total"] = produced_total;
  root["exact_duplicates"] = summary.exact_duplicates;
  ordered_json failures = ordered_json::array();
  for (const GenerationFailure& f : summary.failures) {
    failures.push_back({{"essay_id", f.essay_id},
                        {"prompt_id", f.prompt_id},
                        {"level", LevelName(f.level)},
                        {"error", f.error}});
  }
  root["failures"] = std::move(failures);
  root["warnings"] = summary.warnings;
  return root.dump(2) + "\n";
}

QualityGateReport QualityGate(const Corpus& corpus,
                              std::span<const LevelProfile> profiles) {
  if (corpus.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "quality gate needs a non-empty corpus");
  }
  if (profiles.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "quality gate needs profiles");
  }
  QualityGateReport report;
  std::map<CefrLevel, int64_t> hits;
  for (const Essay& essay : corpus.essays()) {
    const auto gold = HolisticLevel(essay);
    if (!gold || !IsAssessable(*gold)) continue;
    CefrLevel predicted = CefrLevel::kUnassessable;
    try {
      predicted = AssignNearestLevel(ExtractFeatures(essay), profiles);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerate) throw;
    }
    report.ids.push_back(essay.id);
    report.predicted.push_back(predicted);
    report.gold.push_back(*gold);
    ++report.per_level_count[*gold];
    if (predicted == *gold) {
      ++hits[*gold];
    } else {
      report.mismatched_ids.push_back(essay.id);
    }
  }
  if (report.ids.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "quality gate found no essays with an assessable gold level");
  }
  report.agreement = Agreement(report.predicted, report.gold);
  for (const auto& [level, count] : report.per_level_count) {
    report.per_level_agreement[level] =
        static_cast<double>(hits[level]) / static_cast<double>(count);
  }
  return report;
}

std::string SerializeQualityGate(const QualityGateReport& report) {
  ordered_json root;
  root["n"] = report.ids.size();
  root["agreement"] = report.agreement;
  ordered_json per_level = ordered_json::object();
  for (const auto& [level, value] : report.per_level_agreement) {
    per_level[std::string(LevelName(level))] = {
        {"n", report.per_level_count.at(level)}, {"agreement", value}};
  }
  root["per_level"] = std::move(per_level);
  root["mismatched_ids"] = report.mismatched_ids;
  ordered_json predictions = ordered_json::array();
  for (size_t i = 0; i < report.ids.size(); ++i) {
    predictions.push_back({{"id", report.ids[i]},
                           {"gold", LevelName(report.gold[i])},
                           {"predicted", LevelName(report.predicted[i])}});
  }
  root["predictions"] = std::move(predictions);
  return root.dump(2) + "\n";
}

}  // namespace cefrsynth
