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

#include "cefrsynth/injection.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>
#include <tuple>

#include "cefrsynth/error.h"
#include "cefrsynth/file_util.h"
#include "cefrsynth/text.h"
#include "cefrsynth/utf8.h"
#include "fmt/format.h"
#include "nlohmann/json.hpp"

namespace cefrsynth {

using ordered_json = nlohmann::ordered_json;

std::vector<TypeDistribution> NativeClassifier::Predict(
    std::span<const std::string> tokens) const {
  std::vector<TypeDistribution> out;
  out.reserve(tokens.size());
  for (const std::string& token : tokens) out.push_back(model_.Predict(token));
  return out;
}

PrecomputedClassifier PrecomputedClassifier::Parse(std::string_view jsonl) {
  PrecomputedClassifier classifier;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < jsonl.size()) {
    size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (utf8::TrimWhitespace(line).empty()) continue;
    try {
      const nlohmann::json row = nlohmann::json::parse(line);
      std::vector<std::string> tokens =
          row.at("tokens").get<std::vector<std::string>>();
      const nlohmann::json& dists = row.at("distributions");
      if (!dists.is_array() || dists.size() != tokens.size()) {
        throw Error(ErrorCode::kSchema,
                    "distributions must match tokens one to one");
      }
      std::vector<TypeDistribution> parsed;
      for (const nlohmann::json& d : dists) {
        TypeDistribution dist;
        for (auto it = d.begin(); it != d.end(); ++it) {
          const double p = it.value().get<double>();
          if (!(p >= 0.0)) throw Error(ErrorCode::kSchema, "negative probability");
          if (it.key() == "NONE") {
            dist.no_error = p;
          } else {
            dist.tags[ErrorTag::Parse(it.key())] = p;
          }
        }
        if (std::abs(dist.Total() - 1.0) > 1e-6) {
          throw Error(ErrorCode::kSchema,
                      fmt::format("distribution sums to {}", dist.Total()));
        }
        parsed.push_back(std::move(dist));
      }
      classifier.table_[std::move(tokens)] = std::move(parsed);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchema, fmt::format("line {}: {}", line_no, e.what()));
    } catch (const Error& e) {
      throw Error(ErrorCode::kSchema, fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return classifier;
}

PrecomputedClassifier PrecomputedClassifier::Load(
    const std::filesystem::path& path) {
  return Parse(ReadFile(path));
}

std::vector<TypeDistribution> PrecomputedClassifier::Predict(
    std::span<const std::string> tokens) const {
  auto it = table_.find(std::vector<std::string>(tokens.begin(), tokens.end()));
  if (it == table_.end()) {
    throw Error(ErrorCode::kNotFound,
                fmt::format("no precomputed predictions for a {}-token sequence",
                            tokens.size()));
  }
  return it->second;
}

std::vector<TypeDistribution> PredictErrorTypes(
    std::span<const std::string> tokens, const ErrorClassifier& classifier) {
  if (tokens.empty()) return {};
  std::vector<TypeDistribution> out = classifier.Predict(tokens);
  if (out.size() != tokens.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("classifier '{}' returned {} distributions for {} "
                            "tokens",
                            classifier.name(), out.size(), tokens.size()));
  }
  return out;
}

TypeDistribution FilterByLevel(const TypeDistribution& distribution,
                               const ErrorProfile& profile) {
  TypeDistribution out;
  out.no_error = distribution.no_error;
  double supported_mass = 0.0;
  double weighted_mass = 0.0;
  for (const auto& [tag, p] : distribution.tags) {
    auto it = profile.tag_dist.find(tag);
    if (it == profile.tag_dist.end() || it->second <= 0.0) {
      out.no_error += p;
      continue;
    }
    supported_mass += p;
    weighted_mass += p * it->second;
    out.tags[tag] = p * it->second;
  }
  if (weighted_mass > 0.0) {
    const double scale = supported_mass / weighted_mass;
    for (auto& [tag, p] : out.tags) p *= scale;
  } else {
    out.no_error += supported_mass;
    for (auto& [tag, p] : out.tags) p = 0.0;
  }
  return out;
}

std::vector<TypeDistribution> FilterByLevel(
    std::span<const TypeDistribution> distributions, const ErrorProfile& profile) {
  std::vector<TypeDistribution> out;
  out.reserve(distributions.size());
  for (const TypeDistribution& d : distributions) {
    out.push_back(FilterByLevel(d, profile));
  }
  return out;
}

std::string_view InjectionPathName(InjectionPath path) {
  return path == InjectionPath::kControlled ? "controlled" : "llm";
}

InjectionPath ParseInjectionPath(std::string_view name) {
  if (name == "controlled") return InjectionPath::kControlled;
  if (name == "llm" || name == "llm_per_type") return InjectionPath::kLlmPerType;
  throw Error(ErrorCode::kInvalidArgument,
              fmt::format("unknown injection path '{}'", name));
}

void InjectionPlan::Validate() const {
  if (profile.level != level) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("plan level {} does not match profile level {}",
                            LevelName(level), LevelName(profile.level)));
  }
  if (max_errors && *max_errors < 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_errors must be >= 0");
  }
}

int64_t TargetErrorCount(const ErrorProfile& profile, int64_t n_words,
                         std::optional<int> max_errors) {
  if (profile.avg_errors_per_essay <= 0.0 || n_words <= 0) return 0;
  double expected = profile.avg_errors_per_essay;
  if (profile.mean_essay_words > 0.0) {
    expected *= static_cast<double>(n_words) / profile.mean_essay_words;
  }
  int64_t n = std::llround(expected);
  if (max_errors) n = std::min<int64_t>(n, *max_errors);
  return std::clamp<int64_t>(n, 0, n_words);
}

namespace {

Essay InjectedCopy(const Essay& essay) {
  Essay out = essay;
  out.id = essay.id + std::string(kInjectedSuffix);
  out.provenance = Provenance::kInjected;
  out.paired_id = essay.id;
  out.edit_tags.clear();
  return out;
}

// Systematic sampling: n evenly spaced points with one random offset, so each
// tag receives floor or ceil of n * p.
std::map<ErrorTag, int64_t> TagQuotas(const std::map<ErrorTag, double>& dist,
                                      int64_t n, Rng& rng) {
  std::map<ErrorTag, int64_t> quotas;
  double total = 0.0;
  for (const auto& [tag, p] : dist) total += std::max(0.0, p);
  if (n <= 0 || total <= 0.0) return quotas;
  const double offset = rng.Uniform();
  int64_t k = 0;
  double cumulative = 0.0;
  for (const auto& [tag, p] : dist) {
    if (p <= 0.0) continue;
    cumulative += p / total;
    while (k < n && (static_cast<double>(k) + offset) / static_cast<double>(n) <
                        cumulative) {
      ++quotas[tag];
      ++k;
    }
  }
  // Rounding can leave the last point just past the final boundary.
  for (auto it = dist.rbegin(); k < n && it != dist.rend(); ++it) {
    if (it->second > 0.0) {
      quotas[it->first] += n - k;
      k = n;
    }
  }
  return quotas;
}

struct PlannedEdit {
  std::string output;
  bool joins_next = false;
  ErrorTag tag = ErrorTag::Unknown();
  std::string pattern;
};

std::string ApplyEdits(std::string_view text, std::span<const Token> tokens,
                       const std::map<size_t, PlannedEdit>& edits) {
  std::string out;
  size_t cursor = 0;
  for (const auto& [i, edit] : edits) {
    const Token& token = tokens[i];
    if (token.begin < cursor) continue;
    out.append(text.substr(cursor, token.begin - cursor));
    size_t end = edit.joins_next ? tokens[i + 1].end : token.end;
    if (edit.output.empty()) {
      while (end < text.size() && (text[end] == ' ' || text[end] == '\t')) ++end;
    } else {
      out += edit.output;
    }
    cursor = end;
  }
  out.append(text.substr(cursor));
  return std::string(utf8::TrimWhitespace(out));
}

}  // namespace

std::pair<Essay, InjectionRecord> InjectControlled(
    const Essay& essay, const InjectionPlan& plan,
    const ErrorClassifier& classifier, const RealizationModel& realization) {
  plan.Validate();
  if (plan.path != InjectionPath::kControlled) {
    throw Error(ErrorCode::kInvalidArgument,
                "InjectControlled needs a controlled plan");
  }
  Essay out = InjectedCopy(essay);
  InjectionRecord record;
  record.essay_id = essay.id;
  record.output_id = out.id;
  record.path = InjectionPath::kControlled;

  const std::vector<Token> tokens = TokenizeWithOffsets(essay.text);
  std::vector<std::string> words;
  words.reserve(tokens.size());
  int64_t n_words = 0;
  for (const Token& token : tokens) {
    words.push_back(token.text);
    if (!token.is_punctuation) ++n_words;
  }
  record.target_errors = TargetErrorCount(plan.profile, n_words, plan.max_errors);
  if (record.target_errors == 0) return {std::move(out), std::move(record)};

  Rng rng(DeriveSeed(plan.seed, essay.id));
  std::map<ErrorTag, int64_t> quotas =
      TagQuotas(plan.profile.tag_dist, record.target_errors, rng);
  const std::vector<TypeDistribution> filtered =
      FilterByLevel(PredictErrorTypes(words, classifier), plan.profile);

  struct Candidate {
    double p;
    size_t index;
    ErrorTag tag;
  };
  std::vector<Candidate> candidates;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].is_punctuation) continue;
    for (const auto& [tag, quota] : quotas) {
      auto it = filtered[i].tags.find(tag);
      candidates.push_back({it == filtered[i].tags.end() ? 0.0 : it->second, i, tag});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.p != b.p) return a.p > b.p;
                     if (a.index != b.index) return a.index < b.index;
                     return a.tag < b.tag;
                   });

  std::vector<bool> used(tokens.size(), false);
  std::map<size_t, PlannedEdit> edits;
  int64_t remaining = record.target_errors;
  for (const Candidate& c : candidates) {
    if (remaining == 0) break;
    int64_t& quota = quotas[c.tag];
    if (quota == 0 || used[c.index]) continue;
    std::optional<std::string_view> next;
    if (c.index + 1 < tokens.size() && !used[c.index + 1] &&
        !tokens[c.index + 1].is_punctuation) {
      next = words[c.index + 1];
    }
    const Realization r =
        realization.Realize(words[c.index], c.tag, plan.mode, rng, next);
    if (!r.output || *r.output == words[c.index]) {
      if (c.p > 0.0) record.skips.push_back({c.index, c.tag});
      continue;
    }
    used[c.index] = true;
    if (r.joins_next) used[c.index + 1] = true;
    edits[c.index] = {*r.output, r.joins_next, c.tag, r.pattern_key};
    --quota;
    --remaining;
  }

  for (const auto& [i, edit] : edits) {
    InjectedSpan span;
    span.position = i;
    span.source = edit.joins_next ? words[i] + " " + words[i + 1] : words[i];
    span.target = edit.output;
    span.tag = edit.tag;
    span.pattern = edit.pattern;
    record.spans.push_back(std::move(span));
  }
  if (!edits.empty()) out.text = ApplyEdits(essay.text, tokens, edits);
  return {std::move(out), std::move(record)};
}

std::vector<SampledInstruction> SampleErrorInstructions(
    const ErrorProfile& profile, const InstructionRepository& repository,
    Rng& rng) {
  std::vector<ErrorTag> tags;
  std::vector<double> weights;
  for (const auto& [tag, avg] : profile.avg_count_by_tag) {
    if (avg <= 0.0) continue;
    if (repository.Find(tag) == nullptr) {
      throw Error(ErrorCode::kNotFound,
                  fmt::format("no error instruction for tag '{}'", tag.Key()));
    }
    tags.push_back(tag);
    weights.push_back(avg);
  }
  const int64_t n = std::llround(profile.avg_errors_per_essay);
  std::vector<SampledInstruction> out;
  if (n <= 0 || tags.empty()) return out;
  for (int64_t k = 0; k < n; ++k) {
    const ErrorTag& tag = tags[rng.Categorical(weights)];
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SampledInstruction& s) { return s.tag == tag; });
    if (it == out.end()) {
      out.push_back({tag, *repository.Find(tag), 1});
    } else {
      ++it->count;
    }
  }
  return out;
}

ChatRequest BuildInjectionPrompt(std::string_view essay_text, const ErrorTag& tag,
                                 const ErrorInstruction& instruction,
                                 int64_t count) {
  if (count <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "error count must be positive");
  }
  if (utf8::TrimWhitespace(essay_text).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "essay text must not be empty");
  }
  ChatRequest request;
  std::string example;
  if (!instruction.example_correct.empty() ||
      !instruction.example_erroneous.empty()) {
    example = fmt::format("Example: the correct form \"{}\" becomes \"{}\".\n",
                          instruction.example_correct.empty()
                              ? "NULL"
                              : instruction.example_correct,
                          instruction.example_erroneous.empty()
                              ? "NULL"
                              : instruction.example_erroneous);
  }
  request.system_message = fmt::format(
      "You are a helpful assistant that simulates the mistakes of learners of "
      "Arabic.\n"
      "Inject erroneous tokens of exactly one error type into the essay given "
      "by the user.\n"
      "Error tag: {}\n"
      "Definition: {}\n"
      "{}"
      "Number of errors: {}\n"
      "Introduce exactly that many errors of this type and no other changes. "
      "Keep every other token exactly as written. Return only the Arabic essay "
      "text, with no explanation.\n",
      tag.Key(), instruction.description, example, count);
  request.user_message = std::string(essay_text);
  return request;
}

namespace {

std::vector<InjectedSpan> RealignSpans(std::string_view original,
                                       std::string_view modified) {
  const std::vector<std::string> a = Tokenize(original);
  const std::vector<std::string> b = Tokenize(modified);
  std::vector<InjectedSpan> spans;
  for (const AlignedSpan& span : AlignPair(a, b)) {
    if (span.IsIdentity()) continue;
    auto [source, target] = SpanText(span, a, b);
    InjectedSpan s;
    s.position = span.correct_begin;
    s.source = std::move(source);
    s.target = std::move(target);
    s.tag = TagError(span, a, b);
    spans.push_back(std::move(s));
  }
  return spans;
}

}  // namespace

std::pair<Essay, InjectionRecord> InjectViaLlm(
    const Essay& essay, const InjectionPlan& plan, ChatClient& client,
    const InstructionRepository& repository) {
  plan.Validate();
  if (plan.path != InjectionPath::kLlmPerType) {
    throw Error(ErrorCode::kInvalidArgument, "InjectViaLlm needs an llm plan");
  }
  Essay out = InjectedCopy(essay);
  InjectionRecord record;
  record.essay_id = essay.id;
  record.output_id = out.id;
  record.path = InjectionPath::kLlmPerType;

  Rng rng(DeriveSeed(plan.seed, essay.id));
  std::vector<SampledInstruction> instructions =
      SampleErrorInstructions(plan.profile, repository, rng);
  if (plan.max_errors) {
    // Later instructions give way first when the cap binds.
    int64_t budget = std::max(0, *plan.max_errors);
    for (SampledInstruction& s : instructions) {
      s.count = std::min(s.count, budget);
      budget -= s.count;
    }
    std::erase_if(instructions,
                  [](const SampledInstruction& s) { return s.count == 0; });
  }
  int64_t total = 0;
  for (const SampledInstruction& s : instructions) total += s.count;
  record.target_errors = total;

  std::string current = essay.text;
  for (size_t k = 0; k < instructions.size(); ++k) {
    const SampledInstruction& s = instructions[k];
    ChatRequest request =
        BuildInjectionPrompt(current, s.tag, s.instruction, s.count);
    request.seed = DeriveSeed(plan.seed, fmt::format("{}#{}", essay.id, k));
    try {
      const ChatResponse response = client.Complete(request);
      const std::string_view text = utf8::TrimWhitespace(response.text);
      if (text.empty()) {
        throw Error(ErrorCode::kMalformedResponse, "empty injection response");
      }
      current = std::string(text);
    } catch (const std::exception& e) {
      record.partial = true;
      record.failure = fmt::format("step {} ({}): {}", k, s.tag.Key(), e.what());
      break;
    }
  }
  out.text = current;
  record.spans = RealignSpans(essay.text, current);
  return {std::move(out), std::move(record)};
}

ChatResponse LiteralInjectionClient::Complete(const ChatRequest& request) {
  request.Validate();
  auto marker = [&](std::string_view name) -> std::string {
    const size_t at = request.system_message.find(name);
    if (at == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("injection request lacks '{}'", name));
    }
    const size_t begin = at + name.size();
    const size_t end = request.system_message.find('\n', begin);
    return std::string(utf8::TrimWhitespace(
        std::string_view(request.system_message).substr(begin, end - begin)));
  };
  const ErrorTag tag = ErrorTag::Parse(marker("Error tag:"));
  int64_t remaining = std::stoll(marker("Number of errors:"));
  const std::string& text = request.user_message;
  const std::vector<Token> tokens = TokenizeWithOffsets(text);
  std::map<size_t, PlannedEdit> edits;
  for (size_t i = 0; i < tokens.size() && remaining > 0; ++i) {
    if (tokens[i].is_punctuation) continue;
    auto changed = ApplyFallbackRule(tokens[i].text, tag);
    if (!changed || *changed == tokens[i].text) continue;
    edits[i] = {*changed, false, tag, ""};
    --remaining;
  }
  ChatResponse response;
  response.text = edits.empty() ? text : ApplyEdits(text, tokens, edits);
  return response;
}

FidelityReport VerifyInjection(const Corpus& original, const Corpus& injected,
                               const ErrorProfile& profile, double threshold,
                               std::optional<CefrLevel> only_level) {
  FidelityReport report;
  report.threshold = threshold;
  std::map<ErrorTag, int64_t> totals;
  int64_t total_errors = 0;
  double similarity_sum = 0.0;
  int64_t above = 0;
  int64_t with_errors = 0;
  for (const Essay& essay : injected.essays()) {
    if (essay.provenance != Provenance::kInjected) continue;
    if (!essay.paired_id) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("injected essay '{}' is unpaired", essay.id));
    }
    const Essay* source = original.Find(*essay.paired_id);
    if (source == nullptr) {
      throw Error(ErrorCode::kNotFound,
                  fmt::format("injected essay '{}' pairs with '{}', which is not "
                              "in the original corpus",
                              essay.id, *essay.paired_id));
    }
    if (only_level && HolisticLevel(*source) != only_level) continue;
    std::map<ErrorTag, double> counts;
    EssayFidelity fidelity;
    fidelity.id = essay.id;
    for (const InjectedSpan& span : RealignSpans(source->text, essay.text)) {
      counts[span.tag] += 1.0;
      ++totals[span.tag];
      ++fidelity.n_errors;
      ++total_errors;
    }
    fidelity.similarity = TagCosine(counts, profile.tag_dist);
    if (fidelity.n_errors == 0) {
      ++report.essays_without_errors;
    } else {
      ++with_errors;
      similarity_sum += fidelity.similarity;
      if (fidelity.similarity >= threshold) ++above;
    }
    report.essays.push_back(std::move(fidelity));
  }
  if (report.essays.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no injected essays to verify");
  }
  for (const auto& [tag, count] : totals) {
    report.distribution[tag] =
        static_cast<double>(count) / static_cast<double>(total_errors);
  }
  report.aggregate_similarity = TagCosine(report.distribution, profile.tag_dist);
  std::set<ErrorTag> keys;
  for (const auto& [tag, p] : report.distribution) keys.insert(tag);
  for (const auto& [tag, p] : profile.tag_dist) keys.insert(tag);
  double tv = 0.0;
  for (const ErrorTag& tag : keys) {
    auto a = report.distribution.find(tag);
    auto b = profile.tag_dist.find(tag);
    tv += std::abs((a == report.distribution.end() ? 0.0 : a->second) -
                   (b == profile.tag_dist.end() ? 0.0 : b->second));
  }
  report.total_variation = 0.5 * tv;
  if (with_errors > 0) {
    report.mean_similarity = similarity_sum / static_cast<double>(with_errors);
    report.fraction_above_threshold =
        static_cast<double>(above) / static_cast<double>(with_errors);
  }
  return report;
}

std::string SerializeFidelityReport(const FidelityReport& report) {
  ordered_json root;
  root["threshold"] = report.threshold;
  root["n_essays"] = report.essays.size();
  root["essays_without_errors"] = report.essays_without_errors;
  root["aggregate_similarity"] = report.aggregate_similarity;
  root["total_variation"] = report.total_variation;
  root["mean_similarity"] = report.mean_similarity;
  root["fraction_above_threshold"] = report.fraction_above_threshold;
  root["distribution"] = ordered_json::object();
  for (const auto& [tag, p] : report.distribution) root["distribution"][tag.Key()] = p;
  ordered_json essays = ordered_json::array();
  for (const EssayFidelity& e : report.essays) {
    essays.push_back(
        {{"id", e.id}, {"n_errors", e.n_errors}, {"similarity", e.similarity}});
  }
  root["essays"] = std::move(essays);
  return root.dump(2) + "\n";
}

InjectionRun InjectCorpus(const Corpus& corpus,
                          std::span<const ErrorProfile> profiles,
                          const InjectionRunOptions& options,
                          const ErrorClassifier* classifier,
                          const RealizationModel* realization,
                          ChatClient* client,
                          const InstructionRepository& repository) {
  if (options.path == InjectionPath::kControlled &&
      (classifier == nullptr || realization == nullptr)) {
    throw Error(ErrorCode::kInvalidArgument,
                "controlled injection needs a classifier and a realization model");
  }
  if (options.path == InjectionPath::kLlmPerType && client == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "llm injection needs a chat client");
  }
  std::map<CefrLevel, const ErrorProfile*> by_level;
  for (const ErrorProfile& p : profiles) by_level[p.level] = &p;

  InjectionRun run;
  std::vector<std::pair<const Essay*, const ErrorProfile*>> work;
  for (const Essay& essay : corpus.essays()) {
    if (essay.provenance == Provenance::kInjected) continue;
    const auto level = HolisticLevel(essay);
    auto it = level ? by_level.find(*level) : by_level.end();
    if (it == by_level.end()) {
      run.skipped_ids.push_back(essay.id);
      continue;
    }
    work.emplace_back(&essay, it->second);
  }

  std::vector<std::optional<std::pair<Essay, InjectionRecord>>> results(work.size());
  std::vector<std::string> errors(work.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < work.size(); i = next++) {
      InjectionPlan plan;
      plan.level = work[i].second->level;
      plan.profile = *work[i].second;
      plan.seed = options.seed;
      plan.max_errors = options.max_errors;
      plan.path = options.path;
      plan.mode = options.mode;
      try {
        results[i] = options.path == InjectionPath::kControlled
                         ? InjectControlled(*work[i].first, plan, *classifier,
                                            *realization)
                         : InjectViaLlm(*work[i].first, plan, *client, repository);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  int concurrency = options.max_concurrency;
  if (options.path == InjectionPath::kLlmPerType) {
    concurrency = std::min(concurrency, client->max_concurrency());
  }
  const size_t n_threads =
      std::min<size_t>(static_cast<size_t>(std::max(1, concurrency)), work.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }
  for (size_t i = 0; i < work.size(); ++i) {
    if (!results[i]) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("injection failed for '{}': {}",
                              work[i].first->id, errors[i]));
    }
  }

  std::vector<Essay> essays = corpus.essays();
  for (auto& result : results) {
    essays.push_back(std::move(result->first));
    run.records.push_back(std::move(result->second));
  }
  run.corpus = Corpus(std::move(essays));
  return run;
}

std::string SerializeInjectionRecords(std::span<const InjectionRecord> records) {
  std::string out;
  for (const InjectionRecord& r : records) {
    ordered_json row;
    row["essay_id"] = r.essay_id;
    row["output_id"] = r.output_id;
    row["path"] = InjectionPathName(r.path);
    row["target_errors"] = r.target_errors;
    row["partial"] = r.partial;
    row["failure"] = r.failure.empty() ? ordered_json(nullptr) : ordered_json(r.failure);
    row["verified_similarity"] = r.verified_similarity
                                     ? ordered_json(*r.verified_similarity)
                                     : ordered_json(nullptr);
    ordered_json spans = ordered_json::array();
    for (const InjectedSpan& s : r.spans) {
      ordered_json span;
      span["position"] = s.position;
      span["source"] = s.source;
      span["target"] = s.target;
      span["tag"] = s.tag.Key();
      if (!s.pattern.empty()) span["pattern"] = s.pattern;
      spans.push_back(std::move(span));
    }
    row["spans"] = std::move(spans);
    ordered_json skips = ordered_json::array();
    for (const InjectionSkip& s : r.skips) {
      skips.push_back({{"position", s.position}, {"tag", s.tag.Key()}});
    }
    row["skips"] = std::move(skips);
    out += row.dump();
    out += '\n';
  }
  return out;
}

}  // namespace cefrsynth
