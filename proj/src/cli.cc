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

#include "cefrsynth/cli.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cefrsynth/corpus.h"
#include "cefrsynth/error.h"
#include "cefrsynth/error_model.h"
#include "cefrsynth/error_taxonomy.h"
#include "cefrsynth/evaluation.h"
#include "cefrsynth/file_util.h"
#include "cefrsynth/generation.h"
#include "cefrsynth/injection.h"
#include "cefrsynth/llm_gateway.h"
#include "cefrsynth/mock_llm.h"
#include "cefrsynth/profiling.h"
#include "fmt/format.h"
#include "nlohmann/json.hpp"

namespace cefrsynth {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// Files written by the current command; removed again if it fails.
class OutputSet {
 public:
  void Write(const fs::path& path, std::string_view data) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    WriteFileAtomic(path, data);
    written_.push_back(path);
  }

  void RemoveAll() {
    for (const fs::path& path : written_) {
      std::error_code ignored;
      fs::remove(path, ignored);
    }
    written_.clear();
  }

  const std::vector<fs::path>& written() const { return written_; }

 private:
  std::vector<fs::path> written_;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::vector<std::string> args;
  std::string command;
  std::optional<uint64_t> seed;
  std::vector<fs::path> inputs;
  OutputSet outputs;
  ordered_json config = ordered_json::object();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

fs::path ManifestPath(const fs::path& primary) {
  return fs::path(primary.string() + ".manifest.json");
}

// Records enough to re-run the command: arguments, effective config, seed,
// and content hashes of every input and output.
void WriteManifest(Context& ctx, const fs::path& primary) {
  ordered_json m;
  m["tool"] = "cefrsynth";
  m["version"] = kToolVersion;
  m["command"] = ctx.command;
  m["args"] = ctx.args;
  m["config"] = ctx.config;
  m["seed"] = ctx.seed ? ordered_json(*ctx.seed) : ordered_json(nullptr);
  ordered_json inputs = ordered_json::array();
  for (const fs::path& p : ctx.inputs) {
    inputs.push_back({{"path", p.string()}, {"fnv1a64", HexU64(HashFile(p))}});
  }
  m["inputs"] = std::move(inputs);
  ordered_json outputs = ordered_json::array();
  for (const fs::path& p : ctx.outputs.written()) {
    outputs.push_back({{"path", p.string()}, {"fnv1a64", HexU64(HashFile(p))}});
  }
  m["outputs"] = std::move(outputs);
  m["wall_time_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - ctx.start)
                          .count();
  ctx.outputs.Write(ManifestPath(primary), m.dump(2) + "\n");
}

std::string ConfigValue(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  return value.dump();
}

// Fills options the command line left unset from the flat config document.
// Keys are long option names; '_' and '-' are interchangeable.
void ApplyConfig(CLI::App* app, const nlohmann::json& config, Context& ctx) {
  for (CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || opt->count() > 0) {
      continue;
    }
    std::string alt = name;
    std::replace(alt.begin(), alt.end(), '-', '_');
    const nlohmann::json* value = nullptr;
    if (config.contains(name)) {
      value = &config[name];
    } else if (config.contains(alt)) {
      value = &config[alt];
    }
    if (value == nullptr || value->is_null()) continue;
    ctx.config[name] = *value;
    if (opt->get_type_size() == 0) {
      if (ConfigValue(*value) == "true") {
        opt->add_result("true");
        opt->run_callback();
      }
      continue;
    }
    opt->add_result(ConfigValue(*value));
    opt->run_callback();
  }
}

void Require(CLI::App* app, std::initializer_list<std::string_view> names) {
  for (std::string_view name : names) {
    CLI::Option* opt = app->get_option(fmt::format("--{}", name));
    if (opt->count() == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("{}: --{} is required", app->get_name(), name));
    }
  }
}

enum class Format { kTable, kJson };

Format ParseFormat(const std::string& value) {
  if (value == "table") return Format::kTable;
  if (value == "json") return Format::kJson;
  throw Error(ErrorCode::kInvalidArgument,
              fmt::format("--format must be json or table, got '{}'", value));
}

Corpus ReadCorpus(Context& ctx, const fs::path& path) {
  ctx.inputs.push_back(path);
  return LoadCorpus(path);
}

std::optional<Split> SplitOption(const std::string& value) {
  if (value.empty()) return std::nullopt;
  return ParseSplit(value);
}

Corpus FilterSplit(const Corpus& corpus, std::optional<Split> split) {
  if (!split) return corpus;
  std::vector<Essay> kept;
  for (const Essay& essay : corpus.essays()) {
    if (essay.split == split) kept.push_back(essay);
  }
  return Corpus(std::move(kept));
}

// Emits a report to --out (with manifest) or to stdout.
void Emit(Context& ctx, const std::string& out_path, Format format,
          const std::string& json, const std::string& table) {
  if (!out_path.empty()) {
    ctx.outputs.Write(out_path, json);
    WriteManifest(ctx, out_path);
  }
  if (out_path.empty() || format == Format::kTable) {
    ctx.out << (format == Format::kJson ? json : table);
  }
}

// ---------------------------------------------------------------------------
// Command options. Strings left empty mean "not given".

struct CommonOptions {
  std::string format = "table";
  std::string out;
};

struct GatewayOptions {
  std::string endpoint;
  std::string model;
  int max_concurrency = 4;
  int retry_cap = 5;
  int64_t timeout_ms = 120000;
  std::string api_key_env = "CEFRSYNTH_API_KEY";
  bool mock = false;

  void Register(CLI::App* app) {
    app->add_option("--endpoint", endpoint, "Chat-completion endpoint URL");
    app->add_option("--model", model, "Model identifier");
    app->add_option("--max-concurrency", max_concurrency, "Requests in flight");
    app->add_option("--retry-cap", retry_cap, "Retries per request");
    app->add_option("--timeout-ms", timeout_ms, "Per-request timeout");
    app->add_option("--api-key-env", api_key_env,
                    "Environment variable holding the API key");
    app->add_flag("--mock", mock, "Use the deterministic offline mock");
  }

  // Fails before any work is scheduled, so a misconfigured run writes nothing.
  GatewayConfig Config() const {
    if (endpoint.empty() || model.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "--endpoint and --model are required unless --mock is given");
    }
    GatewayConfig config;
    config.endpoint_url = endpoint;
    config.model_id = model;
    config.max_concurrency = max_concurrency;
    config.retry_cap = retry_cap;
    config.timeout = std::chrono::milliseconds(timeout_ms);
    config.api_key_env = api_key_env;
    return config;
  }
};

// ---------------------------------------------------------------------------
// stats

std::string StatsTable(const LevelCounts& counts) {
  std::string table = fmt::format("{:<14} {:>7} {:>5}\n", "Level", "Essays", "%");
  auto row = [&](std::string_view name, int64_t n) {
    const int64_t pct =
        counts.total == 0
            ? 0
            : std::llround(100.0 * static_cast<double>(n) /
                           static_cast<double>(counts.total));
    table += fmt::format("{:<14} {:>7} {:>4}%\n", name, n, pct);
  };
  for (CefrLevel level : kAssessableLevels) {
    auto it = counts.counts.find(level);
    row(LevelName(level), it == counts.counts.end() ? 0 : it->second);
  }
  auto u = counts.counts.find(CefrLevel::kUnassessable);
  row("Unassessable", u == counts.counts.end() ? 0 : u->second);
  if (counts.unlabeled > 0) row("Unlabeled", counts.unlabeled);
  table += fmt::format("{:<14} {:>7} {:>4}%\n", "Total", counts.total,
                       counts.total == 0 ? 0 : 100);
  return table;
}

std::string StatsJson(const LevelCounts& counts) {
  ordered_json root;
  root["total"] = counts.total;
  ordered_json levels = ordered_json::object();
  auto add = [&](std::string_view name, int64_t n) {
    const double share = counts.total == 0
                             ? 0.0
                             : static_cast<double>(n) /
                                   static_cast<double>(counts.total);
    levels[std::string(name)] = {{"count", n},
                                 {"share", share},
                                 {"percent", std::llround(100.0 * share)}};
  };
  for (CefrLevel level : kAssessableLevels) {
    auto it = counts.counts.find(level);
    add(LevelName(level), it == counts.counts.end() ? 0 : it->second);
  }
  auto u = counts.counts.find(CefrLevel::kUnassessable);
  add(LevelName(CefrLevel::kUnassessable), u == counts.counts.end() ? 0 : u->second);
  root["levels"] = std::move(levels);
  root["unlabeled"] = counts.unlabeled;
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

int Dispatch(Context& ctx, int argc, const char* const* argv) {
  CLI::App app{"Build CEFR profiles, generate and corrupt Arabic essays, and "
               "score CEFR predictions.",
               "cefrsynth"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  app.add_option("--config", config_path, "Flat JSON config; flags override it");

  CommonOptions common;
  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("--format", common.format, "json or table");
    if (with_out) sub->add_option("--out", common.out, "Output path");
  };

  // stats
  std::string corpus_path;
  CLI::App* stats = app.add_subcommand("stats", "Level counts of a corpus");
  stats->add_option("--corpus", corpus_path, "Corpus JSONL");
  add_common(stats, true);

  // split
  uint64_t seed = 0;
  double train_ratio = 0.7, dev_ratio = 0.15, test_ratio = 0.15;
  CLI::App* split = app.add_subcommand("split", "Stratified train/dev/test split");
  split->add_option("--corpus", corpus_path, "Corpus JSONL");
  split->add_option("--out", common.out, "Output corpus JSONL");
  split->add_option("--seed", seed, "Random seed");
  split->add_option("--train", train_ratio);
  split->add_option("--dev", dev_ratio);
  split->add_option("--test", test_ratio);

  // profile build / match
  std::string split_name;
  std::string profiles_path;
  CLI::App* profile = app.add_subcommand("profile", "Linguistic level profiles");
  profile->require_subcommand(1);
  CLI::App* profile_build = profile->add_subcommand("build", "Build level profiles");
  profile_build->add_option("--corpus", corpus_path, "Corpus JSONL");
  profile_build->add_option("--out", common.out, "Profile JSON");
  profile_build->add_option("--split", split_name, "Restrict to one split");
  CLI::App* profile_match =
      profile->add_subcommand("match", "Assign nearest levels and report agreement");
  profile_match->add_option("--corpus", corpus_path, "Corpus JSONL");
  profile_match->add_option("--profiles", profiles_path, "Profile JSON");
  add_common(profile_match, true);

  // generate
  std::string bank_path, plan_path, guidelines_path, summary_path;
  int threads = 0;
  GatewayOptions gateway;
  CLI::App* generate = app.add_subcommand("generate", "Generate a synthetic corpus");
  generate->add_option("--bank", bank_path, "Prompt bank JSON");
  generate->add_option("--plan", plan_path, "Per-level quota JSON");
  generate->add_option("--guidelines", guidelines_path, "CEFR guideline text");
  generate->add_option("--profiles", profiles_path, "Level profile JSON");
  generate->add_option("--out", common.out, "Output corpus JSONL");
  generate->add_option("--summary", summary_path, "Summary JSON");
  generate->add_option("--seed", seed, "Random seed");
  generate->add_option("--threads", threads, "Worker threads (0: gateway limit)");
  gateway.Register(generate);

  // errors train
  std::string models_dir;
  double smoothing = 0.1;
  CLI::App* errors = app.add_subcommand("errors", "Error models");
  errors->require_subcommand(1);
  CLI::App* errors_train =
      errors->add_subcommand("train", "Train error models and level error profiles");
  errors_train->add_option("--corpus", corpus_path, "Paired corpus JSONL");
  errors_train->add_option("--models", models_dir, "Output model directory");
  errors_train->add_option("--profiles-out", profiles_path,
                           "Error profile JSON (default: <models>/error_profiles.json)");
  errors_train->add_option("--smoothing", smoothing, "Additive smoothing");
  errors_train->add_option("--split", split_name, "Restrict to one split");

  // inject
  std::string path_name = "controlled";
  std::string audit_path, instructions_path, classifier_path;
  int max_errors = -1;
  bool sample = false;
  CLI::App* inject = app.add_subcommand("inject", "Inject learner errors");
  inject->add_option("--corpus", corpus_path, "Clean corpus JSONL");
  inject->add_option("--profiles", profiles_path, "Error profile JSON");
  inject->add_option("--path", path_name, "controlled or llm");
  inject->add_option("--models", models_dir, "Model directory (controlled path)");
  inject->add_option("--classifier-file", classifier_path,
                     "Precomputed classifier JSONL instead of the native model");
  inject->add_option("--instructions", instructions_path,
                     "Error-instruction repository JSON");
  inject->add_option("--seed", seed, "Random seed");
  inject->add_option("--out", common.out, "Output corpus JSONL");
  inject->add_option("--audit", audit_path, "Audit JSONL");
  inject->add_option("--max-errors", max_errors, "Cap per essay");
  inject->add_flag("--sample", sample, "Sample realizations instead of argmax");
  inject->add_option("--threads", threads, "Worker threads");
  gateway.Register(inject);

  // verify
  std::string original_path, injected_path;
  double threshold = 0.8;
  CLI::App* verify = app.add_subcommand("verify", "Check injected tag distributions");
  verify->add_option("--original", original_path, "Clean corpus JSONL");
  verify->add_option("--injected", injected_path, "Injected corpus JSONL");
  verify->add_option("--profiles", profiles_path, "Error profile JSON");
  verify->add_option("--threshold", threshold, "Per-essay similarity threshold");
  add_common(verify, true);

  // evaluate
  std::string predictions_path, baseline_path, save_predictions;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score CEFR predictions");
  evaluate->add_option("--corpus", corpus_path, "Gold corpus JSONL");
  evaluate->add_option("--predictions", predictions_path, "Predictions JSONL");
  evaluate->add_option("--baseline-profiles", baseline_path,
                       "Score with the nearest-profile baseline instead");
  evaluate->add_option("--save-predictions", save_predictions,
                       "Write the scored predictions here");
  evaluate->add_option("--split", split_name, "Evaluate one split only");
  add_common(evaluate, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    ctx.out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    ctx.out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    ctx.out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    ctx.err << "error: usage: " << e.what() << "\n" << app.help();
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  CLI::App* leaf = sub;
  ctx.command = sub->get_name();
  if (!sub->get_subcommands().empty()) {
    leaf = sub->get_subcommands().front();
    ctx.command += " " + leaf->get_name();
  }
  if (!config_path.empty()) {
    ctx.inputs.push_back(config_path);
    nlohmann::json config;
    try {
      config = nlohmann::json::parse(ReadFile(config_path));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("config {}: {}", config_path, e.what()));
    }
    if (!config.is_object()) {
      throw Error(ErrorCode::kSchema, "config must be a flat JSON object");
    }
    ApplyConfig(leaf, config, ctx);
  }
  const Format format = ParseFormat(common.format);

  if (leaf == stats) {
    Require(stats, {"corpus"});
    const LevelCounts counts = CountLevels(ReadCorpus(ctx, corpus_path));
    Emit(ctx, common.out, format, StatsJson(counts), StatsTable(counts));
    return 0;
  }

  if (leaf == split) {
    Require(split, {"corpus", "out", "seed"});
    ctx.seed = seed;
    const Corpus corpus = ReadCorpus(ctx, corpus_path);
    const Corpus labeled = SplitCorpus(corpus, {train_ratio, dev_ratio, test_ratio}, seed);
    ctx.outputs.Write(common.out, SerializeCorpus(labeled));
    WriteManifest(ctx, common.out);
    std::map<Split, int64_t> sizes;
    for (const Essay& e : labeled.essays()) ++sizes[*e.split];
    ctx.out << fmt::format("train {} dev {} test {}\n", sizes[Split::kTrain],
                           sizes[Split::kDev], sizes[Split::kTest]);
    return 0;
  }

  if (leaf == profile_build) {
    Require(profile_build, {"corpus", "out"});
    const Corpus corpus =
        FilterSplit(ReadCorpus(ctx, corpus_path), SplitOption(split_name));
    const std::vector<LevelProfile> profiles = BuildLevelProfiles(corpus);
    if (profiles.empty()) {
      throw Error(ErrorCode::kNotFound, "corpus has no essays with a level");
    }
    ctx.outputs.Write(common.out, SerializeProfiles(profiles));
    WriteManifest(ctx, common.out);
    for (const LevelProfile& p : profiles) {
      ctx.out << fmt::format("{} {} essays\n", LevelName(p.level), p.support);
    }
    return 0;
  }

  if (leaf == profile_match) {
    Require(profile_match, {"corpus", "profiles"});
    const Corpus corpus = ReadCorpus(ctx, corpus_path);
    ctx.inputs.push_back(profiles_path);
    const std::vector<LevelProfile> profiles = LoadProfiles(profiles_path);
    const QualityGateReport report = QualityGate(corpus, profiles);
    std::string table = fmt::format("{:<8} {:>6} {:>10}\n", "Level", "n", "agreement");
    for (const auto& [level, value] : report.per_level_agreement) {
      table += fmt::format("{:<8} {:>6} {:>10.4f}\n", LevelName(level),
                           report.per_level_count.at(level), value);
    }
    table += fmt::format("{:<8} {:>6} {:>10.4f}\n", "all", report.ids.size(),
                         report.agreement);
    Emit(ctx, common.out, format, SerializeQualityGate(report), table);
    return 0;
  }

  if (leaf == generate) {
    Require(generate, {"bank", "plan", "guidelines", "out"});
    ctx.seed = seed;
    ctx.inputs.insert(ctx.inputs.end(), {bank_path, plan_path, guidelines_path});
    const PromptBank bank = LoadPromptBank(bank_path);
    const GenerationPlan plan = LoadPlan(plan_path);
    GenerationOptions options;
    options.guidelines = ReadFile(guidelines_path);
    options.seed = seed;
    options.max_concurrency = threads;
    options.model_id = gateway.model;
    if (!profiles_path.empty()) {
      ctx.inputs.push_back(profiles_path);
      options.profiles = LoadProfiles(profiles_path);
    }
    std::unique_ptr<ChatClient> client;
    if (gateway.mock) {
      client = std::make_unique<MockChatClient>(seed, std::max(1, gateway.max_concurrency));
    } else {
      client = std::make_unique<HttpChatClient>(gateway.Config());
    }
    const GenerationResult result = GenerateCorpus(bank, plan, *client, options);
    for (const std::string& warning : result.summary.warnings) {
      ctx.err << "warning: " << warning << "\n";
    }
    ctx.outputs.Write(common.out, SerializeCorpus(result.corpus));
    if (!summary_path.empty()) {
      ctx.outputs.Write(summary_path, SerializeGenerationSummary(result.summary));
    }
    WriteManifest(ctx, common.out);
    ctx.out << fmt::format("generated {} of {} planned essays ({} failed, {} exact "
                           "duplicates)\n",
                           result.corpus.size(), plan.Total(),
                           result.summary.failures.size(),
                           result.summary.exact_duplicates);
    return 0;
  }

  if (leaf == errors_train) {
    Require(errors_train, {"corpus", "models"});
    const Corpus corpus = ReadCorpus(ctx, corpus_path);
    std::vector<AlignedPair> pairs = AlignCorpusPairs(corpus);
    if (const auto only = SplitOption(split_name)) {
      std::erase_if(pairs, [&](const AlignedPair& p) {
        return p.erroneous->split != only;
      });
    }
    if (pairs.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "corpus has no erroneous essays paired with corrections");
    }
    const std::vector<Transformation> transformations = ExtractTransformations(pairs);
    const ErrorTypeModel type_model =
        ErrorTypeModel::Train(transformations, CountCleanWords(pairs), smoothing);
    const RealizationModel realization = RealizationModel::Train(transformations);
    const std::vector<ErrorProfile> profiles = BuildErrorProfiles(TagCorpus(pairs));
    const fs::path dir(models_dir);
    const fs::path profile_out =
        profiles_path.empty() ? dir / "error_profiles.json" : fs::path(profiles_path);
    ctx.outputs.Write(dir / "error_type_model.json", type_model.Serialize());
    ctx.outputs.Write(dir / "realization_model.json", realization.Serialize());
    ctx.outputs.Write(profile_out, SerializeErrorProfiles(profiles));
    WriteManifest(ctx, dir / "models");
    ctx.out << fmt::format("{} pairs, {} transformations, {} tags, {} level "
                           "profiles\n",
                           pairs.size(), transformations.size(),
                           realization.Tags().size(), profiles.size());
    return 0;
  }

  if (leaf == inject) {
    Require(inject, {"corpus", "profiles", "seed", "out"});
    ctx.seed = seed;
    const Corpus corpus = ReadCorpus(ctx, corpus_path);
    ctx.inputs.push_back(profiles_path);
    const std::vector<ErrorProfile> profiles = LoadErrorProfiles(profiles_path);
    InjectionRunOptions options;
    options.path = ParseInjectionPath(path_name);
    options.seed = seed;
    if (max_errors >= 0) options.max_errors = max_errors;
    options.mode = sample ? RealizeMode::kSample : RealizeMode::kMostProbable;
    options.max_concurrency = threads > 0 ? threads : 1;
    InstructionRepository repository = InstructionRepository::Default();
    if (!instructions_path.empty()) {
      ctx.inputs.push_back(instructions_path);
      repository = InstructionRepository::Load(instructions_path);
    }
    std::optional<ErrorTypeModel> type_model;
    std::optional<RealizationModel> realization;
    std::unique_ptr<ErrorClassifier> classifier;
    std::unique_ptr<ChatClient> client;
    if (options.path == InjectionPath::kControlled) {
      Require(inject, {"models"});
      const fs::path dir(models_dir);
      ctx.inputs.push_back(dir / "realization_model.json");
      realization = RealizationModel::Parse(ReadFile(dir / "realization_model.json"));
      if (!classifier_path.empty()) {
        ctx.inputs.push_back(classifier_path);
        classifier = std::make_unique<PrecomputedClassifier>(
            PrecomputedClassifier::Load(classifier_path));
      } else {
        ctx.inputs.push_back(dir / "error_type_model.json");
        type_model = ErrorTypeModel::Parse(ReadFile(dir / "error_type_model.json"));
        classifier = std::make_unique<NativeClassifier>(*type_model);
      }
    } else if (gateway.mock) {
      client = std::make_unique<LiteralInjectionClient>();
    } else {
      client = std::make_unique<HttpChatClient>(gateway.Config());
      if (threads <= 0) options.max_concurrency = gateway.max_concurrency;
    }
    const InjectionRun run =
        InjectCorpus(corpus, profiles, options, classifier.get(),
                     realization ? &*realization : nullptr, client.get(), repository);
    ctx.outputs.Write(common.out, SerializeCorpus(run.corpus));
    if (!audit_path.empty()) {
      ctx.outputs.Write(audit_path, SerializeInjectionRecords(run.records));
    }
    WriteManifest(ctx, common.out);
    int64_t spans = 0;
    int64_t partial = 0;
    for (const InjectionRecord& r : run.records) {
      spans += static_cast<int64_t>(r.spans.size());
      partial += r.partial ? 1 : 0;
    }
    ctx.out << fmt::format("injected {} essays ({} errors, {} partial); skipped {} "
                           "without a level profile\n",
                           run.records.size(), spans, partial, run.skipped_ids.size());
    return 0;
  }

  if (leaf == verify) {
    Require(verify, {"original", "injected", "profiles"});
    const Corpus original = ReadCorpus(ctx, original_path);
    const Corpus injected = ReadCorpus(ctx, injected_path);
    ctx.inputs.push_back(profiles_path);
    const std::vector<ErrorProfile> profiles = LoadErrorProfiles(profiles_path);
    ordered_json root;
    root["version"] = "fidelity-report-v1";
    std::string table =
        fmt::format("{:<6} {:>6} {:>10} {:>8} {:>10} {:>8}\n", "Level", "n",
                    "aggregate", "TV", "mean", ">=thr");
    for (const ErrorProfile& profile : profiles) {
      FidelityReport report;
      try {
        report = VerifyInjection(original, injected, profile, threshold, profile.level);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kInvalidArgument &&
            std::string_view(e.what()).find("no injected essays") !=
                std::string_view::npos) {
          continue;
        }
        throw;
      }
      root[std::string(LevelName(profile.level))] =
          ordered_json::parse(SerializeFidelityReport(report));
      table += fmt::format("{:<6} {:>6} {:>10.4f} {:>8.4f} {:>10.4f} {:>8.4f}\n",
                           LevelName(profile.level), report.essays.size(),
                           report.aggregate_similarity, report.total_variation,
                           report.mean_similarity, report.fraction_above_threshold);
    }
    Emit(ctx, common.out, format, root.dump(2) + "\n", table);
    return 0;
  }

  if (leaf == evaluate) {
    Require(evaluate, {"corpus"});
    const Corpus corpus = ReadCorpus(ctx, corpus_path);
    const std::optional<Split> only = SplitOption(split_name);
    PredictionSet predictions;
    if (!predictions_path.empty()) {
      ctx.inputs.push_back(predictions_path);
      predictions = LoadPredictions(predictions_path, &corpus);
    } else if (!baseline_path.empty()) {
      ctx.inputs.push_back(baseline_path);
      const std::vector<LevelProfile> profiles = LoadProfiles(baseline_path);
      std::vector<std::string> degenerate;
      predictions = BaselineProfileScorer(FilterSplit(corpus, only), profiles, &degenerate);
      for (const std::string& id : degenerate) {
        ctx.err << "warning: essay '" << id
                << "' has a zero feature vector; predicted the majority band\n";
      }
    } else {
      throw Error(ErrorCode::kInvalidArgument,
                  "evaluate: give --predictions or --baseline-profiles");
    }
    if (!save_predictions.empty()) {
      ctx.outputs.Write(save_predictions, SerializePredictions(predictions));
    }
    std::vector<EvalReport> reports;
    reports.push_back(EvaluateAverageReference(predictions, corpus, only));
    bool all_triples = true;
    for (const Essay& e : corpus.essays()) {
      if ((!only || e.split == only) && !e.rater_triple) all_triples = false;
    }
    if (all_triples) {
      reports.push_back(EvaluateMultiReference(predictions, corpus, only));
    } else {
      ctx.err << "warning: multi-reference setting skipped; some essays lack a "
                 "rater triple\n";
    }
    Emit(ctx, common.out, format, SerializeReports(reports), FormatReportTable(reports));
    return 0;
  }

  throw Error(ErrorCode::kInvalidArgument, "no command given");
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Context ctx{out, err, {}, {}, {}, {}, {}, ordered_json::object(), {}};
  ctx.start = std::chrono::steady_clock::now();
  for (int i = 1; i < argc; ++i) ctx.args.emplace_back(argv[i]);
  try {
    return Dispatch(ctx, argc, argv);
  } catch (const Error& e) {
    ctx.outputs.RemoveAll();
    err << "error: " << ErrorCodeName(e.code()) << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    ctx.outputs.RemoveAll();
    err << "error: internal: " << e.what() << "\n";
  }
  return 1;
}

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  return Run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace cefrsynth
