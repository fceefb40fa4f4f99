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

#include "cefrsynth/mock_llm.h"

#include <algorithm>
#include <cmath>

#include "cefrsynth/error.h"
#include "cefrsynth/random.h"
#include "cefrsynth/utf8.h"
#include "fmt/format.h"

namespace cefrsynth {

namespace {

// Mean words per essay and per sentence of the reference generated corpus.
constexpr MockLevelTarget kTargets[] = {
    {39367.0 / 470.0, 6.08},    {54980.0 / 470.0, 10.46},
    {100185.0 / 530.0, 14.62},  {127029.0 / 530.0, 17.32},
    {136849.0 / 520.0, 19.05},  {146253.0 / 520.0, 19.57},
};

constexpr double kLengthSpread = 0.15;
constexpr double kSentenceSpread = 0.3;

// Fraction of the word list available to each level.
constexpr double kWindow[] = {0.3, 0.45, 0.6, 0.75, 0.9, 1.0};

// Chance that a sentence opens a subordinate clause.
constexpr double kSubordination[] = {0.02, 0.1, 0.2, 0.3, 0.4, 0.45};

size_t LevelIndex(CefrLevel level) {
  if (!IsAssessable(level)) {
    throw Error(ErrorCode::kInvalidArgument, "mock needs an assessable level");
  }
  return static_cast<size_t>(level);
}

}  // namespace

const MockTemplateBank& MockTemplateBank::Default() {
  static const auto* const kBank = new MockTemplateBank{
      {
          // Everyday vocabulary.
          "أنا", "أحب", "مدرسة", "بيت", "يوم", "أمي", "أبي", "أخي", "صديقة",
          "غرفة", "كبير", "صغير", "جميل", "كتاب", "في", "إلى", "من", "على",
          "مع", "هذا", "هذه", "كل", "الصباح", "المساء", "أذهب", "ألعب",
          "أكتب", "أقرأ", "طعام", "ماء", "سيارة", "حديقة", "عائلة", "سعيد",
          "جديد", "كثيرا", "أيضا", "اليوم", "الكرة", "رياضة", "أصدقاء",
          "ذهبوا", "لعبوا", "كتبوا", "يومي", "الأسرة", "مدينة", "طاولة",
          "قصة", "ساعة", "سنة", "جامعة", "أستاذ", "طالب", "معلم", "بحر",
          // Intermediate vocabulary.
          "رحلة", "تجربة", "دراسة", "مشكلة", "فرصة", "طريقة", "فكرة",
          "مكتبة", "لغة", "ثقافة", "صحة", "بيئة", "حياة", "مهارة", "خبرة",
          "أعتقد", "أفضل", "أكثر", "أهمية", "الإنسان", "الأطفال", "أسبوع",
          "درسوا", "سافروا", "تعلموا", "شاركوا", "قالوا", "عملوا", "المدرسي",
          "الدراسي", "العربي", "الثاني", "مستقبلي", "التعليم", "المجتمع",
          "الوطن", "العالم", "الناس", "الشباب", "الإنترنت", "الهاتف",
          "يساعد", "نحتاج", "نستطيع", "يمكن", "يجب", "مفيد", "صعب", "سهل",
          "ممتع", "ضروري", "واضح", "متنوع", "حديث", "تقليدي",
          // Advanced vocabulary.
          "مسؤولية", "حرية", "معرفة", "مرحلة", "حكومة", "سياسة", "الاقتصاد",
          "المستقبل", "التاريخ", "التقاليد", "التلوث", "الطاقة", "الحقيقي",
          "اجتماعي", "اقتصادي", "سياسي", "يعتبر", "يؤثر", "يساهم", "يتطلب",
          "التكنولوجيا", "الاستدامة", "المواطنة", "الديمقراطية", "التنمية",
          "الابتكار", "الإبداع", "التحديات", "الاستراتيجية", "المؤسسات",
          "الإصلاح", "الهوية", "التنوع", "الازدهار", "المساواة", "العدالة",
          "الاستثمار", "المنظمة", "البنية", "الجودة", "الكفاءة", "المعايير",
          "الإنتاجية", "المنهجية", "الموضوعية", "الشفافية", "المشاركة",
          "الاستقلالية", "الإيجابية", "المرونة",
      },
      {"أن", "لأن", "عندما", "حيث", "إذا", "الذي", "التي", "بينما", "حتى"},
      {"و", "ثم", "لكن", "أو"},
  };
  return *kBank;
}

MockLevelTarget MockTarget(CefrLevel level) { return kTargets[LevelIndex(level)]; }

std::pair<int, int> MockWordBand(CefrLevel level) {
  const double mean = MockTarget(level).mean_words;
  return {static_cast<int>(std::floor(mean * (1.0 - kLengthSpread))),
          static_cast<int>(std::ceil(mean * (1.0 + kLengthSpread)))};
}

namespace {

std::string_view LineAfter(std::string_view text, std::string_view marker) {
  const size_t at = text.find(marker);
  if (at == std::string_view::npos) return {};
  std::string_view rest = text.substr(at + marker.size());
  const size_t eol = rest.find('\n');
  if (eol != std::string_view::npos) rest = rest.substr(0, eol);
  return utf8::TrimWhitespace(rest);
}

}  // namespace

std::optional<CefrLevel> FindLevelMarker(std::string_view text) {
  const std::string_view line = LineAfter(text, "Target CEFR level:");
  if (line.size() < 2) return std::nullopt;
  const auto level = TryParseLevel(line.substr(0, 2));
  if (!level || !IsAssessable(*level)) return std::nullopt;
  return level;
}

std::optional<std::string> FindTopicMarker(std::string_view text) {
  const std::string_view line = LineAfter(text, "Topic:");
  if (line.empty()) return std::nullopt;
  return std::string(line);
}

MockChatClient::MockChatClient(uint64_t seed, int max_concurrency,
                               MockTemplateBank bank)
    : seed_(seed), max_concurrency_(max_concurrency), bank_(std::move(bank)) {
  if (bank_.words.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "mock template bank is empty");
  }
  if (max_concurrency_ < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_concurrency must be >= 1");
  }
}

ChatResponse MockChatClient::Complete(const ChatRequest& request) {
  request.Validate();
  std::optional<CefrLevel> level = FindLevelMarker(request.user_message);
  if (!level) level = FindLevelMarker(request.system_message);
  if (!level) {
    throw Error(ErrorCode::kInvalidArgument,
                "mock request lacks a 'Target CEFR level:' marker");
  }
  const size_t li = LevelIndex(*level);
  const uint64_t seed = request.seed.value_or(seed_);
  Rng rng(DeriveSeed(seed, request.system_message + "\x1f" + request.user_message));

  const MockLevelTarget target = kTargets[li];
  const auto [lo, hi] = MockWordBand(*level);
  int n_words = static_cast<int>(std::lround(
      target.mean_words * (1.0 + kLengthSpread * (2.0 * rng.Uniform() - 1.0))));
  n_words = std::clamp(n_words, lo, hi);

  const size_t window = std::max<size_t>(
      1, static_cast<size_t>(std::ceil(kWindow[li] *
                                       static_cast<double>(bank_.words.size()))));
  auto pick = [&](const std::vector<std::string>& list, size_t limit) {
    return list[rng.UniformInt(std::min(limit, list.size()))];
  };

  std::string text;
  int written = 0;
  while (written < n_words) {
    int sentence = static_cast<int>(std::lround(
        target.mean_sentence_words *
        (1.0 + kSentenceSpread * (2.0 * rng.Uniform() - 1.0))));
    sentence = std::clamp(sentence, 2, n_words - written);
    if (n_words - written - sentence < 2) sentence = n_words - written;
    const bool subordinate = !bank_.subordinators.empty() && sentence >= 4 &&
                             rng.Uniform() < kSubordination[li];
    const size_t clause_at =
        subordinate ? 1 + rng.UniformInt(static_cast<uint64_t>(sentence - 2)) : 0;
    for (int k = 0; k < sentence; ++k) {
      if (!text.empty()) text += ' ';
      if (subordinate && static_cast<size_t>(k) == clause_at) {
        text += pick(bank_.subordinators, bank_.subordinators.size());
      } else if (k > 0 && !bank_.connectors.empty() && rng.Uniform() < 0.05) {
        text += pick(bank_.connectors, bank_.connectors.size());
      } else {
        text += pick(bank_.words, window);
      }
    }
    text += '.';
    written += sentence;
  }

  ChatResponse response;
  response.text = std::move(text);
  response.usage.prompt_tokens = static_cast<int64_t>(
      (request.system_message.size() + request.user_message.size()) / 4);
  response.usage.completion_tokens = n_words;
  response.usage.total_tokens =
      response.usage.prompt_tokens + response.usage.completion_tokens;
  return response;
}

}  // namespace cefrsynth
