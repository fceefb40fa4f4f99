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

#include <string>
#include <vector>

#include "cefrsynth/error.h"
#include "cefrsynth/random.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "test_util.h"

namespace cefrsynth {
namespace {

using ::cefrsynth::testing::BruteForceMacroMetrics;
using ::cefrsynth::testing::BruteForceQwk;
using ::cefrsynth::testing::MakeEssay;
using ::cefrsynth::testing::MakeRatedEssay;
using L = CefrLevel;

TEST(QwkTest, PerfectAgreement) {
  const std::vector<int> x = {0, 1, 2, 2, 5, 3};
  EXPECT_DOUBLE_EQ(Qwk(x, x, 6), 1.0);
}

TEST(QwkTest, TwoLabelReversal) {
  // Hand computation: observed weight 2, expected weight 1, so 1 - 2/1.
  EXPECT_DOUBLE_EQ(Qwk(std::vector<int>{0, 1}, std::vector<int>{1, 0}, 2), -1.0);
}

TEST(QwkTest, DegenerateMarginals) {
  const std::vector<int> same = {2, 2, 2};
  EXPECT_DOUBLE_EQ(Qwk(same, same, 6), 1.0);
  EXPECT_DOUBLE_EQ(Qwk(std::vector<int>{4}, std::vector<int>{1}, 6), 0.0);
  EXPECT_THROW(Qwk(std::vector<int>{0, 7}, std::vector<int>{0, 1}, 6), Error);
  EXPECT_THROW(Qwk(std::vector<int>{0}, std::vector<int>{0, 1}, 6), Error);
}

TEST(QwkTest, MatchesPairwiseOracleAndIsSymmetric) {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.UniformInt(5));
    const size_t n = 1 + rng.UniformInt(50);
    std::vector<int> p(n), g(n);
    for (size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng.UniformInt(static_cast<uint64_t>(k)));
      g[i] = static_cast<int>(rng.UniformInt(static_cast<uint64_t>(k)));
    }
    EXPECT_NEAR(Qwk(p, g, k), BruteForceQwk(p, g), 1e-12);
    EXPECT_NEAR(Qwk(p, g, k), Qwk(g, p, k), 1e-12);
    if (std::set<int>(p.begin(), p.end()).size() > 1) {
      EXPECT_DOUBLE_EQ(Qwk(p, p, k), 1.0);
    }
  }
}

TEST(MacroMetricsTest, Perfect) {
  const std::vector<int> x = {0, 1, 2, 1};
  const MacroMetrics m = ComputeMacroMetrics(x, x, 3);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
}

TEST(MacroMetricsTest, OneClassPredictions) {
  const MacroMetrics m = ComputeMacroMetrics(std::vector<int>{0, 0, 0, 0},
                                             std::vector<int>{0, 0, 1, 1}, 2);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m.precision, 0.25);  // (0.5 + 0) / 2
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
}

TEST(MacroMetricsTest, ThreeClassFixtureMatchesOracle) {
  const std::vector<int> p = {0, 1, 2, 2, 1, 0, 2, 1, 1};
  const std::vector<int> g = {0, 1, 1, 2, 2, 0, 2, 0, 1};
  const MacroMetrics m = ComputeMacroMetrics(p, g, 3);
  const auto oracle = BruteForceMacroMetrics(p, g);
  EXPECT_NEAR(m.accuracy, oracle.accuracy, 1e-12);
  EXPECT_NEAR(m.precision, oracle.precision, 1e-12);
  EXPECT_NEAR(m.recall, oracle.recall, 1e-12);
  EXPECT_NEAR(m.f1, oracle.f1, 1e-12);
  int64_t total = 0;
  for (const auto& row : m.confusion) {
    for (int64_t c : row) total += c;
  }
  EXPECT_EQ(total, static_cast<int64_t>(p.size()));
  EXPECT_EQ(m.confusion[1][2], 1);  // gold 1 predicted 2
}

TEST(PredictionSetTest, RejectsDuplicatesAndUnassessable) {
  PredictionSet set;
  set.Add("a", L::kB1);
  EXPECT_EQ(set.Find("a"), L::kB1);
  EXPECT_EQ(set.Find("b"), std::nullopt);
  try {
    set.Add("a", L::kB2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateId);
  }
  EXPECT_THROW(set.Add("c", L::kUnassessable), Error);
}

PredictionSet Predict(const std::vector<std::pair<std::string, L>>& rows) {
  PredictionSet set("test");
  for (const auto& [id, level] : rows) set.Add(id, level);
  return set;
}

TEST(AverageReferenceTest, PerfectPredictions) {
  const Corpus corpus({MakeRatedEssay("a", "x", {L::kB1, L::kB1, L::kB2}),
                       MakeRatedEssay("b", "x", {L::kB1, L::kB2, L::kB2}),
                       MakeEssay("c", "x", L::kC1)});
  const EvalReport r = EvaluateAverageReference(
      Predict({{"a", L::kB1}, {"b", L::kB2}, {"c", L::kC1}}), corpus);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.qwk, 1.0);
  EXPECT_EQ(r.n, 3);
}

TEST(AverageReferenceTest, UnassessableIsForcedMiss) {
  std::vector<Essay> essays;
  std::vector<std::pair<std::string, L>> preds;
  for (int i = 0; i < 9; ++i) {
    const L level = kAssessableLevels[static_cast<size_t>(i % 6)];
    essays.push_back(MakeEssay("e" + std::to_string(i), "x", level));
    preds.emplace_back("e" + std::to_string(i), level);
  }
  essays.push_back(MakeRatedEssay("u", "x", {L::kB1, L::kUnassessable, L::kB1}));
  preds.emplace_back("u", L::kB1);
  const EvalReport r = EvaluateAverageReference(Predict(preds), Corpus(essays));
  EXPECT_DOUBLE_EQ(r.accuracy, 0.9);
  EXPECT_EQ(r.unassessable, 1);
  EXPECT_EQ(r.qwk_n, 9);
  EXPECT_DOUBLE_EQ(r.qwk, 1.0);
  EXPECT_EQ(r.confusion[6][2], 1);
}

TEST(AverageReferenceTest, GoldIsHandRoundedAverage) {
  // (A2,B1,B1) 2.67->3, (B2,C1,C1) 4.67->5, (A1,A2,B1) 2->2, (B1,B2,C1) 4->4.
  const Corpus corpus({MakeRatedEssay("a", "x", {L::kA2, L::kB1, L::kB1}),
                       MakeRatedEssay("b", "x", {L::kB2, L::kC1, L::kC1}),
                       MakeRatedEssay("c", "x", {L::kA1, L::kA2, L::kB1}),
                       MakeRatedEssay("d", "x", {L::kB1, L::kB2, L::kC1})});
  const EvalReport r = EvaluateAverageReference(
      Predict({{"a", L::kB1}, {"b", L::kC1}, {"c", L::kA2}, {"d", L::kB2}}),
      corpus);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
}

TEST(AverageReferenceTest, MissingPredictionAndSplitFilter) {
  Essay a = MakeEssay("a", "x", L::kB1);
  a.split = Split::kTest;
  Essay b = MakeEssay("b", "x", L::kB2);
  b.split = Split::kTrain;
  const Corpus corpus({a, b});
  try {
    EvaluateAverageReference(Predict({{"a", L::kB1}}), corpus);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
  EXPECT_EQ(EvaluateAverageReference(Predict({{"a", L::kB1}}), corpus, Split::kTest).n, 1);
}

TEST(MultiReferenceTest, AnyMemberCounts) {
  const Corpus corpus({MakeRatedEssay("a", "x", {L::kB1, L::kB2, L::kC1})});
  for (L p : {L::kB1, L::kB2, L::kC1}) {
    EXPECT_DOUBLE_EQ(EvaluateMultiReference(Predict({{"a", p}}), corpus).accuracy, 1.0);
  }
}

TEST(MultiReferenceTest, NearestMemberOutsideRange) {
  EXPECT_EQ(EffectiveGold({L::kB1, L::kB2, L::kC1}, L::kC2), L::kC1);
  EXPECT_EQ(EffectiveGold({L::kB1, L::kB2, L::kC1}, L::kA1), L::kB1);
  // Equidistant members resolve to the lower band.
  EXPECT_EQ(EffectiveGold({L::kA2, L::kA2, L::kB2}, L::kB1), L::kA2);
}

TEST(MultiReferenceTest, DominatesAverageReference) {
  // Triple (B1,B2,C1): both settings accept B2. Triple (B1,B2,B2): only the
  // flexible setting accepts B1.
  const Corpus corpus({MakeRatedEssay("a", "x", {L::kB1, L::kB2, L::kC1}),
                       MakeRatedEssay("b", "x", {L::kB1, L::kB2, L::kB2})});
  const PredictionSet preds = Predict({{"a", L::kB2}, {"b", L::kB1}});
  const EvalReport avg = EvaluateAverageReference(preds, corpus);
  const EvalReport multi = EvaluateMultiReference(preds, corpus);
  EXPECT_DOUBLE_EQ(avg.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(multi.accuracy, 1.0);
  EXPECT_EQ(multi.rule, kMultiReferenceRule);
}

TEST(MultiReferenceTest, RequiresTriples) {
  const Corpus corpus({MakeEssay("a", "x", L::kB1)});
  EXPECT_THROW(EvaluateMultiReference(Predict({{"a", L::kB1}}), corpus), Error);
}

TEST(MultiReferenceTest, ConfusionTotalsEqualN) {
  Rng rng(8);
  std::vector<Essay> essays;
  PredictionSet preds;
  for (int i = 0; i < 40; ++i) {
    RaterTriple t;
    for (L& m : t) m = kAssessableLevels[rng.UniformInt(6)];
    essays.push_back(MakeRatedEssay("e" + std::to_string(i), "x", t));
    preds.Add("e" + std::to_string(i), kAssessableLevels[rng.UniformInt(6)]);
  }
  const Corpus corpus(essays);
  for (const EvalReport& r : {EvaluateAverageReference(preds, corpus),
                              EvaluateMultiReference(preds, corpus)}) {
    int64_t total = 0;
    for (const auto& row : r.confusion) {
      for (int64_t c : row) total += c;
    }
    EXPECT_EQ(total, r.n);
  }
}

TEST(BaselineScorerTest, EssaysEqualToProfilesArePerfect) {
  const std::vector<std::string> texts = {
      "أنا طالب.",
      "أحب المدرسة كثيرا لأن المعلم لطيف. أدرس كل يوم.",
      "على الرغم من أن التعليم مهم، فإن كثيرا من الطلاب يعتقدون أن المدرسة "
      "ليست المكان الوحيد الذي يتعلم فيه الإنسان، حيث إن التجربة تعلمنا أيضا."};
  std::vector<Essay> essays;
  for (size_t i = 0; i < texts.size(); ++i) {
    essays.push_back(MakeEssay("e" + std::to_string(i), texts[i],
                               kAssessableLevels[i * 2]));
  }
  const Corpus corpus(essays);
  const std::vector<LevelProfile> profiles = BuildLevelProfiles(corpus);
  const PredictionSet preds = BaselineProfileScorer(corpus, profiles);
  EXPECT_DOUBLE_EQ(EvaluateAverageReference(preds, corpus).accuracy, 1.0);
  EXPECT_EQ(SerializePredictions(BaselineProfileScorer(corpus, profiles)),
            SerializePredictions(preds));
  EXPECT_EQ(BaselineProfileScorer(Corpus(), profiles).size(), 0u);
}

TEST(ParsePredictionsTest, WellFormed) {
  const Corpus corpus({MakeEssay("a", "x"), MakeEssay("b", "x")});
  const PredictionSet set = ParsePredictions(
      "{\"id\":\"a\",\"band\":\"B1\"}\n{\"id\":\"b\",\"band\":\"C2\"}\n", &corpus);
  EXPECT_EQ(set.size(), 2u);
  EXPECT_EQ(ParsePredictions(SerializePredictions(set)).entries().size(), 2u);
}

TEST(ParsePredictionsTest, UnknownBand) {
  try {
    ParsePredictions(R"({"id":"a","band":"B3"})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchema);
  }
}

TEST(ParsePredictionsTest, UnknownIdIsNamed) {
  const Corpus corpus({MakeEssay("a", "x")});
  try {
    ParsePredictions(R"({"id":"zz9","band":"B1"})", &corpus);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    EXPECT_NE(std::string(e.what()).find("zz9"), std::string::npos);
  }
}

TEST(ReportTest, SerializesScaledQwk) {
  const Corpus corpus({MakeEssay("a", "x", L::kB1), MakeEssay("b", "x", L::kB2)});
  const EvalReport r =
      EvaluateAverageReference(Predict({{"a", L::kB1}, {"b", L::kB2}}), corpus);
  const std::string json = SerializeReports(std::vector<EvalReport>{r});
  EXPECT_NE(json.find("\"qwk_x100\": 100.0"), std::string::npos) << json;
  EXPECT_NE(FormatReportTable(std::vector<EvalReport>{r}).find("100.00"),
            std::string::npos);
}

}  // namespace
}  // namespace cefrsynth
