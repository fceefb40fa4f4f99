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

#include <map>
#include <string>
#include <vector>

#include "cefrsynth/error.h"
#include "cefrsynth/text.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "test_util.h"

namespace cefrsynth {
namespace {

using ::cefrsynth::testing::BruteForceRatios;
using ::cefrsynth::testing::FixtureLexicon;
using ::cefrsynth::testing::MakeEssay;
using ::std::string;
using ::std::vector;

ErrorTag T(const char* name) { return ErrorTag::Parse(name); }

Transformation Tr(string source, string target, const char* tag) {
  return {std::move(source), std::move(target), T(tag)};
}

string TagOf(const string& correct, const string& erroneous) {
  return TagWordPair(correct, erroneous).Key();
}

// Pair of essays whose erroneous copy points back at the correct one.
Corpus Pair(const string& correct, const string& erroneous,
            std::optional<CefrLevel> level = CefrLevel::kB1) {
  Essay c = MakeEssay("c", correct, level);
  Essay e = MakeEssay("e", erroneous, level);
  e.paired_id = "c";
  return Corpus({c, e});
}

TEST(AlignPairTest, IdenticalSequencesCostNothing) {
  const vector<string> tokens = Tokenize("ذهبت إلى المدرسة.");
  const vector<AlignedSpan> spans = AlignPair(tokens, tokens);
  ASSERT_EQ(spans.size(), tokens.size());
  for (const AlignedSpan& s : spans) {
    EXPECT_EQ(s.correct_len, 1u);
    EXPECT_EQ(s.erroneous_len, 1u);
    EXPECT_TRUE(s.IsIdentity());
  }
  EXPECT_EQ(AlignmentCost(spans), 0.0);
}

TEST(AlignPairTest, JoinedWordsFormTwoToOneSpan) {
  const vector<string> correct = {"دولة", "الإمارات"};
  const vector<string> erroneous = {"دولةالإمارات"};
  const vector<AlignedSpan> spans = AlignPair(correct, erroneous);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].correct_len, 2u);
  EXPECT_EQ(spans[0].erroneous_len, 1u);
  EXPECT_EQ(TagError(spans[0], correct, erroneous).Key(), "SPLIT");
}

TEST(AlignPairTest, DetachedPrefixFormsOneToTwoSpan) {
  const vector<string> correct = {"بالعلم"};
  const vector<string> erroneous = {"ب", "العلم"};
  const vector<AlignedSpan> spans = AlignPair(correct, erroneous);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].correct_len, 1u);
  EXPECT_EQ(spans[0].erroneous_len, 2u);
  EXPECT_EQ(TagError(spans[0], correct, erroneous).Key(), "MERGE");
}

TEST(AlignPairTest, InsertedAndMissingWords) {
  const vector<string> correct = Tokenize("ذهبت إلى البيت");
  const vector<string> extra = Tokenize("ذهبت في إلى البيت");
  vector<AlignedSpan> spans = AlignPair(correct, extra);
  ASSERT_EQ(spans.size(), 4u);
  EXPECT_EQ(spans[1].correct_len, 0u);
  EXPECT_EQ(TagError(spans[1], correct, extra).Key(), "DELETE");

  const vector<string> missing = Tokenize("ذهبت البيت");
  spans = AlignPair(correct, missing);
  ASSERT_EQ(spans.size(), 3u);
  EXPECT_EQ(spans[1].erroneous_len, 0u);
  EXPECT_EQ(TagError(spans[1], correct, missing).Key(), "XM");
}

TEST(AlignPairTest, CostZeroIffIdentical) {
  Rng rng(4);
  const vector<string>& lex = FixtureLexicon();
  for (int trial = 0; trial < 200; ++trial) {
    vector<string> a, b;
    const size_t n = 1 + rng.UniformInt(8);
    for (size_t i = 0; i < n; ++i) a.push_back(lex[rng.UniformInt(lex.size())]);
    b = a;
    if (rng.Uniform() < 0.5) {
      const size_t pos = rng.UniformInt(b.size());
      switch (rng.UniformInt(3)) {
        case 0:
          b[pos] += "ا";
          break;
        case 1:
          b.erase(b.begin() + static_cast<std::ptrdiff_t>(pos));
          break;
        default:
          b.insert(b.begin() + static_cast<std::ptrdiff_t>(pos), "و");
      }
    }
    EXPECT_EQ(AlignmentCost(AlignPair(a, b)) == 0.0, a == b);
  }
}

TEST(NormalizedCharDistanceTest, Bounds) {
  EXPECT_EQ(NormalizedCharDistance("كتاب", "كتاب"), 0.0);
  EXPECT_EQ(NormalizedCharDistance("", ""), 0.0);
  EXPECT_EQ(NormalizedCharDistance("ab", ""), 1.0);
  const double d = NormalizedCharDistance("غرفة", "غرفه");
  EXPECT_GT(d, 0.0);
  EXPECT_LT(d, 0.5);
}

TEST(TagWordPairTest, ReferenceExamples) {
  EXPECT_EQ(TagOf("غرفة", "غرفه"), "OT");
  EXPECT_EQ(TagOf("هذا", "هاذا"), "OD");
  EXPECT_EQ(TagOf("كتبوا", "كتبو"), "OW");
}

TEST(TagWordPairTest, OtherOrthographicClasses) {
  EXPECT_EQ(TagOf("أصدقاء", "اصدقاء"), "OH");
  EXPECT_EQ(TagOf("إلى", "الى"), "OH");
  EXPECT_EQ(TagOf("على", "علي"), "OA");
  EXPECT_EQ(TagOf("المدرسة", "المدرصة"), "OR");
  EXPECT_EQ(TagOf("مدرسة", "مدسة"), "OM");
  EXPECT_EQ(TagOf("المدرسة", "المدسرة"), "OC");
  EXPECT_EQ(TagOf("ذهبوا", "ذهبو"), "OW");
  EXPECT_EQ(TagOf("أكلة", "اكله"), "OH+OT");
  EXPECT_EQ(TagOf("،", "."), "P");
  EXPECT_EQ(TagOf("كتاب", "قلم"), "UNK");
  EXPECT_EQ(TagOf("كتاب", "،"), "UNK");
}

TEST(TagErrorTest, IdentitySpanIsRejected) {
  const vector<string> w = {"كتاب"};
  EXPECT_THROW(TagError(AlignPair(w, w)[0], w, w), Error);
}

TEST(ExtractTransformationsTest, IdenticalPairIsEmpty) {
  EXPECT_TRUE(ExtractTransformations(Pair("ذهبت إلى البيت.", "ذهبت إلى البيت.")).empty());
}

TEST(ExtractTransformationsTest, SingleEdit) {
  const vector<Transformation> ts =
      ExtractTransformations(Pair("هذه غرفة كبيرة.", "هذه غرفه كبيرة."));
  ASSERT_EQ(ts.size(), 1u);
  EXPECT_EQ(ts[0].source, "غرفة");
  EXPECT_EQ(ts[0].target, "غرفه");
  EXPECT_EQ(ts[0].tag.Key(), "OT");
}

TEST(ExtractTransformationsTest, FiveKnownEdits) {
  const string correct = "ذهبت إلى المدرسة مع أصدقائي هذا الصباح ثم كتبوا الدرس .";
  const string erroneous =
      "ذهبت إلى المدرسه مع اصدقائي هاذا الصباح في ثم كتبو الدرس .";
  vector<Transformation> ts = ExtractTransformations(Pair(correct, erroneous));
  std::multiset<std::tuple<string, string, string>> got;
  for (const Transformation& t : ts) {
    got.insert({t.source.value_or("<null>"), t.target.value_or("<null>"), t.tag.Key()});
  }
  const std::multiset<std::tuple<string, string, string>> expected = {
      {"المدرسة", "المدرسه", "OT"},
      {"أصدقائي", "اصدقائي", "OH"},
      {"هذا", "هاذا", "OD"},
      {"<null>", "في", "DELETE"},
      {"كتبوا", "كتبو", "OW"},
  };
  EXPECT_EQ(got, expected);
}

TEST(ExtractTransformationsTest, AnnotationsOverrideRules) {
  Corpus corpus = Pair("ذهب الولد", "ذهب الولدان");
  std::vector<Essay> essays = corpus.essays();
  essays[1].edit_tags = {{"الولد", "الولدان", "MI"}};
  const vector<Transformation> ts = ExtractTransformations(Corpus(essays));
  ASSERT_EQ(ts.size(), 1u);
  EXPECT_EQ(ts[0].tag.Key(), "MI");
}

TEST(ErrorTypeModelTest, CountRatio) {
  const vector<Transformation> ts(3, Tr("غرفة", "غرفه", "OT"));
  const ErrorTypeModel model = ErrorTypeModel::Train(ts, {{"غرفة", 1}}, 0.0);
  const TypeDistribution d = model.Predict("غرفة");
  EXPECT_DOUBLE_EQ(d.tags.at(T("OT")), 0.75);
  EXPECT_DOUBLE_EQ(d.no_error, 0.25);
  EXPECT_EQ(d.Argmax(), T("OT"));
}

TEST(ErrorTypeModelTest, UnseenWordBacksOff) {
  const vector<Transformation> ts = {Tr("غرفة", "غرفه", "OT"), Tr("هذا", "هاذا", "OD")};
  const ErrorTypeModel model = ErrorTypeModel::Train(ts, {{"كتاب", 6}});
  EXPECT_FALSE(model.Knows("سيارة"));
  const TypeDistribution d = model.Predict("سيارة");
  EXPECT_EQ(d.no_error, model.backoff().no_error);
  EXPECT_EQ(d.tags, model.backoff().tags);
  // (6 + 0.1) / (8 + 0.3)
  EXPECT_NEAR(d.no_error, 6.1 / 8.3, 1e-12);
}

TEST(ErrorTypeModelTest, AllCleanIsCertainNoError) {
  const ErrorTypeModel model = ErrorTypeModel::Train({}, {{"كتاب", 3}, {"بيت", 1}});
  for (const char* w : {"كتاب", "بيت", "مجهول"}) {
    EXPECT_DOUBLE_EQ(model.Predict(w).no_error, 1.0);
    EXPECT_FALSE(model.Predict(w).Argmax().has_value());
  }
  EXPECT_THROW(ErrorTypeModel::Train({}, {}), Error);
}

TEST(ErrorTypeModelTest, DistributionsSumToOneAndRoundTrip) {
  const vector<Transformation> ts = {
      Tr("غرفة", "غرفه", "OT"), Tr("غرفة", "غرفت", "OT"), Tr("هذا", "هاذا", "OD"),
      Tr("إلى", "الى", "OH"), {std::nullopt, "في", T("DELETE")}};
  const ErrorTypeModel model =
      ErrorTypeModel::Train(ts, {{"غرفة", 2}, {"إلى", 5}, {"بيت", 4}}, 0.3);
  const ErrorTypeModel parsed = ErrorTypeModel::Parse(model.Serialize());
  for (const char* w : {"غرفة", "هذا", "إلى", "بيت", "مجهول"}) {
    EXPECT_NEAR(model.Predict(w).Total(), 1.0, 1e-9) << w;
    EXPECT_EQ(parsed.Predict(w).tags, model.Predict(w).tags);
    EXPECT_EQ(parsed.Predict(w).no_error, model.Predict(w).no_error);
  }
  EXPECT_EQ(parsed.Serialize(), model.Serialize());
}

TEST(RealizationModelTest, ExactCountRatios) {
  const vector<Transformation> ts = {
      Tr("مدرسة", "مدرسه", "OT"), Tr("غرفة", "غرفه", "OT"),
      Tr("سيارة", "سياره", "OT"), Tr("ثقافة", "تقافه", "OT")};
  const RealizationModel model = RealizationModel::Train(ts);
  const auto& dist = model.Distribution(T("OT"));
  ASSERT_EQ(dist.size(), 2u);
  EXPECT_EQ(dist[0].pattern.Key(), "sub@end:ة>ه");
  EXPECT_DOUBLE_EQ(dist[0].probability, 0.75);
  EXPECT_EQ(dist[1].pattern.kind, RealizationPattern::Kind::kWordPair);
  EXPECT_DOUBLE_EQ(dist[1].probability, 0.25);
  EXPECT_EQ(model.TagCount(T("OT")), 4);
}

TEST(RealizationModelTest, SingleTransformationIsCertain) {
  const RealizationModel model =
      RealizationModel::Train(vector<Transformation>{Tr("هذا", "هاذا", "OD")});
  EXPECT_DOUBLE_EQ(model.Distribution(T("OD"))[0].probability, 1.0);
}

TEST(RealizationModelTest, UnseenTagHasNoDistribution) {
  const RealizationModel model =
      RealizationModel::Train(vector<Transformation>{Tr("هذا", "هاذا", "OD")});
  try {
    model.Distribution(T("OT"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
  EXPECT_FALSE(model.HasTag(T("OT")));
  EXPECT_THROW(RealizationModel::Train(vector<Transformation>{}), Error);
}

TEST(RealizationModelTest, MatchesBruteForceCounter) {
  Rng rng(31);
  const vector<Transformation> pool = {
      Tr("مدرسة", "مدرسه", "OT"), Tr("غرفة", "غرفت", "OT"),   Tr("هذا", "هاذا", "OD"),
      Tr("كتبوا", "كتبو", "OW"),  Tr("إلى", "الى", "OH"),     Tr("أنا", "انا", "OH"),
      Tr("ذهبوا", "ذهبو", "OW"),  Tr("ثقافة", "تقافه", "OT"), Tr("بالعلم", "ب العلم", "MERGE"),
      {std::nullopt, "في", T("DELETE")}};
  for (int trial = 0; trial < 20; ++trial) {
    vector<Transformation> ts;
    const size_t n = 1 + rng.UniformInt(40);
    for (size_t i = 0; i < n; ++i) ts.push_back(pool[rng.UniformInt(pool.size())]);
    vector<std::pair<string, string>> events;
    for (const Transformation& t : ts) events.emplace_back(t.tag.Key(), DerivePattern(t).Key());
    const auto oracle = BruteForceRatios(events);
    const RealizationModel model = RealizationModel::Train(ts);
    size_t entries = 0;
    for (const ErrorTag& tag : model.Tags()) {
      double sum = 0;
      for (const auto& e : model.Distribution(tag)) {
        EXPECT_EQ(e.probability, oracle.at({tag.Key(), e.pattern.Key()}));
        sum += e.probability;
        ++entries;
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
    EXPECT_EQ(entries, oracle.size());
    const RealizationModel parsed = RealizationModel::Parse(model.Serialize());
    EXPECT_EQ(parsed.Serialize(), model.Serialize());
  }
}

TEST(RealizeTest, DominantRuleAndFallback) {
  const RealizationModel model = RealizationModel::Train(vector<Transformation>{
      Tr("مدرسة", "مدرسه", "OT"), Tr("سيارة", "سياره", "OT"),
      Tr("ثقافة", "تقافه", "OT"), Tr("هذا", "هاذا", "OD")});
  Rng rng(1);
  Realization r = model.Realize("غرفة", T("OT"), RealizeMode::kMostProbable, rng);
  EXPECT_EQ(r.output, "غرفه");
  EXPECT_FALSE(r.from_fallback);
  r = model.Realize("هذا", T("OD"), RealizeMode::kMostProbable, rng);
  EXPECT_EQ(r.output, "هاذا");
  // No final ta marbuta: nothing applies.
  r = model.Realize("كتاب", T("OT"), RealizeMode::kMostProbable, rng);
  EXPECT_FALSE(r.output.has_value());
  EXPECT_FALSE(model.CanRealize("كتاب", T("OT")));
}

TEST(RealizeTest, FallbackOnlyModel) {
  const RealizationModel model = RealizationModel::FallbackOnly();
  Rng rng(1);
  const Realization r = model.Realize("كتبوا", T("OW"), RealizeMode::kMostProbable, rng);
  EXPECT_EQ(r.output, "كتبو");
  EXPECT_TRUE(r.from_fallback);
  EXPECT_THROW(model.Realize("كتاب", T("XG"), RealizeMode::kMostProbable, rng), Error);
}

TEST(RealizeTest, SampleModeFollowsProbabilities) {
  const RealizationModel model = RealizationModel::Train(vector<Transformation>{
      Tr("مدرسة", "مدرسه", "OT"), Tr("سيارة", "سياره", "OT"),
      Tr("مدينة", "مدينت", "OT")});
  Rng rng(12);
  int h = 0;
  const int n = 6000;
  for (int i = 0; i < n; ++i) {
    h += model.Realize("غرفة", T("OT"), RealizeMode::kSample, rng).output == "غرفه";
  }
  EXPECT_NEAR(static_cast<double>(h) / n, 2.0 / 3.0, 0.03);
}

TEST(RealizationPatternTest, WordShapes) {
  RealizationPattern join;
  join.kind = RealizationPattern::Kind::kJoinNext;
  EXPECT_EQ(join.Apply("دولة", std::string_view("الإمارات")), "دولةالإمارات");
  EXPECT_FALSE(join.Apply("دولة").has_value());
  const RealizationPattern detach = DerivePattern(Tr("بالعلم", "ب العلم", "MERGE"));
  EXPECT_EQ(detach.kind, RealizationPattern::Kind::kDetachPrefix);
  EXPECT_EQ(detach.Apply("بالقلم"), "ب القلم");
  EXPECT_EQ(DerivePattern(Tr("دولة الإمارات", "دولةالإمارات", "SPLIT")).kind,
            RealizationPattern::Kind::kJoinNext);
}

TEST(RoundTripTest, FallbackRulesRetagToTheirOwnTag) {
  int applicable = 0, recovered = 0;
  for (const char* name : {"OT", "OH", "OD", "OM", "OW", "OA", "OR", "OC"}) {
    const ErrorTag tag = T(name);
    ASSERT_TRUE(HasFallbackRule(tag));
    for (const string& w : FixtureLexicon()) {
      const auto out = ApplyFallbackRule(w, tag);
      if (!out) continue;
      ++applicable;
      EXPECT_NE(*out, w);
      recovered += TagWordPair(w, *out) == tag;
    }
  }
  EXPECT_GT(applicable, 200);
  EXPECT_GE(recovered, applicable * 95 / 100);
}

vector<TaggedEssay> Tagged(const vector<vector<const char*>>& per_essay,
                           CefrLevel level = CefrLevel::kB1) {
  vector<TaggedEssay> out;
  for (size_t i = 0; i < per_essay.size(); ++i) {
    TaggedEssay e;
    e.id = "e" + std::to_string(i);
    e.level = level;
    e.n_words = 100;
    for (const char* t : per_essay[i]) e.tags.push_back(T(t));
    out.push_back(e);
  }
  return out;
}

TEST(ErrorProfileTest, SingleEssay) {
  const ErrorProfile p = BuildErrorProfile(Tagged({{"OT", "OT", "OH"}}), CefrLevel::kB1);
  EXPECT_DOUBLE_EQ(p.tag_dist.at(T("OT")), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(p.tag_dist.at(T("OH")), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(p.avg_errors_per_essay, 3.0);
  EXPECT_DOUBLE_EQ(p.avg_count_by_tag.at(T("OT")), 2.0);
}

TEST(ErrorProfileTest, ErrorFreeLevelIsDegenerate) {
  try {
    BuildErrorProfile(Tagged({{}, {}}), CefrLevel::kB1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerate);
  }
  try {
    BuildErrorProfile(Tagged({{"OT"}}), CefrLevel::kC1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
  EXPECT_TRUE(BuildErrorProfiles(Tagged({{}})).empty());
}

TEST(ErrorProfileTest, AverageOverEssays) {
  const ErrorProfile p =
      BuildErrorProfile(Tagged({{"OT", "OT", "OD", "OH"}, {"OD", "OW"}}), CefrLevel::kB1);
  EXPECT_DOUBLE_EQ(p.avg_errors_per_essay, 3.0);
  EXPECT_EQ(p.support, 2);
  double sum = 0;
  for (const auto& [tag, share] : p.tag_dist) sum += share;
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(ErrorProfileTest, TagCorpusAndRoundTrip) {
  const Corpus corpus = Pair("هذه غرفة كبيرة وهذا بيتي.", "هذه غرفه كبيرة وهاذا بيتي.");
  const vector<AlignedPair> pairs = AlignCorpusPairs(corpus);
  const vector<TaggedEssay> tagged = TagCorpus(pairs);
  ASSERT_EQ(tagged.size(), 1u);
  EXPECT_EQ(tagged[0].id, "e");
  EXPECT_EQ(tagged[0].tags.size(), 2u);
  const vector<ErrorProfile> profiles = BuildErrorProfiles(tagged);
  const vector<ErrorProfile> parsed =
      ParseErrorProfiles(SerializeErrorProfiles(profiles));
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0].tag_dist, profiles[0].tag_dist);
  EXPECT_EQ(parsed[0].avg_errors_per_essay, profiles[0].avg_errors_per_essay);
  EXPECT_EQ(parsed[0].level, CefrLevel::kB1);
}

TEST(ErrorProfileTest, UnassessablePairsAreSkipped) {
  const Corpus corpus = Pair("هذه غرفة", "هذه غرفه", CefrLevel::kUnassessable);
  EXPECT_TRUE(TagCorpus(AlignCorpusPairs(corpus)).empty());
}

TEST(TagCosineTest, Cases) {
  const std::map<ErrorTag, double> a = {{T("OT"), 0.5}, {T("OH"), 0.5}};
  const std::map<ErrorTag, double> b = {{T("OD"), 1.0}};
  EXPECT_NEAR(TagCosine(a, a), 1.0, 1e-12);
  EXPECT_EQ(TagCosine(a, b), 0.0);
  EXPECT_EQ(TagCosine(a, {}), 0.0);
}

}  // namespace
}  // namespace cefrsynth
