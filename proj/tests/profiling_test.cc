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

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "cefrsynth/error.h"
#include "cefrsynth/random.h"
#include "cefrsynth/text.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace cefrsynth {
namespace {

using ::cefrsynth::testing::MakeEssay;
using ::std::string;
using ::std::vector;

FeatureVector Numeric(const vector<double>& v) {
  FeatureVector f;
  f.n_words = v[0];
  f.n_sentences = v[1];
  f.n_tokens = v[2];
  f.n_vocab = v[3];
  f.avg_word_len = v[4];
  f.avg_sent_len = v[5];
  f.ttr = v[6];
  f.sentence_complexity = v[7];
  return f;
}

LevelProfile Profile(CefrLevel level, const FeatureVector& f) {
  return {level, f, 1};
}

TEST(TypeTokenRatioTest, Examples) {
  EXPECT_DOUBLE_EQ(TypeTokenRatio(vector<string>{"a", "b", "c"}), 1.0);
  EXPECT_DOUBLE_EQ(TypeTokenRatio(vector<string>{"a", "a", "a", "b"}), 0.5);
  EXPECT_DOUBLE_EQ(TypeTokenRatio(vector<string>{}), 0.0);
}

TEST(TypeTokenRatioTest, OneIffAllDistinct) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    vector<string> tokens;
    const int n = 1 + static_cast<int>(rng.UniformInt(12));
    for (int i = 0; i < n; ++i) tokens.push_back(std::to_string(rng.UniformInt(15)));
    const double ttr = TypeTokenRatio(tokens);
    const std::set<string> distinct(tokens.begin(), tokens.end());
    EXPECT_LE(ttr, 1.0);
    EXPECT_EQ(ttr == 1.0, distinct.size() == tokens.size());
  }
}

TEST(SentenceComplexityTest, MeanOfDepths) {
  const vector<string> two = {"a", "b"};
  vector<double> depths = {2, 4};
  size_t i = 0;
  EXPECT_DOUBLE_EQ(SentenceComplexity(two, [&](std::string_view) { return depths[i++]; }),
                   3.0);
  EXPECT_DOUBLE_EQ(
      SentenceComplexity(vector<string>{"x"}, [](std::string_view) { return 5.0; }), 5.0);
  EXPECT_DOUBLE_EQ(SentenceComplexity(vector<string>{"x", "y", "z"},
                                      [](std::string_view) { return 0.0; }),
                   0.0);
  EXPECT_DOUBLE_EQ(SentenceComplexity(vector<string>{}, HeuristicClauseDepth), 0.0);
}

TEST(SentenceComplexityTest, NamesFailingSentence) {
  const vector<string> sentences = {"ok", "bad"};
  try {
    SentenceComplexity(sentences, [](std::string_view s) {
      return s == "bad" ? -1.0 : 1.0;
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(string(e.what()).find("1"), string::npos);
  }
  EXPECT_THROW(SentenceComplexity(sentences,
                                  [](std::string_view) -> double {
                                    throw std::runtime_error("parser down");
                                  }),
               Error);
}

TEST(HeuristicClauseDepthTest, CountsSubordination) {
  EXPECT_DOUBLE_EQ(HeuristicClauseDepth(""), 0.0);
  EXPECT_DOUBLE_EQ(HeuristicClauseDepth("الجو جميل"), 1.0);
  EXPECT_DOUBLE_EQ(HeuristicClauseDepth("خرجت لأن الجو جميل"), 2.0);
  EXPECT_GT(HeuristicClauseDepth("قلت إن الطالب الذي رأيته عندما جاء نجح"),
            HeuristicClauseDepth("قلت إن الطالب نجح"));
}

TEST(ExtractFeaturesTest, EmptyTextIsZero) {
  EXPECT_EQ(ExtractFeatures(std::string_view("")), FeatureVector{});
}

TEST(ExtractFeaturesTest, HandCountedFixture) {
  const FeatureVector f =
      ExtractFeatures(std::string_view("ذهب الولد إلى المدرسة صباحا. ثم عاد إلى البيت مساء."));
  EXPECT_EQ(f.n_words, 10);
  EXPECT_EQ(f.n_sentences, 2);
  EXPECT_DOUBLE_EQ(f.avg_sent_len, 5.0);
  EXPECT_EQ(f.n_tokens, 12);
  EXPECT_EQ(f.n_vocab, 10);  // إلى and "." repeat
  EXPECT_DOUBLE_EQ(f.ttr, 10.0 / 12.0);
  // 3+5+3+7+5 + 2+3+3+5+4 code points.
  EXPECT_DOUBLE_EQ(f.avg_word_len, 40.0 / 10.0);
  EXPECT_TRUE(f.pos_freq.empty());
}

TEST(ExtractFeaturesTest, DuplicatedTextMatchesSetCardinality) {
  const string text = "قرأت الكتاب. الكتاب مفيد جدا.";
  const string doubled = text + " " + text;
  const vector<string> tokens = Tokenize(doubled);
  const std::set<string> distinct(tokens.begin(), tokens.end());
  const FeatureVector f = ExtractFeatures(std::string_view(doubled));
  EXPECT_DOUBLE_EQ(f.ttr, static_cast<double>(distinct.size()) / tokens.size());
  EXPECT_DOUBLE_EQ(f.ttr, ExtractFeatures(std::string_view(text)).ttr / 2.0);
}

TEST(ExtractFeaturesTest, PosFrequencies) {
  const FeatureVector f = ExtractFeatures(
      std::string_view("a b c d"), HeuristicClauseDepth,
      [](std::span<const string> tokens) {
        vector<string> tags;
        for (size_t i = 0; i < tokens.size(); ++i) tags.push_back(i < 3 ? "NOUN" : "VERB");
        return tags;
      });
  EXPECT_DOUBLE_EQ(f.pos_freq.at("NOUN"), 0.75);
  EXPECT_DOUBLE_EQ(f.pos_freq.at("VERB"), 0.25);
}

TEST(BuildLevelProfileTest, SingleEssayEqualsItsVector) {
  const Essay essay = MakeEssay("a", "هذا نص قصير. فيه جملتان.", CefrLevel::kB1);
  const LevelProfile p = BuildLevelProfile(Corpus({essay}), CefrLevel::kB1);
  EXPECT_EQ(p.features, ExtractFeatures(essay));
  EXPECT_EQ(p.support, 1);
}

TEST(BuildLevelProfileTest, IdenticalEssaysGiveTheirVector) {
  const string text = "أحب القراءة لأنها مفيدة. أقرأ كل يوم.";
  std::vector<Essay> essays;
  for (int i = 0; i < 7; ++i) {
    essays.push_back(MakeEssay("e" + std::to_string(i), text, CefrLevel::kB2));
  }
  const LevelProfile p = BuildLevelProfile(Corpus(essays), CefrLevel::kB2);
  // Summation may move the mean by an ulp or two.
  const std::vector<double> want = ExtractFeatures(std::string_view(text)).Numeric();
  const std::vector<double> got = p.features.Numeric();
  ASSERT_EQ(got.size(), want.size());
  for (size_t i = 0; i < want.size(); ++i) EXPECT_DOUBLE_EQ(got[i], want[i]) << i;
  EXPECT_EQ(p.support, 7);
}

TEST(BuildLevelProfileTest, MeansTtr) {
  // ttr 2/5 = 0.4 and 3/5 = 0.6.
  const Corpus corpus({MakeEssay("a", "a a a a b", CefrLevel::kB1),
                       MakeEssay("b", "a a a b c", CefrLevel::kB1)});
  EXPECT_DOUBLE_EQ(BuildLevelProfile(corpus, CefrLevel::kB1).features.ttr, 0.5);
}

TEST(BuildLevelProfileTest, EmptyLevelIsNotFound) {
  const Corpus corpus({MakeEssay("a", "نص", CefrLevel::kB1)});
  try {
    BuildLevelProfile(corpus, CefrLevel::kA1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
  EXPECT_EQ(BuildLevelProfiles(corpus).size(), 1u);
}

TEST(CosineSimilarityTest, TrivialCases) {
  const vector<double> p = {1, 2, 3};
  EXPECT_NEAR(CosineSimilarity(p, p), 1.0, 1e-12);
  EXPECT_NEAR(CosineSimilarity(p, vector<double>{2, 4, 6}), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(CosineSimilarity(vector<double>{1, 0, 0}, vector<double>{0, 1, 0}),
                   0.0);
  try {
    CosineSimilarity(p, vector<double>{0, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerate);
  }
  EXPECT_THROW(CosineSimilarity(p, vector<double>{1, 2}), Error);
}

TEST(CosineSimilarityTest, ScaleInvariantAndSymmetric) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    vector<double> p(8), q(8);
    for (size_t i = 0; i < 8; ++i) {
      p[i] = rng.Uniform() * 10 - 3;
      q[i] = rng.Uniform() * 10 - 3;
    }
    const double c = 0.01 + rng.Uniform() * 100;
    vector<double> cp = p;
    for (double& x : cp) x *= c;
    EXPECT_NEAR(CosineSimilarity(p, cp), 1.0, 1e-9);
    EXPECT_LE(std::abs(CosineSimilarity(p, q) - CosineSimilarity(q, p)), 1e-12);
  }
}

TEST(CosineSimilarityTest, FeatureVectorsUsePosOnlyWhenBothHaveIt) {
  FeatureVector a = Numeric({1, 1, 1, 1, 1, 1, 1, 1});
  FeatureVector b = a;
  a.pos_freq["NOUN"] = 1.0;
  EXPECT_NEAR(CosineSimilarity(a, b), 1.0, 1e-12);
  b.pos_freq["VERB"] = 1.0;
  EXPECT_NEAR(CosineSimilarity(a, b), 8.0 / 9.0, 1e-12);
}

vector<LevelProfile> SixProfiles() {
  vector<LevelProfile> profiles;
  for (size_t i = 0; i < 6; ++i) {
    vector<double> v(8, 0.0);
    v[i] = 1.0;
    v[7] = 0.0;
    profiles.push_back(Profile(kAssessableLevels[i], Numeric(v)));
  }
  return profiles;
}

TEST(AssignNearestLevelTest, ExactProfile) {
  const vector<LevelProfile> profiles = {
      Profile(CefrLevel::kA2, Numeric({50, 5, 55, 40, 4, 10, 0.7, 1.2})),
      Profile(CefrLevel::kB1, Numeric({100, 7, 110, 70, 4.5, 14, 0.6, 1.5})),
      Profile(CefrLevel::kB2, Numeric({130, 7, 145, 80, 4.8, 18, 0.55, 1.9})),
  };
  EXPECT_EQ(AssignNearestLevel(profiles[1].features, profiles), CefrLevel::kB1);
}

TEST(AssignNearestLevelTest, TiesGoToLowerBand) {
  const FeatureVector f = Numeric({1, 2, 3, 4, 5, 6, 0.5, 1});
  const vector<LevelProfile> profiles = {Profile(CefrLevel::kB2, f),
                                         Profile(CefrLevel::kA2, f)};
  EXPECT_EQ(AssignNearestLevel(f, profiles), CefrLevel::kA2);
}

TEST(AssignNearestLevelTest, CollinearWins) {
  const vector<LevelProfile> profiles = SixProfiles();
  FeatureVector v = profiles[4].features;
  v.avg_word_len *= 3.0;
  EXPECT_EQ(AssignNearestLevel(v, profiles), CefrLevel::kC1);
}

TEST(AssignNearestLevelTest, InvariantUnderRescaling) {
  Rng rng(17);
  vector<LevelProfile> profiles;
  for (CefrLevel level : kAssessableLevels) {
    vector<double> v(8);
    for (double& x : v) x = 0.1 + rng.Uniform();
    profiles.push_back(Profile(level, Numeric(v)));
  }
  for (int trial = 0; trial < 50; ++trial) {
    vector<double> v(8);
    for (double& x : v) x = 0.1 + rng.Uniform();
    vector<double> scaled = v;
    const double c = 0.1 + 10 * rng.Uniform();
    for (double& x : scaled) x *= c;
    EXPECT_EQ(AssignNearestLevel(Numeric(v), profiles),
              AssignNearestLevel(Numeric(scaled), profiles));
  }
}

TEST(AssignNearestLevelTest, Errors) {
  const vector<LevelProfile> profiles = SixProfiles();
  try {
    AssignNearestLevel(FeatureVector{}, profiles);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerate);
  }
  EXPECT_THROW(AssignNearestLevel(profiles[0].features, {}), Error);
}

TEST(AgreementTest, Examples) {
  using L = CefrLevel;
  const vector<L> a = {L::kA1, L::kB1, L::kC2};
  EXPECT_DOUBLE_EQ(Agreement(a, a), 1.0);
  EXPECT_DOUBLE_EQ(Agreement(a, vector<L>{L::kA2, L::kB2, L::kC1}), 0.0);
  vector<L> pred(40, L::kB1), gold(40, L::kB2);
  for (size_t i = 0; i < 11; ++i) gold[i] = L::kB1;
  EXPECT_DOUBLE_EQ(Agreement(pred, gold), 0.275);
  EXPECT_THROW(Agreement(a, vector<L>{L::kA1}), Error);
  EXPECT_THROW(Agreement(vector<L>{}, vector<L>{}), Error);
}

TEST(AgreementTest, PermutationInvariant) {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    vector<std::pair<CefrLevel, CefrLevel>> pairs;
    for (int i = 0; i < 30; ++i) {
      pairs.emplace_back(kAssessableLevels[rng.UniformInt(6)],
                         kAssessableLevels[rng.UniformInt(6)]);
    }
    auto agree = [](const auto& ps) {
      vector<CefrLevel> p, g;
      for (const auto& [x, y] : ps) {
        p.push_back(x);
        g.push_back(y);
      }
      return Agreement(p, g);
    };
    const double before = agree(pairs);
    rng.Shuffle(std::span(pairs));
    EXPECT_DOUBLE_EQ(agree(pairs), before);
  }
}

TEST(ProfileFileTest, RoundTrip) {
  vector<LevelProfile> profiles = SixProfiles();
  profiles[2].features.pos_freq = {{"NOUN", 0.5}, {"VERB", 0.25}};
  profiles[2].support = 12;
  const vector<LevelProfile> parsed = ParseProfiles(SerializeProfiles(profiles));
  ASSERT_EQ(parsed.size(), profiles.size());
  for (size_t i = 0; i < parsed.size(); ++i) {
    EXPECT_EQ(parsed[i].level, profiles[i].level);
    EXPECT_EQ(parsed[i].features, profiles[i].features);
    EXPECT_EQ(parsed[i].support, profiles[i].support);
  }
  EXPECT_THROW(ParseProfiles(R"({"version":"profile-v0"})"), Error);
  EXPECT_THROW(ParseProfiles("[]"), Error);
}

}  // namespace
}  // namespace cefrsynth
