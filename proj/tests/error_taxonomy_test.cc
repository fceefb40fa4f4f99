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

#include "cefrsynth/error_taxonomy.h"

#include <set>
#include <string>

#include "cefrsynth/error.h"
#include "cefrsynth/file_util.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace cefrsynth {
namespace {

using ::cefrsynth::testing::DataPath;

TEST(ErrorTagTest, ParsesFineCoarseAndShapes) {
  EXPECT_EQ(ErrorTag::Parse("OT").coarse(), ErrorClass::kOrthography);
  EXPECT_EQ(ErrorTag::Parse("XG").coarse(), ErrorClass::kSyntax);
  EXPECT_EQ(ErrorTag::Parse("MI").coarse(), ErrorClass::kMorphology);
  EXPECT_EQ(ErrorTag::Parse("SPLIT").coarse(), ErrorClass::kSplit);
  EXPECT_EQ(ErrorTag::Parse("O").fine(), "");
  EXPECT_EQ(ErrorTag::Parse("O").Key(), "O");
  EXPECT_EQ(ErrorTag::Parse("UNK"), ErrorTag::Unknown());
  EXPECT_TRUE(ErrorTag::Unknown().fine().empty());
  EXPECT_FALSE(ErrorTag::TryParse("ZZ").has_value());
  EXPECT_THROW(ErrorTag::Parse("OT+ZZ"), Error);
}

TEST(ErrorTagTest, CombinationsAreCanonical) {
  const ErrorTag tag = ErrorTag::Parse("OM+OD");
  EXPECT_EQ(tag.Key(), "OD+OM");
  EXPECT_EQ(tag.Atoms(), (std::vector<std::string>{"OD", "OM"}));
  EXPECT_EQ(tag.coarse(), ErrorClass::kOrthography);
  EXPECT_TRUE(tag.IsOrthographic());
  EXPECT_EQ(ErrorTag::Parse("MI+OH").coarse(), ErrorClass::kCombination);
  EXPECT_FALSE(ErrorTag::Parse("MI+OH").IsOrthographic());
  EXPECT_FALSE(ErrorTag::Parse("XG").IsOrthographic());
}

TEST(ErrorTagTest, OrderingFollowsKey) {
  std::set<ErrorTag> tags = {ErrorTag::Parse("OT"), ErrorTag::Parse("OA"),
                             ErrorTag::Parse("OT")};
  EXPECT_EQ(tags.size(), 2u);
  EXPECT_EQ(tags.begin()->Key(), "OA");
}

TEST(InstructionRepositoryTest, DefaultCoversOrthography) {
  const InstructionRepository& repo = InstructionRepository::Default();
  for (const char* tag : {"OA", "OC", "OD", "OH", "OM", "OR", "OT", "OW", "P",
                          "SPLIT", "MERGE", "DELETE"}) {
    const ErrorInstruction* entry = repo.Find(ErrorTag::Parse(tag));
    ASSERT_NE(entry, nullptr) << tag;
    EXPECT_FALSE(entry->description.empty());
    EXPECT_NE(entry->example_correct, entry->example_erroneous) << tag;
  }
  const ErrorInstruction* ot = repo.Find(ErrorTag::Parse("OT"));
  EXPECT_EQ(ot->example_correct, "غرفة");
  EXPECT_EQ(ot->example_erroneous, "غرفه");
  EXPECT_EQ(repo.Find(ErrorTag::Unknown()), nullptr);
}

TEST(InstructionRepositoryTest, EveryEntryParses) {
  for (const ErrorInstruction& e : InstructionRepository::Default().entries()) {
    const ErrorTag tag = ErrorTag::Parse(e.fine_tag);
    EXPECT_EQ(ErrorClassName(tag.coarse()), e.coarse_tag) << e.fine_tag;
  }
}

TEST(InstructionRepositoryTest, ShippedFileMatchesDefault) {
  const InstructionRepository loaded =
      InstructionRepository::Load(DataPath("error_instructions.json"));
  EXPECT_EQ(loaded.Serialize(), InstructionRepository::Default().Serialize());
}

TEST(InstructionRepositoryTest, RejectsMalformedEntries) {
  EXPECT_THROW(InstructionRepository::Parse("{}"), Error);
  EXPECT_THROW(InstructionRepository::Parse(
                   R"([{"fine_tag":"ZZ","coarse_tag":"O","description":"d",)"
                   R"("example_correct":"a","example_erroneous":"b"}])"),
               Error);
}

}  // namespace
}  // namespace cefrsynth
