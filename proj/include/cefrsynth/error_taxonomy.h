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

#ifndef CEFRSYNTH_ERROR_TAXONOMY_H_
#define CEFRSYNTH_ERROR_TAXONOMY_H_

#include <compare>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cefrsynth {

// Coarse error classes. kCombination covers fine tags that mix families
// (M+O, O+X).
enum class ErrorClass {
  kMorphology,
  kOrthography,
  kSemantics,
  kPunctuation,
  kSyntax,
  kCombination,
  kSplit,
  kMerge,
  kDelete,
  kUnknown,
};

// "M", "O", "S", "P", "X", "Comb", "SPLIT", "MERGE", "DELETE", "UNK".
std::string_view ErrorClassName(ErrorClass error_class);

// An error label. `fine` is a '+'-joined, alphabetically ordered set of
// atomic fine classes (e.g. "OD+OM"), or empty when only the coarse class
// is known. kUnknown never carries a fine class.
class ErrorTag {
 public:
  // Accepts fine tags ("OT", "MI+OH", "SPLIT"), coarse-only names ("O"),
  // and "UNK". Throws Error(kSchema) on anything else.
  static ErrorTag Parse(std::string_view name);
  static std::optional<ErrorTag> TryParse(std::string_view name);

  static ErrorTag Unknown() { return ErrorTag(ErrorClass::kUnknown, ""); }

  ErrorClass coarse() const { return coarse_; }
  const std::string& fine() const { return fine_; }

  // The fine tag when known, else the coarse name. Profiles and models key
  // on this.
  std::string Key() const;

  // Atomic components of the fine tag ("OD+OM" -> {"OD", "OM"}).
  std::vector<std::string> Atoms() const;

  // True when every atomic component is orthographic and detectable from
  // characters alone.
  bool IsOrthographic() const;

  friend bool operator==(const ErrorTag& a, const ErrorTag& b) {
    return a.Key() == b.Key();
  }
  friend std::strong_ordering operator<=>(const ErrorTag& a,
                                          const ErrorTag& b) {
    return a.Key() <=> b.Key();
  }

 private:
  ErrorTag(ErrorClass coarse, std::string fine)
      : coarse_(coarse), fine_(std::move(fine)) {}

  ErrorClass coarse_;
  std::string fine_;
};

// One entry of the error-instruction repository: a tag, what it means, and
// a correct/erroneous example pair.
struct ErrorInstruction {
  std::string fine_tag;
  std::string coarse_tag;
  std::string description;
  std::string example_correct;
  std::string example_erroneous;
};

class InstructionRepository {
 public:
  InstructionRepository() = default;
  explicit InstructionRepository(std::vector<ErrorInstruction> entries);

  // The built-in repository covering the fine taxonomy and the coarse tags.
  static const InstructionRepository& Default();

  static InstructionRepository Load(const std::filesystem::path& path);
  static InstructionRepository Parse(std::string_view json);
  std::string Serialize() const;

  // Exact key match; nullptr when absent.
  const ErrorInstruction* Find(const ErrorTag& tag) const;

  const std::vector<ErrorInstruction>& entries() const { return entries_; }

 private:
  std::vector<ErrorInstruction> entries_;
};

}  // namespace cefrsynth

#endif  // CEFRSYNTH_ERROR_TAXONOMY_H_
