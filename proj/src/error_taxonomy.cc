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

#include <algorithm>
#include <set>

#include "cefrsynth/error.h"
#include "cefrsynth/file_util.h"
#include "fmt/format.h"
#include "nlohmann/json.hpp"

namespace cefrsynth {

namespace {

struct AtomInfo {
  std::string_view name;
  ErrorClass family;
  bool orthographic_rule;  // detectable by character analysis
};

constexpr AtomInfo kAtoms[] = {
    {"MI", ErrorClass::kMorphology, false},
    {"MT", ErrorClass::kMorphology, false},
    {"OA", ErrorClass::kOrthography, true},
    {"OC", ErrorClass::kOrthography, true},
    {"OD", ErrorClass::kOrthography, true},
    {"OG", ErrorClass::kOrthography, false},
    {"OH", ErrorClass::kOrthography, true},
    {"OM", ErrorClass::kOrthography, true},
    {"OR", ErrorClass::kOrthography, true},
    {"OT", ErrorClass::kOrthography, true},
    {"OW", ErrorClass::kOrthography, true},
    {"SF", ErrorClass::kSemantics, false},
    {"SW", ErrorClass::kSemantics, false},
    {"P", ErrorClass::kPunctuation, false},
    {"XC", ErrorClass::kSyntax, false},
    {"XF", ErrorClass::kSyntax, false},
    {"XG", ErrorClass::kSyntax, false},
    {"XM", ErrorClass::kSyntax, false},
    {"XN", ErrorClass::kSyntax, false},
    {"XT", ErrorClass::kSyntax, false},
    {"SPLIT", ErrorClass::kSplit, false},
    {"MERGE", ErrorClass::kMerge, false},
    {"DELETE", ErrorClass::kDelete, false},
};

const AtomInfo* FindAtom(std::string_view name) {
  for (const AtomInfo& atom : kAtoms) {
    if (atom.name == name) return &atom;
  }
  return nullptr;
}

std::vector<std::string> SplitPlus(std::string_view text) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    const size_t plus = text.find('+', start);
    parts.emplace_back(text.substr(start, plus - start));
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  return parts;
}

}  // namespace

std::string_view ErrorClassName(ErrorClass error_class) {
  switch (error_class) {
    case ErrorClass::kMorphology:
      return "M";
    case ErrorClass::kOrthography:
      return "O";
    case ErrorClass::kSemantics:
      return "S";
    case ErrorClass::kPunctuation:
      return "P";
    case ErrorClass::kSyntax:
      return "X";
    case ErrorClass::kCombination:
      return "Comb";
    case ErrorClass::kSplit:
      return "SPLIT";
    case ErrorClass::kMerge:
      return "MERGE";
    case ErrorClass::kDelete:
      return "DELETE";
    case ErrorClass::kUnknown:
      return "UNK";
  }
  return "UNK";
}

std::optional<ErrorTag> ErrorTag::TryParse(std::string_view name) {
  if (name == "UNK") return Unknown();
  if (name == "M") return ErrorTag(ErrorClass::kMorphology, "");
  if (name == "O") return ErrorTag(ErrorClass::kOrthography, "");
  if (name == "S") return ErrorTag(ErrorClass::kSemantics, "");
  if (name == "X") return ErrorTag(ErrorClass::kSyntax, "");
  if (name == "Comb") return ErrorTag(ErrorClass::kCombination, "");
  if (name.empty()) return std::nullopt;
  std::vector<std::string> parts = SplitPlus(name);
  std::set<ErrorClass> families;
  for (const std::string& part : parts) {
    const AtomInfo* atom = FindAtom(part);
    if (atom == nullptr) return std::nullopt;
    families.insert(atom->family);
  }
  std::sort(parts.begin(), parts.end());
  if (std::adjacent_find(parts.begin(), parts.end()) != parts.end()) {
    return std::nullopt;
  }
  ErrorClass coarse = *families.begin();
  if (families.size() > 1) {
    for (ErrorClass family : families) {
      if (family == ErrorClass::kSplit || family == ErrorClass::kMerge ||
          family == ErrorClass::kDelete || family == ErrorClass::kPunctuation) {
        return std::nullopt;
      }
    }
    coarse = ErrorClass::kCombination;
  } else if (parts.size() > 1 &&
             (coarse == ErrorClass::kSplit || coarse == ErrorClass::kMerge ||
              coarse == ErrorClass::kDelete)) {
    return std::nullopt;
  }
  std::string fine = parts.front();
  for (size_t i = 1; i < parts.size(); ++i) fine += "+" + parts[i];
  return ErrorTag(coarse, std::move(fine));
}

ErrorTag ErrorTag::Parse(std::string_view name) {
  if (auto tag = TryParse(name)) return *tag;
  throw Error(ErrorCode::kSchema, fmt::format("unknown error tag '{}'", name));
}

std::string ErrorTag::Key() const {
  return fine_.empty() ? std::string(ErrorClassName(coarse_)) : fine_;
}

std::vector<std::string> ErrorTag::Atoms() const {
  if (fine_.empty()) return {};
  return SplitPlus(fine_);
}

bool ErrorTag::IsOrthographic() const {
  if (fine_.empty()) return false;
  for (const std::string& atom : Atoms()) {
    const AtomInfo* info = FindAtom(atom);
    if (info == nullptr || !info->orthographic_rule) return false;
  }
  return true;
}

InstructionRepository::InstructionRepository(
    std::vector<ErrorInstruction> entries)
    : entries_(std::move(entries)) {
  std::set<std::string> seen;
  for (ErrorInstruction& entry : entries_) {
    const ErrorTag tag = ErrorTag::Parse(entry.fine_tag);
    if (!seen.insert(tag.Key()).second) {
      throw Error(ErrorCode::kDuplicateId,
                  fmt::format("duplicate instruction for tag '{}'", tag.Key()));
    }
    entry.fine_tag = tag.Key();
    if (entry.coarse_tag.empty()) {
      entry.coarse_tag = std::string(ErrorClassName(tag.coarse()));
    }
  }
}

const InstructionRepository& InstructionRepository::Default() {
  // Examples use "" for an absent word.
  static const auto* const kDefault = new InstructionRepository({
      {"MI", "M", "Inflection: the word carries the wrong inflectional form "
                  "of the intended lemma.", "عارف", "معروف"},
      {"MT", "M", "Tense: a verb is conjugated in the wrong tense or aspect.",
       "ذهب", "يذهب"},
      {"OA", "O", "Alef-Maqsura: final ى and final ي are confused.", "القاضي",
       "القاضى"},
      {"OA+OH", "O", "Alef-Maqsura confusion together with a Hamza error.",
       "أضحى", "اضحا"},
      {"OA+OR", "O",
       "Alef-Maqsura confusion together with a wrong character.", "كشيء",
       "كشىء"},
      {"OC", "O", "Character Order: two adjacent letters are swapped.",
       "المدرسة", "المردسة"},
      {"OD", "O", "Extra Character: a letter is added that does not belong "
                  "in the word.", "هذا", "هاذا"},
      {"OD+OG", "O", "Extra Character together with a lengthened short "
                     "vowel.", "تتطورو", "تتطور"},
      {"OD+OH", "O", "Extra Character together with a Hamza error.", "لأنهم",
       "ألانهم"},
      {"OD+OM", "O", "One letter is added and another letter is dropped.",
       "الاجتماعي", "الاجتاعيي"},
      {"OD+OR", "O", "One letter is added and another letter is replaced.",
       "الصور", "السوور"},
      {"OG", "O", "Lengthening Short Vowels: a short vowel is written as a "
                  "long vowel letter.", "", ""},
      {"OH", "O", "Hamza: the hamza is missing, added, or written on the "
                  "wrong seat (ا أ إ آ ء ؤ ئ).", "العب", "إلعب"},
      {"OH+OM", "O", "Hamza error together with a missing letter.", "الأشياء",
       "الاشيا"},
      {"OH+OT", "O", "Hamza error together with a Ta-Marbuta error.", "إمارة",
       "اماره"},
      {"OM", "O", "Missing Character: a letter of the word is dropped.",
       "المدرسة", "المدسة"},
      {"OM+OR", "O", "One letter is dropped and another is replaced.",
       "المجتمع", "الجطمع"},
      {"OR", "O", "Wrong Character: a letter is replaced by a similar-sounding "
                  "or similar-looking letter.", "المدرسة", "المدرصة"},
      {"OR+OT", "O", "Wrong character together with a Ta-Marbuta error.",
       "مكتظة", "مكتضه"},
      {"OT", "O", "Ta-Marbuta: the feminine ending ة is written as ه or ت, "
                  "or the reverse.", "غرفة", "غرفه"},
      {"OW", "O", "Alef-Fariqa: the silent alef after the plural waw is "
                  "dropped or wrongly added.", "كتبوا", "كتبو"},
      {"SF", "S", "Conjunction: a conjunction is missing or misused.",
       "فسبحان", "سبحان"},
      {"SW", "S", "Word Selection: a wrong word is chosen in place of the "
                  "right one.", "على", "من"},
      {"P", "P", "Punctuation: a punctuation mark is missing, extra, or "
                 "wrong.", "السوق،", "السوق."},
      {"XC", "X", "Case: the word carries the wrong case ending.", "رائعا",
       "رائع"},
      {"XC+XG", "X", "Case and gender agreement errors together.", "مجتهدا",
       "مجتهدة"},
      {"XC+XN", "X", "Case and number agreement errors together.", "نواح",
       "نواحي"},
      {"XF", "X", "Definiteness: the definite article is missing or added "
                  "wrongly.", "المفيد", "مفيد"},
      {"XG", "X", "Gender: the word does not agree in gender.", "كان",
       "كانت"},
      {"XM", "X", "Missing Word: a required word is left out.", "على", ""},
      {"XN", "X", "Number: the word does not agree in number.", "كتابين",
       "كتب"},
      {"XT", "X", "Unnecessary Word: a word that should not be there is "
                  "added.", "", "على"},
      {"MI+OH", "Comb", "Inflection error together with a Hamza error.",
       "أشخاص", "اشخاصك"},
      {"OH+XC", "Comb", "Hamza error together with a case error.", "أضرارا",
       "اضرار"},
      {"SPLIT", "SPLIT", "Split: two words that must be separate are written "
                         "joined together.", "دولة الإمارات", "دولةالإمارات"},
      {"MERGE", "MERGE", "Merge: one word is wrongly written as two separate "
                         "pieces.", "بالعلم", "ب العلم"},
      {"DELETE", "DELETE", "Delete: an extra word appears that must be "
                           "removed.", "", "داخل"},
      {"M", "M", "Morphology: the word has the wrong morphological form.",
       "ذهب", "يذهب"},
      {"O", "O", "Orthography: the word is misspelled.", "غرفة", "غرفه"},
      {"S", "S", "Semantics: the word does not fit the intended meaning.",
       "على", "من"},
      {"X", "X", "Syntax: the word breaks agreement or sentence structure.",
       "كان", "كانت"},
  });
  return *kDefault;
}

InstructionRepository InstructionRepository::Parse(std::string_view json) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema,
                fmt::format("malformed instruction repository: {}", e.what()));
  }
  if (!root.is_array()) {
    throw Error(ErrorCode::kSchema, "instruction repository must be an array");
  }
  std::vector<ErrorInstruction> entries;
  for (size_t i = 0; i < root.size(); ++i) {
    const nlohmann::json& item = root[i];
    try {
      entries.push_back({item.at("fine_tag").get<std::string>(),
                         item.value("coarse_tag", ""),
                         item.value("description", ""),
                         item.value("example_correct", ""),
                         item.value("example_erroneous", "")});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchema,
                  fmt::format("instruction entry {}: {}", i, e.what()));
    }
  }
  return InstructionRepository(std::move(entries));
}

InstructionRepository InstructionRepository::Load(
    const std::filesystem::path& path) {
  return Parse(ReadFile(path));
}

std::string InstructionRepository::Serialize() const {
  nlohmann::ordered_json root = nlohmann::ordered_json::array();
  for (const ErrorInstruction& entry : entries_) {
    root.push_back({{"fine_tag", entry.fine_tag},
                    {"coarse_tag", entry.coarse_tag},
                    {"description", entry.description},
                    {"example_correct", entry.example_correct},
                    {"example_erroneous", entry.example_erroneous}});
  }
  return root.dump(2) + "\n";
}

const ErrorInstruction* InstructionRepository::Find(const ErrorTag& tag) const {
  const std::string key = tag.Key();
  for (const ErrorInstruction& entry : entries_) {
    if (entry.fine_tag == key) return &entry;
  }
  return nullptr;
}

}  // namespace cefrsynth
