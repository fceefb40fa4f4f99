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

#ifndef CEFRSYNTH_TEXT_H_
#define CEFRSYNTH_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace cefrsynth {

struct Token {
  std::string text;
  // Byte offsets into the source string, [begin, end).
  size_t begin = 0;
  size_t end = 0;
  bool is_punctuation = false;
};

// Splits on whitespace and separates every punctuation character into its
// own token. Arabic and Latin scripts are both word characters; Arabic
// diacritics and tatweel stay attached to their word.
std::vector<Token> TokenizeWithOffsets(std::string_view text);

std::vector<std::string> Tokenize(std::string_view text);

// Splits after '.', '!', '?', U+061F and U+061B when followed by whitespace
// or end of text. Sentences are trimmed; empty ones are dropped.
std::vector<std::string> SplitSentences(std::string_view text);

// True for tokens made only of punctuation.
bool IsPunctuationToken(std::string_view token);

}  // namespace cefrsynth

#endif  // CEFRSYNTH_TEXT_H_
