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

#ifndef CEFRSYNTH_UTF8_H_
#define CEFRSYNTH_UTF8_H_

#include <string>
#include <string_view>
#include <vector>

namespace cefrsynth::utf8 {

// Decodes UTF-8 into code points. Malformed sequences decode to U+FFFD one
// byte at a time, so decoding never fails.
std::u32string Decode(std::string_view text);

std::string Encode(std::u32string_view code_points);
std::string Encode(char32_t code_point);

// Number of code points.
size_t Length(std::string_view text);

bool IsWhitespace(char32_t c);

// Punctuation and symbols are split off as single-character tokens.
bool IsPunctuation(char32_t c);

// Arabic combining marks (harakat, shadda, sukun, superscript alef).
bool IsArabicDiacritic(char32_t c);

bool IsArabicLetter(char32_t c);

std::string_view TrimWhitespace(std::string_view text);

}  // namespace cefrsynth::utf8

#endif  // CEFRSYNTH_UTF8_H_
