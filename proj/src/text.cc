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

#include "cefrsynth/text.h"

#include "cefrsynth/utf8.h"

namespace cefrsynth {

namespace {

bool IsSentenceTerminator(char32_t c) {
  return c == U'.' || c == U'!' || c == U'?' || c == 0x061F || c == 0x061B;
}

}  // namespace

std::vector<Token> TokenizeWithOffsets(std::string_view text) {
  std::vector<Token> tokens;
  const std::u32string decoded = utf8::Decode(text);
  size_t byte = 0;
  bool in_word = false;
  for (char32_t cp : decoded) {
    const size_t width = utf8::Encode(cp).size();
    if (utf8::IsWhitespace(cp)) {
      in_word = false;
    } else if (utf8::IsPunctuation(cp)) {
      in_word = false;
      tokens.push_back({std::string(text.substr(byte, width)), byte,
                        byte + width, true});
    } else if (in_word) {
      tokens.back().text.append(text.substr(byte, width));
      tokens.back().end = byte + width;
    } else {
      in_word = true;
      tokens.push_back({std::string(text.substr(byte, width)), byte,
                        byte + width, false});
    }
    byte += width;
  }
  return tokens;
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (Token& token : TokenizeWithOffsets(text)) {
    out.push_back(std::move(token.text));
  }
  return out;
}

std::vector<std::string> SplitSentences(std::string_view text) {
  std::vector<std::string> sentences;
  const std::u32string decoded = utf8::Decode(text);
  size_t start = 0;
  size_t byte = 0;
  auto flush = [&](size_t end) {
    std::string_view piece = utf8::TrimWhitespace(text.substr(start, end - start));
    if (!piece.empty()) sentences.emplace_back(piece);
    start = end;
  };
  for (size_t i = 0; i < decoded.size(); ++i) {
    const size_t width = utf8::Encode(decoded[i]).size();
    byte += width;
    if (IsSentenceTerminator(decoded[i]) &&
        (i + 1 == decoded.size() || utf8::IsWhitespace(decoded[i + 1]))) {
      flush(byte);
    }
  }
  flush(text.size());
  return sentences;
}

bool IsPunctuationToken(std::string_view token) {
  if (token.empty()) return false;
  for (char32_t cp : utf8::Decode(token)) {
    if (!utf8::IsPunctuation(cp)) return false;
  }
  return true;
}

}  // namespace cefrsynth
