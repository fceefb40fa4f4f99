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

#ifndef CEFRSYNTH_FILE_UTIL_H_
#define CEFRSYNTH_FILE_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace cefrsynth {

std::string ReadFile(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place, so readers
// never observe a partially written output.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view data);

uint64_t HashFile(const std::filesystem::path& path);

std::string HexU64(uint64_t value);

}  // namespace cefrsynth

#endif  // CEFRSYNTH_FILE_UTIL_H_
