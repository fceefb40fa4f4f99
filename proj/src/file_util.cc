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

#include "cefrsynth/file_util.h"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "cefrsynth/error.h"
#include "cefrsynth/random.h"
#include "fmt/format.h"

namespace cefrsynth {

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, fmt::format("cannot open '{}'", path.string()));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    throw Error(ErrorCode::kIo, fmt::format("read failed: '{}'", path.string()));
  }
  return buffer.str();
}

void WriteFileAtomic(const std::filesystem::path& path, std::string_view data) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIo,
                  fmt::format("cannot open '{}' for writing", tmp.string()));
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorCode::kIo, fmt::format("write failed: '{}'", tmp.string()));
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw Error(ErrorCode::kIo, fmt::format("cannot rename '{}' to '{}': {}",
                                            tmp.string(), path.string(),
                                            ec.message()));
  }
}

uint64_t HashFile(const std::filesystem::path& path) {
  return Fnv1a64(ReadFile(path));
}

std::string HexU64(uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace cefrsynth
