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

#ifndef CEFRSYNTH_CLI_H_
#define CEFRSYNTH_CLI_H_

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cefrsynth {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Runs the command-line tool in-process. Returns the exit status: 0 on
// success, 1 after printing "error: <code>: <message>" to err.
int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// args[0] is the program name.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace cefrsynth

#endif  // CEFRSYNTH_CLI_H_
