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

#include "cefrsynth/error.h"

namespace cefrsynth {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
      return "io";
    case ErrorCode::kSchema:
      return "schema";
    case ErrorCode::kDuplicateId:
      return "duplicate_id";
    case ErrorCode::kInvalidArgument:
      return "invalid_argument";
    case ErrorCode::kUnassessable:
      return "unassessable";
    case ErrorCode::kNotFound:
      return "not_found";
    case ErrorCode::kDegenerate:
      return "degenerate";
    case ErrorCode::kAuthentication:
      return "authentication";
    case ErrorCode::kRateLimited:
      return "rate_limited";
    case ErrorCode::kProvider:
      return "provider";
    case ErrorCode::kMalformedResponse:
      return "malformed_response";
  }
  return "unknown";
}

}  // namespace cefrsynth
