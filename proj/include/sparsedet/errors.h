// Copyright 2026 The Sparsedet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPARSEDET_ERRORS_H_
#define SPARSEDET_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace sparsedet {

enum class ErrorCode {
  kInvalidArgument,
  kOutOfExtent,
  kShapeMismatch,
  kChannelMismatch,
  kDuplicateCoordinate,
  kInactiveQuery,
  kNoActiveVoxels,
  kDegenerateBox,
  kNonMonotoneTimestamp,
  kBadMagic,
  kVersionUnsupported,
  kMissingTensor,
  kUnknownTensor,
  kTruncated,
  kIoError,
  kParseError,
};

std::string_view error_code_name(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so
// callers (and the CLI) can distinguish them without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace sparsedet

#endif  // SPARSEDET_ERRORS_H_
