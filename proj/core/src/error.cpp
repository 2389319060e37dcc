// Copyright 2026 The DQRM Authors.
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

#include "dqrm/error.hpp"

namespace dqrm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kNonFinite: return "non-finite weight";
    case ErrorCode::kEmptyTensor: return "empty tensor";
    case ErrorCode::kIndexOutOfRange: return "index out of range";
    case ErrorCode::kCodeOutOfRange: return "code out of range";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kMalformedRecord: return "malformed record";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kBadVersion: return "unsupported version";
    case ErrorCode::kTruncated: return "truncated file";
    case ErrorCode::kDiverged: return "diverged";
    case ErrorCode::kReplicaDrift: return "replica drift";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kUndefinedAuc: return "undefined AUC";
    case ErrorCode::kUnknownKind: return "unknown kind";
  }
  return "unknown error";
}

}  // namespace dqrm
