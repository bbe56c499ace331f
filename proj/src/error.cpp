// Copyright 2026 The sbspec Authors
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

#include "sbspec/error.hpp"

namespace sbspec {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kSizeLimit: return "size-limit";
    case ErrorCode::kInvalidPartition: return "invalid-partition";
    case ErrorCode::kUnsupportedOrder: return "unsupported-order";
    case ErrorCode::kUndefinedS: return "undefined-S";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kEvaluation: return "evaluation";
    case ErrorCode::kConvergence: return "convergence";
    case ErrorCode::kBranch: return "branch";
    case ErrorCode::kNoSolution: return "no-solution";
    case ErrorCode::kConditioning: return "conditioning";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kRootTracking: return "root-tracking";
    case ErrorCode::kInstability: return "instability";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kUnsupported: return "unsupported";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace sbspec
