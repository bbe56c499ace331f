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

#ifndef SBSPEC_ERROR_HPP
#define SBSPEC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace sbspec {

enum class ErrorCode {
  kSizeLimit,
  kInvalidPartition,
  kUnsupportedOrder,
  kUndefinedS,
  kDomain,
  kEvaluation,
  kConvergence,
  kBranch,
  kNoSolution,
  kConditioning,
  kPrecondition,
  kDegenerate,
  kRootTracking,
  kInstability,
  kConfig,
  kIo,
  kUnsupported,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures are reported through this type; the C API maps the
// code onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Non-convergence of an iterative solve; carries the last residual reached.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : Error(ErrorCode::kConvergence, what),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace sbspec

#endif  // SBSPEC_ERROR_HPP
