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

#ifndef SBSPEC_COMMANDS_HPP
#define SBSPEC_COMMANDS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbspec/config.hpp"
#include "sbspec/density.hpp"

namespace sbspec {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitInstability = 3,
  kExitUnsupported = 4,
  kExitConvergence = 5,
};

int exit_code_for(ErrorCode code) noexcept;

struct CommandOptions {
  std::optional<std::uint64_t> seed;  // overrides mc.seed
  int threads = 0;                    // 0: SBSPEC_THREADS, else hardware concurrency
};

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::string> summary;  // human-readable lines
  std::vector<std::string> files;    // written, relative to the output directory
  std::string error;                 // set when exit_code != 0
};

/// Validates the configuration, runs the command and writes its files into
/// out_dir. Nothing is written when validation fails. Files are
/// <command>.csv (plus extra CSVs for simulate) and the <command>.json
/// sidecar holding the resolved configuration, content hashes and results.
CommandResult run_command(Command cmd, const std::string& config_text, const std::string& out_dir,
                          const CommandOptions& opts = {});

int resolve_threads(int requested);

/// Closed-form block density for the configured ensemble and h, when one
/// exists (Wigner, inhomogeneous Wigner and Haar with an indicator h, QSSEP
/// with a single interval).
std::optional<SpectralDensity> closed_form_density(const RunConfig& cfg, std::span<const double> lambda);

/// Reads (lambda, rho) from the first two columns of a CSV; '#' lines and a
/// non-numeric header row are skipped.
SpectralDensity read_density_csv(const std::string& path);

/// 17 significant digits ("%.17g"); nan and inf spelled out.
std::string format_double(double v);

}  // namespace sbspec

#endif  // SBSPEC_COMMANDS_HPP
