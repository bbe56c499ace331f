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

#ifndef SBSPEC_CONFIG_HPP
#define SBSPEC_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sbspec/freeprob.hpp"
#include "sbspec/grid.hpp"
#include "sbspec/kernel.hpp"
#include "sbspec/rmt_mc.hpp"
#include "sbspec/solver.hpp"

namespace sbspec {

enum class Command { kSpectrum, kSimulate, kOracle, kCompare, kDiagnose };
enum class EnsembleType { kWigner, kInhomogeneous, kHaar, kQssep, kCustom };

const char* to_string(Command c) noexcept;
const char* to_string(EnsembleType e) noexcept;
std::optional<Command> parse_command(const std::string& name);

// s^2(x) or h(x): named profile (c0 + c1 x, or c0 + c1 x^p) or a table of
// cell values on [0,1].
struct Profile {
  std::string kind = "affine";  // affine | power | table
  double c0 = 1.0, c1 = 0.0, p = 1.0;
  std::vector<double> table;

  double operator()(double x) const;
};

struct EnsembleConfig {
  EnsembleType type = EnsembleType::kWigner;
  double s = 1.0;              // wigner
  Profile s2;                  // inhomogeneous
  std::optional<Measure1D> spectrum;  // haar
  int cumulant_order = 8;      // haar
  // custom: polynomial coefficients, symmetrized cyclically.
  std::vector<double> g1;
  std::vector<std::vector<double>> g2;
  std::vector<std::vector<std::vector<double>>> g3;
};

struct HConfig {
  std::vector<std::pair<double, double>> intervals;  // set when h is an indicator
  Profile profile;                                  // otherwise
  bool is_indicator() const { return !intervals.empty(); }
  double length() const;                            // indicator only
};

struct McConfig {
  std::size_t N = 100;
  std::size_t samples = 50;       // wigner / haar matrices per realization
  std::size_t realizations = 1;
  std::uint64_t seed = 1;
  std::size_t bins = 60;
  DiagonalDraw draw = DiagonalDraw::kQuantile;
  QssepConfig qssep;              // N and seed are copied in per realization
};

/// A validated run configuration. Every key has a default; unknown keys and
/// type mismatches are rejected with a config error.
struct RunConfig {
  std::optional<Command> command;
  EnsembleConfig ensemble;
  HConfig h;
  std::size_t grid = 400;
  double lambda_lo = 0.0, lambda_hi = 0.0;  // both 0: derived from the spectral bound
  std::size_t lambda_points = 501;
  double eps = 1e-3;
  bool extrapolate = false;
  bool closed_form = true;
  double support_threshold = 1e-2;
  SolverOptions solver;
  int oracle_n_max = 6;
  int diagnose_order = 2;
  McConfig mc;
  std::string reference;  // analytic density CSV for simulate

  nlohmann::ordered_json resolved;  // every field, defaults filled in
};

RunConfig parse_run_config(const std::string& json_text);

/// The kernel, its h on the configured grid, and the optional spectrum.
KernelPtr build_kernel(const RunConfig& cfg);
RealGrid build_h(const RunConfig& cfg, std::size_t cells);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace sbspec

#endif  // SBSPEC_CONFIG_HPP
