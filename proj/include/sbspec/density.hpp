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

#ifndef SBSPEC_DENSITY_HPP
#define SBSPEC_DENSITY_HPP

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace sbspec {

/// A density sampled on a grid of eigenvalues. rho is the block-normalized
/// density sigma_I; the total measure is block_mass * sigma_I plus an atom of
/// weight atom_at_zero at the origin.
struct SpectralDensity {
  std::vector<double> lambda;
  std::vector<double> rho;
  std::vector<bool> valid;  // false marks a gap (failed point)
  double block_mass = 1.0;
  double atom_at_zero = 0.0;
  double support_lo = std::numeric_limits<double>::quiet_NaN();
  double support_hi = std::numeric_limits<double>::quiet_NaN();
  // Sorted raw samples; only set for empirical densities.
  std::vector<double> samples;

  std::size_t size() const noexcept { return lambda.size(); }
  double rho_total(std::size_t k) const { return block_mass * rho[k]; }
  std::size_t gap_count() const;
  // Trapezoidal mass of rho, skipping intervals that touch a gap.
  double integral() const;
  // Trapezoidal CDF of rho at x, linear between grid points.
  double cdf(double x) const;
};

SpectralDensity tabulate(const std::function<double(double)>& rho,
                         std::span<const double> lambda);

std::vector<double> linspace(double lo, double hi, std::size_t points);

/// Normalized histogram. The range defaults to [min, max] of the samples.
SpectralDensity empirical_density(std::span<const double> sorted_samples, std::size_t bins,
                                  std::optional<std::pair<double, double>> range = std::nullopt);

/// Sup-norm distance between CDFs. Uses the raw samples of emp when present,
/// otherwise compares trapezoidal CDFs on the union of both grids.
double ks_distance(const SpectralDensity& emp, const SpectralDensity& ana);

/// Trapezoidal integral of |a - b| over a's grid (b interpolated linearly,
/// zero outside its range), restricted to [lo, hi] and to points valid in both.
double l1_distance(const SpectralDensity& a, const SpectralDensity& b,
                   double lo = -std::numeric_limits<double>::infinity(),
                   double hi = std::numeric_limits<double>::infinity());

}  // namespace sbspec

#endif  // SBSPEC_DENSITY_HPP
