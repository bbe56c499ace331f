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

#include "sbspec/density.hpp"

#include <algorithm>
#include <cmath>

#include "sbspec/error.hpp"

namespace sbspec {

namespace {

bool ok(const SpectralDensity& d, std::size_t k) {
  return d.valid.empty() || d.valid[k];
}

// Linear interpolation of rho; zero outside the grid, NaN next to a gap.
double interpolate(const SpectralDensity& d, double x) {
  if (d.lambda.empty() || x < d.lambda.front() || x > d.lambda.back()) return 0.0;
  auto it = std::upper_bound(d.lambda.begin(), d.lambda.end(), x);
  std::size_t k = it == d.lambda.end() ? d.lambda.size() - 1
                                        : static_cast<std::size_t>(it - d.lambda.begin());
  if (k == 0) return ok(d, 0) ? d.rho[0] : std::numeric_limits<double>::quiet_NaN();
  const std::size_t j = k - 1;
  if (!ok(d, j) || !ok(d, k)) return std::numeric_limits<double>::quiet_NaN();
  const double span = d.lambda[k] - d.lambda[j];
  if (span <= 0.0) return d.rho[k];
  const double t = (x - d.lambda[j]) / span;
  return (1.0 - t) * d.rho[j] + t * d.rho[k];
}

}  // namespace

std::size_t SpectralDensity::gap_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), false));
}

double SpectralDensity::integral() const {
  double s = 0.0;
  for (std::size_t k = 1; k < lambda.size(); ++k)
    if (ok(*this, k - 1) && ok(*this, k))
      s += 0.5 * (rho[k - 1] + rho[k]) * (lambda[k] - lambda[k - 1]);
  return s;
}

double SpectralDensity::cdf(double x) const {
  double s = 0.0;
  for (std::size_t k = 1; k < lambda.size(); ++k) {
    if (lambda[k - 1] >= x) break;
    if (!ok(*this, k - 1) || !ok(*this, k)) continue;
    const double hi = std::min(x, lambda[k]);
    const double w = lambda[k] - lambda[k - 1];
    const double t = (hi - lambda[k - 1]) / w;
    const double rho_hi = (1.0 - t) * rho[k - 1] + t * rho[k];
    s += 0.5 * (rho[k - 1] + rho_hi) * (hi - lambda[k - 1]);
  }
  return s;
}

SpectralDensity tabulate(const std::function<double(double)>& rho,
                         std::span<const double> lambda) {
  SpectralDensity d;
  d.lambda.assign(lambda.begin(), lambda.end());
  d.rho.resize(lambda.size());
  d.valid.assign(lambda.size(), true);
  for (std::size_t k = 0; k < lambda.size(); ++k) d.rho[k] = rho(lambda[k]);
  return d;
}

std::vector<double> linspace(double lo, double hi, std::size_t points) {
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t k = 0; k < points; ++k)
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
  return out;
}

SpectralDensity empirical_density(std::span<const double> sorted_samples, std::size_t bins,
                                  std::optional<std::pair<double, double>> range) {
  if (sorted_samples.empty()) fail(ErrorCode::kPrecondition, "no samples");
  if (bins == 0) fail(ErrorCode::kPrecondition, "need at least one bin");
  if (!std::is_sorted(sorted_samples.begin(), sorted_samples.end()))
    fail(ErrorCode::kPrecondition, "samples must be sorted");
  auto [lo, hi] = range.value_or(std::make_pair(sorted_samples.front(), sorted_samples.back()));
  if (!(hi > lo)) hi = lo + 1e-12;
  const double w = (hi - lo) / static_cast<double>(bins);
  SpectralDensity d;
  d.samples.assign(sorted_samples.begin(), sorted_samples.end());
  d.lambda.resize(bins);
  d.rho.assign(bins, 0.0);
  d.valid.assign(bins, true);
  for (std::size_t b = 0; b < bins; ++b) d.lambda[b] = lo + (static_cast<double>(b) + 0.5) * w;
  const double norm = 1.0 / (static_cast<double>(sorted_samples.size()) * w);
  for (double x : sorted_samples) {
    if (x < lo || x > hi) continue;
    auto b = static_cast<std::size_t>((x - lo) / w);
    d.rho[std::min(b, bins - 1)] += norm;
  }
  d.support_lo = sorted_samples.front();
  d.support_hi = sorted_samples.back();
  return d;
}

double ks_distance(const SpectralDensity& emp, const SpectralDensity& ana) {
  double worst = 0.0;
  if (!emp.samples.empty()) {
    const double n = static_cast<double>(emp.samples.size());
    for (std::size_t i = 0; i < emp.samples.size(); ++i) {
      const double f = ana.cdf(emp.samples[i]);
      worst = std::max({worst, std::abs(f - static_cast<double>(i) / n),
                        std::abs(f - static_cast<double>(i + 1) / n)});
    }
    return worst;
  }
  std::vector<double> xs = emp.lambda;
  xs.insert(xs.end(), ana.lambda.begin(), ana.lambda.end());
  std::sort(xs.begin(), xs.end());
  for (double x : xs) worst = std::max(worst, std::abs(emp.cdf(x) - ana.cdf(x)));
  return worst;
}

double l1_distance(const SpectralDensity& a, const SpectralDensity& b, double lo, double hi) {
  double s = 0.0;
  for (std::size_t k = 1; k < a.lambda.size(); ++k) {
    const double x0 = a.lambda[k - 1], x1 = a.lambda[k];
    if (x0 < lo || x1 > hi) continue;
    if (!ok(a, k - 1) || !ok(a, k)) continue;
    const double b0 = interpolate(b, x0), b1 = interpolate(b, x1);
    if (std::isnan(b0) || std::isnan(b1)) continue;
    s += 0.5 * (std::abs(a.rho[k - 1] - b0) + std::abs(a.rho[k] - b1)) * (x1 - x0);
  }
  return s;
}

}  // namespace sbspec
