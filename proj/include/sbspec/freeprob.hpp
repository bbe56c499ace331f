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

#ifndef SBSPEC_FREEPROB_HPP
#define SBSPEC_FREEPROB_HPP

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "sbspec/density.hpp"
#include "sbspec/grid.hpp"

namespace sbspec {

inline constexpr int kDefaultSeriesOrder = 12;

enum class SeriesKind { kMoments, kFreeCumulants, kSCoeffs };

/// Truncated power series. Moments and free cumulants are indexed from order
/// 1 (m_1..m_N, kappa_1..kappa_N); S coefficients by the power of w
/// (S_0..S_{N-1}). Nothing is known beyond the stored order.
class FormalSeries {
 public:
  FormalSeries(SeriesKind kind, std::vector<double> coeffs);

  static FormalSeries moments(std::vector<double> m) { return {SeriesKind::kMoments, std::move(m)}; }
  static FormalSeries cumulants(std::vector<double> k) {
    return {SeriesKind::kFreeCumulants, std::move(k)};
  }
  static FormalSeries s_coeffs(std::vector<double> s) { return {SeriesKind::kSCoeffs, std::move(s)}; }

  SeriesKind kind() const noexcept { return kind_; }
  int order() const noexcept { return static_cast<int>(coeffs_.size()); }
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }

  // Moments and cumulants: k in 1..order. S coefficients: k in 0..order-1.
  double operator[](int k) const;

  FormalSeries truncated(int order) const;

 private:
  SeriesKind kind_;
  std::vector<double> coeffs_;
};

FormalSeries moments_to_cumulants(const FormalSeries& m);
FormalSeries cumulants_to_moments(const FormalSeries& kappa);

/// S-transform coefficients, defined through C(w S(w)) = w with
/// C(u) = sum_k kappa_k u^k. N cumulants give S_0..S_{N-1}.
FormalSeries s_transform(const FormalSeries& kappa);
FormalSeries s_to_cumulants(const FormalSeries& s);

FormalSeries free_additive_convolution(const FormalSeries& a, const FormalSeries& b);
FormalSeries free_multiplicative_convolution(const FormalSeries& sa, const FormalSeries& sb);
FormalSeries free_compress(const FormalSeries& kappa, double t);

/// A probability measure on the real line, given by atoms, by a density on
/// [lo, hi] (piecewise constant on uniform cells) or by samples.
class Measure1D {
 public:
  enum class Kind { kAtoms, kDensity, kSamples };

  // Weights must sum to 1 within 1e-10.
  static Measure1D atoms(std::vector<std::pair<double, double>> location_weight);
  // Normalized to unit mass on construction.
  static Measure1D density(double lo, double hi, std::vector<double> values);
  static Measure1D samples(std::vector<double> xs);

  Kind kind() const noexcept { return kind_; }
  double support_lo() const noexcept { return lo_; }
  double support_hi() const noexcept { return hi_; }

  FormalSeries moments(int order = kDefaultSeriesOrder) const;
  FormalSeries cumulants(int order = kDefaultSeriesOrder) const;

  cplx cauchy(cplx z) const;
  cplx cauchy_derivative(cplx z) const;
  // int log(scale * (omega - x)) dsigma(x), principal branch per point.
  cplx log_potential(cplx omega, cplx scale) const;

  /// Solves G(omega) = target by Newton from guess, keeping Im omega on the
  /// side opposite to Im target. Throws no-solution on failure.
  cplx inverse_cauchy(cplx target, cplx guess) const;

  /// Inverse CDF at u in (0,1).
  double quantile(double u) const;

 private:
  Measure1D() = default;
  double cell_width() const;  // density cells; 0 for atoms and samples

  Kind kind_ = Kind::kAtoms;
  std::vector<double> x_, w_;  // nodes and weights (density: cell midpoints)
  double lo_ = 0.0, hi_ = 0.0;
};

/// rho(lambda) = Im G(lambda - i eps) / pi. With extrapolate, the values at
/// eps, 2 eps and 4 eps are fitted linearly in eps and the intercept is kept.
/// Non-finite resolvent values mark the point as a gap.
SpectralDensity density_from_resolvent(const std::function<cplx(cplx)>& g,
                                       std::span<const double> lambda, double eps,
                                       bool extrapolate = false);

cplx semicircle_cauchy(cplx z, double s);
double semicircle_density(double x, double s);

}  // namespace sbspec

#endif  // SBSPEC_FREEPROB_HPP
