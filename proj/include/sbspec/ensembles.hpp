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

#ifndef SBSPEC_ENSEMBLES_HPP
#define SBSPEC_ENSEMBLES_HPP

#include <functional>
#include <optional>
#include <span>
#include <utility>

#include "sbspec/density.hpp"
#include "sbspec/freeprob.hpp"
#include "sbspec/kernel.hpp"
#include "sbspec/solver.hpp"

namespace sbspec {

// ---- Wigner and Haar-rotated ensembles -------------------------------------

/// g_2 = s^2, all other orders vanish.
KernelPtr wigner_kernel(double s);

/// Constant local free cumulants g_n = kappa_n, n <= kappa.order(). With a
/// spectrum attached, R0 uses the exact R-transform of that measure instead of
/// the truncated cumulant polynomial.
KernelPtr haar_kernel(const FormalSeries& kappa, std::optional<Measure1D> spectrum = std::nullopt);

/// Diagonal-covariance Wigner kernel g_2(x,y) = s(x)^2 delta(x - y). It has
/// no pointwise values; the solver uses the per-cell closed form of
/// a (z - h s^2 a) = h.
KernelPtr inhomogeneous_wigner_kernel(std::function<double(double)> s);

/// (1/2pi) int dx sqrt(max(4 s^2 - lambda^2, 0)) / s^2, midpoint rule on s.
double inhomogeneous_wigner_density(const RealGrid& s, double lambda);

/// (1 - p) delta_0 + p delta_1.
Measure1D bernoulli_measure(double p);

/// m_n(sigma_I) for the block of length l of a Haar-rotated matrix with
/// spectrum cumulants kappa: l^n times the moments of the compression by l.
FormalSeries haar_subblock_moments(const FormalSeries& kappa, double ell);

/// Density of sigma_I at z = lambda + i eps from A = G_sigma(z + (1 - l)/A),
/// G_I = A / l (the compressed measure with eigenvalues rescaled by l).
SpectralDensity haar_subblock_density(const Measure1D& sigma, double ell,
                                      std::span<const double> lambda, double eps);

// ---- QSSEP -----------------------------------------------------------------

inline constexpr int kQssepMaxOrder = 8;

/// Stationary QSSEP local free cumulants: the NC sum of g_pi equals min(x).
KernelPtr qssep_kernel();

struct QssepBlockSpec {
  double c = 0.0;
  double d = 1.0;

  double ell() const { return d - c; }
  void validate() const;
};

/// F0[a] = w - 1 - int log(w - I_a(x)) dx with int dx / (w - I_a(x)) = 1 and
/// I_a(x) = int_x^1 a. Real a; the admissible root has w > max I_a.
double qssep_F0(const RealGrid& a);

double qssep_full_density(double lambda);

struct QssepSupport {
  double z_minus = 0.0;
  double z_plus = 1.0;
  double delta_minus = 0.0;  // -inf when c = 0
  double delta_plus = 0.0;
  double discriminant = 0.0;
};
QssepSupport qssep_support(const QssepBlockSpec& spec);

struct QRoot {
  double lambda = 0.0;
  double r = 1.0;
  double theta = M_PI;
  double residual = 0.0;  // |(1 - z + zQ)(l - c log Q) - z(l - 1) Q log Q|

  double density() const;
};

/// Root Q = r e^{i theta}, theta in (0, pi], of
/// (lambda/(1-lambda)) Q ((1-d) log Q + l) = c log Q - l, by complex Newton
/// on u = log Q. Without a warm start, several seeds are tried.
QRoot solve_Q(const QssepBlockSpec& spec, double lambda, const QRoot* warm_start = nullptr);

/// Closed-form subblock density, continued outward from the support midpoint.
SpectralDensity qssep_subblock_density(const QssepBlockSpec& spec, std::span<const double> lambda);

// ---- Non-freeness ------------------------------------------------------------

struct NonfreenessReport {
  FormalSeries ratio;  // w-expansion of z_0 / z_I
  FormalSeries s_h;    // w-expansion of S_h
  double max_gap = 0.0;
  bool free_compatible = false;
};

/// order 1: leading coefficients only; order 2: through the linear term.
/// The bracket integrals use the midpoint grid of h.
NonfreenessReport nonfreeness_diagnostic(const LocalCumulantKernel& g, const RealGrid& h, int order,
                                         double tol = 1e-10);

}  // namespace sbspec

#endif  // SBSPEC_ENSEMBLES_HPP
