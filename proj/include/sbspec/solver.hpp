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

#ifndef SBSPEC_SOLVER_HPP
#define SBSPEC_SOLVER_HPP

#include <optional>
#include <span>
#include <utility>

#include "sbspec/density.hpp"
#include "sbspec/freeprob.hpp"
#include "sbspec/grid.hpp"
#include "sbspec/kernel.hpp"

namespace sbspec {

struct SolverOptions {
  double tol = 1e-10;     // sup-norm bound on b - R0[a]
  int max_iter = 3000;
  double damping = 0.5;   // initial Picard step; halved when the residual grows
  int anderson = 6;       // mixing memory, 0 for plain damped Picard
};

/// Solution (a_z, b_z) of a = h / (z - h b), b = R0[a] on the grid of h.
struct FixedPointState {
  cplx z{};
  ComplexGrid a;
  ComplexGrid b;
  double residual = 0.0;
  int iterations = 0;
  R0Workspace ws;

  cplx A() const { return a.integral(); }
};

ComplexGrid r0_apply(const LocalCumulantKernel& g, const ComplexGrid& a);

/// Damped fixed-point iteration with Anderson mixing. A warm start is tried
/// first; on failure (or when the result is off the Herglotz branch) the solve
/// restarts from b = g_1 and walks z in from far above the real axis.
FixedPointState fixed_point_solve(const LocalCumulantKernel& g, const RealGrid& h, cplx z,
                                  const FixedPointState* warm_start = nullptr,
                                  const SolverOptions& opts = {});

/// Normalized trace of (z - M_h)^{-1}, i.e. int dx / (z - h b).
cplx resolvent(const FixedPointState& s, const RealGrid& h);
cplx resolvent(const LocalCumulantKernel& g, const RealGrid& h, cplx z,
               const FixedPointState* warm_start = nullptr, const SolverOptions& opts = {});

/// Resolvent of the block {h > 0}, normalized by its length.
cplx block_resolvent(const FixedPointState& s, const RealGrid& h);

inline constexpr int kMaxSeriesMoments = 8;

/// phi_1..phi_{n_max} from the large-z expansion G = sum phi_n z^{-n-1}.
/// The coefficients are read off a trapezoidal contour integral on a circle
/// outside the spectrum (radius from the kernel's spectral bound).
FormalSeries moment_series(const LocalCumulantKernel& g, const RealGrid& h, int n_max,
                           const SolverOptions& opts = {.tol = 1e-13, .max_iter = 20000});

struct DensityOptions {
  double eps = 1e-3;
  bool extrapolate = false;   // eps ladder {eps, 2 eps, 4 eps}, linear fit
  std::size_t chunk = 64;     // lambda points per warm-start chain
  int threads = 1;
  SolverOptions solver{};
};

struct DensityReport {
  SpectralDensity density;
  double max_residual = 0.0;
  int max_iterations = 0;
  std::size_t cold_restarts = 0;
};

/// sigma_I on the grid lambda (z = lambda + i eps), block-normalized, with
/// the atom 1 - l_I of the total measure recorded separately. Points where
/// the solve fails are marked as gaps.
DensityReport spectral_density(const LocalCumulantKernel& g, const RealGrid& h,
                               std::span<const double> lambda, const DensityOptions& opts = {});

/// int [log(z - h b) + a b] dx - F0[a] at the fixed point.
cplx grand_potential(const LocalCumulantKernel& g, const FixedPointState& s, const RealGrid& h);
cplx grand_potential(const LocalCumulantKernel& g, const RealGrid& h, cplx z,
                     const SolverOptions& opts = {});

/// (lhs, rhs) = (-h(x) dF/dh(x) by central differences, a(x) b(x)).
std::pair<cplx, cplx> functional_derivative_check(const LocalCumulantKernel& g, const RealGrid& h,
                                                  cplx z, std::size_t x_index,
                                                  const SolverOptions& opts = {.tol = 1e-13,
                                                                               .max_iter = 20000});

}  // namespace sbspec

#endif  // SBSPEC_SOLVER_HPP
