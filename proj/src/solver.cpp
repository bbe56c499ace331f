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

#include "sbspec/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace sbspec {

namespace {

using VecC = Eigen::VectorXcd;

bool finite(const VecC& v) { return v.allFinite(); }

double sup(const VecC& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

struct Attempt {
  bool converged = false;
  double residual = 0.0;
  int iterations = 0;
};

// Runs the mixed iteration in place on (a, b) starting from b.
Attempt iterate(const DiscreteKernel& dk, const RealGrid& h, cplx z, VecC& a, VecC& b,
                R0Workspace& ws, const SolverOptions& opts) {
  const auto n = static_cast<Eigen::Index>(h.size());
  const int memory = std::max(0, opts.anderson);
  VecC t(n), f(n), f_prev(n), b_prev(n);
  Eigen::MatrixXcd dF(n, memory), dB(n, memory);
  int stored = 0;
  double eta = opts.damping;
  double prev_res = std::numeric_limits<double>::infinity();
  Attempt out;
  auto update_a = [&]() {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double hi = h[static_cast<std::size_t>(i)];
      const cplx den = z - hi * b[i];
      if (hi != 0.0 && std::abs(den) < 1e-300) return false;
      a[i] = hi / den;
    }
    return true;
  };
  int retreats = 0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    out.iterations = it;
    bool good = update_a();
    if (good) {
      try {
        dk.apply_r0({a.data(), static_cast<std::size_t>(n)}, {t.data(), static_cast<std::size_t>(n)}, ws);
      } catch (const Error&) {
        good = false;
      }
    }
    double res = std::numeric_limits<double>::infinity();
    if (good) {
      f = t - b;
      res = sup(f);
    }
    if (std::isfinite(res)) out.residual = res;
    if (res <= opts.tol) {
      out.converged = true;
      return out;
    }
    if (!std::isfinite(res) || (res > 4.0 * prev_res && it > 1)) {
      // Diverging or left the domain of R0: drop the mixing history and
      // retreat to a smaller plain step from the last good iterate.
      if (it == 1 || ++retreats > 40) return out;
      stored = 0;
      eta = std::max(eta * 0.5, 1.0 / 64.0);
      b = b_prev + eta * f_prev;
      prev_res = std::numeric_limits<double>::infinity();
      continue;
    }
    if (memory > 0 && it > 1) {
      if (stored == memory) {
        dF.leftCols(memory - 1) = dF.rightCols(memory - 1).eval();
        dB.leftCols(memory - 1) = dB.rightCols(memory - 1).eval();
        --stored;
      }
      dF.col(stored) = f - f_prev;
      dB.col(stored) = b - b_prev;
      ++stored;
    }
    b_prev = b;
    f_prev = f;
    prev_res = res;
    if (stored > 0) {
      auto F = dF.leftCols(stored);
      Eigen::VectorXcd gamma = F.colPivHouseholderQr().solve(f);
      VecC next = b + eta * f - (dB.leftCols(stored) + eta * F) * gamma;
      if (finite(next)) {
        b = next;
        continue;
      }
      stored = 0;
    }
    b = b + eta * f;
  }
  return out;
}

bool herglotz_ok(cplx z, const VecC& a) {
  if (z.imag() == 0.0) return true;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i].imag() * z.imag() > 1e-12 * (std::abs(a[i]) + 1e-300)) return false;
  return true;
}

VecC initial_b(const LocalCumulantKernel& g, const DiscreteKernel& dk, std::size_t n, R0Workspace& ws) {
  (void)g;
  VecC zero = VecC::Zero(static_cast<Eigen::Index>(n)), b(static_cast<Eigen::Index>(n));
  dk.apply_r0({zero.data(), n}, {b.data(), n}, ws);
  return b;
}

FixedPointState pack(cplx z, const VecC& a, const VecC& b, const Attempt& at, const R0Workspace& ws) {
  FixedPointState s;
  s.z = z;
  s.a = ComplexGrid(std::vector<cplx>(a.data(), a.data() + a.size()));
  s.b = ComplexGrid(std::vector<cplx>(b.data(), b.data() + b.size()));
  s.residual = at.residual;
  s.iterations = at.iterations;
  s.ws = ws;
  return s;
}

}  // namespace

ComplexGrid r0_apply(const LocalCumulantKernel& g, const ComplexGrid& a) {
  auto dk = g.on_grid(a.size());
  ComplexGrid b(a.size());
  R0Workspace ws;
  dk->apply_r0(a.values(), b.values(), ws);
  return b;
}

FixedPointState fixed_point_solve(const LocalCumulantKernel& g, const RealGrid& h, cplx z,
                                  const FixedPointState* warm_start, const SolverOptions& opts) {
  const std::size_t n = h.size();
  if (n == 0) fail(ErrorCode::kPrecondition, "empty grid");
  for (std::size_t i = 0; i < n; ++i)
    if (!(h[i] >= 0.0) || !std::isfinite(h[i])) fail(ErrorCode::kPrecondition, "h must be finite and nonnegative");
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) fail(ErrorCode::kDomain, "z must be finite");
  auto dk = g.on_grid(n);
  const auto N = static_cast<Eigen::Index>(n);
  VecC a(N), b(N);

  {
    std::vector<cplx> av(n), bv(n);
    R0Workspace ws;
    if (dk->solve_exact(h.values(), z, av, bv, ws)) {
      for (std::size_t i = 0; i < n; ++i) a[static_cast<Eigen::Index>(i)] = av[i], b[static_cast<Eigen::Index>(i)] = bv[i];
      VecC t(N);
      dk->apply_r0({a.data(), n}, {t.data(), n}, ws);
      Attempt at{true, sup(t - b), 0};
      return pack(z, a, b, at, ws);
    }
  }

  if (warm_start && warm_start->b.size() == n) {
    R0Workspace ws = warm_start->ws;
    for (std::size_t i = 0; i < n; ++i) b[static_cast<Eigen::Index>(i)] = warm_start->b[i];
    Attempt at = iterate(*dk, h, z, a, b, ws, opts);
    if (at.converged && herglotz_ok(z, a)) return pack(z, a, b, at, ws);
  }

  // Cold start: b = R0[0] = g_1, then approach z from far off the real axis.
  R0Workspace ws;
  b = initial_b(g, *dk, n, ws);
  Attempt at;
  if (z.imag() == 0.0) {
    at = iterate(*dk, h, z, a, b, ws, opts);
  } else {
    const double sign = z.imag() > 0.0 ? 1.0 : -1.0;
    const double target = std::abs(z.imag());
    double y = std::max({1.0, target, g.spectral_radius_bound(h)});
    int total = 0;
    while (true) {
      const bool last = y <= target * 1.5;
      const cplx zk = last ? z : cplx(z.real(), sign * y);
      SolverOptions stage = opts;
      if (!last) stage.tol = std::max(opts.tol, 1e-9);
      at = iterate(*dk, h, zk, a, b, ws, stage);
      total += at.iterations;
      if (!at.converged) break;
      if (last) break;
      y *= 0.5;
    }
    at.iterations = total;
  }
  if (!at.converged) {
    throw ConvergenceError("fixed point did not converge at z = (" + std::to_string(z.real()) + ", " +
                               std::to_string(z.imag()) + "), residual " + std::to_string(at.residual),
                           at.residual, at.iterations);
  }
  if (!herglotz_ok(z, a)) fail(ErrorCode::kBranch, "fixed point is off the Herglotz branch");
  return pack(z, a, b, at, ws);
}

cplx resolvent(const FixedPointState& s, const RealGrid& h) {
  cplx sum = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) sum += 1.0 / (s.z - h[i] * s.b[i]);
  return sum * h.cell_width();
}

cplx resolvent(const LocalCumulantKernel& g, const RealGrid& h, cplx z,
               const FixedPointState* warm_start, const SolverOptions& opts) {
  return resolvent(fixed_point_solve(g, h, z, warm_start, opts), h);
}

cplx block_resolvent(const FixedPointState& s, const RealGrid& h) {
  cplx sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] <= 0.0) continue;
    sum += 1.0 / (s.z - h[i] * s.b[i]);
    ++count;
  }
  if (count == 0) fail(ErrorCode::kPrecondition, "h vanishes identically");
  return sum / static_cast<double>(count);
}

FormalSeries moment_series(const LocalCumulantKernel& g, const RealGrid& h, int n_max,
                           const SolverOptions& opts) {
  if (n_max < 1) fail(ErrorCode::kDomain, "n_max must be positive");
  if (n_max > kMaxSeriesMoments)
    fail(ErrorCode::kConditioning, "moment extraction is limited to n <= 8; reduce n_max");
  const double bound = g.spectral_radius_bound(h);
  const double radius = bound > 0.0 ? 1.5 * bound : 1.0;
  constexpr int kNodes = 128;
  // The kernel is real, so G(conj z) = conj G(z): solve on the upper half only.
  std::vector<cplx> values(kNodes);
  std::optional<FixedPointState> prev;
  for (int k = 0; k <= kNodes / 2; ++k) {
    const cplx z = std::polar(radius, 2.0 * M_PI * k / kNodes);
    const cplx zs = (k == 0 || k == kNodes / 2) ? cplx(z.real(), 0.0) : z;
    auto s = fixed_point_solve(g, h, zs, prev ? &*prev : nullptr, opts);
    values[static_cast<std::size_t>(k)] = resolvent(s, h);
    if (k != 0 && k != kNodes / 2) values[static_cast<std::size_t>(kNodes - k)] = std::conj(values[static_cast<std::size_t>(k)]);
    prev = std::move(s);
  }
  std::vector<double> phi(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    cplx acc = 0.0;
    for (int k = 0; k < kNodes; ++k) {
      const double theta = 2.0 * M_PI * k / kNodes;
      acc += values[static_cast<std::size_t>(k)] * std::polar(std::pow(radius, n + 1), (n + 1) * theta);
    }
    phi[static_cast<std::size_t>(n - 1)] = acc.real() / kNodes;
  }
  return FormalSeries::moments(std::move(phi));
}

DensityReport spectral_density(const LocalCumulantKernel& g, const RealGrid& h,
                               std::span<const double> lambda, const DensityOptions& opts) {
  if (!(opts.eps > 0.0)) fail(ErrorCode::kDomain, "eps must be positive");
  const double ell = support_fraction(h);
  if (ell <= 0.0) fail(ErrorCode::kPrecondition, "h vanishes identically");
  const std::vector<double> ladder = opts.extrapolate
                                         ? std::vector<double>{opts.eps, 2 * opts.eps, 4 * opts.eps}
                                         : std::vector<double>{opts.eps};
  const std::size_t m = lambda.size();
  // values[j][k]: -Im G_I(lambda_k + i eps_j) / pi
  std::vector<std::vector<double>> values(ladder.size(), std::vector<double>(m, 0.0));
  std::vector<char> ok(m, 1);
  std::vector<double> residual(m, 0.0);
  std::vector<int> iterations(m, 0);
  std::vector<char> cold(m, 0);
  g.on_grid(h.size());  // build the discretization once, outside the workers

  const std::size_t chunk = std::max<std::size_t>(1, opts.chunk);
  const std::size_t chunks = (m + chunk - 1) / chunk;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t c = next++; c < chunks; c = next++) {
      const std::size_t lo = c * chunk, hi = std::min(m, lo + chunk);
      for (std::size_t j = 0; j < ladder.size(); ++j) {
        std::optional<FixedPointState> prev;
        for (std::size_t k = lo; k < hi; ++k) {
          const cplx z(lambda[k], ladder[j]);
          try {
            auto s = fixed_point_solve(g, h, z, prev ? &*prev : nullptr, opts.solver);
            values[j][k] = -block_resolvent(s, h).imag() / M_PI;
            residual[k] = std::max(residual[k], s.residual);
            iterations[k] = std::max(iterations[k], s.iterations);
            if (!prev) cold[k] = 1;
            prev = std::move(s);
          } catch (const Error&) {
            ok[k] = 0;
            prev.reset();
          }
        }
      }
    }
  };
  const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(chunks)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  DensityReport rep;
  auto& d = rep.density;
  d.lambda.assign(lambda.begin(), lambda.end());
  d.rho.assign(m, 0.0);
  d.valid.assign(m, true);
  d.block_mass = ell;
  d.atom_at_zero = 1.0 - ell;
  for (std::size_t k = 0; k < m; ++k) {
    d.valid[k] = ok[k] != 0;
    if (!ok[k]) continue;
    if (ladder.size() == 1) {
      d.rho[k] = values[0][k];
    } else {
      const double nn = static_cast<double>(ladder.size());
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t j = 0; j < ladder.size(); ++j) {
        sx += ladder[j];
        sy += values[j][k];
        sxx += ladder[j] * ladder[j];
        sxy += ladder[j] * values[j][k];
      }
      d.rho[k] = (sy * sxx - sx * sxy) / (nn * sxx - sx * sx);
    }
    rep.max_residual = std::max(rep.max_residual, residual[k]);
    rep.max_iterations = std::max(rep.max_iterations, iterations[k]);
    rep.cold_restarts += static_cast<std::size_t>(cold[k]);
  }
  return rep;
}

cplx grand_potential(const LocalCumulantKernel& g, const FixedPointState& s, const RealGrid& h) {
  cplx sum = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) sum += std::log(s.z - h[i] * s.b[i]) + s.a[i] * s.b[i];
  R0Workspace ws = s.ws;
  return sum * h.cell_width() - g.on_grid(h.size())->f0(s.a.values(), ws);
}

cplx grand_potential(const LocalCumulantKernel& g, const RealGrid& h, cplx z, const SolverOptions& opts) {
  return grand_potential(g, fixed_point_solve(g, h, z, nullptr, opts), h);
}

std::pair<cplx, cplx> functional_derivative_check(const LocalCumulantKernel& g, const RealGrid& h,
                                                  cplx z, std::size_t x_index,
                                                  const SolverOptions& opts) {
  if (x_index >= h.size()) fail(ErrorCode::kDomain, "probe index outside the grid");
  const double hx = h[x_index];
  if (!(hx > 0.0)) fail(ErrorCode::kPrecondition, "h must be positive at the probed cell");
  const auto base = fixed_point_solve(g, h, z, nullptr, opts);
  const double delta = 1e-3 * hx;
  RealGrid up = h, down = h;
  up[x_index] += delta;
  down[x_index] -= delta;
  const cplx fu = grand_potential(g, fixed_point_solve(g, up, z, &base, opts), up);
  const cplx fd = grand_potential(g, fixed_point_solve(g, down, z, &base, opts), down);
  const cplx lhs = -hx * (fu - fd) / (2.0 * delta * h.cell_width());
  return {lhs, base.a[x_index] * base.b[x_index]};
}

}  // namespace sbspec
