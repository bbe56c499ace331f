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

#include <algorithm>
#include <cmath>
#include <mutex>

#include "sbspec/ensembles.hpp"
#include "sbspec/ncpart.hpp"

namespace sbspec {

namespace {

// For each m <= 8: the NC partitions of m positions other than the one-part
// partition, each as a list of position bitmasks.
const std::vector<std::vector<unsigned>>& proper_partitions(int m) {
  static std::once_flag once;
  static std::vector<std::vector<std::vector<unsigned>>> table;
  std::call_once(once, [] {
    table.resize(kQssepMaxOrder + 1);
    for (int k = 1; k <= kQssepMaxOrder; ++k) {
      for (const auto& pi : ncpart::enumerate_nc(k)) {
        if (pi.size() == 1) continue;
        std::vector<unsigned> parts;
        for (const auto& p : pi.parts()) {
          unsigned mask = 0;
          for (int e : p) mask |= 1u << (e - 1);
          parts.push_back(mask);
        }
        table[static_cast<std::size_t>(k)].push_back(std::move(parts));
      }
    }
  });
  return table[static_cast<std::size_t>(m)];
}

double qssep_cumulant(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n > kQssepMaxOrder)
    fail(ErrorCode::kSizeLimit, "QSSEP cumulants are available for n <= 8, got " + std::to_string(n));
  const unsigned full = (1u << n) - 1;
  double val[1u << kQssepMaxOrder] = {};
  std::vector<unsigned> masks(full);
  for (unsigned m = 1; m <= full; ++m) masks[m - 1] = m;
  std::stable_sort(masks.begin(), masks.end(), [](unsigned a, unsigned b) {
    return __builtin_popcount(a) < __builtin_popcount(b);
  });
  int pos[kQssepMaxOrder];
  for (unsigned mask : masks) {
    int m = 0;
    double mn = 2.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        pos[m++] = i;
        mn = std::min(mn, x[static_cast<std::size_t>(i)]);
      }
    double rest = 0.0;
    for (const auto& parts : proper_partitions(m)) {
      double prod = 1.0;
      for (unsigned local : parts) {
        unsigned global = 0;
        for (int j = 0; j < m; ++j)
          if (local & (1u << j)) global |= 1u << pos[j];
        prod *= val[global];
      }
      rest += prod;
    }
    val[mask] = mn - rest;
  }
  return val[full];
}

// Discretized implicit R0: I_j = dx (a_j / 2 + sum_{k > j} a_k), the root w
// of dx sum_j 1/(w - I_j) = 1, and b_j = dx (sum_{k<j} 1/(w - I_k) + 1/(2(w - I_j))).
// This b is exactly dF0/da_j / dx for F0 = w - 1 - dx sum log(w - I_j).
class QssepDiscreteKernel final : public DiscreteKernel {
 public:
  explicit QssepDiscreteKernel(std::size_t cells) : n_(cells), dx_(1.0 / static_cast<double>(cells)) {}

  void apply_r0(std::span<const cplx> a, std::span<cplx> b, R0Workspace& ws) const override {
    std::vector<cplx> I = tails(a);
    const cplx w = root(I, ws);
    cplx acc = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const cplx inv = 1.0 / (w - I[j]);
      b[j] = dx_ * (acc + 0.5 * inv);
      acc += inv;
    }
  }

  cplx f0(std::span<const cplx> a, R0Workspace& ws) const override {
    std::vector<cplx> I = tails(a);
    const cplx w = root(I, ws);
    cplx s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) s += std::log(w - I[j]);
    return w - 1.0 - dx_ * s;
  }

  std::vector<cplx> tails(std::span<const cplx> a) const {
    std::vector<cplx> I(n_);
    cplx above = 0.0;
    for (std::size_t j = n_; j-- > 0;) {
      I[j] = dx_ * (0.5 * a[j] + above);
      above += a[j];
    }
    return I;
  }

  cplx root(const std::vector<cplx>& I, R0Workspace& ws) const {
    cplx mean = 0.0;
    for (const auto& v : I) mean += v;
    mean *= dx_;
    std::optional<cplx> w;
    if (ws.has_w) w = newton(I, 1.0, ws.w);
    if (!w) w = newton(I, 1.0, 1.0 + mean);
    if (!w) {
      // Follow the root from I = 0 (where w = 1) along t I, t: 0 -> 1.
      cplx cur = 1.0;
      double t = 0.0, dt = 0.25;
      while (t < 1.0 && dt > 1e-6) {
        const double next = std::min(1.0, t + dt);
        if (auto r = newton(I, next, cur)) {
          cur = *r;
          t = next;
          dt *= 1.5;
        } else {
          dt *= 0.5;
        }
      }
      if (t >= 1.0) w = cur;
    }
    if (!w) fail(ErrorCode::kNoSolution, "no root of the QSSEP normalization equation");
    ws.w = *w;
    ws.has_w = true;
    return *w;
  }

  // Damped Newton for dx sum_j 1/(w - t I_j) = 1.
  std::optional<cplx> newton(const std::vector<cplx>& I, double t, cplx w) const {
    auto eval = [&](cplx x, cplx& f, cplx& df) {
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
      f = -1.0;
      df = 0.0;
      for (const auto& v : I) {
        const cplx inv = 1.0 / (x - t * v);
        f += dx_ * inv;
        df -= dx_ * inv * inv;
      }
      return std::isfinite(std::abs(f)) && std::isfinite(std::abs(df)) && df != 0.0;
    };
    cplx f, df;
    if (!eval(w, f, df)) return std::nullopt;
    for (int it = 0; it < 100; ++it) {
      cplx step = f / df;
      cplx trial = w - step, ft, dft;
      int halvings = 0;
      while ((!eval(trial, ft, dft) || std::abs(ft) > std::abs(f)) && halvings < 30) {
        step *= 0.5;
        trial = w - step;
        ++halvings;
      }
      if (halvings == 30) return std::abs(f) < 1e-12 ? std::optional<cplx>(w) : std::nullopt;
      w = trial;
      f = ft;
      df = dft;
      if (std::abs(step) <= 1e-13 * std::abs(w)) return std::abs(f) < 1e-10 ? std::optional<cplx>(w) : std::nullopt;
    }
    return std::nullopt;
  }

 private:
  std::size_t n_;
  double dx_;
};

class QssepKernel final : public LocalCumulantKernel {
 public:
  std::string name() const override { return "qssep"; }

  double spectral_radius_bound(const RealGrid& h) const override {
    double m = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) m = std::max(m, h[i]);
    return m;
  }

 protected:
  double do_eval(std::span<const double> x) const override { return qssep_cumulant(x); }

  std::shared_ptr<const DiscreteKernel> discretize(std::size_t cells) const override {
    return std::make_shared<QssepDiscreteKernel>(cells);
  }
};

}  // namespace

KernelPtr qssep_kernel() {
  static const KernelPtr k = std::make_shared<QssepKernel>();
  return k;
}

void QssepBlockSpec::validate() const {
  if (!(c >= 0.0 && c < d && d <= 1.0)) fail(ErrorCode::kDomain, "QSSEP block needs 0 <= c < d <= 1");
}

double qssep_F0(const RealGrid& a) {
  const std::size_t n = a.size();
  if (n == 0) fail(ErrorCode::kPrecondition, "empty grid");
  QssepDiscreteKernel k(n);
  std::vector<cplx> ac(a.raw().begin(), a.raw().end());
  auto I = k.tails(ac);
  double top = -1e300;
  for (const auto& v : I) top = std::max(top, v.real());
  // On (max I, max I + 2] the normalization falls from +inf to below 0.
  auto phi = [&](double w) {
    double s = -1.0;
    for (const auto& v : I) s += a.cell_width() / (w - v.real());
    return s;
  };
  double lo = top, hi = top + 2.0;
  if (!(phi(hi) <= 0.0)) fail(ErrorCode::kNoSolution, "no admissible root w > max I");
  for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) > 0.0 ? lo : hi) = mid;
  }
  const double w = 0.5 * (lo + hi);
  double s = 0.0;
  for (const auto& v : I) s += std::log(w - v.real());
  return w - 1.0 - a.cell_width() * s;
}

double qssep_full_density(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) return 0.0;
  const double L = std::log((1.0 - lambda) / lambda);
  return 1.0 / (lambda * (1.0 - lambda) * (M_PI * M_PI + L * L));
}

QssepSupport qssep_support(const QssepBlockSpec& spec) {
  spec.validate();
  const double c = spec.c, d = spec.d, l = spec.ell();
  QssepSupport s;
  s.discriminant = l * (1.0 - l) * (l * (1.0 - l) + 4.0 * c * (1.0 - d));
  if (c == 0.0 && d == 1.0) {
    s.z_minus = 0.0;
    s.z_plus = 1.0;
    s.delta_minus = -INFINITY;
    s.delta_plus = INFINITY;
    return s;
  }
  if (d == 1.0) {
    // Mirror image of the block [0, 1 - c].
    const auto m = qssep_support({0.0, 1.0 - c});
    s.z_minus = 1.0 - m.z_plus;
    s.z_plus = 1.0 - m.z_minus;
    s.delta_minus = m.delta_minus;
    s.delta_plus = m.delta_plus;
    return s;
  }
  // delta solves c (1-d) delta^2 + l (1-d-c) delta - l = 0; with c = 0 the
  // lower root escapes to -inf and z_- = 0.
  const double A = c * (1.0 - d), B = l * (1.0 - d - c), C = -l;
  if (c == 0.0) {
    s.delta_plus = 1.0 / (1.0 - d);
    s.delta_minus = -INFINITY;
  } else {
    const double disc = std::max(0.0, B * B - 4.0 * A * C);
    const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
    const double r1 = q / A, r2 = C / q;
    s.delta_plus = std::max(r1, r2);
    s.delta_minus = std::min(r1, r2);
  }
  const double root = std::sqrt(std::max(0.0, s.discriminant));
  const double base = c * (1.0 - c) + d * (1.0 - d);
  const double kp = base + root, km = base - root;
  const double w = 2.0 * (1.0 - d) * (1.0 - d);
  s.z_plus = kp / (kp + w * std::exp(-s.delta_plus));
  s.z_minus = c == 0.0 ? 0.0 : km / (km + w * std::exp(-s.delta_minus));
  return s;
}

double QRoot::density() const {
  const double L = std::log(r);
  return theta / (theta * theta + L * L) / (M_PI * lambda * (1.0 - lambda));
}

namespace {

struct QEquation {
  double c, d, l, k;

  cplx f(cplx u) const { return k * std::exp(u) * ((1.0 - d) * u + l) - (c * u - l); }
  cplx df(cplx u) const { return k * std::exp(u) * ((1.0 - d) * u + l + (1.0 - d)) - c; }

  double residual(double z, cplx u) const {
    const cplx Q = std::exp(u);
    return std::abs((1.0 - z + z * Q) * (l - c * u) - z * (l - 1.0) * Q * u);
  }

  std::optional<cplx> newton(cplx u) const {
    for (int it = 0; it < 80; ++it) {
      const cplx step = f(u) / df(u);
      u -= step;
      if (!std::isfinite(u.real()) || !std::isfinite(u.imag())) return std::nullopt;
      if (std::abs(step) <= 1e-15 * (1.0 + std::abs(u))) return u;
    }
    return std::nullopt;
  }
};

bool admissible(cplx u) { return u.imag() > 0.0 && u.imag() <= M_PI + 1e-12; }

}  // namespace

QRoot solve_Q(const QssepBlockSpec& spec, double lambda, const QRoot* warm_start) {
  const auto sup = qssep_support(spec);
  if (!(lambda > sup.z_minus && lambda < sup.z_plus))
    fail(ErrorCode::kDomain, "lambda lies outside the support of the subblock spectrum");
  const QEquation eq{spec.c, spec.d, spec.ell(), lambda / (1.0 - lambda)};
  std::optional<cplx> u;
  if (warm_start) {
    u = eq.newton(cplx(std::log(warm_start->r), warm_start->theta));
    if (u && !admissible(*u)) u.reset();
  }
  if (!u) {
    const double L = std::log((1.0 - lambda) / lambda);
    for (double th : {M_PI / 2.0, M_PI * (1.0 - 0.5 * spec.ell()), 1.0, 2.0, 2.8, M_PI - 1e-3, 0.5, 0.2}) {
      u = eq.newton(cplx(L, th));
      if (u && admissible(*u)) break;
      u.reset();
    }
  }
  if (!u) fail(ErrorCode::kRootTracking, "Newton failed to locate Q at lambda = " + std::to_string(lambda));
  QRoot q;
  q.lambda = lambda;
  q.r = std::exp(u->real());
  q.theta = std::min(u->imag(), M_PI);
  q.residual = eq.residual(lambda, *u);
  if (!(q.residual <= 1e-12)) fail(ErrorCode::kRootTracking, "Q residual above tolerance");
  return q;
}

SpectralDensity qssep_subblock_density(const QssepBlockSpec& spec, std::span<const double> lambda) {
  const auto sup = qssep_support(spec);
  SpectralDensity d;
  d.lambda.assign(lambda.begin(), lambda.end());
  d.rho.assign(lambda.size(), 0.0);
  d.valid.assign(lambda.size(), true);
  d.block_mass = spec.ell();
  d.atom_at_zero = 1.0 - spec.ell();
  d.support_lo = sup.z_minus;
  d.support_hi = sup.z_plus;
  if (lambda.empty()) return d;
  double cell = 0.0;
  for (std::size_t k = 1; k < lambda.size(); ++k) cell = std::max(cell, std::abs(lambda[k] - lambda[k - 1]));
  const double mid = 0.5 * (sup.z_minus + sup.z_plus);
  const QRoot seed = solve_Q(spec, mid);

  // Walks from the previous root to lambda[k], halving the step on failure.
  auto track = [&](const QRoot& from, double target) -> std::optional<QRoot> {
    QRoot cur = from;
    double step = target - from.lambda;
    double x = from.lambda;
    while (std::abs(target - x) > 0.0) {
      const double next = std::abs(step) >= std::abs(target - x) ? target : x + step;
      try {
        cur = solve_Q(spec, next, &cur);
        x = next;
      } catch (const Error&) {
        step *= 0.5;
        if (std::abs(step) < 1e-9) return std::nullopt;
      }
    }
    return cur;
  };
  auto inside = [&](double x) { return x > sup.z_minus && x < sup.z_plus; };
  auto near_edge = [&](double x) { return x - sup.z_minus <= cell || sup.z_plus - x <= cell; };
  const auto split = static_cast<std::size_t>(
      std::lower_bound(lambda.begin(), lambda.end(), mid) - lambda.begin());
  for (int dir : {+1, -1}) {
    std::optional<QRoot> prev = seed;
    for (std::size_t k = dir > 0 ? split : split - 1; k < lambda.size(); k += static_cast<std::size_t>(dir)) {
      if (!inside(lambda[k])) continue;
      std::optional<QRoot> q = prev ? track(*prev, lambda[k]) : std::nullopt;
      if (!q) {
        try {
          q = solve_Q(spec, lambda[k]);
        } catch (const Error&) {
        }
      }
      if (q) {
        d.rho[k] = q->density();
        prev = q;
      } else if (!near_edge(lambda[k])) {
        d.valid[k] = false;
      }
      if (dir < 0 && k == 0) break;
    }
    if (split == 0 && dir < 0) break;
  }
  return d;
}

}  // namespace sbspec
