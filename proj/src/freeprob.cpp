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

#include "sbspec/freeprob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sbspec {

namespace {

using Poly = std::vector<double>;  // p[k] is the coefficient of u^k

Poly multiply(const Poly& a, const Poly& b, std::size_t len) {
  Poly out(len, 0.0);
  for (std::size_t i = 0; i < a.size() && i < len; ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size() && i + j < len; ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

// sum_k c[k-1] v^k for a series v without constant term, truncated to len.
Poly compose(const std::vector<double>& c, const Poly& v, std::size_t len) {
  Poly out(len, 0.0), power = v;
  power.resize(len, 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) {
    for (std::size_t i = 0; i < len; ++i) out[i] += c[k] * power[i];
    power = multiply(power, v, len);
  }
  return out;
}

// Compositional inverse of f(u) = sum f[k-1] u^k (f[0] != 0) to the same order.
std::vector<double> revert(const std::vector<double>& f) {
  const std::size_t n = f.size();
  Poly g(n + 1, 0.0);
  g[1] = 1.0 / f[0];
  for (std::size_t it = 1; it < n; ++it) {
    Poly fg = compose(f, g, n + 1);
    for (std::size_t i = 1; i <= n; ++i) g[i] += ((i == 1 ? 1.0 : 0.0) - fg[i]) / f[0];
  }
  return std::vector<double>(g.begin() + 1, g.end());
}

void require_kind(const FormalSeries& s, SeriesKind kind, const char* what) {
  if (s.kind() != kind) fail(ErrorCode::kPrecondition, std::string(what) + ": wrong series kind");
}

}  // namespace

FormalSeries::FormalSeries(SeriesKind kind, std::vector<double> coeffs)
    : kind_(kind), coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) fail(ErrorCode::kPrecondition, "series order must be at least 1");
}

double FormalSeries::operator[](int k) const {
  const int base = kind_ == SeriesKind::kSCoeffs ? 0 : 1;
  if (k < base || k >= base + order())
    fail(ErrorCode::kSizeLimit, "series coefficient " + std::to_string(k) + " beyond truncation");
  return coeffs_[static_cast<std::size_t>(k - base)];
}

FormalSeries FormalSeries::truncated(int order) const {
  if (order < 1 || order > this->order()) fail(ErrorCode::kSizeLimit, "bad truncation order");
  return {kind_, std::vector<double>(coeffs_.begin(), coeffs_.begin() + order)};
}

FormalSeries cumulants_to_moments(const FormalSeries& kappa) {
  require_kind(kappa, SeriesKind::kFreeCumulants, "cumulants_to_moments");
  // M(u) = 1 + C(u M(u)); each pass fixes one more order.
  const std::size_t n = static_cast<std::size_t>(kappa.order());
  Poly m(n + 1, 0.0);
  m[0] = 1.0;
  for (std::size_t it = 0; it < n; ++it) {
    Poly um(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) um[i + 1] = m[i];
    Poly next = compose(kappa.coeffs(), um, n + 1);
    next[0] += 1.0;
    m = std::move(next);
  }
  return FormalSeries::moments(std::vector<double>(m.begin() + 1, m.end()));
}

FormalSeries moments_to_cumulants(const FormalSeries& m) {
  require_kind(m, SeriesKind::kMoments, "moments_to_cumulants");
  const int n = m.order();
  std::vector<double> kappa(static_cast<std::size_t>(n), 0.0);
  for (int k = 1; k <= n; ++k) {
    // m_k = kappa_k + (terms in kappa_1..kappa_{k-1}).
    std::vector<double> head(kappa.begin(), kappa.begin() + k);
    head.back() = 0.0;
    const double rest = cumulants_to_moments(FormalSeries::cumulants(head))[k];
    kappa[static_cast<std::size_t>(k - 1)] = m[k] - rest;
  }
  return FormalSeries::cumulants(std::move(kappa));
}

FormalSeries s_transform(const FormalSeries& kappa) {
  require_kind(kappa, SeriesKind::kFreeCumulants, "s_transform");
  double scale = 1.0;
  for (double c : kappa.coeffs()) scale = std::max(scale, std::abs(c));
  if (std::abs(kappa[1]) <= 1e-12 * scale)
    fail(ErrorCode::kUndefinedS, "S-transform needs a nonzero first cumulant");
  // psi = C^{-1}; S(w) = psi(w) / w.
  return FormalSeries::s_coeffs(revert(kappa.coeffs()));
}

FormalSeries s_to_cumulants(const FormalSeries& s) {
  require_kind(s, SeriesKind::kSCoeffs, "s_to_cumulants");
  if (s[0] == 0.0) fail(ErrorCode::kUndefinedS, "S_0 must be nonzero");
  return FormalSeries::cumulants(revert(s.coeffs()));
}

FormalSeries free_additive_convolution(const FormalSeries& a, const FormalSeries& b) {
  require_kind(a, SeriesKind::kFreeCumulants, "free_additive_convolution");
  require_kind(b, SeriesKind::kFreeCumulants, "free_additive_convolution");
  const int n = std::min(a.order(), b.order());
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) out[static_cast<std::size_t>(k - 1)] = a[k] + b[k];
  return FormalSeries::cumulants(std::move(out));
}

FormalSeries free_multiplicative_convolution(const FormalSeries& sa, const FormalSeries& sb) {
  require_kind(sa, SeriesKind::kSCoeffs, "free_multiplicative_convolution");
  require_kind(sb, SeriesKind::kSCoeffs, "free_multiplicative_convolution");
  const auto n = static_cast<std::size_t>(std::min(sa.order(), sb.order()));
  return FormalSeries::s_coeffs(multiply(sa.coeffs(), sb.coeffs(), n));
}

FormalSeries free_compress(const FormalSeries& kappa, double t) {
  require_kind(kappa, SeriesKind::kFreeCumulants, "free_compress");
  if (!(t > 0.0)) fail(ErrorCode::kDomain, "compression factor must be positive");
  std::vector<double> out = kappa.coeffs();
  for (auto& c : out) c /= t;
  return FormalSeries::cumulants(std::move(out));
}

Measure1D Measure1D::atoms(std::vector<std::pair<double, double>> location_weight) {
  if (location_weight.empty()) fail(ErrorCode::kPrecondition, "measure needs at least one atom");
  Measure1D m;
  m.kind_ = Kind::kAtoms;
  std::sort(location_weight.begin(), location_weight.end());
  double total = 0.0;
  for (auto [x, w] : location_weight) {
    if (!(w >= 0.0) || !std::isfinite(x)) fail(ErrorCode::kPrecondition, "invalid atom");
    m.x_.push_back(x);
    m.w_.push_back(w);
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-10) fail(ErrorCode::kPrecondition, "atom weights must sum to 1");
  m.lo_ = m.x_.front();
  m.hi_ = m.x_.back();
  return m;
}

Measure1D Measure1D::density(double lo, double hi, std::vector<double> values) {
  if (!(hi > lo) || values.empty()) fail(ErrorCode::kPrecondition, "bad density support");
  Measure1D m;
  m.kind_ = Kind::kDensity;
  m.lo_ = lo;
  m.hi_ = hi;
  const double dx = (hi - lo) / static_cast<double>(values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0)) fail(ErrorCode::kPrecondition, "density must be nonnegative");
    m.x_.push_back(lo + (static_cast<double>(i) + 0.5) * dx);
    m.w_.push_back(values[i] * dx);
    total += values[i] * dx;
  }
  if (!(total > 0.0)) fail(ErrorCode::kPrecondition, "density has zero mass");
  for (auto& w : m.w_) w /= total;
  return m;
}

Measure1D Measure1D::samples(std::vector<double> xs) {
  if (xs.empty()) fail(ErrorCode::kPrecondition, "no samples");
  Measure1D m;
  m.kind_ = Kind::kSamples;
  std::sort(xs.begin(), xs.end());
  m.w_.assign(xs.size(), 1.0 / static_cast<double>(xs.size()));
  m.x_ = std::move(xs);
  m.lo_ = m.x_.front();
  m.hi_ = m.x_.back();
  return m;
}

// Density measures are piecewise constant: each cell of width h carries its
// weight uniformly, and the transforms below integrate over the cell exactly.
// Far from a cell the closed forms cancel badly, so the expansion in h/(2u)
// about the midpoint is used instead.
namespace {

constexpr double kSeriesRatio = 0.25;
constexpr int kSeriesTerms = 14;

// (1/h) int_{-h/2}^{h/2} dt / (u - t)
cplx cell_cauchy(cplx u, double h) {
  const cplx q = h / (2.0 * u);
  if (std::abs(q) < kSeriesRatio) {
    const cplx q2 = q * q;
    cplx s = 0.0, p = 1.0;
    for (int k = 0; k < kSeriesTerms; ++k, p *= q2) s += p / (2.0 * k + 1.0);
    return s / u;
  }
  return (std::log(u + 0.5 * h) - std::log(u - 0.5 * h)) / h;
}

// (1/h) int_{-h/2}^{h/2} log(scale (u - t)) dt
cplx cell_log(cplx u, cplx scale, double h) {
  const cplx q = h / (2.0 * u);
  if (std::abs(q) < kSeriesRatio) {
    const cplx q2 = q * q;
    cplx s = 0.0, p = q2;
    for (int k = 1; k <= kSeriesTerms; ++k, p *= q2) s += p / (2.0 * k * (2.0 * k + 1.0));
    return std::log(scale * u) - s;
  }
  auto F = [&](cplx v) { return v * std::log(scale * v) - v; };
  return (F(u + 0.5 * h) - F(u - 0.5 * h)) / h;
}

}  // namespace

double Measure1D::cell_width() const {
  return kind_ == Kind::kDensity ? (hi_ - lo_) / static_cast<double>(x_.size()) : 0.0;
}

FormalSeries Measure1D::moments(int order) const {
  const double h = cell_width();
  // E t^j for t uniform on [-h/2, h/2].
  std::vector<double> cell_moment(static_cast<std::size_t>(order) + 1, 0.0);
  for (int j = 0; j <= order; j += 2) cell_moment[static_cast<std::size_t>(j)] = std::pow(h / 2.0, j) / (j + 1.0);
  std::vector<double> m(static_cast<std::size_t>(order), 0.0);
  for (std::size_t i = 0; i < x_.size(); ++i) {
    for (int k = 1; k <= order; ++k) {
      double acc = 0.0, binom = 1.0;
      for (int j = 0; j <= k; ++j) {
        if (j > 0) binom = binom * (k - j + 1) / j;
        acc += binom * std::pow(x_[i], k - j) * cell_moment[static_cast<std::size_t>(j)];
      }
      m[static_cast<std::size_t>(k - 1)] += w_[i] * acc;
    }
  }
  return FormalSeries::moments(std::move(m));
}

FormalSeries Measure1D::cumulants(int order) const { return moments_to_cumulants(moments(order)); }

cplx Measure1D::cauchy(cplx z) const {
  const double h = cell_width();
  cplx s = 0.0;
  for (std::size_t i = 0; i < x_.size(); ++i)
    s += w_[i] * (h > 0.0 ? cell_cauchy(z - x_[i], h) : 1.0 / (z - x_[i]));
  return s;
}

cplx Measure1D::cauchy_derivative(cplx z) const {
  const double h = cell_width();
  cplx s = 0.0;
  for (std::size_t i = 0; i < x_.size(); ++i) {
    const cplx u = z - x_[i];
    s -= w_[i] / (h > 0.0 ? (u - 0.5 * h) * (u + 0.5 * h) : u * u);
  }
  return s;
}

cplx Measure1D::log_potential(cplx omega, cplx scale) const {
  const double h = cell_width();
  cplx s = 0.0;
  for (std::size_t i = 0; i < x_.size(); ++i)
    s += w_[i] * (h > 0.0 ? cell_log(omega - x_[i], scale, h) : std::log(scale * (omega - x_[i])));
  return s;
}

cplx Measure1D::inverse_cauchy(cplx target, cplx guess) const {
  if (target == cplx(0.0)) fail(ErrorCode::kNoSolution, "G(omega) = 0 has no finite solution");
  const double side = -std::copysign(1.0, target.imag());
  cplx w = guess;
  const bool finite = std::isfinite(w.real()) && std::isfinite(w.imag());
  if (!finite || (target.imag() != 0.0 && !(w.imag() * side > 0.0))) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) mean += w_[i] * x_[i];
    w = 1.0 / target + mean;
  }
  for (int it = 0; it < 200; ++it) {
    const cplx f = cauchy(w) - target;
    if (std::abs(f) <= 1e-15 * std::abs(target)) return w;
    cplx step = f / cauchy_derivative(w);
    cplx next = w - step;
    // Stay on the Herglotz side of the real axis.
    for (int h = 0; h < 60 && target.imag() != 0.0 && !(next.imag() * side > 0.0); ++h) {
      step *= 0.5;
      next = w - step;
    }
    if (!std::isfinite(next.real()) || !std::isfinite(next.imag())) break;
    if (std::abs(next - w) <= 1e-15 * (1.0 + std::abs(w))) return next;
    w = next;
  }
  const cplx f = cauchy(w) - target;
  if (std::abs(f) <= 1e-10 * std::abs(target)) return w;
  fail(ErrorCode::kNoSolution, "inverse Cauchy transform did not converge");
}

double Measure1D::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) fail(ErrorCode::kDomain, "quantile level must lie in (0,1)");
  double acc = 0.0;
  for (std::size_t i = 0; i < x_.size(); ++i) {
    const double next = acc + w_[i];
    if (u <= next || i + 1 == x_.size()) {
      if (kind_ != Kind::kDensity) return x_[i];
      const double dx = (hi_ - lo_) / static_cast<double>(x_.size());
      const double t = w_[i] > 0.0 ? (u - acc) / w_[i] : 0.5;
      return x_[i] - 0.5 * dx + std::clamp(t, 0.0, 1.0) * dx;
    }
    acc = next;
  }
  return hi_;
}

SpectralDensity density_from_resolvent(const std::function<cplx(cplx)>& g,
                                       std::span<const double> lambda, double eps,
                                       bool extrapolate) {
  if (!(eps > 0.0)) fail(ErrorCode::kDomain, "eps must be positive");
  SpectralDensity d;
  d.lambda.assign(lambda.begin(), lambda.end());
  d.rho.assign(lambda.size(), 0.0);
  d.valid.assign(lambda.size(), true);
  const std::vector<double> ladder = extrapolate ? std::vector<double>{eps, 2 * eps, 4 * eps}
                                                 : std::vector<double>{eps};
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    std::vector<double> vals;
    for (double e : ladder) {
      const cplx v = g(cplx(lambda[k], -e));
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) break;
      vals.push_back(v.imag() / M_PI);
    }
    if (vals.size() != ladder.size()) {
      d.valid[k] = false;
      continue;
    }
    if (!extrapolate) {
      d.rho[k] = vals[0];
      continue;
    }
    // Least-squares line through (eps_j, rho_j); keep the intercept.
    const double n = static_cast<double>(ladder.size());
    const double sx = std::accumulate(ladder.begin(), ladder.end(), 0.0);
    double sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < ladder.size(); ++j) {
      sy += vals[j];
      sxx += ladder[j] * ladder[j];
      sxy += ladder[j] * vals[j];
    }
    d.rho[k] = (sy * sxx - sx * sxy) / (n * sxx - sx * sx);
  }
  return d;
}

cplx semicircle_cauchy(cplx z, double s) {
  const double r = 2.0 * s;
  return (z - std::sqrt(z - r) * std::sqrt(z + r)) / (2.0 * s * s);
}

double semicircle_density(double x, double s) {
  const double v = 4.0 * s * s - x * x;
  return v > 0.0 ? std::sqrt(v) / (2.0 * M_PI * s * s) : 0.0;
}

}  // namespace sbspec
