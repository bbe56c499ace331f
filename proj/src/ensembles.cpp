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

#include "sbspec/ensembles.hpp"

#include <algorithm>
#include <cmath>

namespace sbspec {

namespace {

double sup_of(const RealGrid& h) {
  double m = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) m = std::max(m, h[i]);
  return m;
}

class ConstantDiscreteKernel final : public DiscreteKernel {
 public:
  ConstantDiscreteKernel(std::vector<double> kappa, const std::optional<Measure1D>& spectrum)
      : kappa_(std::move(kappa)), spectrum_(spectrum) {
    if (spectrum_) {
      series_ = spectrum_->cumulants(kDefaultSeriesOrder).coeffs();
      const auto m = spectrum_->moments(1);
      mean_ = m[1];
    }
  }

  void apply_r0(std::span<const cplx> a, std::span<cplx> b, R0Workspace& ws) const override {
    const cplx r = r_of(mean(a), ws);
    std::fill(b.begin(), b.end(), r);
  }

  // With a spectrum, b is the constant u solving A(u) = G_sigma(u + 1/A(u)),
  // A(u) = int h / (z - h u). Newton on u, continued from far above the real
  // axis down to Im z; this never inverts G_sigma, whose inverse has branch
  // points inside the spectrum.
  bool solve_exact(std::span<const double> h, cplx z, std::span<cplx> a, std::span<cplx> b,
                   R0Workspace& ws) const override {
    if (!spectrum_ || !(z.imag() > 0.0)) return false;
    const double n = static_cast<double>(h.size());
    // F(u) = A(u) - G_sigma(omega), omega = u + 1/A(u).
    auto eval = [&](cplx zz, cplx u, cplx& F, cplx& dF, cplx& omega) {
      cplx A = 0.0, dA = 0.0;
      for (double hv : h) {
        if (hv == 0.0) continue;
        const cplx inv = 1.0 / (zz - hv * u);
        A += hv * inv;
        dA += hv * hv * inv * inv;
      }
      A /= n;
      dA /= n;
      if (A == 0.0) return false;
      omega = u + 1.0 / A;
      F = A - spectrum_->cauchy(omega);
      dF = dA - spectrum_->cauchy_derivative(omega) * (1.0 - dA / (A * A));
      return std::isfinite(std::abs(F)) && std::isfinite(std::abs(dF));
    };
    auto newton = [&](cplx zz, cplx& u, cplx& omega) {
      cplx F, dF;
      if (!eval(zz, u, F, dF, omega)) return false;
      for (int it = 0; it < 60; ++it) {
        cplx step = F / dF, trial = u - step, Ft, dFt, wt;
        int halvings = 0;
        while ((!eval(zz, trial, Ft, dFt, wt) || std::abs(Ft) > std::abs(F)) && halvings < 30) {
          step *= 0.5;
          trial = u - step;
          ++halvings;
        }
        if (halvings == 30) return std::abs(F) < 1e-13;
        u = trial, F = Ft, dF = dFt, omega = wt;
        if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(u))) return true;
      }
      return std::abs(F) < 1e-12;
    };
    const double scale = std::max({1.0, std::abs(spectrum_->support_lo()), std::abs(spectrum_->support_hi()),
                                   std::abs(z.real())});
    // On the physical branch Im u <= 0 and u stays on the scale of the
    // spectrum; the spurious roots Newton can jump to have |u| -> infinity.
    auto physical = [&](cplx u) { return u.imag() <= 1e-12 * std::abs(u) && std::abs(u) < 1e3 * scale; };
    double y = std::max(z.imag(), 100.0 * scale);
    cplx u = mean_, omega;
    if (!newton({z.real(), y}, u, omega) || !physical(u)) return false;
    double factor = 0.5;
    while (y > z.imag()) {
      const double next = std::max(z.imag(), y * factor);
      cplx trial = u, w;
      if (newton({z.real(), next}, trial, w) && physical(trial)) {
        u = trial, omega = w, y = next;
        factor = std::max(0.25, factor * factor);
      } else {
        factor = std::sqrt(factor);
        if (factor > 0.999) return false;
      }
    }
    for (std::size_t i = 0; i < h.size(); ++i) {
      a[i] = h[i] / (z - h[i] * u);
      b[i] = u;
    }
    ws.w = omega;
    ws.has_w = true;
    return true;
  }

  cplx f0(std::span<const cplx> a, R0Workspace& ws) const override {
    const cplx A = mean(a);
    if (!spectrum_ || std::abs(A) < kSmall) return poly(spectrum_ ? series_ : kappa_, A, true);
    const cplx omega = omega_of(A, ws);
    // Antiderivative of R(A) = omega(A) - 1/A that vanishes at A = 0.
    return A * omega - 1.0 - spectrum_->log_potential(omega, A);
  }

 private:
  static constexpr double kSmall = 1e-6;

  static cplx mean(std::span<const cplx> a) {
    cplx s = 0.0;
    for (const auto& v : a) s += v;
    return s / static_cast<double>(a.size());
  }

  // sum_k c_k A^{k-1}, or sum_k c_k A^k / k for the potential.
  static cplx poly(const std::vector<double>& c, cplx A, bool potential) {
    cplx s = 0.0, p = 1.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (potential) {
        p *= A;
        s += c[k] * p / static_cast<double>(k + 1);
      } else {
        s += c[k] * p;
        p *= A;
      }
    }
    return s;
  }

  cplx omega_of(cplx A, R0Workspace& ws) const {
    const cplx guess = ws.has_w ? ws.w : 1.0 / A + mean_;
    const cplx omega = spectrum_->inverse_cauchy(A, guess);
    ws.w = omega;
    ws.has_w = true;
    return omega;
  }

  cplx r_of(cplx A, R0Workspace& ws) const {
    if (!spectrum_) return poly(kappa_, A, false);
    if (std::abs(A) < kSmall) return poly(series_, A, false);
    return omega_of(A, ws) - 1.0 / A;
  }

  std::vector<double> kappa_;
  std::optional<Measure1D> spectrum_;
  std::vector<double> series_;
  double mean_ = 0.0;
};

class ConstantKernel final : public LocalCumulantKernel {
 public:
  ConstantKernel(std::string name, std::vector<double> kappa, int max_order,
                 std::optional<Measure1D> spectrum)
      : name_(std::move(name)), kappa_(std::move(kappa)), max_order_(max_order),
        spectrum_(std::move(spectrum)) {
    nonzero_ = 0;
    for (std::size_t k = 0; k < kappa_.size(); ++k)
      if (kappa_[k] != 0.0) nonzero_ = static_cast<int>(k + 1);
    nonzero_ = std::max(nonzero_, 1);
  }

  std::string name() const override { return name_; }
  int max_order() const override { return max_order_; }
  int nonzero_order() const override { return nonzero_; }

  void contract(int k, std::span<const double> parent_points,
                std::span<const std::vector<double>> child_messages, std::size_t cells,
                std::span<double> out) const override {
    double v = k <= static_cast<int>(kappa_.size()) ? kappa_[static_cast<std::size_t>(k - 1)] : 0.0;
    for (const auto& child : child_messages) {
      double s = 0.0;
      for (double c : child) s += c;
      v *= s / static_cast<double>(cells);
    }
    std::fill(out.begin(), out.end(), v);
    (void)parent_points;
  }

  double spectral_radius_bound(const RealGrid& h) const override {
    if (spectrum_)
      return std::max(std::abs(spectrum_->support_lo()), std::abs(spectrum_->support_hi())) * sup_of(h);
    std::vector<double> bounds(kappa_.size());
    for (std::size_t k = 0; k < kappa_.size(); ++k) bounds[k] = std::abs(kappa_[k]);
    return moment_growth_rate(bounds) * sup_of(h);
  }

 protected:
  double do_eval(std::span<const double> x) const override {
    return x.size() <= kappa_.size() ? kappa_[x.size() - 1] : 0.0;
  }

  std::shared_ptr<const DiscreteKernel> discretize(std::size_t) const override {
    return std::make_shared<ConstantDiscreteKernel>(kappa_, spectrum_);
  }

 private:
  std::string name_;
  std::vector<double> kappa_;
  int max_order_;
  int nonzero_ = 1;
  std::optional<Measure1D> spectrum_;
};

class DiagonalDiscreteKernel final : public DiscreteKernel {
 public:
  explicit DiagonalDiscreteKernel(std::vector<double> s2) : s2_(std::move(s2)) {}

  void apply_r0(std::span<const cplx> a, std::span<cplx> b, R0Workspace&) const override {
    for (std::size_t i = 0; i < a.size(); ++i) b[i] = s2_[i] * a[i];
  }

  cplx f0(std::span<const cplx> a, R0Workspace&) const override {
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += 0.5 * s2_[i] * a[i] * a[i];
    return s / static_cast<double>(a.size());
  }

  bool solve_exact(std::span<const double> h, cplx z, std::span<cplx> a, std::span<cplx> b,
                   R0Workspace&) const override {
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double q = h[i] * s2_[i];
      if (h[i] == 0.0) {
        a[i] = 0.0;
      } else if (q == 0.0) {
        a[i] = h[i] / z;
      } else {
        // h s^2 a^2 - z a + h = 0 on the branch a ~ h/z at infinity.
        const double edge = 2.0 * h[i] * std::sqrt(s2_[i]);
        a[i] = (z - std::sqrt(z - edge) * std::sqrt(z + edge)) / (2.0 * q);
      }
      b[i] = s2_[i] * a[i];
    }
    return true;
  }

 private:
  std::vector<double> s2_;
};

class InhomogeneousWignerKernel final : public LocalCumulantKernel {
 public:
  explicit InhomogeneousWignerKernel(std::function<double(double)> s) : s_(std::move(s)) {}

  std::string name() const override { return "inhomogeneous"; }
  int nonzero_order() const override { return 2; }

  double spectral_radius_bound(const RealGrid& h) const override {
    double smax = 0.0;
    for (int i = 0; i <= 1024; ++i) smax = std::max(smax, std::abs(s_(i / 1024.0)));
    return 2.0 * smax * sup_of(h);
  }

 protected:
  double do_eval(std::span<const double>) const override {
    fail(ErrorCode::kEvaluation, "the diagonal-covariance kernel has no pointwise values");
  }

  std::shared_ptr<const DiscreteKernel> discretize(std::size_t cells) const override {
    std::vector<double> s2(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      const double s = s_(RealGrid::midpoint(i, cells));
      if (!(s >= 0.0)) fail(ErrorCode::kPrecondition, "s(x) must be nonnegative");
      s2[i] = s * s;
    }
    return std::make_shared<DiagonalDiscreteKernel>(std::move(s2));
  }

 private:
  std::function<double(double)> s_;
};

}  // namespace

KernelPtr wigner_kernel(double s) {
  if (!(s > 0.0)) fail(ErrorCode::kDomain, "Wigner scale must be positive");
  return std::make_shared<ConstantKernel>("wigner", std::vector<double>{0.0, s * s}, kUnboundedOrder,
                                          std::nullopt);
}

KernelPtr haar_kernel(const FormalSeries& kappa, std::optional<Measure1D> spectrum) {
  if (kappa.kind() != SeriesKind::kFreeCumulants)
    fail(ErrorCode::kPrecondition, "haar_kernel needs free cumulants");
  return std::make_shared<ConstantKernel>("haar", kappa.coeffs(), kappa.order(), std::move(spectrum));
}

KernelPtr inhomogeneous_wigner_kernel(std::function<double(double)> s) {
  return std::make_shared<InhomogeneousWignerKernel>(std::move(s));
}

double inhomogeneous_wigner_density(const RealGrid& s, double lambda) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0.0)) fail(ErrorCode::kPrecondition, "s(x) must be positive");
    const double v = 4.0 * s[i] * s[i] - lambda * lambda;
    if (v > 0.0) sum += std::sqrt(v) / (s[i] * s[i]);
  }
  return sum * s.cell_width() / (2.0 * M_PI);
}

Measure1D bernoulli_measure(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::kDomain, "Bernoulli weight must lie in (0,1)");
  return Measure1D::atoms({{0.0, 1.0 - p}, {1.0, p}});
}

FormalSeries haar_subblock_moments(const FormalSeries& kappa, double ell) {
  if (!(ell > 0.0 && ell <= 1.0)) fail(ErrorCode::kDomain, "block length must lie in (0,1]");
  auto m = cumulants_to_moments(free_compress(kappa, ell)).coeffs();
  double p = 1.0;
  for (auto& mk : m) {
    p *= ell;
    mk *= p;
  }
  return FormalSeries::moments(std::move(m));
}

SpectralDensity haar_subblock_density(const Measure1D& sigma, double ell,
                                      std::span<const double> lambda, double eps) {
  if (!(ell > 0.0 && ell <= 1.0)) fail(ErrorCode::kDomain, "block length must lie in (0,1]");
  if (!(eps > 0.0)) fail(ErrorCode::kDomain, "eps must be positive");
  const double scale = std::max({1.0, std::abs(sigma.support_lo()), std::abs(sigma.support_hi())});
  // Newton on F(A) = A - G_sigma(z + (1 - l)/A).
  auto newton = [&](cplx z, cplx A) -> std::optional<cplx> {
    for (int it = 0; it < 200; ++it) {
      const cplx omega = z + (1.0 - ell) / A;
      const cplx f = A - sigma.cauchy(omega);
      const cplx df = 1.0 + sigma.cauchy_derivative(omega) * (1.0 - ell) / (A * A);
      cplx step = f / df;
      cplx next = A - step;
      for (int k = 0; k < 60 && !(next.imag() < 0.0); ++k) next = A - (step *= 0.5);
      if (!std::isfinite(next.real()) || !std::isfinite(next.imag())) return std::nullopt;
      const bool done = std::abs(next - A) <= 1e-14 * std::abs(A);
      A = next;
      if (done) return A;
    }
    return std::nullopt;
  };
  auto cold = [&](double x) -> std::optional<cplx> {
    cplx A = ell / cplx(x, scale);
    for (double y = scale; ; y *= 0.5) {
      const bool last = y <= 1.5 * eps;
      auto r = newton(cplx(x, last ? eps : y), A);
      if (!r) return std::nullopt;
      A = *r;
      if (last) return A;
    }
  };
  SpectralDensity d;
  d.lambda.assign(lambda.begin(), lambda.end());
  d.rho.assign(lambda.size(), 0.0);
  d.valid.assign(lambda.size(), true);
  d.block_mass = ell;
  d.atom_at_zero = 1.0 - ell;
  std::optional<cplx> prev;
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    std::optional<cplx> A;
    if (prev) A = newton(cplx(lambda[k], eps), *prev);
    if (!A) A = cold(lambda[k]);
    if (!A) {
      d.valid[k] = false;
      prev.reset();
      continue;
    }
    d.rho[k] = -(A->imag() / ell) / M_PI;
    prev = A;
  }
  return d;
}

NonfreenessReport nonfreeness_diagnostic(const LocalCumulantKernel& g, const RealGrid& h, int order,
                                         double tol) {
  if (order != 1 && order != 2) fail(ErrorCode::kDomain, "diagnostic order must be 1 or 2");
  const std::size_t n = h.size();
  const double dx = h.cell_width();
  std::vector<double> g1(n);
  for (std::size_t i = 0; i < n; ++i) g1[i] = g.eval({h.midpoint(i)});
  double G1 = 0, HG1 = 0, G1sq = 0, HG1sq = 0, hsum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    G1 += g1[i] * dx;
    HG1 += h[i] * g1[i] * dx;
    G1sq += g1[i] * g1[i] * dx;
    HG1sq += h[i] * h[i] * g1[i] * g1[i] * dx;
    hsum += h[i] * dx;
  }
  const double scale = std::max(1.0, std::abs(G1));
  if (std::abs(HG1) <= 1e-14 * scale) fail(ErrorCode::kDegenerate, "[h g_1] vanishes");
  if (std::abs(G1) <= 1e-14) fail(ErrorCode::kDegenerate, "[g_1] vanishes");
  std::vector<double> ratio{G1 / HG1};
  if (order == 2) {
    double G2 = 0, HG2H = 0;
    if (g.nonzero_order() >= 2) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double v = g.eval({h.midpoint(i), h.midpoint(j)}) * dx * dx;
          G2 += v;
          HG2H += h[i] * h[j] * v;
        }
    }
    const double xi = (HG1sq + HG2H) / (HG1 * HG1);
    const double x0 = (G1sq + G2) / (G1 * G1);
    ratio.push_back(-ratio[0] * (xi - x0));
  }
  if (!(hsum > 0.0)) fail(ErrorCode::kDegenerate, "[h] vanishes");
  std::vector<double> hm(static_cast<std::size_t>(order) + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double p = 1.0;
    for (auto& m : hm) {
      p *= h[i];
      m += p * dx;
    }
  }
  auto s_h = s_transform(moments_to_cumulants(FormalSeries::moments(hm))).truncated(order);
  NonfreenessReport rep{FormalSeries::s_coeffs(ratio), s_h, 0.0, false};
  for (int k = 0; k < order; ++k)
    rep.max_gap = std::max(rep.max_gap, std::abs(rep.ratio[k] - rep.s_h[k]) /
                                            std::max(1.0, std::abs(rep.s_h[k])));
  rep.free_compatible = rep.max_gap <= tol;
  return rep;
}

}  // namespace sbspec
