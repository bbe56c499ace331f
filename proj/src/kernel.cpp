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

#include "sbspec/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace sbspec {

double LocalCumulantKernel::eval(std::span<const double> x) const {
  const int n = static_cast<int>(x.size());
  if (n < 1) fail(ErrorCode::kDomain, "g_n needs n >= 1");
  if (n > max_order())
    fail(ErrorCode::kUnsupportedOrder,
         "kernel '" + name() + "' defines g_n only up to n = " + std::to_string(max_order()));
  for (double xi : x)
    if (!(xi >= 0.0 && xi <= 1.0)) fail(ErrorCode::kDomain, "kernel arguments must lie in [0,1]");
  if (n > nonzero_order()) return 0.0;
  return do_eval(x);
}

void LocalCumulantKernel::contract(int k, std::span<const double> parent_points,
                                   std::span<const std::vector<double>> child_messages,
                                   std::size_t cells, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (k > nonzero_order()) return;
  const double dx = 1.0 / static_cast<double>(cells);
  // Only cells where a child message is nonzero can contribute.
  std::vector<std::vector<std::size_t>> support(child_messages.size());
  for (std::size_t c = 0; c < child_messages.size(); ++c) {
    for (std::size_t i = 0; i < cells; ++i)
      if (child_messages[c][i] != 0.0) support[c].push_back(i);
    if (support[c].empty()) return;
  }
  std::vector<double> args(static_cast<std::size_t>(k));
  std::vector<std::size_t> idx(child_messages.size(), 0);
  const double scale = std::pow(dx, k - 1);
  for (std::size_t p = 0; p < parent_points.size(); ++p) {
    args[0] = parent_points[p];
    double sum = 0.0;
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      double w = 1.0;
      for (std::size_t c = 0; c < idx.size(); ++c) {
        const std::size_t cell = support[c][idx[c]];
        args[c + 1] = RealGrid::midpoint(cell, cells);
        w *= child_messages[c][cell];
      }
      sum += w * do_eval(args);
      std::size_t c = 0;
      while (c < idx.size() && ++idx[c] == support[c].size()) idx[c++] = 0;
      if (c == idx.size()) break;
    }
    out[p] = sum * scale;
  }
}

double LocalCumulantKernel::spectral_radius_bound(const RealGrid& h) const {
  const int top = std::min(nonzero_order(), 3);
  if (nonzero_order() > 3)
    fail(ErrorCode::kUnsupportedOrder, "kernel '" + name() + "' must provide its own spectral bound");
  constexpr int kProbe = 17;
  std::vector<double> bounds(static_cast<std::size_t>(top), 0.0);
  for (int k = 1; k <= top; ++k) {
    std::vector<int> idx(static_cast<std::size_t>(k), 0);
    std::vector<double> args(static_cast<std::size_t>(k));
    double m = 0.0;
    while (true) {
      for (int j = 0; j < k; ++j) args[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j)] / (kProbe - 1.0);
      m = std::max(m, std::abs(do_eval(args)));
      int j = 0;
      while (j < k && ++idx[static_cast<std::size_t>(j)] == kProbe) idx[static_cast<std::size_t>(j++)] = 0;
      if (j == k) break;
    }
    // Sampling can miss the true maximum slightly.
    bounds[static_cast<std::size_t>(k - 1)] = 1.25 * m;
  }
  double hmax = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) hmax = std::max(hmax, h[i]);
  return moment_growth_rate(bounds) * hmax;
}

std::shared_ptr<const DiscreteKernel> LocalCumulantKernel::on_grid(std::size_t cells) const {
  if (cells == 0) fail(ErrorCode::kPrecondition, "grid needs at least one cell");
  std::lock_guard lock(cache_mutex_);
  auto it = cache_.find(cells);
  if (it != cache_.end()) return it->second;
  auto d = discretize(cells);
  cache_.emplace(cells, d);
  return d;
}

namespace {

// Tensor quadrature of g_1..g_3. The order-3 table is kept only while it is
// small; beyond that g_3 is re-evaluated on every application.
class TensorDiscreteKernel final : public DiscreteKernel {
 public:
  static constexpr std::size_t kMaxStoredCube = 160;

  TensorDiscreteKernel(const LocalCumulantKernel& g, std::size_t cells)
      : g_(g), n_(cells), dx_(1.0 / static_cast<double>(cells)), order_(g.nonzero_order()) {
    g1_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) g1_[i] = g.eval({mid(i)});
    if (order_ >= 2) {
      g2_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) g2_[i * n_ + j] = g.eval({mid(i), mid(j)});
    }
    if (order_ >= 3 && n_ <= kMaxStoredCube) {
      g3_.resize(n_ * n_ * n_);
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
          for (std::size_t k = 0; k < n_; ++k)
            g3_[(i * n_ + j) * n_ + k] = g.eval({mid(i), mid(j), mid(k)});
    }
  }

  void apply_r0(std::span<const cplx> a, std::span<cplx> b, R0Workspace&) const override {
    for (std::size_t i = 0; i < n_; ++i) {
      cplx acc = g1_[i];
      if (order_ >= 2) {
        cplx s2 = 0.0;
        const double* row = &g2_[i * n_];
        for (std::size_t j = 0; j < n_; ++j) s2 += row[j] * a[j];
        acc += dx_ * s2;
      }
      if (order_ >= 3) acc += dx_ * dx_ * cubic_row(i, a);
      b[i] = acc;
    }
  }

  cplx f0(std::span<const cplx> a, R0Workspace&) const override {
    cplx s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      s1 += g1_[i] * a[i];
      if (order_ >= 2) {
        cplx r = 0.0;
        for (std::size_t j = 0; j < n_; ++j) r += g2_[i * n_ + j] * a[j];
        s2 += a[i] * r;
      }
      if (order_ >= 3) s3 += a[i] * cubic_row(i, a);
    }
    return dx_ * s1 + dx_ * dx_ * s2 / 2.0 + dx_ * dx_ * dx_ * s3 / 3.0;
  }

 private:
  double mid(std::size_t i) const { return RealGrid::midpoint(i, n_); }

  cplx cubic_row(std::size_t i, std::span<const cplx> a) const {
    cplx s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      cplx r = 0.0;
      if (!g3_.empty()) {
        const double* row = &g3_[(i * n_ + j) * n_];
        for (std::size_t k = 0; k < n_; ++k) r += row[k] * a[k];
      } else {
        for (std::size_t k = 0; k < n_; ++k) r += g_.eval({mid(i), mid(j), mid(k)}) * a[k];
      }
      s += a[j] * r;
    }
    return s;
  }

  const LocalCumulantKernel& g_;
  std::size_t n_;
  double dx_;
  int order_;
  std::vector<double> g1_, g2_, g3_;
};

class GenericKernel final : public LocalCumulantKernel {
 public:
  explicit GenericKernel(GenericKernelSpec spec) : spec_(std::move(spec)) {
    order_ = spec_.g3 ? 3 : spec_.g2 ? 2 : 1;
    if (!spec_.g1) fail(ErrorCode::kPrecondition, "generic kernel needs g_1");
    if (spec_.g3 && !spec_.g2) fail(ErrorCode::kPrecondition, "generic kernel with g_3 needs g_2");
  }

  std::string name() const override { return spec_.name; }
  int nonzero_order() const override { return order_; }

 protected:
  double do_eval(std::span<const double> x) const override {
    switch (x.size()) {
      case 1: return spec_.g1(x[0]);
      case 2: return spec_.g2(x[0], x[1]);
      case 3: return spec_.g3(x[0], x[1], x[2]);
      default: return 0.0;
    }
  }

 private:
  GenericKernelSpec spec_;
  int order_ = 1;
};

}  // namespace

std::shared_ptr<const DiscreteKernel> LocalCumulantKernel::discretize(std::size_t cells) const {
  if (nonzero_order() > 3)
    fail(ErrorCode::kUnsupportedOrder,
         "tensor quadrature of R0 is limited to g_n with n <= 3 (kernel '" + name() + "')");
  return std::make_shared<TensorDiscreteKernel>(*this, cells);
}

KernelPtr make_generic_kernel(GenericKernelSpec spec) {
  return std::make_shared<GenericKernel>(std::move(spec));
}

double moment_growth_rate(std::span<const double> c) {
  // With C(v) = sum c_k v^k, the moment series M(u) = 1 + C(u M(u)) has its
  // first singularity at u* = max_v v / (1 + C(v)); the rate is 1/u*.
  bool any = false;
  for (double ck : c) {
    if (ck < 0.0) fail(ErrorCode::kDomain, "cumulant bounds must be nonnegative");
    any = any || ck > 0.0;
  }
  if (!any) return 0.0;
  auto ratio = [&](double v) {
    double cv = 0.0, p = 1.0;
    for (double ck : c) {
      p *= v;
      cv += ck * p;
    }
    return (1.0 + cv) / v;
  };
  double best_t = -30.0, best = ratio(std::exp(best_t));
  for (double t = -30.0; t <= 30.0; t += 0.05) {
    const double r = ratio(std::exp(t));
    if (r < best) best = r, best_t = t;
  }
  double lo = best_t - 0.05, hi = best_t + 0.05;
  for (int it = 0; it < 100; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (ratio(std::exp(m1)) < ratio(std::exp(m2))) hi = m2; else lo = m1;
  }
  return std::min(best, ratio(std::exp(0.5 * (lo + hi))));
}

}  // namespace sbspec
