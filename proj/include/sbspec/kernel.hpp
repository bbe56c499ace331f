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

#ifndef SBSPEC_KERNEL_HPP
#define SBSPEC_KERNEL_HPP

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "sbspec/grid.hpp"

namespace sbspec {

inline constexpr int kUnboundedOrder = std::numeric_limits<int>::max();

// Scratch state carried across successive R0 applications within one solve.
// Kernels with an implicit R0 (QSSEP) keep their auxiliary root here so that
// each application can warm-start from the previous one.
struct R0Workspace {
  cplx w{1.0, 0.0};
  bool has_w = false;
};

/// A kernel bound to a G-cell midpoint grid. This is the solver-facing side:
/// R0[a](x) = sum_n int g_n(x, x_2..x_n) a(x_2)..a(x_n) and the initial-data
/// functional F0[a] = sum_n (1/n) int g_n a..a.
class DiscreteKernel {
 public:
  virtual ~DiscreteKernel() = default;

  virtual void apply_r0(std::span<const cplx> a, std::span<cplx> b,
                        R0Workspace& ws) const = 0;
  virtual cplx f0(std::span<const cplx> a, R0Workspace& ws) const = 0;

  // Direct solution of a = h/(z - h b), b = R0[a], leaving in ws whatever
  // later R0 applications at this point should start from. Returns false
  // when the kernel has none (or it failed) and the caller must iterate.
  virtual bool solve_exact(std::span<const double> /*h*/, cplx /*z*/, std::span<cplx> /*a*/,
                           std::span<cplx> /*b*/, R0Workspace& /*ws*/) const {
    return false;
  }
};

/// The family g_n(x_1..x_n) of local free cumulants of an ensemble.
///
/// max_order() is the largest n for which g_n is defined at all; asking for
/// more raises an unsupported-order error. nonzero_order() is the largest n
/// for which g_n may be nonzero; beyond it g_n vanishes identically.
class LocalCumulantKernel {
 public:
  virtual ~LocalCumulantKernel() = default;

  virtual std::string name() const = 0;
  virtual int max_order() const { return kUnboundedOrder; }
  virtual int nonzero_order() const { return kUnboundedOrder; }

  double eval(std::span<const double> x) const;
  double eval(std::initializer_list<double> x) const {
    return eval(std::span<const double>(x.begin(), x.size()));
  }

  // Oracle hook. For each parent point p, computes
  //   out[p] = sum over grid cells y_2..y_k of g_k(p, y_2, .., y_k)
  //            * prod_c child[c](y_c) * dx^(k-1)
  // (cyclic invariance lets the parent always take the first slot). The
  // default walks the full (k-1)-dimensional grid.
  virtual void contract(int k, std::span<const double> parent_points,
                        std::span<const std::vector<double>> child_messages,
                        std::size_t cells, std::span<double> out) const;

  // Upper estimate of the spectral radius of M_h, used to place contours.
  virtual double spectral_radius_bound(const RealGrid& h) const;

  // Cached per resolution; safe to call concurrently.
  std::shared_ptr<const DiscreteKernel> on_grid(std::size_t cells) const;

 protected:
  virtual double do_eval(std::span<const double> x) const = 0;
  // Default: tensor quadrature, valid when nonzero_order() <= 3.
  virtual std::shared_ptr<const DiscreteKernel> discretize(std::size_t cells) const;

 private:
  mutable std::mutex cache_mutex_;
  mutable std::map<std::size_t, std::shared_ptr<const DiscreteKernel>> cache_;
};

using KernelPtr = std::shared_ptr<const LocalCumulantKernel>;

/// Kernel given by explicit callables for g_1, g_2, g_3 (all higher orders
/// vanish). Callers are responsible for cyclic symmetry of g_2 and g_3.
struct GenericKernelSpec {
  std::string name = "custom";
  std::function<double(double)> g1;
  std::function<double(double, double)> g2;
  std::function<double(double, double, double)> g3;
};
KernelPtr make_generic_kernel(GenericKernelSpec spec);

/// Exponential growth rate of the moments generated by the nonnegative
/// cumulants c_1..c_K. With c_k >= sup|g_k| and h <= 1 this bounds the
/// spectral radius of M_h.
double moment_growth_rate(std::span<const double> cumulant_bounds);

}  // namespace sbspec

#endif  // SBSPEC_KERNEL_HPP
