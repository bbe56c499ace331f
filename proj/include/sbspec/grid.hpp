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

#ifndef SBSPEC_GRID_HPP
#define SBSPEC_GRID_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "sbspec/error.hpp"

namespace sbspec {

using cplx = std::complex<double>;

/// Values of a function at the midpoints of G uniform cells of [0,1].
/// Integration is the midpoint rule, i.e. the mean of the values.
template <typename T>
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(std::size_t cells, T fill = T{})
      : values_(cells, fill) {}
  explicit GridFunction(std::vector<T> values) : values_(std::move(values)) {}

  template <typename F>
  static GridFunction sample(std::size_t cells, F&& f) {
    GridFunction out(cells);
    for (std::size_t i = 0; i < cells; ++i) out.values_[i] = f(midpoint(i, cells));
    return out;
  }

  static double midpoint(std::size_t i, std::size_t cells) {
    return (static_cast<double>(i) + 0.5) / static_cast<double>(cells);
  }

  std::size_t size() const noexcept { return values_.size(); }
  double cell_width() const { return 1.0 / static_cast<double>(values_.size()); }
  double midpoint(std::size_t i) const { return midpoint(i, values_.size()); }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  std::vector<T>& raw() noexcept { return values_; }
  const std::vector<T>& raw() const noexcept { return values_; }

  T integral() const {
    T sum = std::accumulate(values_.begin(), values_.end(), T{});
    return sum * cell_width();
  }

 private:
  std::vector<T> values_;
};

using RealGrid = GridFunction<double>;
using ComplexGrid = GridFunction<cplx>;

/// Index of the cell containing x (x = 1 maps to the last cell).
inline std::size_t cell_of(double x, std::size_t cells) {
  auto i = static_cast<std::size_t>(std::floor(x * static_cast<double>(cells)));
  return i >= cells ? cells - 1 : i;
}

/// Indicator of a union of intervals, cell-averaged so that interval ends on
/// cell boundaries are represented exactly.
RealGrid indicator_grid(std::span<const std::pair<double, double>> intervals,
                        std::size_t cells);

/// Measure of the set {h > 0}.
double support_fraction(const RealGrid& h);

double sup_norm(std::span<const cplx> v);

}  // namespace sbspec

#endif  // SBSPEC_GRID_HPP
