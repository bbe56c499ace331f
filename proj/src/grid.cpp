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

#include "sbspec/grid.hpp"

#include <algorithm>

namespace sbspec {

RealGrid indicator_grid(std::span<const std::pair<double, double>> intervals,
                        std::size_t cells) {
  if (cells == 0) fail(ErrorCode::kPrecondition, "grid needs at least one cell");
  RealGrid h(cells, 0.0);
  const double dx = 1.0 / static_cast<double>(cells);
  for (auto [lo, hi] : intervals) {
    if (!(lo >= 0.0 && hi <= 1.0 && lo < hi))
      fail(ErrorCode::kDomain, "interval must satisfy 0 <= lo < hi <= 1");
    for (std::size_t i = 0; i < cells; ++i) {
      const double a = static_cast<double>(i) * dx;
      const double overlap = std::min(hi, a + dx) - std::max(lo, a);
      if (overlap > 0.0) h[i] = std::min(1.0, h[i] + overlap / dx);
    }
  }
  // Interval ends that miss a cell boundary only by rounding must not leave
  // slivers, which would count as part of the block.
  for (auto& v : h.raw()) {
    if (v < 1e-9) v = 0.0;
    if (v > 1.0 - 1e-9) v = 1.0;
  }
  return h;
}

double support_fraction(const RealGrid& h) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h[i] > 0.0) ++count;
  return h.size() ? static_cast<double>(count) / static_cast<double>(h.size()) : 0.0;
}

double sup_norm(std::span<const cplx> v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace sbspec
