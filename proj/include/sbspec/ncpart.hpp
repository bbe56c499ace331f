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

#ifndef SBSPEC_NCPART_HPP
#define SBSPEC_NCPART_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sbspec/grid.hpp"
#include "sbspec/kernel.hpp"

namespace sbspec::ncpart {

inline constexpr int kMaxEnumerate = 12;
inline constexpr int kMaxOracleOrder = 8;

/// A non-crossing partition of {1..n}. Parts are stored sorted, and parts
/// are ordered by their smallest element, so the part containing 1 is first.
class NCPartition {
 public:
  // Validates that parts cover {1..n} disjointly and do not cross; throws
  // invalid-partition otherwise.
  static NCPartition from_parts(int n, std::vector<std::vector<int>> parts);

  int n() const noexcept { return n_; }
  std::size_t size() const noexcept { return parts_.size(); }
  const std::vector<std::vector<int>>& parts() const noexcept { return parts_; }
  // Index into parts() of the part holding element e (1-based).
  int part_of(int e) const { return owner_[static_cast<std::size_t>(e - 1)]; }
  std::size_t largest_part() const;

  std::string to_string() const;
  bool operator==(const NCPartition&) const = default;

 private:
  friend std::vector<NCPartition> enumerate_nc(int n);
  NCPartition(int n, std::vector<std::vector<int>> parts);

  int n_ = 0;
  std::vector<std::vector<int>> parts_;
  std::vector<int> owner_;
};

bool is_noncrossing(const std::vector<std::vector<int>>& parts);

std::uint64_t catalan(int n);

/// Every non-crossing partition of {1..n}, each once, in a fixed order.
/// 1 <= n <= 12.
std::vector<NCPartition> enumerate_nc(int n);

/// Kreweras complement: the coarsest partition of the interleaved points
/// 1', .., n' (k' placed right after k) that keeps pi u pi' non-crossing,
/// relabelled onto {1..n}. |pi| + |K(pi)| = n + 1.
NCPartition kreweras(const NCPartition& pi);
NCPartition kreweras(int n, std::vector<std::vector<int>> parts);

/// phi_n[h] = sum_{pi in NC(n)} int g_{K(pi)}(x) delta_pi(x) h(x_1)..h(x_n) dx,
/// with variables equal inside each part of pi integrated once (midpoint rule
/// on the cells of h). Each pi contributes a tree-shaped integral (parts of pi
/// and of K(pi) joined by shared elements), evaluated by eliminating leaves.
double moment_oracle(const LocalCumulantKernel& g, const RealGrid& h, int n);

/// phi_n[h](x) = E <x|(M_h)^n|x>: the same sum with the variable of the part
/// holding element 1 pinned at x. Integrates over x to moment_oracle.
double marked_moment_oracle(const LocalCumulantKernel& g, const RealGrid& h,
                            int n, double x);

}  // namespace sbspec::ncpart

#endif  // SBSPEC_NCPART_HPP
