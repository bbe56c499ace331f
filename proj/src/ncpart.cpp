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

#include "sbspec/ncpart.hpp"

#include <algorithm>
#include <sstream>

namespace sbspec::ncpart {

namespace {

using Parts = std::vector<std::vector<int>>;

void canonicalize(Parts& parts) {
  for (auto& p : parts) std::sort(p.begin(), p.end());
  std::sort(parts.begin(), parts.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

// All NC partitions of {0..m-1}, memoized by m.
const std::vector<Parts>& nc_of_size(int m) {
  static std::mutex mutex;
  static std::vector<std::vector<Parts>> cache;
  std::lock_guard lock(mutex);
  if (cache.empty()) cache.push_back({Parts{}});
  while (static_cast<int>(cache.size()) <= m) {
    const int len = static_cast<int>(cache.size());
    std::vector<Parts> out;
    // The part holding 0 is {0} u S; the gaps it leaves are independent.
    const int rest = len - 1;
    for (unsigned mask = 0; mask < (1u << rest); ++mask) {
      std::vector<int> block{0};
      for (int i = 0; i < rest; ++i)
        if (mask & (1u << i)) block.push_back(i + 1);
      std::vector<std::pair<int, int>> gaps;  // [offset, length)
      for (std::size_t j = 0; j < block.size(); ++j) {
        const int lo = block[j] + 1;
        const int hi = j + 1 < block.size() ? block[j + 1] : len;
        if (hi > lo) gaps.emplace_back(lo, hi - lo);
      }
      std::vector<Parts> partial{Parts{block}};
      for (auto [offset, length] : gaps) {
        const auto& sub = cache[static_cast<std::size_t>(length)];
        std::vector<Parts> next;
        next.reserve(partial.size() * sub.size());
        for (const auto& base : partial) {
          for (const auto& s : sub) {
            Parts merged = base;
            for (auto p : s) {
              for (auto& e : p) e += offset;
              merged.push_back(std::move(p));
            }
            next.push_back(std::move(merged));
          }
        }
        partial = std::move(next);
      }
      for (auto& p : partial) {
        canonicalize(p);
        out.push_back(std::move(p));
      }
    }
    cache.push_back(std::move(out));
  }
  return cache[static_cast<std::size_t>(m)];
}

}  // namespace

NCPartition::NCPartition(int n, Parts parts)
    : n_(n), parts_(std::move(parts)), owner_(static_cast<std::size_t>(n), -1) {
  for (std::size_t i = 0; i < parts_.size(); ++i)
    for (int e : parts_[i]) owner_[static_cast<std::size_t>(e - 1)] = static_cast<int>(i);
}

NCPartition NCPartition::from_parts(int n, Parts parts) {
  if (n < 1) fail(ErrorCode::kInvalidPartition, "ground set must be non-empty");
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (const auto& p : parts) {
    if (p.empty()) fail(ErrorCode::kInvalidPartition, "empty part");
    for (int e : p) {
      if (e < 1 || e > n) fail(ErrorCode::kInvalidPartition, "element out of range");
      if (seen[static_cast<std::size_t>(e - 1)]++)
        fail(ErrorCode::kInvalidPartition, "parts overlap");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    fail(ErrorCode::kInvalidPartition, "parts do not cover the ground set");
  canonicalize(parts);
  if (!is_noncrossing(parts)) fail(ErrorCode::kInvalidPartition, "partition is crossing");
  return NCPartition(n, std::move(parts));
}

std::size_t NCPartition::largest_part() const {
  std::size_t m = 0;
  for (const auto& p : parts_) m = std::max(m, p.size());
  return m;
}

std::string NCPartition::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (i) os << ',';
    os << '{';
    for (std::size_t j = 0; j < parts_[i].size(); ++j) os << (j ? "," : "") << parts_[i][j];
    os << '}';
  }
  os << '}';
  return os.str();
}

bool is_noncrossing(const Parts& parts) {
  int n = 0;
  for (const auto& p : parts)
    for (int e : p) n = std::max(n, e);
  std::vector<int> label(static_cast<std::size_t>(n + 1), -1);
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (int e : parts[i]) label[static_cast<std::size_t>(e)] = static_cast<int>(i);
  // a < b < c < d with a,c in one part and b,d in another.
  for (int a = 1; a <= n; ++a)
    for (int b = a + 1; b <= n; ++b) {
      if (label[a] == label[b]) continue;
      for (int c = b + 1; c <= n; ++c) {
        if (label[c] != label[a]) continue;
        for (int d = c + 1; d <= n; ++d)
          if (label[d] == label[b]) return false;
      }
    }
  return true;
}

std::uint64_t catalan(int n) {
  std::uint64_t c = 1;
  for (int k = 0; k < n; ++k) c = c * 2 * (2 * k + 1) / (k + 2);
  return c;
}

std::vector<NCPartition> enumerate_nc(int n) {
  if (n < 1 || n > kMaxEnumerate)
    fail(ErrorCode::kSizeLimit, "enumerate_nc supports 1 <= n <= 12, got " + std::to_string(n));
  const auto& raw = nc_of_size(n);
  std::vector<NCPartition> out;
  out.reserve(raw.size());
  for (const auto& parts : raw) {
    Parts shifted = parts;
    for (auto& p : shifted)
      for (auto& e : p) e += 1;
    out.push_back(NCPartition(n, std::move(shifted)));
  }
  return out;
}

NCPartition kreweras(const NCPartition& pi) {
  const int n = pi.n();
  // pi as a permutation whose cycles run through each part increasingly;
  // K(pi) = pi^{-1} o gamma with gamma = (1 2 .. n).
  std::vector<int> inv(static_cast<std::size_t>(n + 1));
  for (const auto& p : pi.parts())
    for (std::size_t i = 0; i < p.size(); ++i)
      inv[static_cast<std::size_t>(p[(i + 1) % p.size()])] = p[i];
  std::vector<int> k(static_cast<std::size_t>(n + 1));
  for (int i = 1; i <= n; ++i) k[static_cast<std::size_t>(i)] = inv[static_cast<std::size_t>(i % n + 1)];
  Parts parts;
  std::vector<bool> done(static_cast<std::size_t>(n + 1), false);
  for (int i = 1; i <= n; ++i) {
    if (done[static_cast<std::size_t>(i)]) continue;
    std::vector<int> cycle;
    for (int j = i; !done[static_cast<std::size_t>(j)]; j = k[static_cast<std::size_t>(j)]) {
      done[static_cast<std::size_t>(j)] = true;
      cycle.push_back(j);
    }
    parts.push_back(std::move(cycle));
  }
  return NCPartition::from_parts(n, std::move(parts));
}

NCPartition kreweras(int n, Parts parts) {
  return kreweras(NCPartition::from_parts(n, std::move(parts)));
}

namespace {

// One term of the moment sum: the tree formed by parts of pi (variables) and
// parts of K(pi) (kernel factors), joined through shared elements.
class TreeIntegral {
 public:
  TreeIntegral(const LocalCumulantKernel& g, const RealGrid& h,
               const NCPartition& pi, const NCPartition& dual)
      : g_(g), h_(h), pi_(pi), dual_(dual) {
    points_.resize(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) points_[i] = h.midpoint(i);
  }

  // Message of variable v towards the factor it hangs from (or the root),
  // evaluated at the given points.
  std::vector<double> variable_message(int v, int parent_factor,
                                       std::span<const double> at) const {
    const auto& part = pi_.parts()[static_cast<std::size_t>(v)];
    std::vector<double> msg(at.size());
    for (std::size_t i = 0; i < at.size(); ++i) {
      const double hv = h_[cell_of(at[i], h_.size())];
      msg[i] = std::pow(hv, static_cast<double>(part.size()));
    }
    for (int e : part) {
      const int f = dual_.part_of(e);
      if (f == parent_factor) continue;
      auto fm = factor_message(f, e, at);
      for (std::size_t i = 0; i < at.size(); ++i) msg[i] *= fm[i];
    }
    return msg;
  }

  // Message of factor f towards the variable reached through element e.
  std::vector<double> factor_message(int f, int e, std::span<const double> at) const {
    const auto& part = dual_.parts()[static_cast<std::size_t>(f)];
    const auto k = part.size();
    const auto start = static_cast<std::size_t>(
        std::find(part.begin(), part.end(), e) - part.begin());
    std::vector<std::vector<double>> children;
    children.reserve(k - 1);
    for (std::size_t s = 1; s < k; ++s) {
      const int child_elem = part[(start + s) % k];
      children.push_back(variable_message(pi_.part_of(child_elem), f, points_));
    }
    std::vector<double> out(at.size());
    g_.contract(static_cast<int>(k), at, children, h_.size(), out);
    return out;
  }

  double integrated() const {
    auto msg = variable_message(pi_.part_of(1), -1, points_);
    double sum = 0.0;
    for (double m : msg) sum += m;
    return sum * h_.cell_width();
  }

  double pinned(double x) const {
    const double at[1] = {x};
    return variable_message(pi_.part_of(1), -1, at)[0];
  }

 private:
  const LocalCumulantKernel& g_;
  const RealGrid& h_;
  const NCPartition& pi_;
  const NCPartition& dual_;
  std::vector<double> points_;
};

template <typename Term>
double nc_sum(const LocalCumulantKernel& g, const RealGrid& h, int n, Term&& term) {
  if (n < 1 || n > kMaxOracleOrder)
    fail(ErrorCode::kSizeLimit, "moment oracle supports 1 <= n <= 8, got " + std::to_string(n));
  if (h.size() == 0) fail(ErrorCode::kPrecondition, "empty quadrature grid");
  for (std::size_t i = 0; i < h.size(); ++i)
    if (!(h[i] >= 0.0)) fail(ErrorCode::kPrecondition, "h must be nonnegative");
  double total = 0.0;
  for (const auto& pi : enumerate_nc(n)) {
    const auto dual = kreweras(pi);
    const auto largest = static_cast<int>(dual.largest_part());
    if (largest > g.max_order())
      fail(ErrorCode::kUnsupportedOrder,
           "kernel '" + g.name() + "' defines g_n only up to n = " + std::to_string(g.max_order()));
    if (largest > g.nonzero_order()) continue;
    total += term(TreeIntegral(g, h, pi, dual));
  }
  return total;
}

}  // namespace

double moment_oracle(const LocalCumulantKernel& g, const RealGrid& h, int n) {
  return nc_sum(g, h, n, [](const TreeIntegral& t) { return t.integrated(); });
}

double marked_moment_oracle(const LocalCumulantKernel& g, const RealGrid& h,
                            int n, double x) {
  if (!(x >= 0.0 && x <= 1.0)) fail(ErrorCode::kDomain, "marked point must lie in [0,1]");
  return nc_sum(g, h, n, [x](const TreeIntegral& t) { return t.pinned(x); });
}

}  // namespace sbspec::ncpart
