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

#include <cmath>
#include <random>

#include "doctest.h"
#include "sbspec/freeprob.hpp"
#include "sbspec/ncpart.hpp"

using namespace sbspec;

namespace {

// kappa_n = m_n - sum over NC(n) minus the one-part partition, straight from
// the enumeration.
std::vector<double> cumulants_by_enumeration(const std::vector<double>& m) {
  std::vector<double> k(m.size());
  for (int n = 1; n <= static_cast<int>(m.size()); ++n) {
    double rest = 0.0;
    for (const auto& pi : ncpart::enumerate_nc(n)) {
      if (pi.size() == 1) continue;
      double p = 1.0;
      for (const auto& part : pi.parts()) p *= k[part.size() - 1];
      rest += p;
    }
    k[static_cast<std::size_t>(n - 1)] = m[static_cast<std::size_t>(n - 1)] - rest;
  }
  return k;
}

std::vector<double> mul(const std::vector<double>& a, const std::vector<double>& b, std::size_t len) {
  std::vector<double> out(len, 0.0);
  for (std::size_t i = 0; i < a.size() && i < len; ++i)
    for (std::size_t j = 0; j < b.size() && i + j < len; ++j) out[i + j] += a[i] * b[j];
  return out;
}

void check_series(const FormalSeries& s, const std::vector<double>& expect, double tol) {
  REQUIRE(s.order() >= static_cast<int>(expect.size()));
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK(std::abs(s.coeffs()[i] - expect[i]) <= tol * std::max(1.0, std::abs(expect[i])));
}

std::vector<double> random_vector(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("moments to cumulants") {
  check_series(moments_to_cumulants(FormalSeries::moments(std::vector<double>(6, 1.0))), {1, 0, 0, 0, 0, 0}, 1e-14);
  const std::vector<double> bern(6, 0.5);
  const auto oracle = cumulants_by_enumeration(bern);
  check_series(moments_to_cumulants(FormalSeries::moments(bern)), oracle, 1e-14);
  check_series(moments_to_cumulants(FormalSeries::moments(bern)), {0.5, 0.25, 0, -1.0 / 16, 0, 1.0 / 32}, 1e-14);
}

TEST_CASE("cumulants to moments") {
  check_series(cumulants_to_moments(FormalSeries::cumulants({0, 1, 0, 0, 0, 0})), {0, 1, 0, 2, 0, 5}, 1e-14);
  const double c = 0.7;
  auto m = cumulants_to_moments(FormalSeries::cumulants({c, 0, 0, 0, 0}));
  for (int n = 1; n <= 5; ++n) CHECK(m[n] == doctest::Approx(std::pow(c, n)));
  const double s2 = 2.25;
  m = cumulants_to_moments(FormalSeries::cumulants({0, s2, 0, 0}));
  CHECK(m[2] == doctest::Approx(s2));
  CHECK(m[4] == doctest::Approx(2 * s2 * s2));
}

TEST_CASE("conversions round trip") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto k = random_vector(rng, 8, -1.0, 1.0);
    const auto back = moments_to_cumulants(cumulants_to_moments(FormalSeries::cumulants(k)));
    for (int i = 0; i < 8; ++i) CHECK(back.coeffs()[static_cast<std::size_t>(i)] == doctest::Approx(k[static_cast<std::size_t>(i)]).epsilon(1e-12).scale(1.0));
    const auto m = random_vector(rng, 10, -1.0, 1.0);
    const auto mm = cumulants_to_moments(moments_to_cumulants(FormalSeries::moments(m)));
    for (int i = 0; i < 10; ++i) CHECK(mm.coeffs()[static_cast<std::size_t>(i)] == doctest::Approx(m[static_cast<std::size_t>(i)]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("K(G(z)) = z as truncated series") {
  // With y = 1/z and G = y M(y): y K(G) = 1/M + sum_k kappa_k y^k M^{k-1}.
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 8;
    const auto k = random_vector(rng, n, -1.0, 1.0);
    const auto m = cumulants_to_moments(FormalSeries::cumulants(k)).coeffs();
    const std::size_t len = n + 1;
    std::vector<double> M(len, 0.0), inv(len, 0.0);
    M[0] = 1.0;
    for (int i = 1; i <= n; ++i) M[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i - 1)];
    inv[0] = 1.0;
    for (std::size_t i = 1; i < len; ++i) {
      double s = 0.0;
      for (std::size_t j = 1; j <= i; ++j) s += M[j] * inv[i - j];
      inv[i] = -s;
    }
    std::vector<double> total = inv, power(len, 0.0);
    power[0] = 1.0;  // M^{k-1}
    for (int kk = 1; kk <= n; ++kk) {
      for (std::size_t i = 0; i + static_cast<std::size_t>(kk) < len; ++i)
        total[i + static_cast<std::size_t>(kk)] += k[static_cast<std::size_t>(kk - 1)] * power[i];
      power = mul(power, M, len);
    }
    CHECK(total[0] == doctest::Approx(1.0));
    for (std::size_t i = 1; i < len; ++i) CHECK(std::abs(total[i]) < 1e-12);
  }
}

TEST_CASE("S-transform") {
  auto s = s_transform(FormalSeries::cumulants({0.5, 0, 0, 0}));
  check_series(s, {2, 0, 0, 0}, 1e-14);
  for (double ell : {0.5, 0.3, 0.8}) {
    // (1+w)/(l+w) = (1/l)(1+w) sum_j (-w/l)^j.
    std::vector<double> expect(8);
    for (int j = 0; j < 8; ++j)
      expect[static_cast<std::size_t>(j)] = (std::pow(-1.0 / ell, j) + (j ? std::pow(-1.0 / ell, j - 1) : 0.0)) / ell;
    const auto kappa = moments_to_cumulants(FormalSeries::moments(std::vector<double>(8, ell)));
    check_series(s_transform(kappa), expect, 1e-11);
  }
  check_series(s_transform(moments_to_cumulants(FormalSeries::moments(std::vector<double>(6, 0.5)))), {2, -2}, 1e-13);
  try {
    s_transform(FormalSeries::cumulants({0.0, 1.0}));
    FAIL("expected undefined-S");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUndefinedS);
  }
  std::mt19937_64 rng(3);
  const auto k = random_vector(rng, 8, 0.2, 1.0);
  const auto back = s_to_cumulants(s_transform(FormalSeries::cumulants(k)));
  check_series(back, k, 1e-12);
}

TEST_CASE("free additive convolution") {
  const auto a = FormalSeries::cumulants({0.1, 0.2, 0.3});
  check_series(free_additive_convolution(a, FormalSeries::cumulants({0, 0, 0})), {0.1, 0.2, 0.3}, 0);
  check_series(free_additive_convolution(FormalSeries::cumulants({0, 1.5}), FormalSeries::cumulants({0, 2.0})), {0, 3.5}, 0);
  check_series(free_additive_convolution(FormalSeries::cumulants({0.3, 0}), FormalSeries::cumulants({0.4, 0, 0})), {0.7, 0}, 1e-15);
  CHECK(free_additive_convolution(a, FormalSeries::cumulants({1.0})).order() == 1);
}

TEST_CASE("free multiplicative convolution") {
  std::mt19937_64 rng(5);
  auto sa = s_transform(FormalSeries::cumulants(random_vector(rng, 6, 0.2, 1.0)));
  auto sb = s_transform(FormalSeries::cumulants(random_vector(rng, 6, 0.2, 1.0)));
  auto sc = s_transform(FormalSeries::cumulants(random_vector(rng, 6, 0.2, 1.0)));
  check_series(free_multiplicative_convolution(sa, FormalSeries::s_coeffs({1, 0, 0, 0, 0, 0})), sa.coeffs(), 1e-15);
  check_series(free_multiplicative_convolution(sa, sb), free_multiplicative_convolution(sb, sa).coeffs(), 1e-14);
  check_series(free_multiplicative_convolution(free_multiplicative_convolution(sa, sb), sc),
               free_multiplicative_convolution(sa, free_multiplicative_convolution(sb, sc)).coeffs(), 1e-13);
  const double x = 0.6, y = 1.7;
  const auto prod = free_multiplicative_convolution(s_transform(FormalSeries::cumulants({x, 0, 0, 0})),
                                                    s_transform(FormalSeries::cumulants({y, 0, 0, 0})));
  check_series(cumulants_to_moments(s_to_cumulants(prod)), {x * y, std::pow(x * y, 2), std::pow(x * y, 3), std::pow(x * y, 4)}, 1e-13);
}

TEST_CASE("free compression") {
  const auto k = FormalSeries::cumulants({0.5, 0.25, 0, -1.0 / 16, 0, 1.0 / 32});
  check_series(free_compress(k, 1.0), k.coeffs(), 0);
  check_series(free_compress(FormalSeries::cumulants({0, 1.5}), 0.5), {0, 3.0}, 1e-15);
  check_series(free_compress(k, 0.5), {1, 0.5, 0, -1.0 / 8, 0, 1.0 / 16}, 1e-15);
  CHECK_THROWS_AS(free_compress(k, 0.0), Error);
}

TEST_CASE("series accessors enforce truncation") {
  const auto m = FormalSeries::moments({1, 2, 3});
  CHECK(m[3] == 3);
  CHECK_THROWS_AS(m[4], Error);
  CHECK_THROWS_AS(m[0], Error);
  CHECK(FormalSeries::s_coeffs({5, 6})[0] == 5);
}

TEST_CASE("measures") {
  CHECK_THROWS_AS(Measure1D::atoms({{0.0, 0.5}, {1.0, 0.4}}), Error);
  const auto nu = Measure1D::atoms({{0.0, 0.25}, {2.0, 0.75}});
  const cplx z(0.3, 0.7);
  CHECK(std::abs(nu.cauchy(z) - (0.25 / z + 0.75 / (z - 2.0))) < 1e-15);
  const cplx target = nu.cauchy(z);
  CHECK(std::abs(nu.inverse_cauchy(target, z + 0.2) - z) < 1e-12);
  CHECK(nu.quantile(0.2) == 0.0);
  CHECK(nu.quantile(0.3) == 2.0);
  check_series(nu.moments(3), {1.5, 3.0, 6.0}, 1e-15);
  const auto flat = Measure1D::density(-1.0, 1.0, std::vector<double>(100, 3.0));
  CHECK(flat.quantile(0.75) == doctest::Approx(0.5));
  check_series(flat.moments(2), {0.0, 1.0 / 3.0}, 1e-3);
}

TEST_CASE("density from resolvent") {
  const double eps = 1e-3;
  const double c = 0.4;
  const std::vector<double> at{c};
  auto peak = density_from_resolvent([c](cplx z) { return 1.0 / (z - c); }, at, eps);
  CHECK(peak.rho[0] == doctest::Approx(1.0 / (M_PI * eps)));
  const std::vector<double> away{-1.0, 0.5, 2.0};
  auto zero = density_from_resolvent([](cplx z) { return 1.0 / z; }, away, eps);
  for (double r : zero.rho) CHECK(std::abs(r) < 2e-3);

  const auto grid = linspace(-2.2, 2.2, 4401);
  auto semi = density_from_resolvent([](cplx z) { return semicircle_cauchy(z, 1.0); }, grid, eps);
  auto exact = tabulate([](double x) { return semicircle_density(x, 1.0); }, grid);
  CHECK(l1_distance(semi, exact) < 1e-2);
  CHECK(semi.integral() == doctest::Approx(1.0).epsilon(1e-2));
  for (double r : semi.rho) CHECK(r > -1e-8);
  auto extra = density_from_resolvent([](cplx z) { return semicircle_cauchy(z, 1.0); }, grid, eps, true);
  CHECK(l1_distance(extra, exact) < l1_distance(semi, exact));

  auto bad = density_from_resolvent([](cplx) { return cplx(NAN, 0.0); }, at, eps);
  CHECK(bad.gap_count() == 1);
}
