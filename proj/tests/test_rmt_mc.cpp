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
#include <numeric>

#include "doctest.h"
#include "sbspec/density.hpp"
#include "sbspec/ensembles.hpp"
#include "sbspec/rmt_mc.hpp"

using namespace sbspec;

namespace {

QssepConfig small_qssep(std::size_t N) {
  QssepConfig cfg;
  cfg.N = N;
  cfg.dt = 0.05;
  cfg.t_end = 1.0;
  cfg.t_stat = 0.2;
  cfg.sample_every = 0.002;
  cfg.integrator = QssepIntegrator::kUnitary;
  cfg.seed = 7;
  return cfg;
}

// One shared stationary run; several cases read from it.
const QssepRun& stationary_run() {
  static const QssepRun run = qssep_run(small_qssep(30));
  return run;
}

}  // namespace

TEST_CASE("HermitianMatrix checks and symmetrizes") {
  Eigen::MatrixXcd m(2, 2);
  m << 1.0, cplx(0.0, 1.0), cplx(0.0, -1.0), 2.0;
  const HermitianMatrix h(m);
  CHECK(h.eigenvalues().size() == 2);
  m(0, 1) = cplx(0.0, 2.0);
  CHECK_THROWS_AS(HermitianMatrix{m}, Error);
  const std::vector<double> d{3.0, 1.0, 2.0};
  const auto ev = HermitianMatrix::diagonal(d).eigenvalues();
  CHECK(ev == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("Wigner sampling: variance and semicircle") {
  const RealGrid one(4, 1.0);
  const std::size_t N = 40;
  double sum = 0.0, sum2 = 0.0;
  const int draws = 4000;
  for (int k = 0; k < draws; ++k) {
    const auto m = sample_wigner(N, one, static_cast<std::uint64_t>(k));
    sum += m(0, 1).real();
    sum2 += std::norm(m(0, 1));
  }
  CHECK(std::abs(sum / draws) < 4.0 * std::sqrt(0.5 / N / draws));
  CHECK(sum2 / draws * N == doctest::Approx(1.0).epsilon(0.05));

  std::vector<double> eigs;
  for (int k = 0; k < 4; ++k) {
    auto ev = sample_wigner(400, one, 100 + static_cast<std::uint64_t>(k)).eigenvalues();
    eigs.insert(eigs.end(), ev.begin(), ev.end());
  }
  std::sort(eigs.begin(), eigs.end());
  const auto emp = empirical_density(eigs, 60);
  const auto ana = tabulate([](double x) { return semicircle_density(x, 1.0); }, linspace(-2.0, 2.0, 2001));
  CHECK(ks_distance(emp, ana) < 0.05);
  CHECK(ks_distance(ana, ana) == 0.0);
}

TEST_CASE("Wigner profile follows s") {
  const auto s = RealGrid::sample(8, [](double x) { return 1.0 + x; });
  const std::size_t N = 16;
  double corner = 0.0;
  const int draws = 3000;
  for (int k = 0; k < draws; ++k) corner += std::norm(sample_wigner(N, s, static_cast<std::uint64_t>(k))(N - 2, N - 1));
  // (i + j) / 2N for the last off-diagonal pair lies in the top cell.
  CHECK(corner / draws * N == doctest::Approx(1.9375 * 1.9375).epsilon(0.06));
}

TEST_CASE("Haar conjugation keeps the spectrum and has kappa_2 loops") {
  const auto sigma = Measure1D::atoms({{-1.0, 0.3}, {0.5, 0.4}, {2.0, 0.3}});
  const std::size_t N = 50;
  const auto m = sample_haar_conjugated(N, sigma, 3);
  const auto ev = m.eigenvalues();
  std::vector<double> d;
  for (std::size_t i = 0; i < N; ++i) d.push_back(sigma.quantile((i + 0.5) / N));
  std::sort(d.begin(), d.end());
  for (std::size_t i = 0; i < N; ++i) CHECK(ev[i] == doctest::Approx(d[i]).epsilon(1e-10));

  std::vector<HermitianMatrix> samples;
  for (int k = 0; k < 300; ++k)
    samples.push_back(sample_haar_conjugated(N, sigma, 1000 + static_cast<std::uint64_t>(k)));
  const double x2[2] = {0.2, 0.7};
  const auto kappa = sigma.cumulants(3);
  const auto g2 = estimate_local_cumulant(samples, x2);
  CHECK(std::abs(g2.value - kappa[2]) < 3.0 * g2.std_error + 0.02);
  CHECK(g2.std_error > 0.0);
  const double x1[1] = {0.4};
  const auto g1 = estimate_local_cumulant(samples, x1);
  CHECK(std::abs(g1.value - kappa[1]) < 3.0 * g1.std_error + 0.02);
}

TEST_CASE("QSSEP without dynamics is constant") {
  for (auto integ : {QssepIntegrator::kEuler, QssepIntegrator::kUnitary}) {
    QssepConfig cfg = small_qssep(10);
    cfg.noise = false;
    cfg.alpha1 = cfg.beta1 = cfg.alphaN = cfg.betaN = 0.0;
    cfg.integrator = integ;
    cfg.t_end = 0.1;
    cfg.t_stat = 0.0;
    const auto run = qssep_run(cfg);
    REQUIRE(run.snapshots.size() > 0);
    for (std::size_t i = 0; i < 10; ++i)
      CHECK(run.snapshots.back()(i, i).real() == doctest::Approx((i + 1) / 10.0).epsilon(1e-14));
    CHECK(run.info.max_trace_step == 0.0);
  }
}

TEST_CASE("QSSEP noise conserves the trace and Hermiticity") {
  for (auto integ : {QssepIntegrator::kEuler, QssepIntegrator::kUnitary}) {
    QssepConfig cfg = small_qssep(12);
    cfg.alpha1 = cfg.beta1 = cfg.alphaN = cfg.betaN = 0.0;
    cfg.integrator = integ;
    cfg.dt = 0.01;
    cfg.t_end = 0.02;
    cfg.t_stat = 0.0;
    const auto info = qssep_evolve(cfg, [](double, const HermitianMatrix&) {});
    CHECK(info.max_trace_step < 1e-10);
    CHECK(info.max_hermiticity_defect < 1e-12);
  }
}

TEST_CASE("QSSEP Euler step agrees with the exact rotation to first order") {
  // The noise-only step of both integrators differs by commutator terms of
  // order dt, so halving dt halves the gap.
  auto gap = [](double dt) {
    HermitianMatrix out[2] = {HermitianMatrix::diagonal(std::vector<double>{0.0}),
                              HermitianMatrix::diagonal(std::vector<double>{0.0})};
    for (int k = 0; k < 2; ++k) {
      QssepConfig cfg;
      cfg.N = 3;
      cfg.dt = dt;
      cfg.alpha1 = cfg.beta1 = cfg.alphaN = cfg.betaN = 0.0;
      cfg.integrator = k ? QssepIntegrator::kUnitary : QssepIntegrator::kEuler;
      cfg.t_end = cfg.sample_every = dt / 9.0;
      cfg.t_stat = 0.0;
      qssep_evolve(cfg, [&](double, const HermitianMatrix& m) { out[k] = m; });
    }
    return (out[0].entries() - out[1].entries()).cwiseAbs().maxCoeff();
  };
  const double a = gap(1e-4), b = gap(1e-6);
  CHECK(a < 1e-3);
  CHECK(b / a == doctest::Approx(0.01).epsilon(0.1));
}

TEST_CASE("QSSEP Euler at a large step reports instability") {
  QssepConfig cfg = small_qssep(30);
  cfg.integrator = QssepIntegrator::kEuler;
  cfg.dt = 0.1;
  CHECK_THROWS_WITH_AS(qssep_run(cfg), doctest::Contains("instability"), Error);
}

TEST_CASE("QSSEP stationary statistics") {
  const auto& run = stationary_run();
  REQUIRE(run.snapshots.size() > 300);
  const std::size_t N = 30;
  // The mean profile solves the discrete diffusion equation with reservoir
  // densities 0 at site 0 and 1 at site N + 1.
  double worst = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double mean = 0.0;
    for (const auto& m : run.snapshots) mean += m(i, i).real();
    mean /= static_cast<double>(run.snapshots.size());
    worst = std::max(worst, std::abs(mean - (i + 1.0) / (N + 1.0)));
  }
  CHECK(worst < 0.02);
  // g_2(x, y) = min(x, y) - x y.
  const double xy[2] = {0.3, 0.6};
  const auto g2 = estimate_local_cumulant(run.snapshots, xy);
  CHECK(std::abs(g2.value - 0.12) < 3.0 * g2.std_error);
  CHECK(run.info.spectrum_lo > -0.05);
  CHECK(run.info.spectrum_hi < 1.05);
  // Block average of g_2 over [0, 1]: int int (min - x y) = 1/12.
  const auto l2 = estimate_loop_average(run.snapshots, 2, 0.0, 1.0);
  CHECK(std::abs(l2.value - 1.0 / 12.0) < 0.01);
}

TEST_CASE("QSSEP subblock spectra are invariant under diagonal phases") {
  const auto& run = stationary_run();
  std::vector<HermitianMatrix> rotated;
  for (std::size_t k = 0; k < run.snapshots.size(); ++k)
    rotated.push_back(conjugate_by_phases(run.snapshots[k], 50 + k));
  const auto a = pooled_subblock_eigs(run.snapshots, 0.4, 0.7);
  const auto b = pooled_subblock_eigs(rotated, 0.4, 0.7);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
}

TEST_CASE("QSSEP runs are reproducible from the seed") {
  QssepConfig cfg = small_qssep(8);
  cfg.t_end = 0.05;
  cfg.t_stat = 0.0;
  const auto a = qssep_run(cfg), b = qssep_run(cfg);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  CHECK((a.snapshots.back().entries() - b.snapshots.back().entries()).cwiseAbs().maxCoeff() == 0.0);
  cfg.seed = 8;
  const auto c = qssep_run(cfg);
  CHECK((a.snapshots.back().entries() - c.snapshots.back().entries()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("Subblock selection") {
  std::vector<double> d(10);
  std::iota(d.begin(), d.end(), 1.0);
  const auto m = HermitianMatrix::diagonal(d);
  CHECK(subblock_eigs(m, 0.0, 1.0) == d);
  CHECK(subblock_eigs(m, 0.4, 0.7) == std::vector<double>{4.0, 5.0, 6.0, 7.0});
  CHECK(subblock_range(100, 0.4, 0.7) == std::pair<std::size_t, std::size_t>{39, 31});
  CHECK_THROWS_AS(subblock_eigs(m, 0.41, 0.42), Error);
  CHECK_THROWS_AS(subblock_eigs(m, 0.5, 0.5), Error);
}

TEST_CASE("Cumulant estimates reject coincident indices") {
  const std::vector<HermitianMatrix> samples{HermitianMatrix::diagonal(std::vector<double>(10, 1.0))};
  const double x[2] = {0.31, 0.35};
  CHECK_THROWS_WITH_AS(estimate_local_cumulant(samples, x), doctest::Contains("coincident"), Error);
  const double x4[4] = {0.1, 0.3, 0.5, 0.7};
  CHECK_THROWS_AS(estimate_local_cumulant(samples, x4), Error);
}

TEST_CASE("Jackknife of a mean is the standard error") {
  std::vector<std::vector<double>> obs;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(2.0, 1.0);
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < 400; ++k) {
    const double v = n(rng);
    obs.push_back({v});
    s += v;
    s2 += v * v;
  }
  const double mean = s / 400.0, var = (s2 - 400.0 * mean * mean) / 399.0;
  const auto e = jackknife(obs, [](std::span<const double> m) { return m[0]; }, 400);
  CHECK(e.value == doctest::Approx(mean).epsilon(1e-12));
  CHECK(e.std_error == doctest::Approx(std::sqrt(var / 400.0)).epsilon(1e-9));
  const auto blocked = jackknife(obs, [](std::span<const double> m) { return m[0]; }, 20);
  CHECK(blocked.std_error == doctest::Approx(e.std_error).epsilon(0.5));
}

TEST_CASE("KS distance of uniform samples") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u;
  std::vector<double> xs(10000);
  for (auto& x : xs) x = u(rng);
  std::sort(xs.begin(), xs.end());
  const auto emp = empirical_density(xs, 50, std::pair{0.0, 1.0});
  const auto ana = tabulate([](double) { return 1.0; }, linspace(0.0, 1.0, 101));
  CHECK(ks_distance(emp, ana) < 0.02);
}

TEST_CASE("parallel_for visits every index and rethrows") {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
  CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) fail(ErrorCode::kDomain, "boom");
                  }),
                  Error);
}
