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
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sbspec/sbspec.h"

namespace fs = std::filesystem;

namespace {

struct KernelGuard {
  sbs_kernel* k = nullptr;
  ~KernelGuard() { sbs_kernel_free(k); }
};

struct ResultGuard {
  sbs_result* r = nullptr;
  ~ResultGuard() { sbs_result_free(r); }
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sbspec_capi_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(sbs_version()).size() > 0);
  CHECK(std::string(sbs_status_name(SBS_OK)) == "ok");
  CHECK(std::string(sbs_status_name(SBS_ERR_UNSUPPORTED)) == "unsupported");
}

TEST_CASE("null arguments are rejected") {
  CHECK(sbs_kernel_wigner(1.0, nullptr) == SBS_ERR_ARGUMENT);
  CHECK(std::string(sbs_last_error()).size() > 0);
  double g_re = 0.0, g_im = 0.0;
  CHECK(sbs_resolvent(nullptr, nullptr, 0, 0.0, 1.0, &g_re, &g_im) == SBS_ERR_ARGUMENT);
  sbs_kernel_free(nullptr);
  sbs_result_free(nullptr);
}

TEST_CASE("Wigner resolvent matches the semicircle") {
  KernelGuard g;
  REQUIRE(sbs_kernel_wigner(1.0, &g.k) == SBS_OK);
  const std::vector<double> h(32, 1.0);
  double re = 0.0, im = 0.0;
  REQUIRE(sbs_resolvent(g.k, h.data(), h.size(), 0.3, 0.5, &re, &im) == SBS_OK);
  // Closed form (z - sqrt(z^2 - 4)) / 2 on the physical branch.
  const std::complex<double> z(0.3, 0.5);
  std::complex<double> root = std::sqrt(z * z - 4.0);
  if (std::imag(root) * std::imag(z) < 0.0) root = -root;
  const auto expected = (z - root) / 2.0;
  CHECK(re == doctest::Approx(expected.real()).epsilon(1e-9));
  CHECK(im == doctest::Approx(expected.imag()).epsilon(1e-9));
}

TEST_CASE("moment series agrees with the oracle through the C interface") {
  KernelGuard g;
  REQUIRE(sbs_kernel_wigner(1.0, &g.k) == SBS_OK);
  std::vector<double> h(16, 0.0);
  for (std::size_t i = 0; i < 8; ++i) h[i] = 1.0;
  double series[6];
  REQUIRE(sbs_moment_series(g.k, h.data(), h.size(), 6, series) == SBS_OK);
  for (int n = 1; n <= 6; ++n) {
    double o = 0.0;
    REQUIRE(sbs_moment_oracle(g.k, h.data(), h.size(), n, &o) == SBS_OK);
    CHECK(std::abs(o - series[n - 1]) < 1e-10);
  }
  // Half interval: phi_2 = l^2, phi_4 = 2 l^3.
  CHECK(series[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(series[3] == doctest::Approx(0.25).epsilon(1e-12));
  double o = 0.0;
  CHECK(sbs_moment_oracle(g.k, h.data(), h.size(), 12, &o) == SBS_ERR_UNSUPPORTED);
}

TEST_CASE("Haar kernel from atoms and from a config agree") {
  const double loc[] = {0.0, 1.0}, w[] = {0.5, 0.5};
  KernelGuard a, b;
  REQUIRE(sbs_kernel_haar_atoms(loc, w, 2, &a.k) == SBS_OK);
  REQUIRE(sbs_kernel_from_config(R"({"ensemble":{"type":"haar","spectrum":{"bernoulli":0.5}}})", &b.k) ==
          SBS_OK);
  const std::vector<double> h(20, 1.0);
  double ma[4], mb[4];
  REQUIRE(sbs_moment_series(a.k, h.data(), h.size(), 4, ma) == SBS_OK);
  REQUIRE(sbs_moment_series(b.k, h.data(), h.size(), 4, mb) == SBS_OK);
  for (int n = 0; n < 4; ++n) {
    CHECK(ma[n] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(mb[n] == doctest::Approx(ma[n]).epsilon(1e-12));
  }
  const double bad_w[] = {0.5, 0.4};
  sbs_kernel* k = nullptr;
  CHECK(sbs_kernel_haar_atoms(loc, bad_w, 2, &k) != SBS_OK);
  CHECK(k == nullptr);
  CHECK(sbs_kernel_from_config("{\"ensemble\":{\"type\":\"nope\"}}", &k) == SBS_ERR_CONFIG);
}

TEST_CASE("QSSEP closed form: support and peak") {
  double lo = 0.0, hi = 0.0;
  REQUIRE(sbs_qssep_support(0.0, 1.0, &lo, &hi) == SBS_OK);
  CHECK(lo == 0.0);
  CHECK(hi == 1.0);
  const double lambda = 0.5;
  double rho = 0.0;
  REQUIRE(sbs_qssep_subblock_density(0.0, 1.0, &lambda, 1, &rho) == SBS_OK);
  CHECK(rho == doctest::Approx(4.0 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-3));
  CHECK(sbs_qssep_support(0.7, 0.4, &lo, &hi) == SBS_ERR_DOMAIN);
}

TEST_CASE("density through the C interface") {
  KernelGuard g;
  REQUIRE(sbs_kernel_wigner(1.0, &g.k) == SBS_OK);
  const std::vector<double> h(64, 1.0);
  const std::vector<double> lambda{-1.0, 0.0, 1.0, 3.0};
  std::vector<double> rho(lambda.size());
  REQUIRE(sbs_density(g.k, h.data(), h.size(), lambda.data(), lambda.size(), 1e-6, rho.data()) == SBS_OK);
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(rho[k] == doctest::Approx(std::sqrt(4.0 - lambda[k] * lambda[k]) / (2.0 * std::numbers::pi))
                        .epsilon(1e-4));
  CHECK(rho[3] < 1e-5);
}

TEST_CASE("run_command: spectrum writes CSV and sidecar deterministically") {
  const char* cfg =
      R"({"ensemble":{"type":"wigner"},"grid":50,"lambda":{"lo":-2.5,"hi":2.5,"points":51}})";
  const auto dir1 = scratch("spec1"), dir2 = scratch("spec2");
  ResultGuard r1, r2;
  REQUIRE(sbs_run_command("spectrum", cfg, dir1.c_str(), nullptr, &r1.r) == SBS_OK);
  REQUIRE(sbs_result_exit_code(r1.r) == 0);
  REQUIRE(sbs_result_file_count(r1.r) == 2);
  CHECK(sbs_result_summary_count(r1.r) > 0);
  REQUIRE(sbs_run_command("spectrum", cfg, dir2.c_str(), nullptr, &r2.r) == SBS_OK);
  for (const char* name : {"spectrum.csv", "spectrum.json"})
    CHECK(slurp(dir1 / name) == slurp(dir2 / name));
  const std::string csv = slurp(dir1 / "spectrum.csv");
  CHECK(csv.rfind("# ", 0) == 0);
  CHECK(csv.find("G=50") != std::string::npos);
  CHECK(csv.find("lambda,rho_I,rho_tot,valid") != std::string::npos);
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("run_command: failures map to exit codes and write nothing") {
  struct Case {
    const char* command;
    const char* config;
    int exit_code;
  };
  const Case cases[] = {
      {"spectrum", "{\"ensemble\":", 2},
      {"spectrum", R"({"ensemble":{"type":"wigner"},"unknown":1})", 2},
      {"simulate", R"({"mc":{"realizations":0}})", 2},
      {"oracle", R"({"oracle":{"n_max":12}})", 4},
      {"diagnose", R"({"ensemble":{"type":"wigner"},"h":{"intervals":[[0,0.5]]},"grid":16})", 4},
      {"compare", R"({"ensemble":{"type":"custom","g1":[0.5]},"grid":16})", 4},
  };
  for (const auto& c : cases) {
    CAPTURE(c.config);
    const auto dir = scratch("fail");
    ResultGuard r;
    REQUIRE(sbs_run_command(c.command, c.config, dir.c_str(), nullptr, &r.r) == SBS_OK);
    CHECK(sbs_result_exit_code(r.r) == c.exit_code);
    CHECK(std::string(sbs_result_error(r.r)).size() > 0);
    CHECK(sbs_result_file_count(r.r) == 0);
    CHECK_FALSE(fs::exists(dir));
  }
  sbs_result* r = nullptr;
  CHECK(sbs_run_command("plot", "{}", "/tmp", nullptr, &r) == SBS_ERR_ARGUMENT);
}

TEST_CASE("run_command: diagnose verdicts") {
  const auto dir = scratch("diag");
  auto verdict = [&](const char* cfg) {
    ResultGuard r;
    REQUIRE(sbs_run_command("diagnose", cfg, dir.c_str(), nullptr, &r.r) == SBS_OK);
    REQUIRE(sbs_result_exit_code(r.r) == 0);
    const std::string csv = slurp(dir / "diagnose.csv");
    return csv.substr(csv.find("# verdict:"));
  };
  CHECK(verdict(R"({"ensemble":{"type":"custom","g1":[0.3],"g2":[[0.5]]},"h":{"intervals":[[0,0.5]]},"grid":32})") ==
        "# verdict: free-compatible\n");
  CHECK(verdict(R"({"ensemble":{"type":"haar","spectrum":{"bernoulli":0.5}},"h":{"intervals":[[0,0.5]]},"grid":32})") ==
        "# verdict: free-compatible\n");
  CHECK(verdict(R"({"ensemble":{"type":"qssep"},"h":{"intervals":[[0,0.5]]},"grid":200})") ==
        "# verdict: not free-compatible\n");
  fs::remove_all(dir);
}

TEST_CASE("run_command: seeded simulate reruns are byte-identical") {
  const char* cfg =
      R"({"ensemble":{"type":"wigner"},"h":{"intervals":[[0,0.5]]},"mc":{"N":40,"samples":4,"seed":3}})";
  const auto dir1 = scratch("sim1"), dir2 = scratch("sim2");
  sbs_run_options opts{1, 99, 2};
  ResultGuard r1, r2;
  REQUIRE(sbs_run_command("simulate", cfg, dir1.c_str(), &opts, &r1.r) == SBS_OK);
  REQUIRE(sbs_result_exit_code(r1.r) == 0);
  opts.threads = 3;
  REQUIRE(sbs_run_command("simulate", cfg, dir2.c_str(), &opts, &r2.r) == SBS_OK);
  CHECK(slurp(dir1 / "simulate_samples.csv") == slurp(dir2 / "simulate_samples.csv"));
  CHECK(slurp(dir1 / "simulate_histogram.csv") == slurp(dir2 / "simulate_histogram.csv"));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}
