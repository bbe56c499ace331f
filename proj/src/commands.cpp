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

#include "sbspec/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "sbspec/ensembles.hpp"
#include "sbspec/ncpart.hpp"
#include "sbspec/rmt_mc.hpp"
#include "sbspec/solver.hpp"

namespace sbspec {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kDomain:
    case ErrorCode::kPrecondition:
    case ErrorCode::kInvalidPartition:
    case ErrorCode::kIo:
      return kExitConfig;
    case ErrorCode::kInstability:
      return kExitInstability;
    case ErrorCode::kSizeLimit:
    case ErrorCode::kUnsupportedOrder:
    case ErrorCode::kUnsupported:
    case ErrorCode::kConditioning:
    case ErrorCode::kDegenerate:
    case ErrorCode::kUndefinedS:
      return kExitUnsupported;
    case ErrorCode::kConvergence:
    case ErrorCode::kNoSolution:
    case ErrorCode::kRootTracking:
    case ErrorCode::kBranch:
    case ErrorCode::kEvaluation:
      return kExitConvergence;
  }
  return kExitInternal;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SBSPEC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 4096) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// JSON numbers cannot hold nan or inf; those become null.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& columns, const std::string& comment = "") {
    if (!comment.empty()) os_ << "# " << comment << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
    os_ << '\n';
  }
  Csv& cell(double v) { return sep() << format_double(v), *this; }
  Csv& cell(long long v) { return sep() << v, *this; }
  Csv& cell(std::size_t v) { return sep() << v, *this; }
  void end() {
    os_ << '\n';
    first_ = true;
  }
  void comment(const std::string& line) { os_ << "# " << line << '\n'; }
  std::string str() const { return os_.str(); }

 private:
  std::ostream& sep() {
    if (!first_) os_ << ',';
    first_ = false;
    return os_;
  }
  std::ostringstream os_;
  bool first_ = true;
};

struct Output {
  std::vector<std::pair<std::string, std::string>> files;
  json results = json::object();
  std::vector<std::string> summary;
  int exit_code = kExitOk;
};

void write_outputs(Command cmd, const RunConfig& cfg, const std::string& out_dir, Output& out,
                   CommandResult& result) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create output directory '" + out_dir + "': " + ec.message());
  json sidecar;
  sidecar["command"] = to_string(cmd);
  sidecar["config"] = cfg.resolved;
  sidecar["settings_hash"] = hex64(fnv1a64(cfg.resolved.dump()));
  json files = json::object();
  auto write = [&](const std::string& name, const std::string& bytes) {
    const fs::path path = fs::path(out_dir) / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << bytes;
    f.close();
    if (!f) fail(ErrorCode::kIo, "cannot write '" + path.string() + "'");
    result.files.push_back(name);
  };
  for (const auto& [name, bytes] : out.files) {
    files[name] = {{"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}};
  }
  sidecar["files"] = files;
  sidecar["results"] = out.results;
  sidecar["exit_code"] = out.exit_code;
  for (const auto& [name, bytes] : out.files) write(name, bytes);
  write(std::string(to_string(cmd)) + ".json", sidecar.dump(2) + "\n");
}

std::vector<double> lambda_grid(const RunConfig& cfg, const LocalCumulantKernel& g, const RealGrid& h) {
  double lo = cfg.lambda_lo, hi = cfg.lambda_hi;
  if (lo == 0.0 && hi == 0.0) {
    if (cfg.ensemble.type == EnsembleType::kQssep) {
      lo = -0.05, hi = 1.05;
    } else {
      const double b = g.spectral_radius_bound(h);
      lo = -1.1 * b, hi = 1.1 * b;
    }
  }
  return linspace(lo, hi, cfg.lambda_points);
}

// Detected support: the first and last valid points where rho exceeds the
// threshold.
std::pair<double, double> detected_support(const SpectralDensity& d, double threshold) {
  double lo = NAN, hi = NAN;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (!d.valid[k] || !(d.rho[k] > threshold)) continue;
    if (std::isnan(lo)) lo = d.lambda[k];
    hi = d.lambda[k];
  }
  return {lo, hi};
}

// Known support edges of the block density, when closed-form.
std::optional<std::pair<double, double>> closed_form_support(const RunConfig& cfg) {
  if (!cfg.h.is_indicator()) return std::nullopt;
  const double ell = cfg.h.length();
  switch (cfg.ensemble.type) {
    case EnsembleType::kWigner: {
      const double r = 2.0 * cfg.ensemble.s * std::sqrt(ell);
      return std::pair{-r, r};
    }
    case EnsembleType::kInhomogeneous: {
      double smax = 0.0;
      for (auto [c, d] : cfg.h.intervals)
        for (int k = 0; k <= 1000; ++k) smax = std::max(smax, cfg.ensemble.s2(c + (d - c) * k / 1000.0));
      return std::pair{-2.0 * std::sqrt(smax), 2.0 * std::sqrt(smax)};
    }
    case EnsembleType::kQssep: {
      if (cfg.h.intervals.size() != 1) return std::nullopt;
      const auto s = qssep_support({cfg.h.intervals[0].first, cfg.h.intervals[0].second});
      return std::pair{s.z_minus, s.z_plus};
    }
    default:
      return std::nullopt;
  }
}

json density_stats(const DensityReport& r) {
  return {{"points", r.density.size()},
          {"gaps", r.density.gap_count()},
          {"max_residual", jnum(r.max_residual)},
          {"max_iterations", r.max_iterations},
          {"cold_restarts", r.cold_restarts},
          {"mass", jnum(r.density.integral())}};
}

DensityReport solver_density(const RunConfig& cfg, const LocalCumulantKernel& g, const RealGrid& h,
                             std::span<const double> lambda, int threads) {
  DensityOptions opts;
  opts.eps = cfg.eps;
  opts.extrapolate = cfg.extrapolate;
  opts.threads = threads;
  opts.solver = cfg.solver;
  return spectral_density(g, h, lambda, opts);
}

std::string header_comment(const RunConfig& cfg, Command cmd) {
  std::ostringstream os;
  os << "sbspec " << to_string(cmd) << " ensemble=" << to_string(cfg.ensemble.type)
     << " G=" << cfg.grid << " eps=" << format_double(cfg.eps)
     << " extrapolate=" << (cfg.extrapolate ? "true" : "false")
     << " settings=" << hex64(fnv1a64(cfg.resolved.dump()));
  return os.str();
}

// ---- spectrum / compare ------------------------------------------------------

Output cmd_spectrum(const RunConfig& cfg, int threads) {
  const auto g = build_kernel(cfg);
  const auto h = build_h(cfg, cfg.grid);
  const auto lambda = lambda_grid(cfg, *g, h);
  const auto report = solver_density(cfg, *g, h, lambda, threads);
  const auto& d = report.density;
  std::optional<SpectralDensity> closed;
  if (cfg.closed_form) closed = closed_form_density(cfg, lambda);

  std::vector<std::string> columns{"lambda", "rho_I", "rho_tot", "valid"};
  if (closed) columns.push_back("rho_closed");
  Csv csv(columns, header_comment(cfg, Command::kSpectrum));
  for (std::size_t k = 0; k < d.size(); ++k) {
    csv.cell(d.lambda[k]).cell(d.rho[k]).cell(d.rho_total(k)).cell(static_cast<std::size_t>(d.valid[k]));
    if (closed) csv.cell(closed->rho[k]);
    csv.end();
  }

  Output out;
  out.files.emplace_back("spectrum.csv", csv.str());
  const auto [slo, shi] = detected_support(d, cfg.support_threshold);
  out.results["support"] = {jnum(slo), jnum(shi)};
  out.results["block_mass"] = jnum(d.block_mass);
  out.results["atom_weight"] = jnum(d.atom_at_zero);
  out.results["residuals"] = density_stats(report);
  if (closed) {
    out.results["closed_form"] = {{"l1", jnum(l1_distance(d, *closed))}};
    if (auto s = closed_form_support(cfg)) out.results["closed_form"]["support"] = {s->first, s->second};
  }
  out.results["partial"] = d.gap_count() > 0;
  out.summary.push_back("spectrum: " + std::to_string(d.size()) + " points, support [" + format_double(slo) +
                        ", " + format_double(shi) + "], gaps " + std::to_string(d.gap_count()));
  if (closed) out.summary.push_back("closed form L1 " + format_double(out.results["closed_form"]["l1"].get<double>()));
  if (d.gap_count() > 0) out.exit_code = kExitConvergence;
  return out;
}

Output cmd_compare(const RunConfig& cfg, int threads) {
  const auto g = build_kernel(cfg);
  const auto h = build_h(cfg, cfg.grid);
  const auto lambda = lambda_grid(cfg, *g, h);
  auto closed = closed_form_density(cfg, lambda);
  if (!closed) fail(ErrorCode::kUnsupported, "no closed form for this ensemble and h");
  const auto report = solver_density(cfg, *g, h, lambda, threads);
  const auto& d = report.density;

  Csv csv({"lambda", "rho_solver", "rho_closed", "abs_diff", "valid"}, header_comment(cfg, Command::kCompare));
  for (std::size_t k = 0; k < d.size(); ++k)
    csv.cell(d.lambda[k]).cell(d.rho[k]).cell(closed->rho[k]).cell(std::abs(d.rho[k] - closed->rho[k]))
        .cell(static_cast<std::size_t>(d.valid[k])).end();

  Output out;
  out.files.emplace_back("compare.csv", csv.str());
  const double l1 = l1_distance(d, *closed);
  const double ks = ks_distance(d, *closed);
  const auto [slo, shi] = detected_support(d, cfg.support_threshold);
  out.results["l1"] = jnum(l1);
  out.results["ks"] = jnum(ks);
  out.results["support_detected"] = {jnum(slo), jnum(shi)};
  if (auto s = closed_form_support(cfg)) out.results["support_closed_form"] = {s->first, s->second};
  out.results["residuals"] = density_stats(report);
  out.results["partial"] = d.gap_count() > 0;
  out.summary.push_back("compare: L1 " + format_double(l1) + ", KS " + format_double(ks));
  if (d.gap_count() > 0) out.exit_code = kExitConvergence;
  return out;
}

// ---- oracle ------------------------------------------------------------------

Output cmd_oracle(const RunConfig& cfg) {
  const int n_max = cfg.oracle_n_max;
  if (n_max > ncpart::kMaxOracleOrder)
    fail(ErrorCode::kSizeLimit, "oracle supports n <= " + std::to_string(ncpart::kMaxOracleOrder) +
                                    ", got " + std::to_string(n_max));
  const auto g = build_kernel(cfg);
  const auto h = build_h(cfg, cfg.grid);
  const auto series = moment_series(*g, h, n_max);
  // Vanishing moments (odd Wigner moments) are compared on the natural scale
  // bound^n of phi_n instead.
  const double bound = g->spectral_radius_bound(h);
  Csv csv({"n", "phi_oracle", "phi_solver", "rel_gap"}, header_comment(cfg, Command::kOracle));
  double worst = 0.0;
  json rows = json::array();
  for (int n = 1; n <= n_max; ++n) {
    const double o = ncpart::moment_oracle(*g, h, n);
    const double s = series[n];
    const double natural = std::max(std::pow(bound, n), 1e-300);
    const double scale = std::abs(o) < 1e-12 * natural ? natural : std::abs(o);
    const double gap = std::abs(o - s) / scale;
    worst = std::max(worst, gap);
    csv.cell(static_cast<std::size_t>(n)).cell(o).cell(s).cell(gap).end();
    rows.push_back({{"n", n}, {"oracle", jnum(o)}, {"solver", jnum(s)}, {"rel_gap", jnum(gap)}});
  }
  Output out;
  out.files.emplace_back("oracle.csv", csv.str());
  out.results["moments"] = rows;
  out.results["max_rel_gap"] = jnum(worst);
  out.summary.push_back("oracle: n <= " + std::to_string(n_max) + ", max relative gap " + format_double(worst));
  return out;
}

// ---- diagnose ----------------------------------------------------------------

Output cmd_diagnose(const RunConfig& cfg) {
  const auto g = build_kernel(cfg);
  const auto h = build_h(cfg, cfg.grid);
  const auto r = nonfreeness_diagnostic(*g, h, cfg.diagnose_order);
  const std::string verdict = r.free_compatible ? "free-compatible" : "not free-compatible";
  Csv csv({"k", "ratio", "s_h", "abs_gap"}, header_comment(cfg, Command::kDiagnose));
  json rows = json::array();
  for (int k = 0; k < r.ratio.order(); ++k) {
    const double a = r.ratio[k], b = r.s_h[k];
    csv.cell(static_cast<std::size_t>(k)).cell(a).cell(b).cell(std::abs(a - b)).end();
    rows.push_back({{"k", k}, {"ratio", jnum(a)}, {"s_h", jnum(b)}});
  }
  csv.comment("verdict: " + verdict);
  Output out;
  out.files.emplace_back("diagnose.csv", csv.str());
  out.results["coefficients"] = rows;
  out.results["max_gap"] = jnum(r.max_gap);
  out.results["verdict"] = verdict;
  out.summary.push_back("verdict: " + verdict);
  return out;
}

// ---- simulate ----------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(seed ^ splitmix64(a ^ splitmix64(b)));
}

// Eigenvalues of M_h restricted to {h > 0}. Indicators select the sites
// ceil(cN)..floor(dN) of each interval; profiles weight site i by
// h((i + 1/2) / N).
std::vector<double> block_eigs(const HermitianMatrix& m, const RunConfig& cfg) {
  const std::size_t N = m.N();
  std::vector<std::size_t> sites;
  std::vector<double> weight;
  if (cfg.h.is_indicator()) {
    for (auto [c, d] : cfg.h.intervals) {
      const auto [first, count] = subblock_range(N, c, d);
      for (std::size_t i = first; i < first + count; ++i) sites.push_back(i);
    }
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    weight.assign(sites.size(), 1.0);
  } else {
    for (std::size_t i = 0; i < N; ++i) {
      const double w = cfg.h.profile((static_cast<double>(i) + 0.5) / static_cast<double>(N));
      if (w > 0.0) sites.push_back(i), weight.push_back(std::sqrt(w));
    }
    if (sites.empty()) fail(ErrorCode::kDomain, "h vanishes on every site");
  }
  const auto k = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXcd b(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < k; ++i)
      b(i, j) = weight[static_cast<std::size_t>(i)] * m(sites[static_cast<std::size_t>(i)], sites[static_cast<std::size_t>(j)]) *
                weight[static_cast<std::size_t>(j)];
  return HermitianMatrix(std::move(b)).eigenvalues();
}

struct Draw {
  std::size_t realization = 0, sample = 0;
  double t = 0.0;
  std::vector<double> eigs;
};

Output cmd_simulate(const RunConfig& cfg, int threads) {
  const auto& mc = cfg.mc;
  const auto type = cfg.ensemble.type;
  if (type == EnsembleType::kCustom) fail(ErrorCode::kUnsupported, "no sampler for custom kernels");

  std::vector<std::vector<Draw>> draws(mc.realizations);
  std::vector<QssepRunInfo> infos(mc.realizations);
  RealGrid s_grid;
  if (type == EnsembleType::kWigner) s_grid = RealGrid(1, cfg.ensemble.s);
  if (type == EnsembleType::kInhomogeneous)
    s_grid = RealGrid::sample(std::max<std::size_t>(cfg.grid, mc.N),
                              [&](double x) { return std::sqrt(cfg.ensemble.s2(x)); });

  // One generator stream per realization; the matrix loop inside a
  // realization is sequential, so thread count does not change the output.
  const int outer = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), mc.realizations));
  parallel_for(mc.realizations, outer, [&](std::size_t r) {
    auto& out = draws[r];
    if (type == EnsembleType::kQssep) {
      QssepConfig q = mc.qssep;
      q.N = mc.N;
      q.seed = derived_seed(mc.seed, r, 0);
      std::size_t k = 0;
      infos[r] = qssep_evolve(q, [&](double t, const HermitianMatrix& m) {
        out.push_back({r, k++, t, block_eigs(m, cfg)});
      });
      return;
    }
    for (std::size_t k = 0; k < mc.samples; ++k) {
      const auto seed = derived_seed(mc.seed, r, k + 1);
      const HermitianMatrix m = type == EnsembleType::kHaar
                                    ? sample_haar_conjugated(mc.N, *cfg.ensemble.spectrum, seed, mc.draw)
                                    : sample_wigner(mc.N, s_grid, seed);
      out.push_back({r, k, 0.0, block_eigs(m, cfg)});
    }
  });

  Csv raw({"realization", "sample", "t", "lambda"}, "sbspec simulate eigenvalue samples ensemble=" +
                                                       std::string(to_string(type)) + " N=" + std::to_string(mc.N));
  std::vector<double> pooled;
  for (const auto& rs : draws)
    for (const auto& d : rs)
      for (double l : d.eigs) {
        raw.cell(d.realization).cell(d.sample).cell(d.t).cell(l).end();
        pooled.push_back(l);
      }
  if (pooled.empty()) fail(ErrorCode::kPrecondition, "no samples in the stationary window; increase t_end");
  std::sort(pooled.begin(), pooled.end());
  const auto hist = empirical_density(pooled, mc.bins);

  // Reference density: a file, else the closed form, else the solver.
  std::optional<SpectralDensity> ref;
  std::string ref_kind = "none";
  const double pad = 0.05 * std::max(1e-3, pooled.back() - pooled.front());
  std::vector<double> lambda;
  if (cfg.lambda_lo != 0.0 || cfg.lambda_hi != 0.0) lambda = linspace(cfg.lambda_lo, cfg.lambda_hi, cfg.lambda_points);
  else lambda = linspace(pooled.front() - pad, pooled.back() + pad, std::max<std::size_t>(cfg.lambda_points, 2001));
  if (!cfg.reference.empty()) {
    ref = read_density_csv(cfg.reference);
    ref_kind = "file";
  } else if (cfg.closed_form) {
    ref = closed_form_density(cfg, lambda);
    if (ref) ref_kind = "closed_form";
  }
  if (!ref && cfg.closed_form) {
    const auto g = build_kernel(cfg);
    ref = solver_density(cfg, *g, build_h(cfg, cfg.grid), lambda, threads).density;
    ref_kind = "solver";
  }

  Csv hcsv({"lambda", "density", "reference"}, "sbspec simulate histogram bins=" + std::to_string(mc.bins));
  for (std::size_t k = 0; k < hist.size(); ++k) {
    double rv = NAN;
    if (ref) {
      const auto& R = *ref;
      auto it = std::lower_bound(R.lambda.begin(), R.lambda.end(), hist.lambda[k]);
      if (it != R.lambda.begin() && it != R.lambda.end()) {
        const auto j = static_cast<std::size_t>(it - R.lambda.begin());
        const double w = (hist.lambda[k] - R.lambda[j - 1]) / (R.lambda[j] - R.lambda[j - 1]);
        rv = (1.0 - w) * R.rho[j - 1] + w * R.rho[j];
      }
    }
    hcsv.cell(hist.lambda[k]).cell(hist.rho[k]).cell(rv).end();
  }

  Output out;
  out.files.emplace_back("simulate_samples.csv", raw.str());
  out.files.emplace_back("simulate_histogram.csv", hcsv.str());
  std::size_t matrices = 0;
  for (const auto& rs : draws) matrices += rs.size();
  out.results["matrices"] = matrices;
  out.results["eigenvalues"] = pooled.size();
  out.results["range"] = {pooled.front(), pooled.back()};
  out.results["reference"] = ref_kind;
  if (ref) {
    const double ks = ks_distance(hist, *ref);
    out.results["ks"] = jnum(ks);
    out.summary.push_back("simulate: " + std::to_string(pooled.size()) + " eigenvalues, KS " + format_double(ks) +
                          " vs " + ref_kind);
  } else {
    out.summary.push_back("simulate: " + std::to_string(pooled.size()) + " eigenvalues");
  }
  if (type == EnsembleType::kQssep) {
    json runs = json::array();
    for (const auto& i : infos)
      runs.push_back({{"t_stat", jnum(i.t_stat)},
                      {"t_stat_detected", i.t_stat_detected},
                      {"steps", i.steps},
                      {"snapshots", i.samples},
                      {"spectrum", {jnum(i.spectrum_lo), jnum(i.spectrum_hi)}},
                      {"max_trace_step", jnum(i.max_trace_step)},
                      {"max_hermiticity_defect", jnum(i.max_hermiticity_defect)}});
    out.results["qssep_runs"] = runs;
  }
  return out;
}

}  // namespace

std::optional<SpectralDensity> closed_form_density(const RunConfig& cfg, std::span<const double> lambda) {
  if (!cfg.h.is_indicator()) return std::nullopt;
  const double ell = cfg.h.length();
  const auto& e = cfg.ensemble;
  switch (e.type) {
    case EnsembleType::kWigner: {
      const double s = e.s * std::sqrt(ell);
      return tabulate([s](double x) { return semicircle_density(x, s); }, lambda);
    }
    case EnsembleType::kInhomogeneous: {
      // Average over the block of semicircles of radius 2 s(x).
      std::vector<double> s;
      for (auto [c, d] : cfg.h.intervals) {
        const auto cells = static_cast<std::size_t>(std::ceil((d - c) * 4096.0));
        for (std::size_t k = 0; k < cells; ++k)
          s.push_back(std::sqrt(e.s2(c + (d - c) * (static_cast<double>(k) + 0.5) / static_cast<double>(cells))));
      }
      auto rho = [s](double x) {
        double acc = 0.0;
        for (double v : s) acc += semicircle_density(x, v);
        return acc / static_cast<double>(s.size());
      };
      return tabulate(rho, lambda);
    }
    case EnsembleType::kHaar:
      return haar_subblock_density(*e.spectrum, ell, lambda, cfg.eps);
    case EnsembleType::kQssep:
      if (cfg.h.intervals.size() != 1) return std::nullopt;
      return qssep_subblock_density({cfg.h.intervals[0].first, cfg.h.intervals[0].second}, lambda);
    case EnsembleType::kCustom:
      return std::nullopt;
  }
  return std::nullopt;
}

SpectralDensity read_density_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::kIo, "cannot read reference density '" + path + "'");
  std::vector<double> lambda, rho;
  std::string line;
  bool header_allowed = true;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string a, b;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')) fail(ErrorCode::kIo, path + ": expected two columns");
    char* end_a = nullptr;
    char* end_b = nullptr;
    const double x = std::strtod(a.c_str(), &end_a);
    const double y = std::strtod(b.c_str(), &end_b);
    if (end_a == a.c_str() || end_b == b.c_str()) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      fail(ErrorCode::kIo, path + ": non-numeric row");
    }
    header_allowed = false;
    if (!lambda.empty() && !(x > lambda.back())) fail(ErrorCode::kIo, path + ": lambda must increase");
    lambda.push_back(x);
    rho.push_back(y);
  }
  if (lambda.size() < 2) fail(ErrorCode::kIo, path + ": needs at least two rows");
  SpectralDensity d;
  d.lambda = std::move(lambda);
  d.rho = std::move(rho);
  d.valid.assign(d.lambda.size(), true);
  for (std::size_t k = 0; k < d.size(); ++k) d.valid[k] = std::isfinite(d.rho[k]);
  return d;
}

CommandResult run_command(Command cmd, const std::string& config_text, const std::string& out_dir,
                          const CommandOptions& opts) {
  CommandResult result;
  try {
    RunConfig cfg = parse_run_config(config_text);
    if (cfg.command && *cfg.command != cmd)
      fail(ErrorCode::kConfig, std::string("config is for '") + to_string(*cfg.command) + "', not '" +
                                   to_string(cmd) + "'");
    if (out_dir.empty()) fail(ErrorCode::kConfig, "output directory is required");
    if (opts.seed) {
      cfg.mc.seed = *opts.seed;
      cfg.resolved["mc"]["seed"] = *opts.seed;
    }
    cfg.resolved["command"] = to_string(cmd);
    const int threads = resolve_threads(opts.threads);

    Output out;
    switch (cmd) {
      case Command::kSpectrum: out = cmd_spectrum(cfg, threads); break;
      case Command::kSimulate: out = cmd_simulate(cfg, threads); break;
      case Command::kOracle: out = cmd_oracle(cfg); break;
      case Command::kCompare: out = cmd_compare(cfg, threads); break;
      case Command::kDiagnose: out = cmd_diagnose(cfg); break;
    }
    write_outputs(cmd, cfg, out_dir, out, result);
    result.exit_code = out.exit_code;
    result.summary = std::move(out.summary);
    if (out.exit_code != kExitOk) result.error = "partial output: some points failed to converge";
  } catch (const Error& e) {
    result.exit_code = exit_code_for(e.code());
    result.error = e.what();
  } catch (const std::exception& e) {
    result.exit_code = kExitInternal;
    result.error = std::string("internal error: ") + e.what();
  }
  return result;
}

}  // namespace sbspec
