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

#include "sbspec/sbspec.h"

#include <cmath>
#include <new>
#include <string>
#include <vector>

#include "sbspec/commands.hpp"
#include "sbspec/config.hpp"
#include "sbspec/ensembles.hpp"
#include "sbspec/ncpart.hpp"
#include "sbspec/solver.hpp"

struct sbs_kernel {
  sbspec::KernelPtr kernel;
};

struct sbs_result {
  sbspec::CommandResult result;
};

namespace {

thread_local std::string last_error;

sbs_status status_for(sbspec::ErrorCode code) {
  using sbspec::ErrorCode;
  switch (code) {
    case ErrorCode::kConfig: return SBS_ERR_CONFIG;
    case ErrorCode::kDomain:
    case ErrorCode::kPrecondition:
    case ErrorCode::kInvalidPartition: return SBS_ERR_DOMAIN;
    case ErrorCode::kSizeLimit:
    case ErrorCode::kUnsupportedOrder:
    case ErrorCode::kUnsupported:
    case ErrorCode::kConditioning:
    case ErrorCode::kDegenerate:
    case ErrorCode::kUndefinedS: return SBS_ERR_UNSUPPORTED;
    case ErrorCode::kConvergence:
    case ErrorCode::kNoSolution:
    case ErrorCode::kRootTracking:
    case ErrorCode::kBranch:
    case ErrorCode::kEvaluation: return SBS_ERR_CONVERGENCE;
    case ErrorCode::kInstability: return SBS_ERR_INSTABILITY;
    case ErrorCode::kIo: return SBS_ERR_IO;
  }
  return SBS_ERR_INTERNAL;
}

sbs_status argument_error(const char* what) {
  last_error = what;
  return SBS_ERR_ARGUMENT;
}

// Runs f, translating exceptions into status codes.
template <typename F>
sbs_status guarded(F&& f) {
  try {
    f();
    return SBS_OK;
  } catch (const sbspec::Error& e) {
    last_error = e.what();
    return status_for(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown exception";
  }
  return SBS_ERR_INTERNAL;
}

sbs_status make_kernel(sbspec::KernelPtr k, sbs_kernel** out) {
  *out = new sbs_kernel{std::move(k)};
  return SBS_OK;
}

sbspec::RealGrid to_grid(const double* h, size_t cells) {
  return sbspec::RealGrid(std::vector<double>(h, h + cells));
}

}  // namespace

extern "C" {

SBS_API const char* sbs_version(void) { return "1.0.0"; }

SBS_API const char* sbs_status_name(sbs_status status) {
  switch (status) {
    case SBS_OK: return "ok";
    case SBS_ERR_ARGUMENT: return "argument";
    case SBS_ERR_CONFIG: return "config";
    case SBS_ERR_DOMAIN: return "domain";
    case SBS_ERR_UNSUPPORTED: return "unsupported";
    case SBS_ERR_CONVERGENCE: return "convergence";
    case SBS_ERR_INSTABILITY: return "instability";
    case SBS_ERR_IO: return "io";
    case SBS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

SBS_API const char* sbs_last_error(void) { return last_error.c_str(); }

SBS_API sbs_status sbs_kernel_wigner(double s, sbs_kernel** out) {
  if (!out) return argument_error("out is null");
  return guarded([&] { make_kernel(sbspec::wigner_kernel(s), out); });
}

SBS_API sbs_status sbs_kernel_qssep(sbs_kernel** out) {
  if (!out) return argument_error("out is null");
  return guarded([&] { make_kernel(sbspec::qssep_kernel(), out); });
}

SBS_API sbs_status sbs_kernel_haar_atoms(const double* locations, const double* weights, size_t count,
                                         sbs_kernel** out) {
  if (!out || !locations || !weights || count == 0) return argument_error("null array or empty spectrum");
  return guarded([&] {
    std::vector<std::pair<double, double>> atoms;
    for (size_t i = 0; i < count; ++i) atoms.emplace_back(locations[i], weights[i]);
    auto m = sbspec::Measure1D::atoms(std::move(atoms));
    make_kernel(sbspec::haar_kernel(m.cumulants(8), m), out);
  });
}

SBS_API sbs_status sbs_kernel_from_config(const char* config_json, sbs_kernel** out) {
  if (!out || !config_json) return argument_error("null argument");
  return guarded([&] { make_kernel(sbspec::build_kernel(sbspec::parse_run_config(config_json)), out); });
}

SBS_API void sbs_kernel_free(sbs_kernel* kernel) { delete kernel; }

SBS_API sbs_status sbs_resolvent(const sbs_kernel* kernel, const double* h, size_t cells, double z_re,
                                 double z_im, double* g_re, double* g_im) {
  if (!kernel || !h || cells == 0 || !g_re || !g_im) return argument_error("null argument or empty grid");
  return guarded([&] {
    const auto g = sbspec::resolvent(*kernel->kernel, to_grid(h, cells), {z_re, z_im});
    *g_re = g.real();
    *g_im = g.imag();
  });
}

SBS_API sbs_status sbs_moment_series(const sbs_kernel* kernel, const double* h, size_t cells, int n_max,
                                     double* out) {
  if (!kernel || !h || cells == 0 || !out) return argument_error("null argument or empty grid");
  return guarded([&] {
    const auto m = sbspec::moment_series(*kernel->kernel, to_grid(h, cells), n_max);
    for (int n = 1; n <= n_max; ++n) out[n - 1] = m[n];
  });
}

SBS_API sbs_status sbs_moment_oracle(const sbs_kernel* kernel, const double* h, size_t cells, int n,
                                     double* out) {
  if (!kernel || !h || cells == 0 || !out) return argument_error("null argument or empty grid");
  return guarded([&] { *out = sbspec::ncpart::moment_oracle(*kernel->kernel, to_grid(h, cells), n); });
}

SBS_API sbs_status sbs_density(const sbs_kernel* kernel, const double* h, size_t cells, const double* lambda,
                               size_t points, double eps, double* rho) {
  if (!kernel || !h || cells == 0 || !lambda || !rho) return argument_error("null argument or empty grid");
  return guarded([&] {
    sbspec::DensityOptions opts;
    opts.eps = eps;
    const auto r = sbspec::spectral_density(*kernel->kernel, to_grid(h, cells), {lambda, points}, opts);
    for (size_t k = 0; k < points; ++k) rho[k] = r.density.valid[k] ? r.density.rho[k] : NAN;
  });
}

SBS_API sbs_status sbs_qssep_subblock_density(double c, double d, const double* lambda, size_t points,
                                              double* rho) {
  if (!lambda || !rho) return argument_error("null argument");
  return guarded([&] {
    const auto r = sbspec::qssep_subblock_density({c, d}, {lambda, points});
    for (size_t k = 0; k < points; ++k) rho[k] = r.valid[k] ? r.rho[k] : NAN;
  });
}

SBS_API sbs_status sbs_qssep_support(double c, double d, double* z_minus, double* z_plus) {
  if (!z_minus || !z_plus) return argument_error("null argument");
  return guarded([&] {
    const auto s = sbspec::qssep_support({c, d});
    *z_minus = s.z_minus;
    *z_plus = s.z_plus;
  });
}

SBS_API sbs_status sbs_run_command(const char* command, const char* config_json, const char* out_dir,
                                   const sbs_run_options* opts, sbs_result** out) {
  if (!command || !config_json || !out_dir || !out) return argument_error("null argument");
  const auto cmd = sbspec::parse_command(command);
  if (!cmd) return argument_error("unknown command");
  return guarded([&] {
    sbspec::CommandOptions o;
    if (opts) {
      if (opts->has_seed) o.seed = opts->seed;
      o.threads = opts->threads;
    }
    auto* r = new sbs_result{sbspec::run_command(*cmd, config_json, out_dir, o)};
    *out = r;
  });
}

SBS_API int sbs_result_exit_code(const sbs_result* result) {
  return result ? result->result.exit_code : sbspec::kExitInternal;
}

SBS_API const char* sbs_result_error(const sbs_result* result) {
  return result ? result->result.error.c_str() : "";
}

SBS_API size_t sbs_result_summary_count(const sbs_result* result) {
  return result ? result->result.summary.size() : 0;
}

SBS_API const char* sbs_result_summary(const sbs_result* result, size_t index) {
  if (!result || index >= result->result.summary.size()) return nullptr;
  return result->result.summary[index].c_str();
}

SBS_API size_t sbs_result_file_count(const sbs_result* result) {
  return result ? result->result.files.size() : 0;
}

SBS_API const char* sbs_result_file(const sbs_result* result, size_t index) {
  if (!result || index >= result->result.files.size()) return nullptr;
  return result->result.files[index].c_str();
}

SBS_API void sbs_result_free(sbs_result* result) { delete result; }

}  // extern "C"
