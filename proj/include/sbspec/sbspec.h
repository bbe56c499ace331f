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

/* C interface to sbspec. All functions report failures through a status
 * code; the message of the most recent failure on the calling thread is
 * available from sbs_last_error(). Handles are opaque and must be released
 * with the matching _free function. */

#ifndef SBSPEC_SBSPEC_H
#define SBSPEC_SBSPEC_H

#include <stddef.h>
#include <stdint.h>

#if defined(SBSPEC_BUILDING_LIBRARY)
#define SBS_API __attribute__((visibility("default")))
#else
#define SBS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sbs_status {
  SBS_OK = 0,
  SBS_ERR_ARGUMENT = 1,    /* null pointer or size mismatch */
  SBS_ERR_CONFIG = 2,
  SBS_ERR_DOMAIN = 3,      /* input outside the domain of the operation */
  SBS_ERR_UNSUPPORTED = 4, /* order, size or ensemble not supported */
  SBS_ERR_CONVERGENCE = 5,
  SBS_ERR_INSTABILITY = 6,
  SBS_ERR_IO = 7,
  SBS_ERR_INTERNAL = 8
} sbs_status;

typedef struct sbs_kernel sbs_kernel;
typedef struct sbs_result sbs_result;

SBS_API const char* sbs_version(void);
SBS_API const char* sbs_status_name(sbs_status status);
/* Message of the last failure on this thread; "" if none. Valid until the
 * next failing call on the same thread. */
SBS_API const char* sbs_last_error(void);

/* ---- Kernels ---------------------------------------------------------- */

SBS_API sbs_status sbs_kernel_wigner(double s, sbs_kernel** out);
SBS_API sbs_status sbs_kernel_qssep(sbs_kernel** out);
/* Haar-rotated ensemble whose spectrum has the given atoms. */
SBS_API sbs_status sbs_kernel_haar_atoms(const double* locations, const double* weights, size_t count,
                                         sbs_kernel** out);
/* Kernel described by a run configuration (its "ensemble" section). */
SBS_API sbs_status sbs_kernel_from_config(const char* config_json, sbs_kernel** out);
SBS_API void sbs_kernel_free(sbs_kernel* kernel);

/* ---- Solver ----------------------------------------------------------- */

/* h holds the values of h on `cells` uniform cells of [0,1]. */
SBS_API sbs_status sbs_resolvent(const sbs_kernel* kernel, const double* h, size_t cells, double z_re,
                                 double z_im, double* g_re, double* g_im);
/* Writes phi_1..phi_{n_max} to out[0..n_max-1]. n_max <= 8. */
SBS_API sbs_status sbs_moment_series(const sbs_kernel* kernel, const double* h, size_t cells, int n_max,
                                     double* out);
/* phi_n as a sum over non-crossing partitions. n <= 8. */
SBS_API sbs_status sbs_moment_oracle(const sbs_kernel* kernel, const double* h, size_t cells, int n,
                                     double* out);
/* Block-normalized density at lambda[k] + i eps. Failed points are NaN. */
SBS_API sbs_status sbs_density(const sbs_kernel* kernel, const double* h, size_t cells, const double* lambda,
                               size_t points, double eps, double* rho);

/* ---- Closed forms ----------------------------------------------------- */

SBS_API sbs_status sbs_qssep_subblock_density(double c, double d, const double* lambda, size_t points,
                                              double* rho);
SBS_API sbs_status sbs_qssep_support(double c, double d, double* z_minus, double* z_plus);

/* ---- Commands --------------------------------------------------------- */

typedef struct sbs_run_options {
  int has_seed;  /* nonzero: seed overrides mc.seed */
  uint64_t seed;
  int threads;   /* 0: SBSPEC_THREADS, else hardware concurrency */
} sbs_run_options;

/* Runs spectrum|simulate|oracle|compare|diagnose. Returns SBS_OK whenever
 * the command ran; its outcome is in the result (exit code 0 success, 2
 * config error, 3 instability, 4 unsupported request, 5 convergence
 * failure). opts may be NULL. */
SBS_API sbs_status sbs_run_command(const char* command, const char* config_json, const char* out_dir,
                                   const sbs_run_options* opts, sbs_result** out);
SBS_API int sbs_result_exit_code(const sbs_result* result);
SBS_API const char* sbs_result_error(const sbs_result* result);
SBS_API size_t sbs_result_summary_count(const sbs_result* result);
SBS_API const char* sbs_result_summary(const sbs_result* result, size_t index);
SBS_API size_t sbs_result_file_count(const sbs_result* result);
SBS_API const char* sbs_result_file(const sbs_result* result, size_t index);
SBS_API void sbs_result_free(sbs_result* result);

#ifdef __cplusplus
}
#endif

#endif /* SBSPEC_SBSPEC_H */
