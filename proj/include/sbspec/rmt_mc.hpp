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

#ifndef SBSPEC_RMT_MC_HPP
#define SBSPEC_RMT_MC_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "sbspec/freeprob.hpp"
#include "sbspec/grid.hpp"

namespace sbspec {

/// Dense Hermitian matrix. Construction from raw entries checks Hermiticity
/// to 1e-12 (relative to the largest entry) and symmetrizes exactly.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(Eigen::MatrixXcd entries);
  static HermitianMatrix diagonal(std::span<const double> d);

  std::size_t N() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const Eigen::MatrixXcd& entries() const noexcept { return m_; }
  cplx operator()(std::size_t i, std::size_t j) const {
    return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  // Principal submatrix on rows/columns first..first+count-1 (0-based).
  HermitianMatrix principal(std::size_t first, std::size_t count) const;
  std::vector<double> eigenvalues() const;  // ascending

 private:
  struct Trusted {};
  HermitianMatrix(Eigen::MatrixXcd entries, Trusted) : m_(std::move(entries)) {}
  friend class QssepStepper;
  friend HermitianMatrix conjugate_by_phases(const HermitianMatrix&, std::uint64_t);

  Eigen::MatrixXcd m_;
};

/// Independent stream `stream` of the generator family keyed by `seed`.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Hermitian Gaussian matrix with E|M_ij|^2 = s((i+j)/2N)^2 / N (complex
/// off-diagonal entries, real diagonal). s is looked up cell-wise.
HermitianMatrix sample_wigner(std::size_t N, const RealGrid& s, std::uint64_t seed);

enum class DiagonalDraw {
  kQuantile,  // D_i = quantile((i + 1/2) / N), no sampling noise in the spectrum
  kIid,
};

/// U D U^dagger with U Haar distributed (QR of a complex Ginibre matrix with
/// the phases of diag(R) absorbed into Q).
HermitianMatrix sample_haar_conjugated(std::size_t N, const Measure1D& spectrum, std::uint64_t seed,
                                       DiagonalDraw draw = DiagonalDraw::kQuantile);

/// D M D^dagger with D = diag(e^{i phi_j}), phi_j uniform.
HermitianMatrix conjugate_by_phases(const HermitianMatrix& m, std::uint64_t seed);

// ---- QSSEP -----------------------------------------------------------------

enum class QssepIntegrator {
  kEuler,    // Euler-Maruyama with the double-commutator Ito term
  kUnitary,  // exact 2x2 bond rotations (even then odd bonds), exact boundary flow
};

/// Times t_end, t_stat and sample_every are in diffusive units t = tau / N^2,
/// where tau is the time of the microscopic equation (step dt). With unit
/// noise strength per bond, relaxation takes t of order 0.1.
struct QssepConfig {
  std::size_t N = 100;
  double dt = 0.1;
  double t_end = 0.4;
  double t_stat = -1.0;  // < 0: detect the stationary window
  double sample_every = 0.001;
  double alpha1 = 0.0, beta1 = 1.0, alphaN = 1.0, betaN = 0.0;
  bool noise = true;
  QssepIntegrator integrator = QssepIntegrator::kEuler;
  std::uint64_t seed = 1;

  void validate() const;
};

struct QssepRunInfo {
  double t_stat = 0.0;
  bool t_stat_detected = false;
  std::size_t steps = 0;
  std::size_t samples = 0;  // snapshots delivered (t >= t_stat)
  double spectrum_lo = 0.0, spectrum_hi = 0.0;  // extremes seen at sample times
  double max_trace_step = 0.0;                  // largest |d tr M| in one step
  double max_hermiticity_defect = 0.0;          // max |M - M^dagger| at sample times
};

/// Evolves from M = diag(i/N), i = 1..N, and calls on_sample(t, M) at every
/// sample time in the stationary window. Without an explicit t_stat the
/// window starts once the off-diagonal weight sum_{i != j} |M_ij|^2 / N has
/// plateaued (two consecutive 0.02-windows changing by less than 5%).
/// Throws instability if the spectrum leaves [-0.1, 1.1].
QssepRunInfo qssep_evolve(const QssepConfig& cfg,
                          const std::function<void(double, const HermitianMatrix&)>& on_sample);

struct QssepRun {
  QssepRunInfo info;
  std::vector<double> times;
  std::vector<HermitianMatrix> snapshots;
};
QssepRun qssep_run(const QssepConfig& cfg);

// ---- Observables -------------------------------------------------------------

/// 0-based [first, first + count) for the sites i = ceil(cN)..floor(dN)
/// (1-based, clamped to 1..N). Throws domain if empty.
std::pair<std::size_t, std::size_t> subblock_range(std::size_t N, double c, double d);

std::vector<double> subblock_eigs(const HermitianMatrix& m, double c, double d);

/// Pooled, sorted subblock eigenvalues of many matrices.
std::vector<double> pooled_subblock_eigs(std::span<const HermitianMatrix> samples, double c, double d);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Delete-one-block jackknife of f(mean of each observable column). obs[s]
/// holds the observables of sample s; consecutive samples form the blocks.
Estimate jackknife(const std::vector<std::vector<double>>& obs,
                   const std::function<double(std::span<const double>)>& f, std::size_t blocks = 20);

/// N^{n-1} times the joint cumulant of M_{i1 i2}, .., M_{in i1} (real part),
/// i_k = floor(x_k N) clamped to 0..N-1. n = x.size() in 1..3.
Estimate estimate_local_cumulant(std::span<const HermitianMatrix> samples, std::span<const double> x,
                                 std::size_t blocks = 20);

/// N^{n-1} E[M_{i1 i2} .. M_{in i1}] averaged over all loops of pairwise
/// distinct indices in the subblock [c, d] (n = 1..3). This is the block
/// average of g_n for U(1)-invariant ensembles.
Estimate estimate_loop_average(std::span<const HermitianMatrix> samples, int n, double c, double d,
                               std::size_t blocks = 20);

/// E[A B] / (E[A] E[B]) for the block loop averages A on [c1, d1] and B on
/// [c2, d2] (loops of length n, as above).
Estimate loop_factorization_ratio(std::span<const HermitianMatrix> samples, int n,
                                  std::pair<double, double> first, std::pair<double, double> second,
                                  std::size_t blocks = 20);

/// m_k(sigma_I) = tr(M_I^k) / |I| for k = 1..order, mean and standard error
/// over samples.
std::vector<Estimate> subblock_moments(std::span<const HermitianMatrix> samples, double c, double d,
                                       int order);

/// Runs fn(i) for i in 0..count-1 on up to `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace sbspec

#endif  // SBSPEC_RMT_MC_HPP
