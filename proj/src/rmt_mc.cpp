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

#include "sbspec/rmt_mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace sbspec {

using Eigen::Index;
using Eigen::MatrixXcd;

namespace {

Index idx(std::size_t i) { return static_cast<Index>(i); }

cplx complex_normal(std::mt19937_64& rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  return {re, n(rng)};
}

}  // namespace

HermitianMatrix::HermitianMatrix(MatrixXcd entries) : m_(std::move(entries)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0) fail(ErrorCode::kPrecondition, "matrix must be square and non-empty");
  const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
  if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(ErrorCode::kPrecondition, "matrix is not Hermitian");
  m_ = 0.5 * (m_ + m_.adjoint()).eval();
}

HermitianMatrix HermitianMatrix::diagonal(std::span<const double> d) {
  MatrixXcd m = MatrixXcd::Zero(idx(d.size()), idx(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) m(idx(i), idx(i)) = d[i];
  return HermitianMatrix(std::move(m));
}

HermitianMatrix HermitianMatrix::principal(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > N()) fail(ErrorCode::kDomain, "principal block out of range");
  return HermitianMatrix(MatrixXcd(m_.block(idx(first), idx(first), idx(count), idx(count))), Trusted{});
}

std::vector<double> HermitianMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m_, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorCode::kConvergence, "Hermitian eigensolver failed");
  const auto& ev = es.eigenvalues();
  return std::vector<double>(ev.data(), ev.data() + ev.size());
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

HermitianMatrix sample_wigner(std::size_t N, const RealGrid& s, std::uint64_t seed) {
  if (N < 2) fail(ErrorCode::kDomain, "N must be at least 2");
  if (s.size() == 0) fail(ErrorCode::kPrecondition, "empty variance profile");
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal;
  MatrixXcd m(idx(N), idx(N));
  const double n = static_cast<double>(N);
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t i = 0; i <= j; ++i) {
      const double x = static_cast<double>(i + j + 2) / (2.0 * n);
      const double sv = s[cell_of(x, s.size())];
      const double var = sv * sv / n;
      if (i == j) {
        m(idx(i), idx(i)) = normal(rng) * std::sqrt(var);
      } else {
        const cplx v = complex_normal(rng, var);
        m(idx(i), idx(j)) = v;
        m(idx(j), idx(i)) = std::conj(v);
      }
    }
  }
  return HermitianMatrix(std::move(m));
}

HermitianMatrix sample_haar_conjugated(std::size_t N, const Measure1D& spectrum, std::uint64_t seed,
                                       DiagonalDraw draw) {
  if (N < 2) fail(ErrorCode::kDomain, "N must be at least 2");
  auto rng = make_rng(seed);
  MatrixXcd g(idx(N), idx(N));
  for (Index j = 0; j < g.cols(); ++j)
    for (Index i = 0; i < g.rows(); ++i) g(i, j) = complex_normal(rng, 1.0);
  Eigen::HouseholderQR<MatrixXcd> qr(g);
  MatrixXcd u = qr.householderQ();
  for (Index k = 0; k < u.cols(); ++k) {
    const cplx r = qr.matrixQR()(k, k);
    if (std::abs(r) > 0.0) u.col(k) *= r / std::abs(r);
  }
  Eigen::VectorXd d(idx(N));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t i = 0; i < N; ++i) {
    double q = draw == DiagonalDraw::kQuantile ? (static_cast<double>(i) + 0.5) / static_cast<double>(N)
                                               : uniform(rng);
    q = std::clamp(q, 1e-15, 1.0 - 1e-15);
    d[idx(i)] = spectrum.quantile(q);
  }
  MatrixXcd m = (u * d.asDiagonal()) * u.adjoint();
  return HermitianMatrix(0.5 * (m + m.adjoint()));
}

HermitianMatrix conjugate_by_phases(const HermitianMatrix& m, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  Eigen::VectorXcd ph(idx(m.N()));
  for (Index i = 0; i < ph.size(); ++i) ph[i] = std::polar(1.0, angle(rng));
  MatrixXcd out = ph.asDiagonal() * m.entries() * ph.conjugate().asDiagonal();
  return HermitianMatrix(0.5 * (out + out.adjoint()).eval(), HermitianMatrix::Trusted{});
}

// ---- QSSEP -----------------------------------------------------------------

void QssepConfig::validate() const {
  if (N < 2) fail(ErrorCode::kDomain, "QSSEP needs N >= 2");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorCode::kDomain, "dt must be positive");
  if (!(t_end > 0.0)) fail(ErrorCode::kDomain, "t_end must be positive");
  if (t_stat >= 0.0 && !(t_stat < t_end)) fail(ErrorCode::kDomain, "t_stat must be below t_end");
  if (!(sample_every > 0.0)) fail(ErrorCode::kDomain, "sample_every must be positive");
  for (double r : {alpha1, beta1, alphaN, betaN})
    if (!(r >= 0.0)) fail(ErrorCode::kDomain, "boundary rates must be nonnegative");
}

class QssepStepper {
 public:
  explicit QssepStepper(const QssepConfig& cfg) : cfg_(cfg), n_(cfg.N), rng_(make_rng(cfg.seed)), dw_(cfg.N - 1) {
    std::vector<double> d(n_);
    for (std::size_t i = 0; i < n_; ++i) d[i] = static_cast<double>(i + 1) / static_cast<double>(n_);
    m_ = HermitianMatrix::diagonal(d).entries();
    gamma_first_ = cfg.alpha1 + cfg.beta1;
    gamma_last_ = cfg.alphaN + cfg.betaN;
  }

  void step() {
    if (cfg_.noise) {
      for (auto& w : dw_) w = complex_normal(rng_, cfg_.dt);
      if (cfg_.integrator == QssepIntegrator::kEuler) {
        euler_noise();
      } else {
        // Alternate the order of the two bond sublattices between steps.
        const int first = static_cast<int>(parity_);
        rotate_bonds(first);
        rotate_bonds(1 - first);
        parity_ = !parity_;
      }
    }
    boundary();
    // The Euler update is Hermitian by construction and the rotations keep
    // it so up to rounding; re-symmetrize periodically against drift.
    if (++since_symmetrized_ == 64) {
      m_ = 0.5 * (m_ + m_.adjoint()).eval();
      since_symmetrized_ = 0;
    }
  }

  const MatrixXcd& matrix() const { return m_; }
  double hermiticity_defect() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }
  HermitianMatrix snapshot() const {
    return HermitianMatrix(0.5 * (m_ + m_.adjoint()), HermitianMatrix::Trusted{});
  }

 private:
  // P = dh M for the tridiagonal dh with dh(j, j+1) = dw_j.
  MatrixXcd dh_times(const MatrixXcd& x) const {
    MatrixXcd p = MatrixXcd::Zero(x.rows(), x.cols());
    for (std::size_t j = 0; j + 1 < n_; ++j) {
      p.row(idx(j)) += dw_[j] * x.row(idx(j + 1));
      p.row(idx(j + 1)) += std::conj(dw_[j]) * x.row(idx(j));
    }
    return p;
  }

  void euler_noise() {
    // [dh, M] = P - P^dagger with P = dh M; [dh, C] = R + R^dagger with
    // R = dh C, since C = [dh, M] is anti-Hermitian.
    const MatrixXcd p = dh_times(m_);
    const MatrixXcd c = p - p.adjoint();
    const MatrixXcd r = dh_times(c);
    m_ += cplx(0.0, 1.0) * c - 0.5 * (r + r.adjoint());
  }

  // M <- U M U^dagger with U = exp(i dh_b) on the bonds (j, j+1), j = first mod 2.
  // Only column operations are used (contiguous storage): M U^dagger, then
  // the adjoint, then once more, which leaves the Hermitian U M U^dagger.
  void rotate_bonds(int first) {
    rotate_columns(first);
    m_.adjointInPlace();
    rotate_columns(first);
  }

  void rotate_columns(int first) {
    const cplx I(0.0, 1.0);
    const Index rows = m_.rows();
    for (std::size_t j = static_cast<std::size_t>(first); j + 1 < n_; j += 2) {
      const double a = std::abs(dw_[j]);
      if (a == 0.0) continue;
      const cplx e = dw_[j] / a;
      const double c = std::cos(a), s = std::sin(a);
      // U = [[c, i s e], [i s conj(e)], c]]; columns mix with U^dagger.
      const cplx v01 = std::conj(I * s * e), v10 = std::conj(I * s * std::conj(e));
      // Spelled out in reals: std::complex products go through the
      // NaN-safe library routine and dominate the run time otherwise.
      const double ar = v01.real(), ai = v01.imag(), br = v10.real(), bi = v10.imag();
      double* c0 = reinterpret_cast<double*>(m_.col(idx(j)).data());
      double* c1 = reinterpret_cast<double*>(m_.col(idx(j + 1)).data());
      for (Index k = 0; k < 2 * rows; k += 2) {
        const double x0r = c0[k], x0i = c0[k + 1], x1r = c1[k], x1i = c1[k + 1];
        c0[k] = c * x0r + ar * x1r - ai * x1i;
        c0[k + 1] = c * x0i + ar * x1i + ai * x1r;
        c1[k] = br * x0r - bi * x0i + c * x1r;
        c1[k + 1] = br * x0i + bi * x0r + c * x1i;
      }
    }
  }

  void boundary() {
    const Index last = idx(n_ - 1);
    const double dt = cfg_.dt;
    if (cfg_.integrator == QssepIntegrator::kEuler) {
      // L[M]_ij = delta_ij alpha_i - (gamma_i + gamma_j)/2 M_ij, boundary sites only.
      MatrixXcd delta = MatrixXcd::Zero(m_.rows(), m_.cols());
      for (Index k = 0; k < m_.rows(); ++k) {
        delta(0, k) -= 0.5 * gamma_first_ * m_(0, k);
        delta(k, 0) -= 0.5 * gamma_first_ * m_(k, 0);
        delta(last, k) -= 0.5 * gamma_last_ * m_(last, k);
        delta(k, last) -= 0.5 * gamma_last_ * m_(k, last);
      }
      delta(0, 0) += cfg_.alpha1;
      delta(last, last) += cfg_.alphaN;
      m_ += dt * delta;
      return;
    }
    // Exact flow of dM/dt = L[M].
    const double f = std::exp(-0.5 * gamma_first_ * dt), l = std::exp(-0.5 * gamma_last_ * dt);
    m_.row(0) *= f;
    m_.col(0) *= f;
    m_.row(last) *= l;
    m_.col(last) *= l;
    auto relax = [dt](double alpha, double gamma) {
      return gamma > 0.0 ? alpha / gamma * (1.0 - std::exp(-gamma * dt)) : alpha * dt;
    };
    m_(0, 0) += relax(cfg_.alpha1, gamma_first_);
    m_(last, last) += relax(cfg_.alphaN, gamma_last_);
  }

  const QssepConfig& cfg_;
  std::size_t n_;
  std::mt19937_64 rng_;
  std::vector<cplx> dw_;
  MatrixXcd m_;
  double gamma_first_ = 0.0, gamma_last_ = 0.0;
  bool parity_ = false;
  int since_symmetrized_ = 0;
};

QssepRunInfo qssep_evolve(const QssepConfig& cfg,
                          const std::function<void(double, const HermitianMatrix&)>& on_sample) {
  cfg.validate();
  const double scale = static_cast<double>(cfg.N) * static_cast<double>(cfg.N);
  const auto total = static_cast<std::size_t>(std::llround(cfg.t_end * scale / cfg.dt));
  const auto stride =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.sample_every * scale / cfg.dt)));
  if (total == 0) fail(ErrorCode::kDomain, "t_end is shorter than one step");

  QssepStepper stepper(cfg);
  QssepRunInfo info;
  info.spectrum_lo = 1.0 / static_cast<double>(cfg.N);
  info.spectrum_hi = 1.0;
  const bool detect = cfg.t_stat < 0.0;
  bool stationary = !detect && cfg.t_stat <= 0.0;
  info.t_stat = detect ? cfg.t_end : cfg.t_stat;

  // Plateau detection on the off-diagonal weight, averaged over windows.
  const auto window = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.02 / cfg.sample_every)));
  std::vector<double> window_means;
  double acc = 0.0;
  std::size_t in_window = 0;

  for (std::size_t s = 1; s <= total; ++s) {
    const cplx trace_before = stepper.matrix().trace();
    stepper.step();
    const cplx trace_after = stepper.matrix().trace();
    if (!std::isfinite(trace_after.real()))
      fail(ErrorCode::kInstability, "QSSEP trajectory diverged; reduce dt or use the unitary integrator");
    info.max_trace_step = std::max(info.max_trace_step, std::abs(trace_after - trace_before));
    ++info.steps;
    if (s % stride != 0) continue;

    const double t = static_cast<double>(s) * cfg.dt / scale;
    info.max_hermiticity_defect = std::max(info.max_hermiticity_defect, stepper.hermiticity_defect());
    const HermitianMatrix snapshot = stepper.snapshot();
    const auto ev = snapshot.eigenvalues();
    info.spectrum_lo = std::min(info.spectrum_lo, ev.front());
    info.spectrum_hi = std::max(info.spectrum_hi, ev.back());
    if (ev.front() < -0.1 || ev.back() > 1.1)
      fail(ErrorCode::kInstability, "QSSEP spectrum left [-0.1, 1.1] at t = " + std::to_string(t) +
                                        "; reduce dt or use the unitary integrator");

    if (!stationary && detect) {
      const auto& m = stepper.matrix();
      const double off = (m.squaredNorm() - m.diagonal().squaredNorm()) / static_cast<double>(cfg.N);
      acc += off;
      if (++in_window == window) {
        window_means.push_back(acc / static_cast<double>(window));
        acc = 0.0;
        in_window = 0;
        const std::size_t k = window_means.size();
        auto close = [&](std::size_t a, std::size_t b) {
          return std::abs(window_means[a] - window_means[b]) < 0.05 * std::abs(window_means[a]);
        };
        if (k >= 3 && close(k - 1, k - 2) && close(k - 2, k - 3)) {
          stationary = true;
          info.t_stat = t;
          info.t_stat_detected = true;
          continue;
        }
      }
    }
    if (!stationary && !detect && t >= cfg.t_stat - 1e-12) stationary = true;
    if (!stationary) continue;
    on_sample(t, snapshot);
    ++info.samples;
  }
  return info;
}

QssepRun qssep_run(const QssepConfig& cfg) {
  QssepRun run;
  run.info = qssep_evolve(cfg, [&](double t, const HermitianMatrix& m) {
    run.times.push_back(t);
    run.snapshots.push_back(m);
  });
  return run;
}

// ---- Observables -------------------------------------------------------------

std::pair<std::size_t, std::size_t> subblock_range(std::size_t N, double c, double d) {
  if (!(c >= 0.0 && d <= 1.0 && c < d)) fail(ErrorCode::kDomain, "interval must satisfy 0 <= c < d <= 1");
  const double n = static_cast<double>(N);
  // Round before ceil/floor so that c N = 40.000000000000007 selects site 40.
  auto snap = [](double v) { return std::abs(v - std::round(v)) < 1e-9 ? std::round(v) : v; };
  const auto lo = static_cast<long long>(std::max(1.0, std::ceil(snap(c * n))));
  const auto hi = static_cast<long long>(std::min(n, std::floor(snap(d * n))));
  if (hi < lo) fail(ErrorCode::kDomain, "interval selects no sites");
  return {static_cast<std::size_t>(lo - 1), static_cast<std::size_t>(hi - lo + 1)};
}

std::vector<double> subblock_eigs(const HermitianMatrix& m, double c, double d) {
  const auto [first, count] = subblock_range(m.N(), c, d);
  return m.principal(first, count).eigenvalues();
}

std::vector<double> pooled_subblock_eigs(std::span<const HermitianMatrix> samples, double c, double d) {
  std::vector<double> out;
  for (const auto& m : samples) {
    auto ev = subblock_eigs(m, c, d);
    out.insert(out.end(), ev.begin(), ev.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Estimate jackknife(const std::vector<std::vector<double>>& obs,
                   const std::function<double(std::span<const double>)>& f, std::size_t blocks) {
  const std::size_t S = obs.size();
  if (S == 0) fail(ErrorCode::kPrecondition, "no samples");
  const std::size_t K = obs.front().size();
  std::vector<double> total(K, 0.0);
  for (const auto& row : obs) {
    if (row.size() != K) fail(ErrorCode::kPrecondition, "ragged observables");
    for (std::size_t k = 0; k < K; ++k) total[k] += row[k];
  }
  Estimate e;
  e.samples = S;
  std::vector<double> mean(K);
  for (std::size_t k = 0; k < K; ++k) mean[k] = total[k] / static_cast<double>(S);
  e.value = f(mean);
  const std::size_t B = std::min(blocks, S);
  if (B < 2) return e;
  std::vector<double> theta(B);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t lo = b * S / B, hi = (b + 1) * S / B;
    std::vector<double> part(K, 0.0);
    for (std::size_t s = lo; s < hi; ++s)
      for (std::size_t k = 0; k < K; ++k) part[k] += obs[s][k];
    for (std::size_t k = 0; k < K; ++k) mean[k] = (total[k] - part[k]) / static_cast<double>(S - (hi - lo));
    theta[b] = f(mean);
  }
  double avg = 0.0;
  for (double t : theta) avg += t;
  avg /= static_cast<double>(B);
  double var = 0.0;
  for (double t : theta) var += (t - avg) * (t - avg);
  e.std_error = std::sqrt(var * static_cast<double>(B - 1) / static_cast<double>(B));
  return e;
}

namespace {

void require_samples(std::span<const HermitianMatrix> samples) {
  if (samples.empty()) fail(ErrorCode::kPrecondition, "no samples");
  for (const auto& m : samples)
    if (m.N() != samples.front().N()) fail(ErrorCode::kPrecondition, "samples differ in size");
}

// Mean of M_{i1 i2} .. M_{in i1} over pairwise distinct indices of a block.
double distinct_loop_mean(const MatrixXcd& m, int n) {
  const double k = static_cast<double>(m.rows());
  switch (n) {
    case 1:
      return m.trace().real() / k;
    case 2:
      if (m.rows() < 2) fail(ErrorCode::kDomain, "block too small for loops of length 2");
      return (m.squaredNorm() - m.diagonal().squaredNorm()) / (k * (k - 1));
    case 3: {
      if (m.rows() < 3) fail(ErrorCode::kDomain, "block too small for loops of length 3");
      const MatrixXcd m2 = m * m;
      const cplx tr3 = (m2.cwiseProduct(m.transpose())).sum();
      cplx s = 0.0, t = 0.0;
      for (Index i = 0; i < m.rows(); ++i) {
        s += m(i, i) * m2(i, i);
        t += m(i, i) * m(i, i) * m(i, i);
      }
      return (tr3 - 3.0 * s + 2.0 * t).real() / (k * (k - 1) * (k - 2));
    }
    default:
      fail(ErrorCode::kDomain, "loop length must be 1, 2 or 3");
  }
  return 0.0;
}

}  // namespace

Estimate estimate_local_cumulant(std::span<const HermitianMatrix> samples, std::span<const double> x,
                                 std::size_t blocks) {
  require_samples(samples);
  const std::size_t n = x.size();
  if (n < 1 || n > 3) fail(ErrorCode::kDomain, "local cumulant estimates support n = 1..3");
  const std::size_t N = samples.front().N();
  std::vector<std::size_t> id(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(x[k] >= 0.0 && x[k] <= 1.0)) fail(ErrorCode::kDomain, "points must lie in [0,1]");
    id[k] = std::min(N - 1, static_cast<std::size_t>(std::floor(x[k] * static_cast<double>(N))));
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (id[a] == id[b]) fail(ErrorCode::kDomain, "points map to coincident indices");

  // Observables: every product over a subset of the loop entries, as (re, im).
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<std::vector<double>> obs;
  obs.reserve(samples.size());
  for (const auto& m : samples) {
    std::vector<cplx> e(n);
    for (std::size_t k = 0; k < n; ++k) e[k] = m(id[k], id[(k + 1) % n]);
    std::vector<double> row;
    for (std::size_t mask = 1; mask < subsets; ++mask) {
      cplx p = 1.0;
      for (std::size_t k = 0; k < n; ++k)
        if (mask & (std::size_t{1} << k)) p *= e[k];
      row.push_back(p.real());
      row.push_back(p.imag());
    }
    obs.push_back(std::move(row));
  }
  const double scale = std::pow(static_cast<double>(N), static_cast<double>(n - 1));
  auto cumulant = [n, scale](std::span<const double> mean) {
    auto E = [&](std::size_t mask) { return cplx(mean[2 * (mask - 1)], mean[2 * (mask - 1) + 1]); };
    cplx c;
    if (n == 1) c = E(1);
    else if (n == 2) c = E(3) - E(1) * E(2);
    else c = E(7) - E(3) * E(4) - E(5) * E(2) - E(6) * E(1) + 2.0 * E(1) * E(2) * E(4);
    return scale * c.real();
  };
  return jackknife(obs, cumulant, blocks);
}

Estimate estimate_loop_average(std::span<const HermitianMatrix> samples, int n, double c, double d,
                               std::size_t blocks) {
  require_samples(samples);
  const std::size_t N = samples.front().N();
  const auto [first, count] = subblock_range(N, c, d);
  std::vector<std::vector<double>> obs;
  for (const auto& m : samples)
    obs.push_back({distinct_loop_mean(m.entries().block(idx(first), idx(first), idx(count), idx(count)), n)});
  const double scale = std::pow(static_cast<double>(N), n - 1);
  return jackknife(obs, [scale](std::span<const double> mean) { return scale * mean[0]; }, blocks);
}

Estimate loop_factorization_ratio(std::span<const HermitianMatrix> samples, int n,
                                  std::pair<double, double> first, std::pair<double, double> second,
                                  std::size_t blocks) {
  require_samples(samples);
  const std::size_t N = samples.front().N();
  const auto r1 = subblock_range(N, first.first, first.second);
  const auto r2 = subblock_range(N, second.first, second.second);
  std::vector<std::vector<double>> obs;
  for (const auto& m : samples) {
    const auto& e = m.entries();
    const double a = distinct_loop_mean(e.block(idx(r1.first), idx(r1.first), idx(r1.second), idx(r1.second)), n);
    const double b = distinct_loop_mean(e.block(idx(r2.first), idx(r2.first), idx(r2.second), idx(r2.second)), n);
    obs.push_back({a, b, a * b});
  }
  return jackknife(obs, [](std::span<const double> mean) { return mean[2] / (mean[0] * mean[1]); }, blocks);
}

std::vector<Estimate> subblock_moments(std::span<const HermitianMatrix> samples, double c, double d,
                                       int order) {
  require_samples(samples);
  if (order < 1) fail(ErrorCode::kDomain, "order must be positive");
  const auto K = static_cast<std::size_t>(order);
  std::vector<double> sum(K, 0.0), sum2(K, 0.0);
  for (const auto& m : samples) {
    const auto ev = subblock_eigs(m, c, d);
    for (std::size_t k = 0; k < K; ++k) {
      double mk = 0.0;
      for (double l : ev) mk += std::pow(l, static_cast<double>(k + 1));
      mk /= static_cast<double>(ev.size());
      sum[k] += mk;
      sum2[k] += mk * mk;
    }
  }
  const double S = static_cast<double>(samples.size());
  std::vector<Estimate> out(K);
  for (std::size_t k = 0; k < K; ++k) {
    out[k].samples = samples.size();
    out[k].value = sum[k] / S;
    const double var = S > 1 ? std::max(0.0, (sum2[k] - S * out[k].value * out[k].value) / (S - 1)) : 0.0;
    out[k].std_error = std::sqrt(var / S);
  }
  return out;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace sbspec
