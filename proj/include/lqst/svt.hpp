// Copyright 2026 The LQST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Singular Value Thresholding (Uzawa iterations on the dual of
// min tau ||X||_* + 1/2 ||X||_F^2 s.t. A(X) = b) and the Monte-Carlo
// experiments built on it.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <string>
#include <vector>

#include "lqst/errors.hpp"
#include "lqst/numlin.hpp"
#include "lqst/parallel.hpp"
#include "lqst/quantum.hpp"
#include "lqst/random.hpp"

namespace lqst {

struct SvtConfig {
  double tau = 2.0;
  double delta = 0.1;
  int max_iters = 20000;
  double rel_tol = 1e-4;
  double divergence_bound = 1e6;

  void validate() const {
    if (!(tau > 0.0)) throw ArgumentError("svt", "tau must be positive");
    if (!(delta > 0.0)) throw ArgumentError("svt", "delta must be positive");
    if (max_iters < 1) throw ArgumentError("svt", "max_iters must be at least 1");
    if (!(rel_tol > 0.0)) throw ArgumentError("svt", "rel_tol must be positive");
    if (!(divergence_bound > 0.0)) throw ArgumentError("svt", "divergence_bound must be positive");
  }
};

enum class SvtStatus { Converged, MaxIters, Diverged };

inline std::string to_string(SvtStatus s) {
  switch (s) {
    case SvtStatus::Converged: return "converged";
    case SvtStatus::MaxIters: return "max_iters";
    case SvtStatus::Diverged: return "diverged";
  }
  return "unknown";
}

struct SvtResult {
  CMatrix estimate;
  int iterations = 0;
  SvtStatus status = SvtStatus::MaxIters;
  double final_residual = 0.0;
};

/// Snapshot handed to run_svt observers after each iteration: X^k, the
/// updated dual variable y^k and the relative residual of X^k.
struct SvtIterate {
  int iteration;
  const CMatrix& estimate;
  const CVector& dual;
  double residual;
};

struct NoSvtObserver {
  void operator()(const SvtIterate&) const {}
};

/// Runs X^k = D_tau(A*(y^{k-1})), y^k = y^{k-1} + delta (b - A(X^k)) from
/// y^0 = 0 until ||A(X^k) - b|| / ||b|| < rel_tol, max_iters, or divergence
/// (residual above divergence_bound or non-finite).
template <class Observer = NoSvtObserver>
SvtResult run_svt(const MeasurementEnsemble& ens, const RVector& b, const SvtConfig& cfg, Observer&& observe = {}) {
  cfg.validate();
  if (b.size() != ens.count()) throw DimensionError("svt", "measurement vector length does not match the ensemble");
  const double b_norm = b.norm();
  if (!(b_norm > 0.0) || !std::isfinite(b_norm)) throw ArgumentError("svt", "measurement vector must be finite and non-zero");

  const CVector target = b.cast<Complex>();
  CVector y = CVector::Zero(ens.count());
  SvtResult result;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    const CMatrix g = apply_adjoint(ens, y);
    if (!g.allFinite()) {
      result.status = SvtStatus::Diverged;
      result.iterations = k;
      result.final_residual = std::numeric_limits<double>::infinity();
      return result;
    }
    result.estimate = shrink(g, cfg.tau);
    const CVector r = target - apply_map(ens, result.estimate);
    const double residual = r.norm() / b_norm;
    result.iterations = k;
    result.final_residual = residual;
    if (!std::isfinite(residual) || residual > cfg.divergence_bound) {
      result.status = SvtStatus::Diverged;
      return result;
    }
    y += cfg.delta * r;
    observe(SvtIterate{k, result.estimate, y, residual});
    if (residual < cfg.rel_tol) {
      result.status = SvtStatus::Converged;
      return result;
    }
  }
  result.status = SvtStatus::MaxIters;
  return result;
}

// ---------------------------------------------------------------------------
// Monte-Carlo experiments

/// Appends the identity with measured value 1, turning tr[X] = 1 into one
/// more linear constraint of the SVT problem.
inline std::pair<MeasurementEnsemble, RVector> with_trace_constraint(const MeasurementEnsemble& ens, const RVector& b) {
  std::vector<std::uint64_t> indices = ens.indices();
  std::vector<CMatrix> mats = ens.matrices();
  indices.push_back(ens.kind() == MeasurementKind::PauliExpectation ? static_cast<std::uint64_t>(ens.dim() * ens.dim() - 1)
                                                                    : std::numeric_limits<std::uint64_t>::max());
  mats.push_back(CMatrix::Identity(ens.dim(), ens.dim()));
  RVector augmented(b.size() + 1);
  augmented << b, 1.0;
  return {MeasurementEnsemble(MeasurementKind::PauliExpectation, std::move(indices), std::move(mats)),
          std::move(augmented)};
}

/// Random-state setup shared by the sweeps: n qubits, m Pauli observables.
struct SvtExperiment {
  int qubits = 4;
  int meas = 103;
  bool trace_constraint = true;
  double psd_tol = 1e-8;
  std::size_t threads = 1;
};

struct SvtTrial {
  SvtResult result;
  double fidelity = -1.0;
  double trace_distance = -1.0;
  bool psd = false;
  int rank = -1;
};

/// One trial: fresh ensemble and rank-r state drawn from stream `trial` of
/// `seed`, so every (tau, delta) cell sees the same problems.
inline SvtTrial run_svt_trial(const SvtExperiment& exp, int rank, const SvtConfig& cfg, std::uint64_t seed,
                              std::uint64_t trial) {
  Rng rng = derive_stream(seed, trial);
  const MeasurementEnsemble ens = select_observables(exp.qubits, exp.meas, rng);
  const DensityMatrix rho = random_rank_r_state(ens.dim(), rank, rng);
  const RVector b = measure_expectations(ens, rho);
  SvtTrial out;
  if (exp.trace_constraint) {
    const auto [full, full_b] = with_trace_constraint(ens, b);
    out.result = run_svt(full, full_b, cfg);
  } else {
    out.result = run_svt(ens, b, cfg);
  }
  if (out.result.status != SvtStatus::Diverged) {
    const CMatrix est = hermitize(out.result.estimate);
    out.fidelity = fidelity(rho.matrix(), est);
    out.trace_distance = trace_distance(rho.matrix(), est);
    out.psd = eigh(est).eigenvalues(0) >= -exp.psd_tol;
    out.rank = rank_estimate(out.result.estimate);
  }
  return out;
}

/// One cell of the tuning table. A cell with any diverged trial reports -1
/// in every statistic. Standard deviations are population values.
struct SvtSweepRow {
  int rank = 0;
  double tau = 0.0;
  double delta = 0.0;
  double mean_iterations = -1.0;
  double mean_fidelity = -1.0;
  double std_fidelity = -1.0;
  double mean_trace_distance = -1.0;
  double std_trace_distance = -1.0;
  double psd_probability = -1.0;
  double mean_rank = -1.0;
  bool diverged = false;
  int trials = 0;
};

inline SvtSweepRow svt_cell(const SvtExperiment& exp, int rank, const SvtConfig& cfg, int trials, std::uint64_t seed) {
  if (trials < 1) throw ArgumentError("svt", "trials must be at least 1");
  std::vector<SvtTrial> runs(static_cast<std::size_t>(trials));
  parallel_for(runs.size(), exp.threads,
               [&](std::size_t t) { runs[t] = run_svt_trial(exp, rank, cfg, seed, t); });
  SvtSweepRow row;
  row.rank = rank;
  row.tau = cfg.tau;
  row.delta = cfg.delta;
  row.trials = trials;
  for (const SvtTrial& t : runs) row.diverged |= t.result.status == SvtStatus::Diverged;
  if (row.diverged) return row;
  double iters = 0, fid = 0, td = 0, psd = 0, rk = 0;
  for (const SvtTrial& t : runs) {
    iters += t.result.iterations;
    fid += t.fidelity;
    td += t.trace_distance;
    psd += t.psd ? 1.0 : 0.0;
    rk += t.rank;
  }
  const double n = static_cast<double>(trials);
  row.mean_iterations = iters / n;
  row.mean_fidelity = fid / n;
  row.mean_trace_distance = td / n;
  row.psd_probability = psd / n;
  row.mean_rank = rk / n;
  double vf = 0, vt = 0;
  for (const SvtTrial& t : runs) {
    vf += (t.fidelity - row.mean_fidelity) * (t.fidelity - row.mean_fidelity);
    vt += (t.trace_distance - row.mean_trace_distance) * (t.trace_distance - row.mean_trace_distance);
  }
  row.std_fidelity = std::sqrt(vf / n);
  row.std_trace_distance = std::sqrt(vt / n);
  return row;
}

/// Full (rank x tau x delta) grid, rows in that nesting order.
inline std::vector<SvtSweepRow> tune_sweep(const std::vector<int>& ranks, const std::vector<double>& taus,
                                           const std::vector<double>& deltas, int trials, std::uint64_t seed,
                                           const SvtExperiment& exp = {}, SvtConfig base = {}) {
  for (double t : taus)
    if (!(t > 0.0)) throw ArgumentError("svt", "tau grid values must be positive");
  for (double d : deltas)
    if (!(d > 0.0)) throw ArgumentError("svt", "delta grid values must be positive");
  for (int r : ranks)
    if (r < 1) throw ArgumentError("svt", "ranks must be positive");
  std::vector<SvtSweepRow> rows;
  for (int r : ranks)
    for (double tau : taus)
      for (double delta : deltas) {
        base.tau = tau;
        base.delta = delta;
        rows.push_back(svt_cell(exp, r, base, trials, seed));
      }
  return rows;
}

/// Fraction of rank-3 trials whose estimate is PSD (minimum eigenvalue of the
/// hermitized estimate >= -psd_tol); -1 if any trial diverges.
inline double psd_probability(double tau, double delta, int trials, std::uint64_t seed, const SvtExperiment& exp = {}) {
  SvtConfig cfg;
  cfg.tau = tau;
  cfg.delta = delta;
  return svt_cell(exp, 3, cfg, trials, seed).psd_probability;
}

}  // namespace lqst
