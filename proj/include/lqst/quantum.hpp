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

// Quantum-domain objects: density matrices, Pauli observables, POVMs, the
// linear measurement map and its adjoint, finite-shot sampling and the
// state-closeness metrics.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lqst/errors.hpp"
#include "lqst/numlin.hpp"

namespace lqst {

namespace detail {
inline constexpr std::string_view kQuantum = "quantum";

inline int qubits_for_dim(Eigen::Index d) {
  int n = 0;
  while ((Eigen::Index{1} << n) < d) ++n;
  if ((Eigen::Index{1} << n) != d) throw DimensionError(kQuantum, "dimension " + std::to_string(d) + " is not a power of two");
  return n;
}

inline std::uint64_t pow4(int n) { return std::uint64_t{1} << (2 * n); }

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline void require_hermitian(const CMatrix& x, std::string_view what, double tol = 1e-8) {
  if (x.rows() != x.cols()) throw DimensionError(kQuantum, std::string(what) + " must be square");
  require_finite(x, what);
  if (hermiticity_defect(x) > tol * std::max(1.0, x.norm())) {
    throw ContractError(kQuantum, std::string(what) + " is not Hermitian");
  }
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Density matrices

/// Hermitian, PSD, unit-trace matrix. Only constructible through validation.
class DensityMatrix {
 public:
  static constexpr double kTolerance = 1e-8;

  static DensityMatrix from_matrix(CMatrix m, double tol = kTolerance) {
    if (m.rows() != m.cols() || m.rows() == 0) throw DimensionError(detail::kQuantum, "density matrix must be square");
    require_finite(m, "density matrix");
    if (hermiticity_defect(m) > tol) throw ContractError(detail::kQuantum, "density matrix is not Hermitian");
    if (std::abs(m.trace() - Complex(1.0, 0.0)) > tol) {
      throw ContractError(detail::kQuantum, "density matrix trace is " + std::to_string(m.trace().real()));
    }
    const double min_eig = eigh(m).eigenvalues(0);
    if (min_eig < -tol) {
      throw ContractError(detail::kQuantum, "density matrix has eigenvalue " + std::to_string(min_eig));
    }
    DensityMatrix out;
    out.matrix_ = std::move(m);
    return out;
  }

  Eigen::Index dim() const { return matrix_.rows(); }
  const CMatrix& matrix() const { return matrix_; }

 private:
  DensityMatrix() = default;
  CMatrix matrix_;
};

// ---------------------------------------------------------------------------
// Measurement map

/// Row i of the m x d^2 map matrix is the row-major flattening of A_i, so
/// that map(X) = rows * vec(X) with column-major vec, and
/// adjoint(y) = reshape(rows^dagger * y) = sum_i y_i A_i^dagger.
inline CMatrix map_rows_from(std::span<const CMatrix> matrices) {
  if (matrices.empty()) throw ArgumentError(detail::kQuantum, "empty measurement family");
  const Eigen::Index d = matrices.front().rows();
  CMatrix rows(static_cast<Eigen::Index>(matrices.size()), d * d);
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const CMatrix t = matrices[i].transpose();
    rows.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const CVector>(t.data(), d * d).transpose();
  }
  return rows;
}

inline CMatrix row_to_matrix(const CMatrix& rows, Eigen::Index i, Eigen::Index d) {
  CMatrix t = Eigen::Map<const CMatrix>(CVector(rows.row(i).transpose()).data(), d, d);
  return t.transpose();
}

inline CVector map_with_rows(const CMatrix& rows, const CMatrix& x) {
  const Eigen::Index d = x.rows();
  if (x.cols() != d || rows.cols() != d * d) throw DimensionError(detail::kQuantum, "map: matrix dimension mismatch");
  return rows * Eigen::Map<const CVector>(x.data(), d * d);
}

inline CMatrix adjoint_with_rows(const CMatrix& rows, const CVector& y, Eigen::Index d) {
  if (y.size() != rows.rows() || rows.cols() != d * d) throw DimensionError(detail::kQuantum, "adjoint: vector length mismatch");
  const CVector v = rows.adjoint() * y;
  return Eigen::Map<const CMatrix>(v.data(), d, d);
}

enum class MeasurementKind { PauliExpectation, Povm };

inline std::string to_string(MeasurementKind k) {
  return k == MeasurementKind::PauliExpectation ? "pauli" : "povm";
}

/// Ordered family of m measurement matrices. `indices` are the source indices
/// in the n-qubit Pauli family (base-4 digits, first qubit most significant,
/// digit 3 = identity) or in the Pauli-4 POVM outcome set.
class MeasurementEnsemble {
 public:
  MeasurementEnsemble(MeasurementKind kind, std::vector<std::uint64_t> indices, std::vector<CMatrix> matrices)
      : kind_(kind), indices_(std::move(indices)), matrices_(std::move(matrices)) {
    if (matrices_.empty() || matrices_.size() != indices_.size()) {
      throw ArgumentError(detail::kQuantum, "ensemble needs one index per matrix and at least one matrix");
    }
    dim_ = matrices_.front().rows();
    for (const CMatrix& a : matrices_) {
      if (a.rows() != dim_ || a.cols() != dim_) throw DimensionError(detail::kQuantum, "ensemble matrices differ in size");
      detail::require_hermitian(a, "measurement matrix", 1e-10);
      if (kind_ == MeasurementKind::Povm && eigh(a).eigenvalues(0) < -1e-10) {
        throw ContractError(detail::kQuantum, "POVM element is not PSD");
      }
    }
    if (kind_ == MeasurementKind::Povm && is_complete()) {
      CMatrix total = CMatrix::Zero(dim_, dim_);
      for (const CMatrix& a : matrices_) total += a;
      if ((total - CMatrix::Identity(dim_, dim_)).norm() > 1e-10) {
        throw ContractError(detail::kQuantum, "POVM elements do not sum to the identity");
      }
    }
    rows_ = map_rows_from(matrices_);
  }

  MeasurementKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  Eigen::Index count() const { return static_cast<Eigen::Index>(matrices_.size()); }
  const std::vector<std::uint64_t>& indices() const { return indices_; }
  const std::vector<CMatrix>& matrices() const { return matrices_; }
  /// m x d^2 matrix form of the map.
  const CMatrix& rows() const { return rows_; }
  /// True when a POVM ensemble holds every outcome.
  bool is_complete() const { return static_cast<Eigen::Index>(matrices_.size()) == dim_ * dim_; }

 private:
  MeasurementKind kind_;
  std::vector<std::uint64_t> indices_;
  std::vector<CMatrix> matrices_;
  Eigen::Index dim_ = 0;
  CMatrix rows_;
};

/// A(X)_i = tr[A_i X].
inline CVector apply_map(const MeasurementEnsemble& ens, const CMatrix& x) {
  if (x.rows() != ens.dim() || x.cols() != ens.dim()) throw DimensionError(detail::kQuantum, "apply_map: dimension mismatch");
  return map_with_rows(ens.rows(), x);
}

/// A*(y) = sum_i y_i A_i^dagger.
inline CMatrix apply_adjoint(const MeasurementEnsemble& ens, const CVector& y) {
  if (y.size() != ens.count()) throw DimensionError(detail::kQuantum, "apply_adjoint: vector length mismatch");
  return adjoint_with_rows(ens.rows(), y, ens.dim());
}

/// Real measurement vector b = A(rho); imaginary parts above 1e-8 are a
/// contract violation.
inline RVector measure_expectations(const MeasurementEnsemble& ens, const DensityMatrix& rho) {
  const CVector v = apply_map(ens, rho.matrix());
  if (v.imag().cwiseAbs().maxCoeff() > 1e-8) {
    throw ContractError(detail::kQuantum, "measurement of a density matrix has a non-real component");
  }
  return v.real();
}

// ---------------------------------------------------------------------------
// Pauli family

inline CMatrix single_qubit_operator(int index) {
  const Complex i(0.0, 1.0);
  CMatrix m(2, 2);
  switch (index) {
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -i, i, 0; break;
    case 3: m << 1, 0, 0, -1; break;
    case 4: m << 1, 0, 0, 1; break;
    default: throw ArgumentError(detail::kQuantum, "Pauli index must be in 1..4, got " + std::to_string(index));
  }
  return m;
}

/// X_{i_1} (x) ... (x) X_{i_n} for indices in 1..4 (4 is the identity).
inline CMatrix pauli_observable(std::span<const int> qubit_indices) {
  if (qubit_indices.empty()) throw ArgumentError(detail::kQuantum, "Pauli observable needs at least one qubit");
  CMatrix out = single_qubit_operator(qubit_indices.front());
  for (std::size_t k = 1; k < qubit_indices.size(); ++k) out = detail::kron(out, single_qubit_operator(qubit_indices[k]));
  return out;
}

inline CMatrix pauli_observable(std::initializer_list<int> qubit_indices) {
  return pauli_observable(std::span<const int>(qubit_indices.begin(), qubit_indices.size()));
}

/// Per-qubit indices (1..4) of linear index `index` in [0, 4^n).
inline std::vector<int> pauli_digits(int n, std::uint64_t index) {
  if (n < 1 || index >= detail::pow4(n)) throw ArgumentError(detail::kQuantum, "Pauli linear index out of range");
  std::vector<int> digits(static_cast<std::size_t>(n));
  for (int k = n - 1; k >= 0; --k) {
    digits[static_cast<std::size_t>(k)] = static_cast<int>(index % 4) + 1;
    index /= 4;
  }
  return digits;
}

inline CMatrix pauli_observable_at(int n, std::uint64_t index) {
  const std::vector<int> digits = pauli_digits(n, index);
  return pauli_observable(std::span<const int>(digits));
}

inline MeasurementEnsemble pauli_ensemble(int n, std::vector<std::uint64_t> indices) {
  std::vector<CMatrix> mats;
  mats.reserve(indices.size());
  for (std::uint64_t idx : indices) mats.push_back(pauli_observable_at(n, idx));
  return MeasurementEnsemble(MeasurementKind::PauliExpectation, std::move(indices), std::move(mats));
}

/// m distinct non-identity Pauli observables drawn uniformly without
/// replacement. The identity (linear index 4^n - 1) is never drawn.
template <class Urbg>
MeasurementEnsemble select_observables(int n, int m, Urbg& rng) {
  if (n < 1 || n > 6) throw ArgumentError(detail::kQuantum, "qubit count must be in 1..6");
  const std::uint64_t pool_size = detail::pow4(n) - 1;
  if (m < 1 || static_cast<std::uint64_t>(m) > pool_size) {
    throw ArgumentError(detail::kQuantum, "observable count must be in 1.." + std::to_string(pool_size));
  }
  std::vector<std::uint64_t> pool(pool_size);
  std::iota(pool.begin(), pool.end(), std::uint64_t{0});
  for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(static_cast<std::size_t>(m));
  return pauli_ensemble(n, std::move(pool));
}

// ---------------------------------------------------------------------------
// States

/// rho = G G^dagger / tr[G G^dagger], G in C^{d x r} with iid N(0,1) real and
/// imaginary parts.
template <class Urbg>
DensityMatrix random_rank_r_state(Eigen::Index d, Eigen::Index r, Urbg& rng) {
  if (d < 1 || d > kMaxDimension) throw ArgumentError(detail::kQuantum, "state dimension out of range");
  if (r < 1 || r > d) throw ArgumentError(detail::kQuantum, "rank must be in 1..d");
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix g(d, r);
  for (Eigen::Index j = 0; j < r; ++j)
    for (Eigen::Index i = 0; i < d; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix::from_matrix(hermitize(rho));
}

inline DensityMatrix bell_state() {
  CMatrix rho = CMatrix::Zero(4, 4);
  rho(0, 0) = rho(0, 3) = rho(3, 0) = rho(3, 3) = 0.5;
  return DensityMatrix::from_matrix(rho);
}

inline DensityMatrix maximally_mixed(Eigen::Index d) {
  return DensityMatrix::from_matrix(CMatrix::Identity(d, d) / static_cast<double>(d));
}

// ---------------------------------------------------------------------------
// Pauli-4 POVM

/// Single-qubit elements: (1/3)|0><0|, (1/3)|+><+|, (1/3)|r><r| and the
/// remainder I minus the three, with |r> = (|0> + i|1>)/sqrt(2).
inline std::vector<CMatrix> pauli4_single_qubit() {
  const Complex i(0.0, 1.0);
  const double s = 1.0 / std::sqrt(2.0);
  CVector zero(2), plus(2), right(2);
  zero << 1.0, 0.0;
  plus << s, s;
  right << s, i * s;
  std::vector<CMatrix> m(4);
  m[0] = zero * zero.adjoint() / 3.0;
  m[1] = plus * plus.adjoint() / 3.0;
  m[2] = right * right.adjoint() / 3.0;
  m[3] = CMatrix::Identity(2, 2) - m[0] - m[1] - m[2];
  return m;
}

inline CMatrix pauli4_element(int n, std::uint64_t outcome) {
  static const std::vector<CMatrix> single = pauli4_single_qubit();
  const std::vector<int> digits = pauli_digits(n, outcome);
  CMatrix out = single[static_cast<std::size_t>(digits[0] - 1)];
  for (std::size_t k = 1; k < digits.size(); ++k) out = detail::kron(out, single[static_cast<std::size_t>(digits[k] - 1)]);
  return out;
}

/// POVM restricted to the given outcome indices (all 4^n when complete).
inline MeasurementEnsemble pauli4_povm_subset(int n, std::vector<std::uint64_t> outcomes) {
  std::vector<CMatrix> mats;
  mats.reserve(outcomes.size());
  for (std::uint64_t a : outcomes) mats.push_back(pauli4_element(n, a));
  return MeasurementEnsemble(MeasurementKind::Povm, std::move(outcomes), std::move(mats));
}

inline MeasurementEnsemble pauli4_povm(int n) {
  if (n < 1 || n > 6) throw ArgumentError(detail::kQuantum, "qubit count must be in 1..6");
  std::vector<std::uint64_t> outcomes(detail::pow4(n));
  std::iota(outcomes.begin(), outcomes.end(), std::uint64_t{0});
  return pauli4_povm_subset(n, std::move(outcomes));
}

/// p_a = tr[rho M_a]. Components in [-1e-10, 0) are clamped to zero.
inline RVector povm_probabilities(const DensityMatrix& rho, const MeasurementEnsemble& povm) {
  if (povm.kind() != MeasurementKind::Povm) throw ArgumentError(detail::kQuantum, "povm_probabilities needs a POVM ensemble");
  if (rho.dim() != povm.dim()) throw DimensionError(detail::kQuantum, "povm_probabilities: dimension mismatch");
  RVector p = apply_map(povm, rho.matrix()).real();
  for (Eigen::Index a = 0; a < p.size(); ++a) {
    if (p(a) < -1e-10) throw ContractError(detail::kQuantum, "negative POVM probability");
    p(a) = std::max(p(a), 0.0);
  }
  return p;
}

namespace detail {
inline void require_pmf(const RVector& p, std::string_view what) {
  if (p.size() == 0 || !p.allFinite() || p.minCoeff() < 0.0 || std::abs(p.sum() - 1.0) > 1e-8) {
    throw ArgumentError(kQuantum, std::string(what) + " is not a probability mass function");
  }
}
}  // namespace detail

/// Empirical frequencies N_a / n_avg of one multinomial draw of n_avg shots
/// (sequential conditional binomials).
template <class Urbg>
RVector sample_povm(const RVector& p, std::uint64_t n_avg, Urbg& rng) {
  detail::require_pmf(p, "sample_povm input");
  if (n_avg < 1) throw ArgumentError(detail::kQuantum, "n_avg must be positive");
  RVector freq = RVector::Zero(p.size());
  std::uint64_t remaining = n_avg;
  double mass = 1.0;
  for (Eigen::Index a = 0; a < p.size() && remaining > 0; ++a) {
    std::uint64_t count = 0;
    if (a == p.size() - 1) {
      count = remaining;
    } else if (p(a) > 0.0) {
      const double q = mass > 0.0 ? p(a) / mass : 1.0;
      if (q >= 1.0) {
        count = remaining;
      } else {
        std::binomial_distribution<std::uint64_t> draw(remaining, q);
        count = draw(rng);
      }
    }
    freq(a) = static_cast<double>(count);
    remaining -= count;
    mass -= p(a);
  }
  return freq / static_cast<double>(n_avg);
}

// ---------------------------------------------------------------------------
// Metrics

/// tr sqrt(sqrt(rho) sigma sqrt(rho)). `rho` must be PSD up to -1e-6 (those
/// eigenvalues are clamped); `sigma` may be any Hermitian matrix, e.g. a raw
/// SVT estimate. Negative eigenvalues of the middle product count as zero.
///
/// The product is formed on the numerical support of rho: eigenvalues at
/// rounding level would otherwise contribute sqrt(1e-16) = 1e-8 each.
inline double fidelity(const CMatrix& rho, const CMatrix& sigma) {
  detail::require_hermitian(rho, "fidelity argument rho");
  detail::require_hermitian(sigma, "fidelity argument sigma");
  if (rho.rows() != sigma.rows()) throw DimensionError(detail::kQuantum, "fidelity: dimension mismatch");
  const EigHResult e = eigh(hermitize(rho));
  const Eigen::Index d = rho.rows();
  if (e.eigenvalues(0) < -1e-6) throw ContractError(detail::kQuantum, "fidelity argument rho is not PSD");
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(d) *
                       std::max(e.eigenvalues(d - 1), 0.0);
  Eigen::Index first = 0;
  while (first < d && e.eigenvalues(first) <= floor) ++first;
  if (first == d) return 0.0;
  const Eigen::Index r = d - first;
  const CMatrix u = e.eigenvectors.rightCols(r);
  const RVector root = e.eigenvalues.tail(r).cwiseSqrt();
  const CMatrix middle = root.cast<Complex>().asDiagonal() * (u.adjoint() * hermitize(sigma) * u) *
                         root.cast<Complex>().asDiagonal();
  const RVector lambda = eigh(hermitize(middle)).eigenvalues;
  return lambda.array().max(0.0).sqrt().sum();
}

inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return fidelity(rho.matrix(), sigma.matrix());
}

/// (1/2) sum |lambda_i(rho - sigma)|.
inline double trace_distance(const CMatrix& rho, const CMatrix& sigma) {
  detail::require_hermitian(rho, "trace_distance argument rho");
  detail::require_hermitian(sigma, "trace_distance argument sigma");
  if (rho.rows() != sigma.rows()) throw DimensionError(detail::kQuantum, "trace_distance: dimension mismatch");
  return 0.5 * eigh(hermitize(rho - sigma)).eigenvalues.cwiseAbs().sum();
}

inline double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return trace_distance(rho.matrix(), sigma.matrix());
}

/// sum_a sqrt(p_a q_a).
inline double classic_fidelity(const RVector& p, const RVector& q) {
  if (p.size() != q.size()) throw DimensionError(detail::kQuantum, "classic_fidelity: length mismatch");
  detail::require_pmf(p, "classic_fidelity argument p");
  detail::require_pmf(q, "classic_fidelity argument q");
  return (p.array() * q.array()).sqrt().sum();
}

/// Number of singular values above `threshold`.
inline int rank_estimate(const CMatrix& x, double threshold = 1e-7) {
  const RVector s = svd(x).singular_values;
  return static_cast<int>((s.array() > threshold).count());
}

}  // namespace lqst
