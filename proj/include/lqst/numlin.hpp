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

// Dense complex linear algebra used by every other module: Hermitian
// eigendecomposition, complex SVD, singular value shrinkage and PSD square
// roots. Matrices are plain Eigen types; contracts (finiteness, Hermiticity,
// dimension cap) are checked at the entry of each operation.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "lqst/errors.hpp"

#ifdef LQST_HAVE_LAPACKE
#ifndef LAPACK_COMPLEX_CPP
#define LAPACK_COMPLEX_CPP
#endif
#include <lapacke.h>
#include <vector>
#endif

namespace lqst {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Largest matrix dimension accepted by the decompositions.
inline constexpr Eigen::Index kMaxDimension = 64;

struct EigHResult {
  RVector eigenvalues;  // ascending
  CMatrix eigenvectors;  // columns
};

struct SvdResult {
  CMatrix left;
  RVector singular_values;  // descending, non-negative
  CMatrix right;
};

namespace detail {

inline constexpr std::string_view kNumlin = "numlin";

inline void require_square(const CMatrix& x, std::string_view op) {
  if (x.rows() != x.cols() || x.rows() == 0) {
    throw DimensionError(kNumlin, std::string(op) + " requires a non-empty square matrix, got " +
                                      std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
}

inline void require_size_cap(const CMatrix& x, std::string_view op) {
  if (x.rows() > kMaxDimension || x.cols() > kMaxDimension) {
    throw DimensionError(kNumlin, std::string(op) + ": dimension exceeds cap of " +
                                      std::to_string(kMaxDimension));
  }
}

}  // namespace detail

inline bool all_finite(const CMatrix& x) { return x.allFinite(); }

inline void require_finite(const CMatrix& x, std::string_view what) {
  if (!x.allFinite()) {
    throw NumericError(detail::kNumlin, std::string(what) + " has non-finite entries");
  }
}

inline double fro_norm(const CMatrix& x) {
  require_finite(x, "fro_norm input");
  return x.norm();
}

/// (X + X^dagger) / 2.
inline CMatrix hermitize(const CMatrix& x) {
  detail::require_square(x, "hermitize");
  CMatrix h = 0.5 * (x + x.adjoint());
  // Write the mirrored half explicitly so the result is conjugate symmetric
  // bit for bit rather than up to rounding.
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    h(j, j) = Complex(h(j, j).real(), 0.0);
    for (Eigen::Index i = j + 1; i < h.rows(); ++i) h(j, i) = std::conj(h(i, j));
  }
  return h;
}

inline double hermiticity_defect(const CMatrix& x) { return (x - x.adjoint()).norm(); }

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending.
inline EigHResult eigh(const CMatrix& x) {
  detail::require_square(x, "eigh");
  detail::require_size_cap(x, "eigh");
  require_finite(x, "eigh input");
  const double scale = std::max(1.0, x.norm());
  if (hermiticity_defect(x) > 1e-8 * scale) {
    throw ContractError(detail::kNumlin, "eigh input is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitize(x));
  if (solver.info() != Eigen::Success) {
    throw DecompositionError(detail::kNumlin, "Hermitian eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Full complex SVD, X = U diag(sigma) V^dagger. Uses LAPACK's divide and
/// conquer driver when built with LAPACKE, Eigen's Jacobi SVD otherwise.
inline SvdResult svd(const CMatrix& x) {
  if (x.size() == 0) throw DimensionError(detail::kNumlin, "svd of an empty matrix");
  detail::require_size_cap(x, "svd");
  require_finite(x, "svd input");
#ifdef LQST_HAVE_LAPACKE
  const auto m = static_cast<lapack_int>(x.rows());
  const auto n = static_cast<lapack_int>(x.cols());
  CMatrix a = x;
  SvdResult r{CMatrix(m, m), RVector(std::min(m, n)), CMatrix(n, n)};
  CMatrix vh(n, n);
  const lapack_int info =
      LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'A', m, n, reinterpret_cast<lapack_complex_double*>(a.data()), m,
                     r.singular_values.data(), reinterpret_cast<lapack_complex_double*>(r.left.data()), m,
                     reinterpret_cast<lapack_complex_double*>(vh.data()), n);
  if (info != 0) throw DecompositionError(detail::kNumlin, "zgesdd failed with info " + std::to_string(info));
  r.right = vh.adjoint();
  return r;
#else
  Eigen::JacobiSVD<CMatrix> solver(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (solver.info() != Eigen::Success) {
    throw DecompositionError(detail::kNumlin, "Jacobi SVD did not converge");
  }
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
#endif
}

/// U diag(values) U^dagger.
inline CMatrix reconstruct_spectral(const CMatrix& u, const RVector& values) {
  return u * values.cast<Complex>().asDiagonal() * u.adjoint();
}

/// Soft threshold applied to already computed singular factors.
inline CMatrix shrink_factors(const SvdResult& f, double tau) {
  const RVector shrunk = (f.singular_values.array() - tau).max(0.0).matrix();
  const Eigen::Index k = shrunk.size();
  return f.left.leftCols(k) * shrunk.cast<Complex>().asDiagonal() * f.right.leftCols(k).adjoint();
}

/// Singular value thresholding operator D_tau. Hermitian inputs (up to
/// 1e-12 relative) take the eigendecomposition route: for X = W diag(l) W^dagger
/// the result is W diag(sign(l) max(|l| - tau, 0)) W^dagger.
inline CMatrix shrink(const CMatrix& x, double tau) {
  if (!(tau >= 0.0)) throw ArgumentError(detail::kNumlin, "shrink threshold must be non-negative");
  if (x.rows() == x.cols() && x.allFinite() && hermiticity_defect(x) <= 1e-12 * x.norm()) {
    const EigHResult e = eigh(x);
    const RVector l = e.eigenvalues;
    const RVector shrunk = l.unaryExpr([tau](double v) { return v > 0.0 ? std::max(v - tau, 0.0) : std::min(v + tau, 0.0); });
    return reconstruct_spectral(e.eigenvectors, shrunk);
  }
  return shrink_factors(svd(x), tau);
}

/// Square root of a Hermitian PSD matrix. Eigenvalues in [-neg_tol, 0) are
/// treated as zero; anything more negative violates the contract.
inline CMatrix psd_sqrt(const CMatrix& x, double neg_tol = 1e-8) {
  const EigHResult e = eigh(x);
  if (e.eigenvalues(0) < -neg_tol) {
    throw ContractError(detail::kNumlin, "psd_sqrt input has eigenvalue " +
                                             std::to_string(e.eigenvalues(0)) + " below -" +
                                             std::to_string(neg_tol));
  }
  return reconstruct_spectral(e.eigenvectors, e.eigenvalues.array().max(0.0).sqrt().matrix());
}

inline double trace_norm(const CMatrix& x) { return svd(x).singular_values.sum(); }

/// |X| = sqrt(X^dagger X).
inline CMatrix abs_matrix(const CMatrix& x) {
  require_finite(x, "abs_matrix input");
  return psd_sqrt(hermitize(x.adjoint() * x), 1e-8 * std::max(1.0, x.squaredNorm()));
}

}  // namespace lqst
