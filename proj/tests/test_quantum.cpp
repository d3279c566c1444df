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

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "lqst/quantum.hpp"
#include "test_util.hpp"

using namespace lqst;
using lqst::test::frob_inner;
using lqst::test::random_matrix;
using lqst::test::random_vector;

namespace {

const Complex kI(0.0, 1.0);

// Brute-force Kronecker product, written independently of the library's.
CMatrix kron_oracle(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index k = 0; k < b.rows(); ++k)
        for (Eigen::Index l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

DensityMatrix pure(const CVector& psi) {
  const CVector v = psi / psi.norm();
  return DensityMatrix::from_matrix(v * v.adjoint());
}

}  // namespace

TEST(DensityMatrix, Validation) {
  EXPECT_NO_THROW(DensityMatrix::from_matrix(CMatrix::Identity(2, 2) / 2.0));
  EXPECT_THROW(DensityMatrix::from_matrix(CMatrix::Identity(2, 2)), ContractError);
  CMatrix neg(2, 2);
  neg << 1.5, 0, 0, -0.5;
  EXPECT_THROW(DensityMatrix::from_matrix(neg), ContractError);
  CMatrix nonherm(2, 2);
  nonherm << 0.5, 0.1, 0, 0.5;
  EXPECT_THROW(DensityMatrix::from_matrix(nonherm), ContractError);
  EXPECT_THROW(DensityMatrix::from_matrix(CMatrix::Zero(2, 3)), DimensionError);
}

TEST(Pauli, SingleQubitTable) {
  CMatrix x1(2, 2);
  x1 << 0, 1, 1, 0;
  EXPECT_EQ(pauli_observable({1}), x1);
  CMatrix x2(2, 2);
  x2 << 0, -kI, kI, 0;
  EXPECT_EQ(pauli_observable({2}), x2);
  CMatrix zz = CMatrix::Zero(4, 4);
  zz.diagonal() << 1, -1, -1, 1;
  EXPECT_EQ(pauli_observable({3, 3}), zz);
  EXPECT_THROW(pauli_observable({0}), ArgumentError);
  EXPECT_THROW(pauli_observable({5}), ArgumentError);
}

TEST(Pauli, TensorProductMatchesBruteForce) {
  for (int a = 1; a <= 4; ++a)
    for (int b = 1; b <= 4; ++b)
      for (int c = 1; c <= 4; ++c) {
        const CMatrix expected =
            kron_oracle(kron_oracle(single_qubit_operator(a), single_qubit_operator(b)), single_qubit_operator(c));
        ASSERT_EQ(pauli_observable({a, b, c}), expected);
      }
}

TEST(Pauli, OrthogonalityHermitianUnitary) {
  for (int n = 1; n <= 2; ++n) {
    const std::uint64_t count = std::uint64_t{1} << (2 * n);
    const auto d = static_cast<double>(1 << n);
    for (std::uint64_t i = 0; i < count; ++i) {
      const CMatrix a = pauli_observable_at(n, i);
      ASSERT_LE((a - a.adjoint()).norm(), 1e-15);
      ASSERT_LE((a * a - CMatrix::Identity(a.rows(), a.rows())).norm(), 1e-15);
      for (std::uint64_t j = 0; j < count; ++j) {
        const Complex t = (a * pauli_observable_at(n, j)).trace();
        ASSERT_LE(std::abs(t - Complex(i == j ? d : 0.0, 0.0)), 1e-12);
      }
    }
  }
  Rng rng = derive_stream(2, 0);
  std::uniform_int_distribution<std::uint64_t> pick(0, 255);
  for (int k = 0; k < 200; ++k) {
    const std::uint64_t i = pick(rng), j = pick(rng);
    const Complex t = (pauli_observable_at(4, i) * pauli_observable_at(4, j)).trace();
    ASSERT_LE(std::abs(t - Complex(i == j ? 16.0 : 0.0, 0.0)), 1e-12);
  }
}

TEST(Pauli, IdentityIsLastLinearIndex) {
  EXPECT_EQ(pauli_observable_at(2, 15), CMatrix::Identity(4, 4));
  EXPECT_EQ(pauli_observable_at(2, 0), pauli_observable({1, 1}));
  EXPECT_EQ(pauli_observable_at(2, 1), pauli_observable({1, 2}));
}

TEST(SelectObservables, Examples) {
  Rng rng = derive_stream(2, 1);
  const MeasurementEnsemble ens = select_observables(4, 103, rng);
  EXPECT_EQ(ens.count(), 103);
  EXPECT_EQ(ens.dim(), 16);
  const std::set<std::uint64_t> unique(ens.indices().begin(), ens.indices().end());
  EXPECT_EQ(unique.size(), 103u);
  EXPECT_EQ(unique.count(255), 0u);

  Rng full_rng = derive_stream(2, 2);
  const MeasurementEnsemble full = select_observables(2, 15, full_rng);
  const std::set<std::uint64_t> all(full.indices().begin(), full.indices().end());
  EXPECT_EQ(all.size(), 15u);
  EXPECT_EQ(*all.rbegin(), 14u);

  Rng a = derive_stream(9, 9), b = derive_stream(9, 9);
  EXPECT_EQ(select_observables(3, 20, a).indices(), select_observables(3, 20, b).indices());

  Rng c = derive_stream(2, 3);
  EXPECT_THROW(select_observables(2, 16, c), ArgumentError);
  EXPECT_THROW(select_observables(2, 0, c), ArgumentError);
}

TEST(MeasurementMap, Examples) {
  Rng rng = derive_stream(2, 4);
  const MeasurementEnsemble ens = select_observables(3, 30, rng);
  EXPECT_LE(apply_map(ens, CMatrix::Identity(8, 8) / 8.0).norm(), 1e-15);

  const MeasurementEnsemble zz = pauli_ensemble(2, {10});  // digits (3,3)
  EXPECT_EQ(zz.matrices()[0], pauli_observable({3, 3}));
  EXPECT_NEAR(apply_map(zz, bell_state().matrix())(0).real(), 1.0, 1e-15);

  CVector e1 = CVector::Zero(30);
  e1(0) = 1.0;
  EXPECT_EQ(apply_adjoint(ens, e1), ens.matrices()[0].adjoint());
  EXPECT_EQ(apply_adjoint(ens, CVector::Zero(30)).norm(), 0.0);
  EXPECT_THROW(apply_adjoint(ens, CVector::Zero(29)), DimensionError);
  EXPECT_THROW(apply_map(ens, CMatrix::Zero(4, 4)), DimensionError);
}

TEST(MeasurementMap, EntrywiseTraceOracle) {
  Rng rng = derive_stream(2, 5);
  const MeasurementEnsemble ens = select_observables(2, 9, rng);
  const CMatrix x = random_matrix(4, 4, rng);
  const CVector v = apply_map(ens, x);
  for (Eigen::Index i = 0; i < 9; ++i) {
    Complex t = 0.0;
    const CMatrix& a = ens.matrices()[static_cast<std::size_t>(i)];
    for (Eigen::Index r = 0; r < 4; ++r)
      for (Eigen::Index c = 0; c < 4; ++c) t += a(r, c) * x(c, r);
    EXPECT_LE(std::abs(v(i) - t), 1e-13);
  }
}

TEST(MeasurementMap, AdjointIdentity) {
  Rng rng = derive_stream(2, 6);
  const MeasurementEnsemble pauli = select_observables(3, 40, rng);
  const MeasurementEnsemble povm = pauli4_povm(2);
  for (const MeasurementEnsemble* ens : {&pauli, &povm}) {
    for (int k = 0; k < 200; ++k) {
      const CMatrix x = random_matrix(ens->dim(), ens->dim(), rng);
      const CVector y = random_vector(ens->count(), rng);
      const Complex lhs = apply_map(*ens, x).dot(y);  // <A(X), y> with conjugate on the left
      const Complex rhs = frob_inner(x, apply_adjoint(*ens, y));
      ASSERT_LE(std::abs(lhs - rhs), 1e-10 * x.norm() * y.norm());
    }
  }
}

TEST(MeasurementMap, RealOnDensityMatrices) {
  Rng rng = derive_stream(2, 7);
  const MeasurementEnsemble ens = select_observables(4, 103, rng);
  for (int k = 0; k < 20; ++k) {
    const DensityMatrix rho = random_rank_r_state(16, 3, rng);
    EXPECT_LE(apply_map(ens, rho.matrix()).imag().cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(States, RandomRankR) {
  Rng rng = derive_stream(2, 8);
  for (int k = 0; k < 100; ++k) {
    const DensityMatrix rho = random_rank_r_state(16, 3, rng);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.matrix());
    EXPECT_EQ((es.eigenvalues().array() > 1e-7).count(), 3);
    EXPECT_EQ(rank_estimate(rho.matrix()), 3);
  }
  const DensityMatrix p = random_rank_r_state(8, 1, rng);
  EXPECT_NEAR((p.matrix() * p.matrix()).trace().real(), 1.0, 1e-10);
  EXPECT_THROW(random_rank_r_state(4, 5, rng), ArgumentError);
  EXPECT_THROW(random_rank_r_state(4, 0, rng), ArgumentError);
}

TEST(States, Bell) {
  const DensityMatrix b = bell_state();
  EXPECT_EQ(b.matrix()(0, 3), Complex(0.5, 0.0));
  EXPECT_NEAR(b.matrix().trace().real(), 1.0, 1e-15);
  EXPECT_EQ(rank_estimate(b.matrix()), 1);
}

TEST(Povm, Pauli4Structure) {
  const MeasurementEnsemble p = pauli4_povm(2);
  EXPECT_EQ(p.count(), 16);
  EXPECT_TRUE(p.is_complete());
  CMatrix sum = CMatrix::Zero(4, 4);
  for (const CMatrix& m : p.matrices()) {
    sum += m;
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<CMatrix>(m).eigenvalues()(0), -1e-12);
  }
  EXPECT_LE((sum - CMatrix::Identity(4, 4)).norm(), 1e-12);
  const auto single = pauli4_single_qubit();
  EXPECT_NEAR(single[3].determinant().real(), 1.0 / 6.0, 1e-14);
  EXPECT_LE((p.matrices()[6] - kron_oracle(single[1], single[2])).norm(), 1e-15);
}

TEST(Povm, Probabilities) {
  const MeasurementEnsemble p = pauli4_povm(2);
  const RVector mixed = povm_probabilities(maximally_mixed(4), p);
  for (Eigen::Index a = 0; a < 16; ++a) EXPECT_NEAR(mixed(a), p.matrices()[static_cast<std::size_t>(a)].trace().real() / 4.0, 1e-15);

  // Bell PMF by brute force: <psi| M_a |psi> with psi = (|00> + |11>)/sqrt 2.
  CVector psi = CVector::Zero(4);
  psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
  const RVector bell = povm_probabilities(bell_state(), p);
  EXPECT_NEAR(bell.sum(), 1.0, 1e-12);
  for (Eigen::Index a = 0; a < 16; ++a) {
    EXPECT_NEAR(bell(a), (psi.adjoint() * p.matrices()[static_cast<std::size_t>(a)] * psi)(0).real(), 1e-14);
  }

  Rng rng = derive_stream(2, 9);
  const DensityMatrix r1 = random_rank_r_state(4, 2, rng), r2 = random_rank_r_state(4, 1, rng);
  const double alpha = 0.3;
  const RVector mix = povm_probabilities(DensityMatrix::from_matrix(alpha * r1.matrix() + (1 - alpha) * r2.matrix()), p);
  EXPECT_LE((mix - (alpha * povm_probabilities(r1, p) + (1 - alpha) * povm_probabilities(r2, p))).cwiseAbs().maxCoeff(), 1e-12);

  Rng r3 = derive_stream(2, 10);
  EXPECT_THROW(povm_probabilities(bell_state(), select_observables(2, 3, r3)), ArgumentError);
}

TEST(Povm, Sampling) {
  Rng rng = derive_stream(2, 11);
  RVector e = RVector::Zero(16);
  e(5) = 1.0;
  EXPECT_EQ(sample_povm(e, 1000, rng), e);

  const RVector p = povm_probabilities(bell_state(), pauli4_povm(2));
  const RVector f = sample_povm(p, 1000, rng);
  EXPECT_NEAR(f.sum(), 1.0, 1e-12);

  const std::uint64_t n = 1000000;
  const RVector big = sample_povm(p, n, rng);
  const double worst = (p.array() * (1.0 - p.array())).maxCoeff();
  EXPECT_LE((big - p).cwiseAbs().maxCoeff(), 5.0 * std::sqrt(worst / static_cast<double>(n)));

  RVector bad = p;
  bad(0) += 0.1;
  EXPECT_THROW(sample_povm(bad, 10, rng), ArgumentError);
}

TEST(Metrics, FidelityExamples) {
  Rng rng = derive_stream(2, 12);
  for (int k = 0; k < 20; ++k) {
    const DensityMatrix rho = random_rank_r_state(8, 1 + k % 8, rng);
    EXPECT_NEAR(fidelity(rho, rho), 1.0, 1e-8);
  }
  EXPECT_NEAR(fidelity(bell_state(), maximally_mixed(4)), 0.5, 1e-10);
  for (int k = 0; k < 50; ++k) {
    const DensityMatrix a = random_rank_r_state(4, 1 + k % 4, rng), b = random_rank_r_state(4, 1 + (k / 4) % 4, rng);
    EXPECT_NEAR(fidelity(a, b), fidelity(b, a), 1e-8);
    EXPECT_LE(fidelity(a, b), 1.0 + 1e-6);
  }
  CMatrix nonherm = CMatrix::Identity(2, 2) / 2.0;
  nonherm(0, 1) = 0.3;
  EXPECT_THROW(fidelity(nonherm, CMatrix::Identity(2, 2) / 2.0), ContractError);
}

TEST(Metrics, PureStateFidelityOracle) {
  // For pure rho = |psi><psi|, F = sqrt(<psi|sigma|psi>).
  Rng rng = derive_stream(2, 13);
  for (int k = 0; k < 50; ++k) {
    const CVector psi = random_vector(8, rng).normalized();
    const DensityMatrix sigma = random_rank_r_state(8, 3, rng);
    const double expected = std::sqrt((psi.adjoint() * sigma.matrix() * psi)(0).real());
    EXPECT_NEAR(fidelity(pure(psi), sigma), expected, 1e-9);
  }
}

TEST(Metrics, TraceDistance) {
  Rng rng = derive_stream(2, 14);
  const DensityMatrix rho = random_rank_r_state(4, 2, rng);
  EXPECT_NEAR(trace_distance(rho, rho), 0.0, 1e-14);
  CVector a = CVector::Zero(2), b = CVector::Zero(2);
  a(0) = 1.0;
  b(1) = 1.0;
  EXPECT_NEAR(trace_distance(pure(a), pure(b)), 1.0, 1e-14);
  EXPECT_NEAR(trace_distance(bell_state(), maximally_mixed(4)), 0.75, 1e-10);
}

TEST(Metrics, FidelityOneIffTraceDistanceZero) {
  Rng rng = derive_stream(2, 15);
  for (int k = 0; k < 100; ++k) {
    const DensityMatrix a = random_rank_r_state(4, 2, rng);
    const DensityMatrix b = k % 2 == 0 ? a : random_rank_r_state(4, 2, rng);
    const bool same_f = std::abs(fidelity(a, b) - 1.0) <= 1e-6;
    const bool same_t = trace_distance(a, b) <= 1e-6;
    EXPECT_EQ(same_f, same_t);
  }
}

TEST(Metrics, ClassicFidelity) {
  RVector p(4), q(4);
  p << 0.1, 0.2, 0.3, 0.4;
  EXPECT_NEAR(classic_fidelity(p, p), 1.0, 1e-15);
  p << 0.5, 0.5, 0, 0;
  q << 0, 0, 0.5, 0.5;
  EXPECT_EQ(classic_fidelity(p, q), 0.0);
  EXPECT_THROW(classic_fidelity(p, RVector::Constant(3, 1.0 / 3.0)), DimensionError);
}

TEST(Metrics, ClassicFidelityExpectationForm) {
  // E_{a ~ p}[sqrt(q_a / p_a)] by sampling, within 3 standard errors.
  Rng rng = derive_stream(2, 16);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  RVector p(6), q(6);
  for (Eigen::Index i = 0; i < 6; ++i) {
    p(i) = u(rng);
    q(i) = u(rng);
  }
  p /= p.sum();
  q /= q.sum();
  std::discrete_distribution<int> draw(p.data(), p.data() + p.size());
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int k = 0; k < n; ++k) {
    const int a = draw(rng);
    const double v = std::sqrt(q(a) / p(a));
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_LE(std::abs(classic_fidelity(p, q) - mean), 3.0 * se);
}

TEST(Metrics, RankEstimate) {
  CMatrix d = CMatrix::Zero(4, 4);
  d.diagonal() << 0.5, 0.5, 0, 0;
  EXPECT_EQ(rank_estimate(d), 2);
  d(2, 2) = 5e-8;
  EXPECT_EQ(rank_estimate(d), 2);
  EXPECT_EQ(rank_estimate(d, 1e-8), 3);
}
