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

// The unrolled SVT network: T-1 hidden layers
//
//   y_t = y_{t-1} + delta_t (b - A(D_{tau_t}(A*(y_{t-1}; W_t)); W_t)),
//
// fed with y_0 = delta_0 b, a final layer X_temp = D_{tau_T}(A*(y_{T-1}; W_T))
// and an output layer that hermitizes, shifts by mu diag(1..d), clamps the
// eigenvalues at zero and renormalizes them as (l + eps) / sum(l + eps).
//
// Gradients are hand-derived reverse mode. Complex parameters use the
// realified convention dL/dRe + i dL/dIm. Both spectral layers are
// differentiated through divided differences of the spectral function, which
// equal the usual 1/(l_j - l_i) and 1/(s_j^2 - s_i^2) coupling terms wherever
// those are finite and stay finite at degenerate values.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lqst/errors.hpp"
#include "lqst/numlin.hpp"
#include "lqst/parallel.hpp"
#include "lqst/quantum.hpp"

namespace lqst {

namespace detail {
inline constexpr std::string_view kLqst = "lqst";
}

/// Learnable parameters plus the output-layer constants mu and epsilon.
struct NetworkParams {
  int depth = 0;
  Eigen::Index dim = 0;
  Eigen::Index meas = 0;
  std::vector<CMatrix> weights;     // W_1..W_T, each meas x dim^2
  std::vector<double> step_sizes;   // delta_0..delta_{T-1}
  std::vector<double> thresholds;   // tau_1..tau_T
  double mu = 0.0;
  double epsilon = 1e-8;

  void validate() const {
    if (depth < 1) throw ArgumentError(detail::kLqst, "depth must be at least 1");
    if (dim < 1 || meas < 1) throw ArgumentError(detail::kLqst, "dim and meas must be positive");
    const auto t = static_cast<std::size_t>(depth);
    if (weights.size() != t || step_sizes.size() != t || thresholds.size() != t) {
      throw DimensionError(detail::kLqst, "parameter lists must have one entry per layer");
    }
    for (const CMatrix& w : weights) {
      if (w.rows() != meas || w.cols() != dim * dim) throw DimensionError(detail::kLqst, "weight matrix has wrong shape");
      if (!w.allFinite()) throw NumericError(detail::kLqst, "weight matrix has non-finite entries");
    }
    for (double v : step_sizes)
      if (!std::isfinite(v)) throw NumericError(detail::kLqst, "non-finite step size");
    for (double v : thresholds)
      if (!std::isfinite(v)) throw NumericError(detail::kLqst, "non-finite threshold");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw ArgumentError(detail::kLqst, "mu must be finite and non-negative");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ArgumentError(detail::kLqst, "epsilon must be finite and positive");
  }

  /// Number of real learnable scalars.
  std::size_t flat_size() const {
    return static_cast<std::size_t>(depth) * static_cast<std::size_t>(2 * meas * dim * dim + 2);
  }
};

/// Same layout as the learnable part of NetworkParams.
struct Gradients {
  std::vector<CMatrix> weights;
  std::vector<double> step_sizes;
  std::vector<double> thresholds;

  static Gradients zeros_like(const NetworkParams& p) {
    Gradients g;
    for (const CMatrix& w : p.weights) g.weights.push_back(CMatrix::Zero(w.rows(), w.cols()));
    g.step_sizes.assign(p.step_sizes.size(), 0.0);
    g.thresholds.assign(p.thresholds.size(), 0.0);
    return g;
  }

  bool all_finite() const {
    for (const CMatrix& w : weights)
      if (!w.allFinite()) return false;
    for (double v : step_sizes)
      if (!std::isfinite(v)) return false;
    for (double v : thresholds)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// Flat views. Order: for each layer the real parts of W_t (column-major) then
// the imaginary parts; then delta_0..delta_{T-1}; then tau_1..tau_T.
namespace detail {
template <class Weights, class Visit>
void visit_flat(Weights& weights, Visit&& visit) {
  for (auto& w : weights) {
    for (Eigen::Index k = 0; k < w.size(); ++k) visit(reinterpret_cast<double*>(w.data() + k)[0]);
    for (Eigen::Index k = 0; k < w.size(); ++k) visit(reinterpret_cast<double*>(w.data() + k)[1]);
  }
}
}  // namespace detail

template <class T>
std::vector<double> to_flat(const T& p) {
  std::vector<double> out;
  auto weights = p.weights;
  detail::visit_flat(weights, [&](double& v) { out.push_back(v); });
  out.insert(out.end(), p.step_sizes.begin(), p.step_sizes.end());
  out.insert(out.end(), p.thresholds.begin(), p.thresholds.end());
  return out;
}

template <class T>
void assign_flat(T& p, std::span<const double> flat) {
  std::size_t i = 0;
  std::size_t expected = p.step_sizes.size() + p.thresholds.size();
  for (const auto& w : p.weights) expected += 2 * static_cast<std::size_t>(w.size());
  if (flat.size() != expected) throw DimensionError(detail::kLqst, "flat parameter vector has wrong length");
  detail::visit_flat(p.weights, [&](double& v) { v = flat[i++]; });
  for (double& v : p.step_sizes) v = flat[i++];
  for (double& v : p.thresholds) v = flat[i++];
}

inline constexpr double kInitialStep = 0.01;
inline constexpr double kInitialThreshold = 0.01;
/// Every W_t starts as the ensemble's map matrix; thresholds start at 0.01
/// and step sizes at `step`.
inline NetworkParams init_params(const MeasurementEnsemble& ens, int depth, double mu, double epsilon, double step) {
  if (depth < 1) throw ArgumentError(detail::kLqst, "depth must be at least 1");
  if (!std::isfinite(step)) throw ArgumentError(detail::kLqst, "initial step size must be finite");
  NetworkParams p;
  p.depth = depth;
  p.dim = ens.dim();
  p.meas = ens.count();
  p.weights.assign(static_cast<std::size_t>(depth), ens.rows());
  p.step_sizes.assign(static_cast<std::size_t>(depth), step);
  p.thresholds.assign(static_cast<std::size_t>(depth), kInitialThreshold);
  p.mu = mu;
  p.epsilon = epsilon;
  p.validate();
  return p;
}

inline NetworkParams init_params(const MeasurementEnsemble& ens, int depth, double mu, double epsilon) {
  return init_params(ens, depth, mu, epsilon, kInitialStep);
}

/// Output-layer constants: (0, 1e-8) for expectation data, (1e-8, 1e-4) for
/// POVM data.
inline std::pair<double, double> default_stabilizers(MeasurementKind kind) {
  return kind == MeasurementKind::PauliExpectation ? std::pair{0.0, 1e-8} : std::pair{1e-8, 1e-4};
}

inline NetworkParams init_params(const MeasurementEnsemble& ens, int depth) {
  const auto [mu, eps] = default_stabilizers(ens.kind());
  return init_params(ens, depth, mu, eps);
}

/// Training target paired with its measurement vector.
struct Sample {
  DensityMatrix state;
  RVector b;
};

/// Intermediate values of one forward pass.
struct ForwardTrace {
  std::vector<CVector> activations;  // y_0..y_{T-1}
  std::vector<SvdResult> factors;    // SVD of each shrinkage input, layers 1..T
  std::vector<CMatrix> shrunk;       // D_tau outputs, layers 1..T (last is X_temp)
  CMatrix x_temp;
  CMatrix x_temp1;
  CMatrix x_temp2;
  RVector eigenvalues;
  CMatrix eigenvectors;
  RVector clamped;
  RVector normalized;
  CMatrix x_out;
};

struct BackwardOptions {
  /// Reject batches whose output-layer eigenvalues are closer than
  /// min_eigen_gap. The divided-difference adjoint does not need the gap; the
  /// check exists for callers that want the classical precondition enforced.
  bool require_eigen_gap = false;
  double min_eigen_gap = 1e-12;
  std::size_t threads = 1;
};

namespace detail {

struct OutputLayer {
  CMatrix x_temp1;
  CMatrix x_temp2;
  EigHResult eig;
  RVector clamped;
  double norm = 0.0;
  RVector normalized;
  CMatrix x_out;
};

inline OutputLayer output_forward(const CMatrix& x_temp, double mu, double epsilon) {
  OutputLayer o;
  const Eigen::Index d = x_temp.rows();
  o.x_temp1 = hermitize(x_temp);
  o.x_temp2 = o.x_temp1;
  for (Eigen::Index i = 0; i < d; ++i) o.x_temp2(i, i) += mu * static_cast<double>(i + 1);
  o.eig = eigh(o.x_temp2);
  o.clamped = o.eig.eigenvalues.array().max(0.0).matrix();
  const RVector shifted = (o.clamped.array() + epsilon).matrix();
  o.norm = shifted.sum();
  o.normalized = shifted / o.norm;
  o.x_out = hermitize(reconstruct_spectral(o.eig.eigenvectors, o.normalized));
  return o;
}

/// Pullback of X_out = U diag(nu(l)) U^dagger, l = eig(herm(X_temp) + mu D).
inline CMatrix output_backward(const OutputLayer& o, const CMatrix& out_bar) {
  const CMatrix& u = o.eig.eigenvectors;
  const RVector& l = o.eig.eigenvalues;
  const Eigen::Index d = l.size();
  const CMatrix ot = u.adjoint() * out_bar * u;
  double weighted = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) weighted += o.normalized(i) * ot(i, i).real();
  CMatrix at(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (i == j) {
        const double slope = l(i) > 0.0 ? 1.0 : 0.0;
        at(i, i) = Complex(slope / o.norm * (ot(i, i).real() - weighted), 0.0);
        continue;
      }
      double dd;
      if (l(i) > 0.0 && l(j) > 0.0) {
        dd = 1.0;
      } else if (l(i) <= 0.0 && l(j) <= 0.0) {
        dd = 0.0;
      } else {
        dd = (o.clamped(i) - o.clamped(j)) / (l(i) - l(j));
      }
      at(i, j) = (dd / o.norm) * ot(i, j);
    }
  }
  const CMatrix a = u * at * u.adjoint();
  return 0.5 * (a + a.adjoint());
}

/// Pullback of Y = D_tau(G) given G's SVD. Returns dL/dG and adds dL/dtau
/// (through the clamp tau_eff = max(tau, 0)) to `tau_bar`.
inline CMatrix shrink_backward(const SvdResult& f, double tau, const CMatrix& y_bar, double& tau_bar) {
  const double t = std::max(tau, 0.0);
  const RVector& s = f.singular_values;
  const Eigen::Index k = s.size();
  const CMatrix r = f.left.adjoint() * y_bar * f.right;
  const RVector fs = (s.array() - t).max(0.0).matrix();
  CMatrix p(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < k; ++i) {
      const bool above_i = s(i) > t;
      const bool above_j = s(j) > t;
      double dd;
      if (i == j) {
        dd = above_i ? 1.0 : 0.0;
      } else if (above_i && above_j) {
        dd = 1.0;
      } else if (!above_i && !above_j) {
        dd = 0.0;
      } else {
        dd = (fs(i) - fs(j)) / (s(i) - s(j));
      }
      const double sum = s(i) + s(j);
      const double ratio = sum > 0.0 ? (fs(i) + fs(j)) / sum : (t == 0.0 ? 1.0 : 0.0);
      const double alpha = 0.5 * (dd + ratio);
      const double beta = 0.5 * (dd - ratio);
      p(i, j) = alpha * r(i, j) + beta * std::conj(r(j, i));
    }
  }
  if (tau > 0.0) {
    for (Eigen::Index i = 0; i < k; ++i)
      if (s(i) > t) tau_bar -= r(i, i).real();
  }
  return f.left * p * f.right.adjoint();
}

inline Eigen::Map<const CMatrix> as_square(const CMatrix& columns, Eigen::Index col, Eigen::Index d) {
  return Eigen::Map<const CMatrix>(columns.col(col).data(), d, d);
}

/// Column-batched forward pass. Column s of `b` is one measurement vector.
struct BatchForward {
  std::vector<CMatrix> inputs;                      // y_{t} for layer t+1, meas x S
  std::vector<std::vector<SvdResult>> factors;      // [layer][sample]
  std::vector<CMatrix> shrunk;                      // d^2 x S per layer
  std::vector<CMatrix> residuals;                   // b - A(X_t), hidden layers only
  std::vector<OutputLayer> outputs;                 // per sample
};

inline void require_finite_layer(const CMatrix& m, int layer, std::string_view what) {
  if (!m.allFinite()) {
    throw NumericError(kLqst, "non-finite " + std::string(what) + " in layer " + std::to_string(layer));
  }
}

inline BatchForward forward_batch(const NetworkParams& p, const Eigen::MatrixXd& b, std::size_t threads) {
  p.validate();
  if (b.rows() != p.meas) throw DimensionError(kLqst, "measurement vector length does not match the network");
  if (!b.allFinite()) throw NumericError(kLqst, "measurement vector has non-finite entries");
  const Eigen::Index d = p.dim;
  const Eigen::Index batch = b.cols();
  const auto depth = static_cast<std::size_t>(p.depth);
  const CMatrix bc = b.cast<Complex>();

  BatchForward fw;
  fw.factors.assign(depth, std::vector<SvdResult>(static_cast<std::size_t>(batch)));
  fw.inputs.push_back(p.step_sizes[0] * bc);
  for (std::size_t t = 0; t < depth; ++t) {
    const int layer = static_cast<int>(t) + 1;
    const CMatrix g = p.weights[t].adjoint() * fw.inputs[t];
    require_finite_layer(g, layer, "adjoint map");
    CMatrix x(d * d, batch);
    const double tau = std::max(p.thresholds[t], 0.0);
    parallel_for(static_cast<std::size_t>(batch), threads, [&](std::size_t s) {
      const auto col = static_cast<Eigen::Index>(s);
      fw.factors[t][s] = svd(as_square(g, col, d));
      const CMatrix shr = shrink_factors(fw.factors[t][s], tau);
      x.col(col) = Eigen::Map<const CVector>(shr.data(), d * d);
    });
    require_finite_layer(x, layer, "shrinkage output");
    fw.shrunk.push_back(std::move(x));
    if (t + 1 < depth) {
      CMatrix r = bc - p.weights[t] * fw.shrunk.back();
      CMatrix next = fw.inputs[t] + p.step_sizes[t + 1] * r;
      require_finite_layer(next, layer, "activation");
      fw.residuals.push_back(std::move(r));
      fw.inputs.push_back(std::move(next));
    }
  }
  fw.outputs.resize(static_cast<std::size_t>(batch));
  parallel_for(static_cast<std::size_t>(batch), threads, [&](std::size_t s) {
    const CMatrix x_temp = as_square(fw.shrunk.back(), static_cast<Eigen::Index>(s), d);
    fw.outputs[s] = output_forward(x_temp, p.mu, p.epsilon);
  });
  return fw;
}

inline Eigen::MatrixXd stack_measurements(std::span<const Sample> batch, Eigen::Index meas) {
  Eigen::MatrixXd b(meas, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t s = 0; s < batch.size(); ++s) {
    if (batch[s].b.size() != meas) throw DimensionError(kLqst, "sample measurement length does not match the network");
    b.col(static_cast<Eigen::Index>(s)) = batch[s].b;
  }
  return b;
}

}  // namespace detail

struct ForwardResult {
  DensityMatrix output;
  ForwardTrace trace;
};

/// Single-sample forward pass with the full trace of intermediates.
inline ForwardResult forward(const NetworkParams& p, const RVector& b) {
  const detail::BatchForward fw = detail::forward_batch(p, Eigen::MatrixXd(b), 1);
  const Eigen::Index d = p.dim;
  ForwardTrace tr;
  for (const CMatrix& y : fw.inputs) tr.activations.push_back(y.col(0));
  for (std::size_t t = 0; t < fw.shrunk.size(); ++t) {
    tr.factors.push_back(fw.factors[t][0]);
    tr.shrunk.push_back(detail::as_square(fw.shrunk[t], 0, d));
  }
  const detail::OutputLayer& o = fw.outputs[0];
  tr.x_temp = tr.shrunk.back();
  tr.x_temp1 = o.x_temp1;
  tr.x_temp2 = o.x_temp2;
  tr.eigenvalues = o.eig.eigenvalues;
  tr.eigenvectors = o.eig.eigenvectors;
  tr.clamped = o.clamped;
  tr.normalized = o.normalized;
  tr.x_out = o.x_out;
  return {DensityMatrix::from_matrix(o.x_out), std::move(tr)};
}

/// Network estimates for every column of `b`.
inline std::vector<CMatrix> predict_batch(const NetworkParams& p, const Eigen::MatrixXd& b, std::size_t threads = 1) {
  detail::BatchForward fw = detail::forward_batch(p, b, threads);
  std::vector<CMatrix> out;
  out.reserve(fw.outputs.size());
  for (detail::OutputLayer& o : fw.outputs) out.push_back(std::move(o.x_out));
  return out;
}

inline std::vector<CMatrix> predict_batch(const NetworkParams& p, std::span<const Sample> batch, std::size_t threads = 1) {
  return predict_batch(p, detail::stack_measurements(batch, p.meas), threads);
}

/// (1 / (M d^2)) sum_i ||X_i - f(b_i)||_F^2.
inline double nmse_loss(const NetworkParams& p, std::span<const Sample> batch, std::size_t threads = 1) {
  if (batch.empty()) throw ArgumentError(detail::kLqst, "loss of an empty batch");
  const std::vector<CMatrix> est = predict_batch(p, batch, threads);
  double total = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    if (batch[s].state.dim() != p.dim) throw DimensionError(detail::kLqst, "target dimension does not match the network");
    total += (batch[s].state.matrix() - est[s]).squaredNorm();
  }
  return total / (static_cast<double>(batch.size()) * static_cast<double>(p.dim * p.dim));
}

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

/// NMSE loss and its exact gradient with respect to every learnable field.
inline LossAndGradients backward(const NetworkParams& p, std::span<const Sample> batch, const BackwardOptions& opts = {}) {
  if (batch.empty()) throw ArgumentError(detail::kLqst, "gradient of an empty batch");
  const Eigen::Index d = p.dim;
  const auto n = static_cast<Eigen::Index>(batch.size());
  const Eigen::MatrixXd bmat = detail::stack_measurements(batch, p.meas);
  const detail::BatchForward fw = detail::forward_batch(p, bmat, opts.threads);
  const auto depth = static_cast<std::size_t>(p.depth);
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(d * d));

  LossAndGradients out;
  out.grads = Gradients::zeros_like(p);
  Gradients& g = out.grads;

  std::vector<double> sample_loss(batch.size());
  std::vector<double> tau_bar(batch.size());
  CMatrix g_bar(d * d, n);
  parallel_for(batch.size(), opts.threads, [&](std::size_t s) {
    const detail::OutputLayer& o = fw.outputs[s];
    if (batch[s].state.dim() != d) throw DimensionError(detail::kLqst, "target dimension does not match the network");
    if (opts.require_eigen_gap) {
      const RVector& l = o.eig.eigenvalues;
      for (Eigen::Index i = 1; i < l.size(); ++i) {
        if (l(i) - l(i - 1) < opts.min_eigen_gap) {
          throw DegeneracyError(detail::kLqst, "output-layer eigenvalues " + std::to_string(i - 1) + " and " +
                                                   std::to_string(i) + " are degenerate; use mu > 0 to separate them");
        }
      }
    }
    const CMatrix diff = o.x_out - batch[s].state.matrix();
    sample_loss[s] = diff.squaredNorm();
    const CMatrix x_bar = detail::output_backward(o, (2.0 * scale) * diff);
    double tb = 0.0;
    const CMatrix gb = detail::shrink_backward(fw.factors[depth - 1][s], p.thresholds[depth - 1], x_bar, tb);
    tau_bar[s] = tb;
    g_bar.col(static_cast<Eigen::Index>(s)) = Eigen::Map<const CVector>(gb.data(), d * d);
  });
  for (std::size_t s = 0; s < batch.size(); ++s) {
    out.loss += sample_loss[s];
    g.thresholds[depth - 1] += tau_bar[s];
  }
  out.loss *= scale;

  // g = W^dagger y  =>  W_bar += y g_bar^dagger,  y_bar = W g_bar.
  g.weights[depth - 1] += fw.inputs[depth - 1] * g_bar.adjoint();
  CMatrix y_bar = p.weights[depth - 1] * g_bar;

  for (std::size_t t = depth - 1; t-- > 0;) {
    // y_{t+1} = y_t + delta_{t+1} (b - W_t vec(X_t))
    g.step_sizes[t + 1] += fw.residuals[t].cwiseProduct(y_bar.conjugate()).real().sum();
    const CMatrix a_bar = -p.step_sizes[t + 1] * y_bar;
    const CMatrix x_bar = p.weights[t].adjoint() * a_bar;
    g.weights[t] += a_bar * fw.shrunk[t].adjoint();
    parallel_for(batch.size(), opts.threads, [&](std::size_t s) {
      const auto col = static_cast<Eigen::Index>(s);
      double tb = 0.0;
      const CMatrix gb = detail::shrink_backward(fw.factors[t][s], p.thresholds[t], detail::as_square(x_bar, col, d), tb);
      tau_bar[s] = tb;
      g_bar.col(col) = Eigen::Map<const CVector>(gb.data(), d * d);
    });
    for (std::size_t s = 0; s < batch.size(); ++s) g.thresholds[t] += tau_bar[s];
    g.weights[t] += fw.inputs[t] * g_bar.adjoint();
    y_bar += p.weights[t] * g_bar;
  }
  // y_0 = delta_0 b
  g.step_sizes[0] += (bmat.array() * y_bar.real().array()).sum();

  if (!g.all_finite()) throw NumericError(detail::kLqst, "non-finite gradient");
  return out;
}

}  // namespace lqst
