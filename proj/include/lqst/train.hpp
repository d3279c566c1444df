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

// Datasets, ADAM, the mini-batch training loop with validation-based early
// stopping, and the evaluation harnesses (random states, Bell state).
// File formats live in lqst/io.hpp.

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lqst/errors.hpp"
#include "lqst/network.hpp"
#include "lqst/parallel.hpp"
#include "lqst/quantum.hpp"
#include "lqst/random.hpp"

namespace lqst {

namespace detail {
inline constexpr std::string_view kTrain = "train";

// RNG stream ids under a dataset or experiment seed.
inline constexpr std::uint64_t kEnsembleStream = 0;
inline constexpr std::uint64_t kSampleStream = 1;
inline constexpr std::uint64_t kBellStream = 2;
inline constexpr std::uint64_t kShuffleStream = 3;
}  // namespace detail

// ---------------------------------------------------------------------------
// Datasets

enum class Split { Train, Validation, Test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val" || s == "validation") return Split::Validation;
  if (s == "test") return Split::Test;
  throw ArgumentError(detail::kTrain, "unknown split '" + std::string(s) + "'");
}

struct DatasetConfig {
  int qubits = 4;
  int rank = 3;
  MeasurementKind kind = MeasurementKind::PauliExpectation;
  int meas = 103;               // observables, or observed POVM outcomes
  std::uint64_t n_avg = 0;      // shots per sample, POVM only
  std::array<std::size_t, 3> sizes{50000, 10000, 10000};
  std::uint64_t seed = 7;
  std::size_t threads = 1;

  void validate() const {
    if (qubits < 1 || qubits > 6) throw ArgumentError(detail::kTrain, "qubits must be in 1..6");
    const std::int64_t d = std::int64_t{1} << qubits;
    if (rank < 1 || rank > d) throw ArgumentError(detail::kTrain, "rank must be in 1..d");
    if (sizes[0] < 1 || sizes[1] < 1) throw ArgumentError(detail::kTrain, "train and validation sizes must be at least 1");
    const std::int64_t pool = d * d - (kind == MeasurementKind::PauliExpectation ? 1 : 0);
    if (meas < 1 || meas > pool) {
      throw ArgumentError(detail::kTrain, "meas must be in 1.." + std::to_string(pool) + " for this measurement kind");
    }
    if (kind == MeasurementKind::Povm && n_avg < 1) throw ArgumentError(detail::kTrain, "POVM datasets need n_avg >= 1");
    if (kind == MeasurementKind::PauliExpectation && n_avg != 0) {
      throw ArgumentError(detail::kTrain, "n_avg only applies to POVM datasets");
    }
  }
};

/// Ensemble recorded by (kind, qubits, indices). POVM indices are outcome
/// labels of the full Pauli-4 POVM.
inline MeasurementEnsemble ensemble_from_indices(MeasurementKind kind, int qubits, std::vector<std::uint64_t> indices) {
  return kind == MeasurementKind::PauliExpectation ? pauli_ensemble(qubits, std::move(indices))
                                                   : pauli4_povm_subset(qubits, std::move(indices));
}

/// Pauli: `meas` random non-identity observables. POVM: every outcome if
/// meas = 4^n, otherwise the first `meas` entries of a seeded permutation of
/// the outcomes, sorted.
inline MeasurementEnsemble make_ensemble(MeasurementKind kind, int qubits, int meas, std::uint64_t seed) {
  Rng rng = derive_stream(seed, detail::kEnsembleStream);
  if (kind == MeasurementKind::PauliExpectation) return select_observables(qubits, meas, rng);
  const std::uint64_t total = std::uint64_t{1} << (2 * qubits);
  std::vector<std::uint64_t> outcomes(total);
  std::iota(outcomes.begin(), outcomes.end(), std::uint64_t{0});
  if (static_cast<std::uint64_t>(meas) < total) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(meas); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, outcomes.size() - 1);
      std::swap(outcomes[i], outcomes[pick(rng)]);
    }
    outcomes.resize(static_cast<std::size_t>(meas));
    std::sort(outcomes.begin(), outcomes.end());
  }
  return pauli4_povm_subset(qubits, std::move(outcomes));
}

/// Empirical frequencies of the observed outcomes after n_avg shots of the
/// full POVM.
template <class Urbg>
RVector noisy_povm_measurement(const DensityMatrix& rho, const MeasurementEnsemble& full, const MeasurementEnsemble& observed,
                               std::uint64_t n_avg, Urbg& rng) {
  const RVector freq = sample_povm(povm_probabilities(rho, full), n_avg, rng);
  RVector b(observed.count());
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = freq(static_cast<Eigen::Index>(observed.indices()[static_cast<std::size_t>(i)]));
  return b;
}

struct Dataset {
  int qubits = 0;
  Eigen::Index dim = 0;
  Eigen::Index meas = 0;
  MeasurementKind kind = MeasurementKind::PauliExpectation;
  std::vector<std::uint64_t> ensemble_indices;
  int rank = 0;
  std::uint64_t n_avg = 0;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  std::vector<Sample> samples;  // train, then validation, then test

  MeasurementEnsemble ensemble() const { return ensemble_from_indices(kind, qubits, ensemble_indices); }

  std::span<const Sample> split(Split s) const {
    const std::span<const Sample> all(samples);
    switch (s) {
      case Split::Train: return all.subspan(0, n_train);
      case Split::Validation: return all.subspan(n_train, n_val);
      case Split::Test: return all.subspan(n_train + n_val, n_test);
    }
    return {};
  }

  void validate() const {
    if (n_train + n_val + n_test != samples.size()) throw DimensionError(detail::kTrain, "split sizes do not sum to the sample count");
    if (ensemble_indices.size() != static_cast<std::size_t>(meas)) throw DimensionError(detail::kTrain, "ensemble size does not match meas");
    if (dim != (Eigen::Index{1} << qubits)) throw DimensionError(detail::kTrain, "dimension does not match qubit count");
    for (const Sample& s : samples) {
      if (s.state.dim() != dim || s.b.size() != meas) throw DimensionError(detail::kTrain, "sample shape does not match the header");
    }
  }
};

/// Fully determined by config.seed: the ensemble uses stream 0 and sample i
/// uses its own stream, so the result does not depend on config.threads.
inline Dataset gen_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.qubits = cfg.qubits;
  ds.dim = Eigen::Index{1} << cfg.qubits;
  ds.kind = cfg.kind;
  ds.rank = cfg.rank;
  ds.n_avg = cfg.n_avg;
  ds.seed = cfg.seed;
  ds.n_train = cfg.sizes[0];
  ds.n_val = cfg.sizes[1];
  ds.n_test = cfg.sizes[2];
  const MeasurementEnsemble ens = make_ensemble(cfg.kind, cfg.qubits, cfg.meas, cfg.seed);
  ds.meas = ens.count();
  ds.ensemble_indices = ens.indices();
  const std::optional<MeasurementEnsemble> full =
      cfg.kind == MeasurementKind::Povm ? std::optional(pauli4_povm(cfg.qubits)) : std::nullopt;

  const std::size_t total = cfg.sizes[0] + cfg.sizes[1] + cfg.sizes[2];
  std::vector<std::optional<Sample>> slots(total);
  parallel_for(total, cfg.threads, [&](std::size_t i) {
    Rng rng = derive_stream(cfg.seed, detail::kSampleStream, i);
    DensityMatrix rho = random_rank_r_state(ds.dim, cfg.rank, rng);
    RVector b = full ? noisy_povm_measurement(rho, *full, ens, cfg.n_avg, rng) : measure_expectations(ens, rho);
    slots[i].emplace(Sample{std::move(rho), std::move(b)});
  });
  ds.samples.reserve(total);
  for (auto& s : slots) ds.samples.push_back(std::move(*s));
  return ds;
}

// ---------------------------------------------------------------------------
// ADAM

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ArgumentError(detail::kTrain, "learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ArgumentError(detail::kTrain, "betas must be in [0, 1)");
    if (!(eps > 0.0)) throw ArgumentError(detail::kTrain, "eps must be positive");
  }
};

struct AdamState {
  AdamConfig config;
  std::vector<double> first;   // m
  std::vector<double> second;  // v
  std::uint64_t step = 0;

  static AdamState zeros(std::size_t size, AdamConfig config = {}) {
    config.validate();
    return {config, std::vector<double>(size, 0.0), std::vector<double>(size, 0.0), 0};
  }
  static AdamState for_params(const NetworkParams& p, AdamConfig config = {}) { return zeros(p.flat_size(), config); }
};

/// One bias-corrected ADAM update in place.
inline void adam_step(AdamState& s, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || s.first.size() != params.size() || s.second.size() != params.size()) {
    throw DimensionError(detail::kTrain, "adam_step: parameter, gradient and moment sizes differ");
  }
  ++s.step;
  const AdamConfig& c = s.config;
  const double t = static_cast<double>(s.step);
  const double corr1 = 1.0 - std::pow(c.beta1, t);
  const double corr2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.first[i] = c.beta1 * s.first[i] + (1.0 - c.beta1) * grads[i];
    s.second[i] = c.beta2 * s.second[i] + (1.0 - c.beta2) * grads[i] * grads[i];
    params[i] -= c.lr * (s.first[i] / corr1) / (std::sqrt(s.second[i] / corr2) + c.eps);
  }
}

inline void adam_step(AdamState& s, NetworkParams& p, const Gradients& g) {
  if (g.weights.size() != p.weights.size() || g.step_sizes.size() != p.step_sizes.size() ||
      g.thresholds.size() != p.thresholds.size()) {
    throw DimensionError(detail::kTrain, "adam_step: gradient layout does not match the parameters");
  }
  for (std::size_t t = 0; t < p.weights.size(); ++t) {
    if (g.weights[t].rows() != p.weights[t].rows() || g.weights[t].cols() != p.weights[t].cols()) {
      throw DimensionError(detail::kTrain, "adam_step: weight gradient shape mismatch");
    }
  }
  std::vector<double> flat = to_flat(p);
  const std::vector<double> grad = to_flat(g);
  adam_step(s, std::span<double>(flat), std::span<const double>(grad));
  assign_flat(p, flat);
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalMetrics {
  std::size_t count = 0;
  double mean_fidelity = 0.0;
  double std_fidelity = 0.0;
  double mean_trace_distance = 0.0;
  double std_trace_distance = 0.0;
  double mean_rank = 0.0;
  std::optional<double> mean_classic_fidelity;
};

namespace detail {
inline std::pair<double, double> mean_and_population_std(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

/// Metrics for (target, estimate) pairs; classic fidelity over the full POVM
/// when `full_povm` is given.
inline EvalMetrics summarize(const std::vector<CMatrix>& targets, const std::vector<CMatrix>& estimates,
                             const MeasurementEnsemble* full_povm, std::size_t threads) {
  const std::size_t n = targets.size();
  std::vector<double> fid(n), td(n), rank(n), cf(n);
  parallel_for(n, threads, [&](std::size_t i) {
    fid[i] = fidelity(targets[i], estimates[i]);
    td[i] = trace_distance(targets[i], estimates[i]);
    rank[i] = rank_estimate(estimates[i]);
    if (full_povm) {
      const RVector p_true = povm_probabilities(DensityMatrix::from_matrix(targets[i]), *full_povm);
      const RVector p_est = povm_probabilities(DensityMatrix::from_matrix(estimates[i]), *full_povm);
      cf[i] = classic_fidelity(p_est / p_est.sum(), p_true / p_true.sum());
    }
  });
  EvalMetrics m;
  m.count = n;
  std::tie(m.mean_fidelity, m.std_fidelity) = mean_and_population_std(fid);
  std::tie(m.mean_trace_distance, m.std_trace_distance) = mean_and_population_std(td);
  m.mean_rank = std::accumulate(rank.begin(), rank.end(), 0.0) / static_cast<double>(n);
  if (full_povm) m.mean_classic_fidelity = std::accumulate(cf.begin(), cf.end(), 0.0) / static_cast<double>(n);
  return m;
}
}  // namespace detail

/// Mean / population std of fidelity and trace distance between targets and
/// network outputs, mean rank estimate, and (if `full_povm`) mean classic
/// fidelity of the outcome distributions.
inline EvalMetrics evaluate(const NetworkParams& p, std::span<const Sample> split, const MeasurementEnsemble* full_povm = nullptr,
                            std::size_t threads = 1) {
  if (split.empty()) throw ArgumentError(detail::kTrain, "cannot evaluate an empty split");
  std::vector<CMatrix> targets;
  targets.reserve(split.size());
  for (const Sample& s : split) targets.push_back(s.state.matrix());
  return detail::summarize(targets, predict_batch(p, split, threads), full_povm, threads);
}

// ---------------------------------------------------------------------------
// Training

enum class StopReason { MaxEpochs, EarlyStopped, NoEpochs };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxEpochs: return "max_epochs";
    case StopReason::EarlyStopped: return "early_stopped";
    case StopReason::NoEpochs: return "no_epochs";
  }
  return "unknown";
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean mini-batch loss; epoch 0: loss of the initial parameters
  double val_loss = 0.0;    // best validation evaluation within the epoch
};

struct TrainOptions {
  std::size_t batch_size = 1000;
  AdamConfig adam{};
  int max_epochs = 100;
  /// Evaluations without strict improvement before stopping; 0 disables.
  int patience = 50;
  /// Validate after every `val_stride` mini-batches and at each epoch end.
  int val_stride = 1;
  std::uint64_t seed = 7;
  std::size_t threads = 1;
  BackwardOptions backward{};
  std::function<void(const EpochRecord&)> on_epoch;

  void validate() const {
    if (batch_size < 1) throw ArgumentError(detail::kTrain, "batch_size must be at least 1");
    if (max_epochs < 0) throw ArgumentError(detail::kTrain, "max_epochs must be non-negative");
    if (patience < 0) throw ArgumentError(detail::kTrain, "patience must be non-negative");
    if (val_stride < 1) throw ArgumentError(detail::kTrain, "val_stride must be at least 1");
    adam.validate();
  }
};

struct TrainReport {
  std::vector<EpochRecord> curve;  // epoch 0 holds the initial parameters' losses
  double best_val_loss = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  std::uint64_t steps = 0;
  std::uint64_t evaluations = 0;
  StopReason stop = StopReason::NoEpochs;
  double seconds = 0.0;
  std::optional<EvalMetrics> test_metrics;
};

struct TrainResult {
  NetworkParams params;
  TrainReport report;
};

/// Mini-batch ADAM on the NMSE loss with validation-based early stopping.
/// Returns the parameters with the lowest validation loss seen, including the
/// initial ones.
inline TrainResult train_loop(NetworkParams params, const Dataset& data, const TrainOptions& opt) {
  opt.validate();
  params.validate();
  const auto train = data.split(Split::Train);
  const auto val = data.split(Split::Validation);
  if (train.empty() || val.empty()) throw ArgumentError(detail::kTrain, "training needs non-empty train and validation splits");
  if (data.dim != params.dim || data.meas != params.meas) {
    throw DimensionInconsistencyError(detail::kTrain, "dataset shape (d=" + std::to_string(data.dim) + ", m=" +
                                                          std::to_string(data.meas) + ") does not match the network (d=" +
                                                          std::to_string(params.dim) + ", m=" + std::to_string(params.meas) + ")");
  }
  const auto start = std::chrono::steady_clock::now();
  TrainResult out{params, {}};
  TrainReport& rep = out.report;
  if (opt.max_epochs == 0) {
    rep.stop = StopReason::NoEpochs;
    return out;
  }

  rep.best_val_loss = nmse_loss(params, val, opt.threads);
  rep.curve.push_back({0, nmse_loss(params, train, opt.threads), rep.best_val_loss});
  rep.evaluations = 1;
  int stale = 0;
  AdamState adam = AdamState::for_params(params, opt.adam);
  Rng shuffle_rng = derive_stream(opt.seed, detail::kShuffleStream);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Sample> batch;
  batch.reserve(std::min(opt.batch_size, train.size()));
  rep.stop = StopReason::MaxEpochs;

  for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    double epoch_val = std::numeric_limits<double>::infinity();
    bool stop = false;
    for (std::size_t begin = 0; begin < order.size() && !stop; begin += opt.batch_size) {
      const std::size_t end = std::min(order.size(), begin + opt.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(train[order[i]]);
      BackwardOptions bo = opt.backward;
      bo.threads = opt.threads;
      const LossAndGradients lg = backward(params, batch, bo);
      loss_sum += lg.loss;
      ++batches;
      adam_step(adam, params, lg.grads);
      ++rep.steps;
      const bool epoch_end = end == order.size();
      if (rep.steps % static_cast<std::uint64_t>(opt.val_stride) == 0 || epoch_end) {
        const double v = nmse_loss(params, val, opt.threads);
        ++rep.evaluations;
        epoch_val = std::min(epoch_val, v);
        if (v < rep.best_val_loss) {
          rep.best_val_loss = v;
          rep.best_epoch = epoch;
          out.params = params;
          stale = 0;
        } else if (opt.patience > 0 && ++stale >= opt.patience) {
          stop = true;
        }
      }
    }
    rep.curve.push_back({epoch, loss_sum / static_cast<double>(batches), epoch_val});
    if (opt.on_epoch) opt.on_epoch(rep.curve.back());
    if (stop) {
      rep.stop = StopReason::EarlyStopped;
      break;
    }
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---------------------------------------------------------------------------
// Bell-state study

/// Estimates of the Bell state from `repeats` independent n_avg-shot POVM
/// measurements, scored against the Bell state.
inline EvalMetrics evaluate_bell(const NetworkParams& p, const MeasurementEnsemble& observed, std::uint64_t n_avg, int repeats,
                                 std::uint64_t seed, std::size_t threads = 1) {
  if (observed.kind() != MeasurementKind::Povm || observed.dim() != 4) {
    throw ArgumentError(detail::kTrain, "Bell evaluation needs a two-qubit POVM ensemble");
  }
  if (p.dim != 4 || p.meas != observed.count()) throw DimensionInconsistencyError(detail::kTrain, "network does not match the Bell ensemble");
  if (repeats < 1 || n_avg < 1) throw ArgumentError(detail::kTrain, "repeats and n_avg must be positive");
  const MeasurementEnsemble full = pauli4_povm(2);
  const DensityMatrix bell = bell_state();
  Eigen::MatrixXd b(observed.count(), repeats);
  for (int r = 0; r < repeats; ++r) {
    Rng rng = derive_stream(seed, detail::kBellStream, static_cast<std::uint64_t>(r));
    b.col(r) = noisy_povm_measurement(bell, full, observed, n_avg, rng);
  }
  const std::vector<CMatrix> targets(static_cast<std::size_t>(repeats), bell.matrix());
  return detail::summarize(targets, predict_batch(p, b, threads), &full, threads);
}

inline TrainOptions bell_train_defaults() {
  TrainOptions o;
  o.batch_size = 50;
  o.max_epochs = 4000;
  return o;
}

struct BellExperimentConfig {
  int meas = 16;
  std::uint64_t n_avg = 1000;
  std::size_t n_train = 500;
  std::size_t n_val = 100;
  int layers = 3;
  TrainOptions train = bell_train_defaults();
  int repeats = 100;
  std::uint64_t seed = 7;
  std::size_t threads = 1;
};

struct BellExperimentResult {
  EvalMetrics metrics;
  TrainResult training;
};

/// Trains on rank-1 two-qubit states measured with n_avg-shot Pauli-4 POVM
/// frequencies, then estimates the Bell state `repeats` times.
inline BellExperimentResult bell_experiment(const BellExperimentConfig& cfg) {
  DatasetConfig dc;
  dc.qubits = 2;
  dc.rank = 1;
  dc.kind = MeasurementKind::Povm;
  dc.meas = cfg.meas;
  dc.n_avg = cfg.n_avg;
  dc.sizes = {cfg.n_train, cfg.n_val, 0};
  dc.seed = cfg.seed;
  dc.threads = cfg.threads;
  const Dataset ds = gen_dataset(dc);
  const MeasurementEnsemble ens = ds.ensemble();
  TrainOptions to = cfg.train;
  to.threads = cfg.threads;
  BellExperimentResult res{{}, train_loop(init_params(ens, cfg.layers), ds, to)};
  res.metrics = evaluate_bell(res.training.params, ens, cfg.n_avg, cfg.repeats, derive_stream(cfg.seed, detail::kBellStream)(),
                              cfg.threads);
  return res;
}

}  // namespace lqst
