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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion in the selected tier fails.
//
//   lqst_acceptance --tier property        criteria 1-5 (minutes)
//   lqst_acceptance --tier reproduction    criteria 6-11 (tens of minutes)
//   lqst_acceptance --tier all

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lqst/io.hpp"
#include "lqst/network.hpp"
#include "lqst/svt.hpp"
#include "lqst/train.hpp"
#include "test_util.hpp"

namespace {

using namespace lqst;
using lqst::test::frob_inner;
using lqst::test::random_matrix;
using lqst::test::random_vector;

struct Outcome {
  bool pass;
  std::string detail;
};

struct Budget {
  std::size_t threads = 1;
  int svt_trials = 100;
  int psd_trials = 500;
  std::size_t lqst_train = 50000;
  std::size_t lqst_val = 2000;
  std::size_t lqst_test = 2000;
  int lqst_epochs = 20;
  std::size_t lqst_batch = 100;
  double lqst_lr = 2e-4;
  int rank_svt_states = 200;
  int bell_epochs = 4000;
  std::uint64_t seed = 7;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Shared between criteria 6, 9 and 10.
std::optional<double> g_svt_mean_fidelity;

// ---------------------------------------------------------------------------
// Property tier

NetworkParams random_params(const MeasurementEnsemble& ens, int depth, Rng& rng, double noise, bool signed_thresholds) {
  NetworkParams p = init_params(ens, depth);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> step(0.05, 0.6);
  std::uniform_real_distribution<double> thr(signed_thresholds ? -0.5 : 0.025, 0.5);
  for (CMatrix& w : p.weights)
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] += noise * Complex(n(rng), n(rng));
  for (double& v : p.step_sizes) v = step(rng);
  for (double& v : p.thresholds) v = signed_thresholds ? thr(rng) : 0.5 * step(rng);
  return p;
}

std::vector<Sample> random_batch(const MeasurementEnsemble& ens, int count, int rank, Rng& rng) {
  std::vector<Sample> batch;
  for (int i = 0; i < count; ++i) {
    DensityMatrix rho = random_rank_r_state(ens.dim(), rank, rng);
    RVector b = measure_expectations(ens, rho);
    batch.push_back({std::move(rho), std::move(b)});
  }
  return batch;
}

Outcome physicality(const Budget& bud) {
  Rng rng = derive_stream(bud.seed, 101);
  const MeasurementEnsemble small = select_observables(2, 10, rng);
  const MeasurementEnsemble large = select_observables(4, 103, rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double scales[] = {1e-6, 1.0, 1e3};
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const MeasurementEnsemble& ens = k % 2 == 0 ? small : large;
    NetworkParams p = random_params(ens, 1 + k % 4, rng, 0.2, true);
    p.mu = k % 3 == 0 ? 1e-8 : 0.0;
    RVector b(ens.count());
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = u(rng);
    b *= scales[k % 3] / b.norm();
    const CMatrix x = forward(p, b).output.matrix();
    const double herm = (x - x.adjoint()).cwiseAbs().maxCoeff();
    const double tr = std::abs(x.trace() - Complex(1.0, 0.0));
    const double neg = std::max(0.0, -eigh(hermitize(x)).eigenvalues(0));
    worst = std::max({worst, herm, tr, neg});
  }
  return {worst <= 1e-8, "1000 passes, worst violation " + fmt("%.2e", worst) + " (limit 1e-8)"};
}

Outcome unrolling(const Budget& bud) {
  double worst = 0.0;
  for (int qubits : {2, 4}) {
    Rng rng = derive_stream(bud.seed, 102, static_cast<std::uint64_t>(qubits));
    const MeasurementEnsemble base = select_observables(qubits, qubits == 2 ? 10 : 103, rng);
    const DensityMatrix rho = random_rank_r_state(base.dim(), qubits == 2 ? 1 : 3, rng);
    const auto [ens, b] = with_trace_constraint(base, measure_expectations(base, rho));
    SvtConfig cfg;
    cfg.tau = 0.05;
    cfg.delta = 0.1;
    cfg.max_iters = 6;
    cfg.rel_tol = 1e-300;
    std::vector<CMatrix> iterates;
    run_svt(ens, b, cfg, [&](const SvtIterate& it) { iterates.push_back(it.estimate); });
    for (int depth : {1, 2, 5}) {
      NetworkParams p = init_params(ens, depth);
      std::fill(p.step_sizes.begin(), p.step_sizes.end(), cfg.delta);
      std::fill(p.thresholds.begin(), p.thresholds.end(), cfg.tau);
      // run_svt starts from y^0 = 0, so its first iterate is 0 and depth T
      // corresponds to iterate T + 1.
      const CMatrix& svt_x = iterates[static_cast<std::size_t>(depth)];
      if (svt_x.norm() == 0.0) return {false, "SVT iterate is zero; the comparison would be vacuous"};
      worst = std::max(worst, (forward(p, b).trace.x_temp - svt_x).norm());
    }
  }
  return {worst <= 1e-10, "T in {1,2,5}, d in {4,16}, worst ||X_temp - X_svt||_F " + fmt("%.2e", worst) + " (limit 1e-10)"};
}

Outcome gradients(const Budget& bud) {
  const double h = 1e-5;
  std::size_t bad = 0, total = 0;
  double worst = 0.0, largest = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng = derive_stream(bud.seed, 103, seed);
    const MeasurementEnsemble ens = select_observables(2, 10, rng);
    const NetworkParams p = random_params(ens, 3, rng, 0.3, false);
    const std::vector<Sample> batch = random_batch(ens, 4, 2, rng);
    const std::vector<double> flat = to_flat(p);
    const std::vector<double> grad = to_flat(backward(p, batch).grads);
    for (std::size_t i = 0; i < flat.size(); ++i) {
      std::vector<double> probe = flat;
      NetworkParams plus = p, minus = p;
      probe[i] = flat[i] + h;
      assign_flat(plus, probe);
      probe[i] = flat[i] - h;
      assign_flat(minus, probe);
      const double fd = (nmse_loss(plus, batch) - nmse_loss(minus, batch)) / (2 * h);
      const double err = std::abs(fd - grad[i]);
      largest = std::max(largest, std::abs(grad[i]));
      ++total;
      if (err > 1e-8) {
        const double rel = err / std::abs(fd);
        worst = std::max(worst, rel);
        if (rel > 1e-4) ++bad;
      }
    }
  }
  return {bad == 0 && largest > 0.0, std::to_string(total) + " components over 5 seeds, " + std::to_string(bad) +
                        " outside tolerance, worst relative error above the 1e-8 floor " + fmt("%.2e", worst) + " (limit 1e-4), largest |g| " +
                        fmt("%.2e", largest)};
}

Outcome adjoint_and_prox(const Budget& bud) {
  Rng rng = derive_stream(bud.seed, 104);
  const MeasurementEnsemble ens = select_observables(4, 103, rng);
  double worst_adj = 0.0;
  for (int k = 0; k < 200; ++k) {
    const CMatrix x = random_matrix(16, 16, rng);
    const CVector y = random_vector(103, rng);
    const Complex lhs = apply_map(ens, x).dot(y);
    const Complex rhs = frob_inner(x, apply_adjoint(ens, y));
    worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / (x.norm() * y.norm()));
  }
  int prox_fail = 0;
  std::uniform_real_distribution<double> tau_dist(0.1, 2.0), step(1e-4, 1e-2);
  for (int trial = 0; trial < 50; ++trial) {
    const CMatrix y = random_matrix(4, 4, rng);
    const double tau = tau_dist(rng);
    const auto objective = [&](const CMatrix& z) {
      return tau * Eigen::JacobiSVD<CMatrix>(z).singularValues().sum() + 0.5 * (z - y).squaredNorm();
    };
    const CMatrix z = shrink(y, tau);
    const double best = objective(z);
    for (int k = 0; k < 1000; ++k) {
      if (objective(z + random_matrix(4, 4, rng, step(rng))) < best - 1e-12) {
        ++prox_fail;
        break;
      }
    }
  }
  return {worst_adj <= 1e-10 && prox_fail == 0, "adjoint worst relative gap " + fmt("%.2e", worst_adj) +
                                                    " (limit 1e-10); prox beaten in " + std::to_string(prox_fail) + " of 50 problems"};
}

Outcome metric_oracles(const Budget& bud) {
  const double f = fidelity(bell_state(), maximally_mixed(4));
  const double t = trace_distance(bell_state(), maximally_mixed(4));
  Rng rng = derive_stream(bud.seed, 105);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  RVector p(16), q(16);
  for (Eigen::Index i = 0; i < 16; ++i) {
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
  const double cf = classic_fidelity(p, q);
  const bool pass = std::abs(f - 0.5) <= 1e-10 && std::abs(t - 0.75) <= 1e-10 && std::abs(cf - mean) <= 3 * se;
  std::ostringstream os;
  os.precision(12);
  os << "F(Bell, I/4) = " << f << ", T(Bell, I/4) = " << t << "; classic fidelity " << cf << " vs sampled " << mean
     << " (3 SE = " << 3 * se << ")";
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// Reproduction tier

Outcome svt_convergence(const Budget& bud) {
  SvtExperiment exp;
  exp.threads = bud.threads;
  SvtConfig cfg;
  cfg.tau = 2.0;
  cfg.delta = 0.1;
  const SvtSweepRow row = svt_cell(exp, 3, cfg, bud.svt_trials, bud.seed);
  if (row.diverged) return {false, "a trial diverged"};
  g_svt_mean_fidelity = row.mean_fidelity;
  const bool pass = row.mean_fidelity >= 0.845 && row.mean_fidelity <= 0.905 && row.mean_iterations >= 800 &&
                    row.mean_iterations <= 3300;
  return {pass, std::to_string(bud.svt_trials) + " trials: mean fidelity " + fmt("%.4f", row.mean_fidelity) +
                    " (band [0.845, 0.905], reference 0.8751), mean iterations " + fmt("%.0f", row.mean_iterations) +
                    " (band [800, 3300], reference 1632)"};
}

Outcome svt_divergence(const Budget& bud) {
  SvtExperiment exp;
  exp.threads = bud.threads;
  std::vector<std::string> missed;
  int cells = 0;
  auto check = [&](int rank, double tau, double delta) {
    SvtConfig cfg;
    cfg.tau = tau;
    cfg.delta = delta;
    ++cells;
    if (!svt_cell(exp, rank, cfg, 5, bud.seed).diverged) {
      missed.push_back("(r=" + std::to_string(rank) + ", tau=" + fmt("%g", tau) + ", delta=" + fmt("%g", delta) + ")");
    }
  };
  for (int rank : {3, 4, 5}) {
    for (double tau : {2.0, 4.0, 6.0, 8.0, 10.0, 80.0}) check(rank, tau, 2.982);
    check(rank, 2.0, 0.5);
  }
  std::string detail = std::to_string(cells - static_cast<int>(missed.size())) + " of " + std::to_string(cells) +
                       " cells report diverged (5 trials each)";
  for (const std::string& m : missed) detail += "; not diverged " + m;
  return {missed.empty(), detail};
}

Outcome psd_prob(const Budget& bud) {
  SvtExperiment exp;
  exp.threads = bud.threads;
  const double p = psd_probability(2.0, 0.1, bud.psd_trials, bud.seed, exp);
  return {p >= 0.92 && p <= 1.0, std::to_string(bud.psd_trials) + " trials: P(PSD) " + fmt("%.4f", p) +
                                     " (band [0.92, 1.0], reference 0.965)"};
}

struct LqstRun {
  Dataset data;
  NetworkParams params;
  EvalMetrics test;
  TrainReport report;
};

std::optional<LqstRun> g_lqst;

const LqstRun& lqst_run(const Budget& bud) {
  if (g_lqst) return *g_lqst;
  DatasetConfig dc;
  dc.qubits = 4;
  dc.rank = 3;
  dc.meas = 103;
  dc.sizes = {bud.lqst_train, bud.lqst_val, bud.lqst_test};
  dc.seed = bud.seed;
  dc.threads = bud.threads;
  LqstRun run{gen_dataset(dc), {}, {}, {}};
  TrainOptions to;
  to.batch_size = bud.lqst_batch;
  to.adam.lr = bud.lqst_lr;
  to.max_epochs = bud.lqst_epochs;
  to.val_stride = 1 << 30;  // validate at epoch ends
  to.patience = 3;  // epochs, since validation runs at epoch ends
  to.seed = bud.seed;
  to.threads = bud.threads;
  const auto start = std::chrono::steady_clock::now();
  to.on_epoch = [&](const EpochRecord& r) {
    std::fprintf(stderr, "  [lqst] epoch %d train %.4e val %.4e (%.0fs)\n", r.epoch, r.train_loss, r.val_loss,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  };
  TrainResult tr = train_loop(init_params(run.data.ensemble(), 3), run.data, to);
  run.params = std::move(tr.params);
  run.report = std::move(tr.report);
  run.test = evaluate(run.params, run.data.split(Split::Test), nullptr, bud.threads);
  g_lqst = std::move(run);
  return *g_lqst;
}

Outcome lqst_vs_svt(const Budget& bud) {
  const LqstRun& run = lqst_run(bud);
  if (!g_svt_mean_fidelity) svt_convergence(bud);
  const double svt = g_svt_mean_fidelity.value_or(1.0);
  const double f = run.test.mean_fidelity;
  return {f >= 0.89 && f > svt,
          "T=3, " + std::to_string(bud.lqst_train) + "/" + std::to_string(bud.lqst_val) + "/" + std::to_string(bud.lqst_test) +
              " samples, " + std::to_string(run.report.curve.size() - 1) + " epochs: test fidelity " + fmt("%.4f", f) + " +/- " +
              fmt("%.4f", run.test.std_fidelity) + " (need >= 0.89 and > SVT " + fmt("%.4f", svt) + "; reference 0.9171)"};
}

Outcome rank_estimates(const Budget& bud) {
  const LqstRun& run = lqst_run(bud);
  const auto test = run.data.split(Split::Test);
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(bud.rank_svt_states), test.size());
  const MeasurementEnsemble ens = run.data.ensemble();
  const std::vector<CMatrix> est = predict_batch(run.params, test.subspan(0, n), bud.threads);
  std::vector<double> svt_rank(n, 0.0);
  std::vector<int> diverged(n, 0);
  SvtConfig cfg;
  cfg.tau = 2.0;
  cfg.delta = 0.1;
  parallel_for(n, bud.threads, [&](std::size_t i) {
    const auto [full, b] = with_trace_constraint(ens, test[i].b);
    const SvtResult r = run_svt(full, b, cfg);
    diverged[i] = r.status == SvtStatus::Diverged;
    svt_rank[i] = rank_estimate(r.estimate);
  });
  // Diagnostic only: how many LQST eigenvalues carry real weight.
  double lqst_mean = 0.0, svt_mean = 0.0, lqst_coarse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lqst_mean += rank_estimate(est[i]);
    lqst_coarse += rank_estimate(est[i], 1e-3);
    svt_mean += svt_rank[i];
  }
  lqst_coarse /= static_cast<double>(n);
  lqst_mean /= static_cast<double>(n);
  svt_mean /= static_cast<double>(n);
  const int div = std::accumulate(diverged.begin(), diverged.end(), 0);
  const bool pass = div == 0 && lqst_mean >= 3.0 && lqst_mean <= 5.5 && lqst_mean < svt_mean;
  return {pass, std::to_string(n) + " shared test states: LQST mean rank " + fmt("%.3f", lqst_mean) +
                    " (band [3.0, 5.5], reference 4.255), SVT mean rank " + fmt("%.3f", svt_mean) + " (reference 7.112); LQST eigenvalues above 1e-3: " + fmt("%.3f", lqst_coarse) +
                    (div ? "; " + std::to_string(div) + " SVT runs diverged" : "")};
}

Outcome bell(const Budget& bud) {
  auto run = [&](int m, std::uint64_t n_avg) {
    BellExperimentConfig c;
    c.meas = m;
    c.n_avg = n_avg;
    c.train.max_epochs = bud.bell_epochs;
    c.train.patience = 0;
    c.train.val_stride = 10;  // once per epoch: 500 samples in batches of 50
    c.seed = bud.seed;
    c.threads = bud.threads;
    const EvalMetrics m_ = bell_experiment(c).metrics;
    std::fprintf(stderr, "  [bell] m=%d N_avg=%llu fidelity %.4f classic %.4f\n", m, static_cast<unsigned long long>(n_avg),
                 m_.mean_fidelity, m_.mean_classic_fidelity.value_or(-1));
    return m_;
  };
  const EvalMetrics full = run(16, 1000);
  const EvalMetrics partial = run(10, 1000);
  const EvalMetrics low = run(16, 200);
  const EvalMetrics high = run(16, 5000);
  const double cf = full.mean_classic_fidelity.value_or(0.0);
  const bool pass = full.mean_fidelity >= 0.95 && cf >= 0.99 && partial.mean_fidelity >= 0.88 && partial.mean_fidelity <= 0.95 &&
                    high.mean_fidelity > low.mean_fidelity;
  return {pass, "m=16: fidelity " + fmt("%.4f", full.mean_fidelity) + " (>= 0.95, reference 0.9774), classic " + fmt("%.4f", cf) +
                    " (>= 0.99, reference 0.9973); m=10: fidelity " + fmt("%.4f", partial.mean_fidelity) +
                    " (band [0.88, 0.95], reference 0.9176); N_avg 5000 vs 200: " + fmt("%.4f", high.mean_fidelity) + " vs " +
                    fmt("%.4f", low.mean_fidelity)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LQST acceptance suite"};
  std::string tier = "all";
  std::vector<int> only;
  Budget bud;
  bud.threads = lqst::default_thread_count();
  app.add_option("--tier", tier)->check(CLI::IsMember({"property", "reproduction", "all"}))->capture_default_str();
  app.add_option("--criteria", only, "Run only these criteria")->delimiter(',')->check(CLI::Range(1, 11));
  app.add_option("--threads", bud.threads);
  app.add_option("--svt-trials", bud.svt_trials)->check(CLI::Range(100, 1000000))->capture_default_str();
  app.add_option("--psd-trials", bud.psd_trials)->check(CLI::Range(500, 1000000))->capture_default_str();
  app.add_option("--lqst-train", bud.lqst_train)->check(CLI::Range(10000, 1000000))->capture_default_str();
  app.add_option("--lqst-epochs", bud.lqst_epochs)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--lqst-batch", bud.lqst_batch)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--lqst-lr", bud.lqst_lr)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--rank-states", bud.rank_svt_states)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--bell-epochs", bud.bell_epochs)->check(CLI::Range(1, 4000))->capture_default_str();
  app.add_option("--seed", bud.seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    const char* title;
    bool property;
    std::function<Outcome(const Budget&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "physicality", true, physicality},
      {2, "unrolling identity", true, unrolling},
      {3, "gradient check", true, gradients},
      {4, "adjoint and prox oracles", true, adjoint_and_prox},
      {5, "metric oracles", true, metric_oracles},
      {6, "SVT convergence", false, svt_convergence},
      {7, "SVT divergence", false, svt_divergence},
      {8, "PSD probability", false, psd_prob},
      {9, "LQST vs SVT", false, lqst_vs_svt},
      {10, "rank estimates", false, rank_estimates},
      {11, "Bell experiment", false, bell},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    if ((tier == "property" && !c.property) || (tier == "reproduction" && c.property)) continue;
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(bud);
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
