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

// lqst: dataset generation, SVT sweeps, training, evaluation and report
// merging. Exit codes: 0 success, 1 library contract or I/O error, CLI11's
// codes (nonzero) for usage errors.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lqst/io.hpp"
#include "lqst/network.hpp"
#include "lqst/svt.hpp"
#include "lqst/train.hpp"

#ifndef LQST_VERSION
#define LQST_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using lqst::Json;

namespace {

// ---------------------------------------------------------------------------
// Output helpers

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw lqst::IoError("cli", "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw lqst::IoError("cli", "write to '" + path.string() + "' failed");
}

/// Writes `text` to `path`, or stdout when path is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_text(path, text);
  }
}

fs::path manifest_path_for(const std::string& artifact) { return artifact + ".manifest.json"; }

/// Run manifest: command, resolved configuration, seed, artifacts, timing.
class Manifest {
 public:
  Manifest(std::string command, std::uint64_t seed)
      : command_(std::move(command)), seed_(seed), started_(utc_now()), t0_(std::chrono::steady_clock::now()) {}

  Json config = Json::object();
  Json artifacts = Json::object();

  void write(const fs::path& path) const {
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    const Json doc = {{"tool", "lqst"},
                      {"tool_version", LQST_VERSION},
                      {"command", command_},
                      {"config", config},
                      {"seed", seed_},
                      {"artifacts", artifacts},
                      {"started_at", started_},
                      {"duration_seconds", seconds}};
    write_text(path, doc.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::uint64_t seed_;
  std::string started_;
  std::chrono::steady_clock::time_point t0_;
};

std::size_t resolve_threads(std::size_t flag) { return flag > 0 ? flag : lqst::default_thread_count(); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataArgs {
  int qubits = 0;
  int rank = 0;
  int meas = 0;
  std::string povm;
  std::uint64_t n_avg = 0;
  std::vector<std::size_t> sizes;
  std::uint64_t seed = 7;
  std::string out;
  std::size_t threads = 0;
};

void run_gen_data(const GenDataArgs& a, const CLI::App& cmd) {
  if (a.sizes.size() != 3) throw CLI::ValidationError("--sizes", "expects three comma-separated counts train,val,test");
  lqst::DatasetConfig cfg;
  cfg.qubits = a.qubits;
  cfg.rank = a.rank;
  cfg.sizes = {a.sizes[0], a.sizes[1], a.sizes[2]};
  cfg.seed = a.seed;
  cfg.threads = resolve_threads(a.threads);
  if (!a.povm.empty()) {
    if (cmd.count("--n-avg") == 0) throw CLI::RequiredError("--n-avg is required with --povm");
    cfg.kind = lqst::MeasurementKind::Povm;
    cfg.meas = cmd.count("--meas") ? a.meas : (1 << (2 * a.qubits));
    cfg.n_avg = a.n_avg;
  } else {
    if (cmd.count("--meas") == 0) throw CLI::RequiredError("--meas (or --povm pauli4)");
    if (cmd.count("--n-avg")) throw CLI::ValidationError("--n-avg", "only valid with --povm");
    cfg.meas = a.meas;
  }
  Manifest man("gen-data", a.seed);
  const lqst::Dataset ds = lqst::gen_dataset(cfg);
  lqst::save_dataset(ds, a.out);
  man.config = {{"qubits", a.qubits},   {"rank", a.rank},       {"kind", lqst::to_string(cfg.kind)},
                {"meas", cfg.meas},     {"n_avg", cfg.n_avg},   {"sizes", a.sizes},
                {"threads", cfg.threads}};
  man.artifacts = {{"dataset", a.out}};
  man.write(manifest_path_for(a.out));
  std::cerr << "wrote " << a.out << " (" << ds.samples.size() << " samples, d=" << ds.dim << ", m=" << ds.meas << ")\n";
}

// ---------------------------------------------------------------------------
// svt

struct SvtArgs {
  std::vector<int> ranks{3};
  std::vector<double> taus{2.0};
  std::vector<double> deltas{0.1};
  int trials = 0;
  bool psd_prob = false;
  double tau = 2.0;
  double delta = 0.1;
  int qubits = 4;
  int meas = 103;
  int max_iters = 20000;
  bool no_trace_row = false;
  bool quick = false;
  std::uint64_t seed = 7;
  std::string out;
  std::size_t threads = 0;
};

void run_svt(const SvtArgs& a) {
  lqst::SvtExperiment exp;
  exp.qubits = a.qubits;
  exp.meas = a.meas;
  exp.trace_constraint = !a.no_trace_row;
  exp.threads = resolve_threads(a.threads);
  lqst::SvtConfig base;
  base.max_iters = a.max_iters;
  Manifest man(a.psd_prob ? "svt --psd-prob" : "svt", a.seed);
  man.config = {{"qubits", a.qubits}, {"meas", a.meas}, {"max_iters", a.max_iters}, {"trace_constraint", exp.trace_constraint},
                {"threads", exp.threads}, {"quick", a.quick}};

  if (a.psd_prob) {
    const int trials = a.trials > 0 ? a.trials : (a.quick ? 50 : 1000);
    base.tau = a.tau;
    base.delta = a.delta;
    const lqst::SvtSweepRow row = lqst::svt_cell(exp, 3, base, trials, a.seed);
    man.config.update({{"tau", a.tau}, {"delta", a.delta}, {"trials", trials}, {"rank", 3}});
    std::cout << num(row.psd_probability) << "\n";
    if (!a.out.empty()) {
      const Json doc = {{"command", "svt --psd-prob"}, {"manifest", manifest_path_for(a.out).string()},
                        {"tau", a.tau},                {"delta", a.delta},
                        {"rank", 3},                   {"trials", trials},
                        {"diverged", row.diverged},    {"psd_probability", row.psd_probability}};
      write_text(a.out, doc.dump(2) + "\n");
      man.artifacts = {{"report", a.out}};
      man.write(manifest_path_for(a.out));
    }
    return;
  }

  const int trials = a.trials > 0 ? a.trials : (a.quick ? 20 : 10000);
  const auto rows = lqst::tune_sweep(a.ranks, a.taus, a.deltas, trials, a.seed, exp, base);
  std::string csv =
      "rank,tau,delta,mean_iters,mean_fidelity,std_fidelity,mean_trace_distance,std_trace_distance,psd_probability,"
      "mean_rank,diverged,trials\n";
  for (const auto& r : rows) {
    csv += std::to_string(r.rank) + "," + num(r.tau) + "," + num(r.delta) + "," + num(r.mean_iterations) + "," +
           num(r.mean_fidelity) + "," + num(r.std_fidelity) + "," + num(r.mean_trace_distance) + "," +
           num(r.std_trace_distance) + "," + num(r.psd_probability) + "," + num(r.mean_rank) + "," +
           (r.diverged ? "-1" : "0") + "," + std::to_string(r.trials) + "\n";
  }
  emit(a.out, csv);
  man.config.update({{"ranks", a.ranks}, {"taus", a.taus}, {"deltas", a.deltas}, {"trials", trials}});
  if (!a.out.empty()) {
    man.artifacts = {{"report", a.out}};
    man.write(manifest_path_for(a.out));
  }
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
  int layers = 3;
  std::size_t batch = 1000;
  double lr = 1e-4;
  double mu = 0.0;
  double epsilon = 1e-8;
  double init_step = 0.01;
  int patience = 50;
  int max_epochs = 100;
  int val_stride = 1;
  std::uint64_t seed = 7;
  std::string out;
  std::string report;
  std::string curve;
  bool quiet = false;
  std::size_t threads = 0;
};

void run_train(const TrainArgs& a, const CLI::App& cmd) {
  Manifest man("train", a.seed);
  const lqst::Dataset ds = lqst::load_dataset(a.data);
  const lqst::MeasurementEnsemble ens = ds.ensemble();
  const auto [mu_default, eps_default] = lqst::default_stabilizers(ds.kind);
  const double mu = cmd.count("--mu") ? a.mu : mu_default;
  const double eps = cmd.count("--epsilon") ? a.epsilon : eps_default;
  const double step = a.init_step;

  lqst::TrainOptions opt;
  opt.batch_size = a.batch;
  opt.adam.lr = a.lr;
  opt.max_epochs = a.max_epochs;
  opt.patience = a.patience;
  opt.val_stride = a.val_stride;
  opt.seed = a.seed;
  opt.threads = resolve_threads(a.threads);
  if (!a.quiet) {
    opt.on_epoch = [](const lqst::EpochRecord& r) {
      std::fprintf(stderr, "epoch %d train %.6e val %.6e\n", r.epoch, r.train_loss, r.val_loss);
    };
  }
  lqst::TrainResult res = lqst::train_loop(lqst::init_params(ens, a.layers, mu, eps, step), ds, opt);
  if (ds.n_test > 0) {
    const lqst::MeasurementEnsemble* povm = nullptr;
    std::optional<lqst::MeasurementEnsemble> full_povm;
    if (ds.kind == lqst::MeasurementKind::Povm) {
      full_povm = lqst::pauli4_povm(ds.qubits);
      povm = &*full_povm;
    }
    res.report.test_metrics = lqst::evaluate(res.params, ds.split(lqst::Split::Test), povm, opt.threads);
  }

  lqst::CheckpointMeta meta = lqst::checkpoint_meta_for(ds);
  meta.extra = {{"dataset", a.data}, {"train_seed", a.seed}, {"best_epoch", res.report.best_epoch},
                {"best_val_loss", res.report.best_val_loss}};
  lqst::save_checkpoint(res.params, meta, a.out);

  const std::string report = a.report.empty() ? a.out + ".report.json" : a.report;
  const std::string curve = a.curve.empty() ? a.out + ".curve.csv" : a.curve;
  const Json doc = {{"command", "train"},
                    {"manifest", manifest_path_for(a.out).string()},
                    {"dataset", a.data},
                    {"checkpoint", a.out},
                    {"layers", a.layers},
                    {"rank", ds.rank},
                    {"report", lqst::to_json(res.report)}};
  write_text(report, doc.dump(2) + "\n");
  std::string csv = "epoch,train_loss,val_loss\n";
  for (const auto& e : res.report.curve) csv += std::to_string(e.epoch) + "," + num(e.train_loss) + "," + num(e.val_loss) + "\n";
  write_text(curve, csv);

  man.config = {{"data", a.data},         {"layers", a.layers},       {"batch", a.batch},
                {"lr", a.lr},             {"mu", mu},                 {"epsilon", eps},
                {"init_step", step},      {"patience", a.patience},   {"max_epochs", a.max_epochs},
                {"val_stride", a.val_stride}, {"threads", opt.threads}};
  man.artifacts = {{"dataset", a.data}, {"checkpoint", a.out}, {"report", report}, {"curve", curve}};
  man.write(manifest_path_for(a.out));
  std::cerr << "best validation loss " << res.report.best_val_loss << " at epoch " << res.report.best_epoch << " ("
            << lqst::to_string(res.report.stop) << ")\n";
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string split = "test";
  bool bell = false;
  int m = 16;
  std::uint64_t n_avg = 1000;
  int repeats = 0;
  std::string sweep;
  // training flags for sweeps without a checkpoint
  int layers = 3;
  std::size_t batch = 50;
  double lr = 1e-4;
  int max_epochs = 4000;
  int patience = 50;
  int val_stride = 1;
  std::size_t n_train = 500;
  std::size_t n_val = 100;
  bool quick = false;
  std::uint64_t seed = 7;
  std::string out;
  std::size_t threads = 0;
};

std::string metrics_csv_header() {
  return "mean_fidelity,std_fidelity,mean_trace_distance,std_trace_distance,mean_rank,mean_classic_fidelity,count";
}

std::string metrics_csv_cells(const lqst::EvalMetrics& m) {
  return num(m.mean_fidelity) + "," + num(m.std_fidelity) + "," + num(m.mean_trace_distance) + "," +
         num(m.std_trace_distance) + "," + num(m.mean_rank) + "," +
         (m.mean_classic_fidelity ? num(*m.mean_classic_fidelity) : std::string()) + "," + std::to_string(m.count);
}

void emit_metrics(const std::string& out, const Json& doc, const lqst::EvalMetrics& m) {
  if (!out.empty() && fs::path(out).extension() == ".csv") {
    emit(out, metrics_csv_header() + "\n" + metrics_csv_cells(m) + "\n");
  } else {
    emit(out, doc.dump(2) + "\n");
  }
}

void run_eval(const EvalArgs& a, const CLI::App& cmd) {
  Manifest man(a.bell ? (a.sweep.empty() ? "eval --bell" : "eval --bell --sweep") : "eval", a.seed);
  const std::size_t threads = resolve_threads(a.threads);
  const int repeats = a.repeats > 0 ? a.repeats : (a.quick ? 10 : 100);
  man.config = {{"threads", threads}, {"repeats", repeats}};

  if (!a.bell) {
    if (a.ckpt.empty() || a.data.empty()) throw CLI::RequiredError("--ckpt and --data (or --bell)");
    if (!a.sweep.empty()) throw CLI::ValidationError("--sweep", "only valid with --bell");
    const lqst::Dataset ds = lqst::load_dataset(a.data);
    const lqst::MeasurementEnsemble ens = ds.ensemble();
    const lqst::Checkpoint ck = lqst::load_checkpoint(a.ckpt, ens);
    const lqst::Split split = lqst::parse_split(a.split);
    std::optional<lqst::MeasurementEnsemble> full;
    if (ds.kind == lqst::MeasurementKind::Povm) full = lqst::pauli4_povm(ds.qubits);
    const lqst::EvalMetrics m = lqst::evaluate(ck.params, ds.split(split), full ? &*full : nullptr, threads);
    const Json doc = {{"command", "eval"},       {"manifest", a.out.empty() ? Json(nullptr) : Json(manifest_path_for(a.out).string())},
                      {"checkpoint", a.ckpt},   {"dataset", a.data},
                      {"split", lqst::to_string(split)}, {"layers", ck.params.depth},
                      {"rank", ds.rank},        {"metrics", lqst::to_json(m)}};
    emit_metrics(a.out, doc, m);
    man.config.update({{"split", lqst::to_string(split)}});
    man.artifacts = {{"checkpoint", a.ckpt}, {"dataset", a.data}};
    if (!a.out.empty()) {
      man.artifacts["report"] = a.out;
      man.write(manifest_path_for(a.out));
    }
    return;
  }

  if (a.sweep.empty()) {
    if (a.ckpt.empty()) throw CLI::RequiredError("--ckpt (or --sweep)");
    const lqst::Checkpoint ck = lqst::load_checkpoint(a.ckpt);
    const lqst::MeasurementEnsemble ens = ck.ensemble();
    if (cmd.count("--m") && a.m != ens.count()) {
      throw lqst::DimensionInconsistencyError("cli", "--m " + std::to_string(a.m) + " does not match the checkpoint's " +
                                                         std::to_string(ens.count()) + " outcomes");
    }
    const lqst::EvalMetrics m = lqst::evaluate_bell(ck.params, ens, a.n_avg, repeats, a.seed, threads);
    const Json doc = {{"command", "eval --bell"}, {"manifest", a.out.empty() ? Json(nullptr) : Json(manifest_path_for(a.out).string())},
                      {"checkpoint", a.ckpt},    {"m", ens.count()},
                      {"n_avg", a.n_avg},        {"repeats", repeats},
                      {"layers", ck.params.depth}, {"metrics", lqst::to_json(m)}};
    emit_metrics(a.out, doc, m);
    man.config.update({{"m", ens.count()}, {"n_avg", a.n_avg}});
    man.artifacts = {{"checkpoint", a.ckpt}};
    if (!a.out.empty()) {
      man.artifacts["report"] = a.out;
      man.write(manifest_path_for(a.out));
    }
    return;
  }

  // --sweep key=v1,v2,...
  const auto eq = a.sweep.find('=');
  const std::string key = eq == std::string::npos ? "" : a.sweep.substr(0, eq);
  if (key != "n-avg" && key != "m") throw CLI::ValidationError("--sweep", "expects n-avg=<list> or m=<list>");
  std::vector<std::uint64_t> values;
  for (const std::string& v : split_csv_line(a.sweep.substr(eq + 1))) {
    try {
      std::size_t used = 0;
      const long long x = std::stoll(v, &used);
      if (used != v.size() || x < 1) throw std::invalid_argument(v);
      values.push_back(static_cast<std::uint64_t>(x));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--sweep", "'" + v + "' is not a positive integer");
    }
  }
  if (values.empty()) throw CLI::ValidationError("--sweep", "empty value list");

  std::optional<lqst::Checkpoint> ck;
  if (!a.ckpt.empty()) {
    if (key == "m") throw CLI::ValidationError("--sweep", "an m sweep retrains per value and cannot use --ckpt");
    ck = lqst::load_checkpoint(a.ckpt);
  }
  std::string csv = "sweep,value,m,n_avg,trained," + metrics_csv_header() + "\n";
  for (std::uint64_t v : values) {
    const int m = key == "m" ? static_cast<int>(v) : a.m;
    const std::uint64_t n_avg = key == "n-avg" ? v : a.n_avg;
    lqst::EvalMetrics metrics;
    if (ck) {
      metrics = lqst::evaluate_bell(ck->params, ck->ensemble(), n_avg, repeats, a.seed, threads);
    } else {
      lqst::BellExperimentConfig bc;
      bc.meas = m;
      bc.n_avg = n_avg;
      bc.n_train = a.n_train;
      bc.n_val = a.n_val;
      bc.layers = a.layers;
      bc.train.batch_size = a.batch;
      bc.train.adam.lr = a.lr;
      bc.train.max_epochs = cmd.count("--max-epochs") ? a.max_epochs : (a.quick ? 100 : a.max_epochs);
      bc.train.patience = a.patience;
      bc.train.val_stride = a.val_stride;
      bc.train.seed = a.seed;
      bc.repeats = repeats;
      bc.seed = a.seed;
      bc.threads = threads;
      metrics = lqst::bell_experiment(bc).metrics;
    }
    csv += key + "," + std::to_string(v) + "," + std::to_string(ck ? ck->params.meas : m) + "," + std::to_string(n_avg) +
           "," + (ck ? "0" : "1") + "," + metrics_csv_cells(metrics) + "\n";
    std::cerr << key << "=" << v << " fidelity " << metrics.mean_fidelity << "\n";
  }
  emit(a.out, csv);
  man.config.update({{"sweep", a.sweep}, {"m", a.m}, {"n_avg", a.n_avg}, {"layers", a.layers}, {"batch", a.batch},
                     {"lr", a.lr}, {"max_epochs", a.max_epochs}, {"patience", a.patience}, {"n_train", a.n_train},
                     {"n_val", a.n_val}, {"quick", a.quick}});
  if (ck) man.artifacts["checkpoint"] = a.ckpt;
  if (!a.out.empty()) {
    man.artifacts["report"] = a.out;
    man.write(manifest_path_for(a.out));
  }
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string svt;
  std::vector<std::string> evals;
  int rank = 3;
  double tau = 2.0;
  double delta = 0.1;
  std::string out;
};

void run_report(const ReportArgs& a) {
  if (a.evals.empty()) throw CLI::RequiredError("--eval");
  std::ifstream in(a.svt);
  if (!in) throw lqst::IoError("cli", "cannot open '" + a.svt + "'");
  std::string line;
  std::getline(in, line);
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"rank", "tau", "delta", "mean_iters", "mean_fidelity", "std_fidelity", "mean_trace_distance",
                           "std_trace_distance"}) {
    if (!col.count(need)) throw lqst::MalformedFileError("cli", "'" + a.svt + "' lacks column " + need);
  }
  std::vector<std::string> svt_row;
  while (std::getline(in, line)) {
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw lqst::MalformedFileError("cli", "'" + a.svt + "' has a ragged row");
    if (std::stoi(cells[col["rank"]]) == a.rank && std::stod(cells[col["tau"]]) == a.tau &&
        std::stod(cells[col["delta"]]) == a.delta) {
      svt_row = cells;
      break;
    }
  }
  if (svt_row.empty()) {
    throw lqst::ArgumentError("cli", "no SVT row for rank " + std::to_string(a.rank) + ", tau " + num(a.tau) + ", delta " + num(a.delta));
  }

  std::map<int, lqst::Json> by_layers;
  for (const std::string& path : a.evals) {
    std::ifstream f(path);
    if (!f) throw lqst::IoError("cli", "cannot open '" + path + "'");
    Json doc;
    try {
      doc = Json::parse(f);
      const int t = doc.at("layers").get<int>();
      if (by_layers.count(t)) throw CLI::ValidationError("--eval", "two reports for T=" + std::to_string(t));
      by_layers[t] = doc.at("metrics");
    } catch (const Json::exception& e) {
      throw lqst::MalformedFileError("cli", "'" + path + "' is not an eval report: " + e.what());
    }
  }

  std::string head = "stat,rank,svt_iterations,svt_fidelity,svt_trace_distance";
  std::string mean = "mean," + std::to_string(a.rank) + "," + svt_row[col["mean_iters"]] + "," + svt_row[col["mean_fidelity"]] +
                     "," + svt_row[col["mean_trace_distance"]];
  std::string sd = "std," + std::to_string(a.rank) + ",," + svt_row[col["std_fidelity"]] + "," + svt_row[col["std_trace_distance"]];
  for (const auto& [t, m] : by_layers) {
    const std::string p = "lqst_t" + std::to_string(t);
    head += "," + p + "_fidelity," + p + "_trace_distance";
    mean += "," + num(m.at("mean_fidelity").get<double>()) + "," + num(m.at("mean_trace_distance").get<double>());
    sd += "," + num(m.at("std_fidelity").get<double>()) + "," + num(m.at("std_trace_distance").get<double>());
  }
  emit(a.out, head + "\n" + mean + "\n" + sd + "\n");
  if (!a.out.empty()) {
    Manifest man("report", 0);
    man.config = {{"rank", a.rank}, {"tau", a.tau}, {"delta", a.delta}};
    man.artifacts = {{"svt", a.svt}, {"evals", a.evals}, {"report", a.out}};
    man.write(manifest_path_for(a.out));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned quantum state tomography: datasets, SVT baselines, training and evaluation", "lqst"};
  app.set_version_flag("--version", LQST_VERSION);
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen = app.add_subcommand("gen-data", "Generate a random-state dataset");
  gen->add_option("--qubits", gd.qubits, "Number of qubits")->required()->check(CLI::Range(1, 6));
  gen->add_option("--rank", gd.rank, "Rank of the random states")->required()->check(CLI::PositiveNumber);
  gen->add_option("--meas", gd.meas, "Pauli observables, or observed POVM outcomes with --povm")->check(CLI::PositiveNumber);
  gen->add_option("--povm", gd.povm, "Use noisy POVM frequencies")->check(CLI::IsMember({"pauli4"}));
  gen->add_option("--n-avg", gd.n_avg, "Shots per POVM sample")->check(CLI::PositiveNumber);
  gen->add_option("--sizes", gd.sizes, "train,val,test")->required()->delimiter(',');
  gen->add_option("--seed", gd.seed, "Master seed")->capture_default_str();
  gen->add_option("--out", gd.out, "Dataset path")->required();
  gen->add_option("--threads", gd.threads, "Worker threads (default: LQST_THREADS or 1)");

  SvtArgs sa;
  auto* svt = app.add_subcommand("svt", "SVT tuning sweep or PSD probability");
  svt->add_option("--ranks", sa.ranks, "State ranks")->delimiter(',')->check(CLI::PositiveNumber)->capture_default_str();
  svt->add_option("--taus", sa.taus, "Threshold grid")->delimiter(',')->check(CLI::PositiveNumber)->capture_default_str();
  svt->add_option("--deltas", sa.deltas, "Step-size grid")->delimiter(',')->check(CLI::PositiveNumber)->capture_default_str();
  svt->add_option("--trials", sa.trials, "Trials per cell (default 10000 sweep, 1000 psd-prob)")->check(CLI::PositiveNumber);
  svt->add_flag("--psd-prob", sa.psd_prob, "Estimate the probability of a PSD estimate at (--tau, --delta)");
  svt->add_option("--tau", sa.tau, "Threshold for --psd-prob")->check(CLI::PositiveNumber)->capture_default_str();
  svt->add_option("--delta", sa.delta, "Step size for --psd-prob")->check(CLI::PositiveNumber)->capture_default_str();
  svt->add_option("--qubits", sa.qubits)->check(CLI::Range(1, 6))->capture_default_str();
  svt->add_option("--meas", sa.meas)->check(CLI::PositiveNumber)->capture_default_str();
  svt->add_option("--max-iters", sa.max_iters)->check(CLI::PositiveNumber)->capture_default_str();
  svt->add_flag("--no-trace-row", sa.no_trace_row, "Do not append tr[X] = 1 as a measurement");
  svt->add_flag("--quick", sa.quick, "Smoke-test trial counts");
  svt->add_option("--seed", sa.seed)->capture_default_str();
  svt->add_option("--out", sa.out, "CSV (sweep) or JSON (psd-prob) output; sweep defaults to stdout");
  svt->add_option("--threads", sa.threads);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train an LQST network");
  train->add_option("--data", ta.data)->required()->check(CLI::ExistingFile);
  train->add_option("--layers", ta.layers, "Depth T")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--batch", ta.batch)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--lr", ta.lr)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--mu", ta.mu, "Eigenvalue shift (default by data kind)")->check(CLI::NonNegativeNumber);
  train->add_option("--epsilon", ta.epsilon, "Normalization floor (default by data kind)")->check(CLI::PositiveNumber);
  train->add_option("--init-step", ta.init_step, "Initial step sizes")->capture_default_str();
  train->add_option("--patience", ta.patience, "Evaluations without improvement; 0 disables")->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--max-epochs", ta.max_epochs)->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--val-stride", ta.val_stride, "Validate every N mini-batches")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--seed", ta.seed)->capture_default_str();
  train->add_option("--out", ta.out, "Checkpoint path")->required();
  train->add_option("--report", ta.report, "Report JSON (default <out>.report.json)");
  train->add_option("--curve", ta.curve, "Loss curve CSV (default <out>.curve.csv)");
  train->add_flag("--quiet", ta.quiet);
  train->add_option("--threads", ta.threads);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint or run the Bell-state study");
  eval->add_option("--ckpt", ea.ckpt)->check(CLI::ExistingFile);
  eval->add_option("--data", ea.data)->check(CLI::ExistingFile);
  eval->add_option("--split", ea.split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  eval->add_flag("--bell", ea.bell, "Estimate the Bell state from noisy Pauli-4 POVM frequencies");
  eval->add_option("--m", ea.m, "Observed POVM outcomes")->check(CLI::Range(1, 16))->capture_default_str();
  eval->add_option("--n-avg", ea.n_avg, "Shots per estimation")->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--repeats", ea.repeats, "Estimations (default 100)")->check(CLI::PositiveNumber);
  eval->add_option("--sweep", ea.sweep, "n-avg=<list> or m=<list>");
  eval->add_option("--layers", ea.layers)->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--batch", ea.batch)->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--lr", ea.lr)->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--max-epochs", ea.max_epochs)->check(CLI::NonNegativeNumber)->capture_default_str();
  eval->add_option("--patience", ea.patience)->check(CLI::NonNegativeNumber)->capture_default_str();
  eval->add_option("--val-stride", ea.val_stride)->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--n-train", ea.n_train)->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--n-val", ea.n_val)->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_flag("--quick", ea.quick, "Smoke-test repeats and epochs");
  eval->add_option("--seed", ea.seed)->capture_default_str();
  eval->add_option("--out", ea.out, "JSON, or CSV by extension; default stdout");
  eval->add_option("--threads", ea.threads);

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Merge an SVT sweep with LQST eval reports");
  report->add_option("--svt", ra.svt)->required()->check(CLI::ExistingFile);
  report->add_option("--eval", ra.evals, "Eval JSON reports (one per depth)")->check(CLI::ExistingFile);
  report->add_option("--rank", ra.rank)->capture_default_str();
  report->add_option("--tau", ra.tau)->capture_default_str();
  report->add_option("--delta", ra.delta)->capture_default_str();
  report->add_option("--out", ra.out, "CSV output; default stdout");

  try {
    app.parse(argc, argv);
    if (*gen) run_gen_data(gd, *gen);
    if (*svt) run_svt(sa);
    if (*train) run_train(ta, *train);
    if (*eval) run_eval(ea, *eval);
    if (*report) run_report(ra);
  } catch (const CLI::Error& e) {
    // --help exits 0; every usage error maps to 2, leaving 1 for library errors.
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const lqst::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
