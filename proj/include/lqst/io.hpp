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

// Persistence: the binary dataset container, JSON checkpoints, and JSON
// views of reports. Needs nlohmann/json and zlib (link lqst_io).
//
// Dataset file, all integers and doubles little-endian:
//   "LQSTDATA"  u32 version
//   u32 qubits  u32 kind (0 expectation, 1 povm)  u32 rank  u32 reserved
//   u64 meas  u64 n_avg  u64 seed  u64 n_train  u64 n_val  u64 n_test
//   u64 ensemble_indices[meas]
//   per sample: f64 re[d*d]  f64 im[d*d]  f64 b[meas]   (column-major state)
//   u32 crc32 of every preceding byte

#pragma once

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>  // vendored nlohmann/json

#include "lqst/errors.hpp"
#include "lqst/network.hpp"
#include "lqst/train.hpp"

namespace lqst {

using Json = nlohmann::json;

namespace detail {

inline constexpr std::string_view kIo = "train";
inline constexpr char kDatasetMagic[8] = {'L', 'Q', 'S', 'T', 'D', 'A', 'T', 'A'};
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr int kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointFormat = "lqst-checkpoint";

class ByteWriter {
 public:
  explicit ByteWriter(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw IoError(kIo, "cannot open '" + path.string() + "' for writing");
  }

  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    crc_ = crc32_z(crc_, p, n);
    out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  void finish() {
    const auto crc = static_cast<std::uint32_t>(crc_);
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(crc >> (8 * i));
    out_.write(reinterpret_cast<const char*>(buf), 4);
    out_.flush();
    if (!out_) throw IoError(kIo, "write to '" + path_.string() + "' failed");
  }

 private:
  template <class U>
  void put_le(U v) {
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(buf, sizeof(U));
  }

  std::ofstream out_;
  std::filesystem::path path_;
  uLong crc_ = crc32_z(0L, Z_NULL, 0);
};

class ByteReader {
 public:
  explicit ByteReader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError(kIo, "cannot open '" + path.string() + "' for reading");
  }

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw MalformedFileError(kIo, "'" + path_.string() + "' is truncated");
    crc_ = crc32_z(crc_, static_cast<const unsigned char*>(data), n);
  }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  void finish() {
    const auto expected = static_cast<std::uint32_t>(crc_);
    const std::uint32_t stored = u32();
    if (stored != expected) throw MalformedFileError(kIo, "'" + path_.string() + "' fails its checksum");
    char extra;
    if (in_.read(&extra, 1); in_.gcount() != 0) throw MalformedFileError(kIo, "'" + path_.string() + "' has trailing bytes");
  }

 private:
  template <class U>
  U get_le() {
    unsigned char buf[sizeof(U)];
    bytes(buf, sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
  }

  std::ifstream in_;
  std::filesystem::path path_;
  uLong crc_ = crc32_z(0L, Z_NULL, 0);
};

inline std::uint32_t crc32_of(std::string_view s) {
  return static_cast<std::uint32_t>(crc32_z(crc32_z(0L, Z_NULL, 0), reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

inline std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Datasets

inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  detail::ByteWriter w(path);
  w.bytes(detail::kDatasetMagic, 8);
  w.u32(detail::kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(ds.qubits));
  w.u32(ds.kind == MeasurementKind::PauliExpectation ? 0u : 1u);
  w.u32(static_cast<std::uint32_t>(ds.rank));
  w.u32(0);
  for (std::uint64_t v : {static_cast<std::uint64_t>(ds.meas), ds.n_avg, ds.seed, static_cast<std::uint64_t>(ds.n_train),
                          static_cast<std::uint64_t>(ds.n_val), static_cast<std::uint64_t>(ds.n_test)}) {
    w.u64(v);
  }
  for (std::uint64_t v : ds.ensemble_indices) w.u64(v);
  for (const Sample& s : ds.samples) {
    const CMatrix& x = s.state.matrix();
    for (Eigen::Index k = 0; k < x.size(); ++k) w.f64(x.data()[k].real());
    for (Eigen::Index k = 0; k < x.size(); ++k) w.f64(x.data()[k].imag());
    for (Eigen::Index k = 0; k < s.b.size(); ++k) w.f64(s.b(k));
  }
  w.finish();
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  detail::ByteReader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (!std::equal(magic, magic + 8, detail::kDatasetMagic)) throw MalformedFileError(detail::kIo, "'" + path.string() + "' is not an LQST dataset");
  if (const std::uint32_t v = r.u32(); v != detail::kDatasetVersion) {
    throw VersionError(detail::kIo, "dataset version " + std::to_string(v) + " is not supported (expected " +
                                        std::to_string(detail::kDatasetVersion) + ")");
  }
  Dataset ds;
  const std::uint32_t qubits = r.u32();
  const std::uint32_t kind = r.u32();
  ds.rank = static_cast<int>(r.u32());
  r.u32();
  const std::uint64_t meas = r.u64();
  ds.n_avg = r.u64();
  ds.seed = r.u64();
  ds.n_train = r.u64();
  ds.n_val = r.u64();
  ds.n_test = r.u64();
  if (qubits < 1 || qubits > 6 || kind > 1) throw MalformedFileError(detail::kIo, "dataset header is corrupt");
  ds.qubits = static_cast<int>(qubits);
  ds.dim = Eigen::Index{1} << qubits;
  ds.kind = kind == 0 ? MeasurementKind::PauliExpectation : MeasurementKind::Povm;
  if (meas < 1 || meas > static_cast<std::uint64_t>(ds.dim * ds.dim)) {
    throw DimensionInconsistencyError(detail::kIo, "dataset meas count is inconsistent with d=" + std::to_string(ds.dim));
  }
  ds.meas = static_cast<Eigen::Index>(meas);
  ds.ensemble_indices.resize(meas);
  for (auto& v : ds.ensemble_indices) v = r.u64();
  const std::uint64_t total = ds.n_train + ds.n_val + ds.n_test;
  const Eigen::Index d = ds.dim;
  const std::uint64_t header_bytes = 8 + 4 + 16 + 48 + 8 * meas;
  const std::uint64_t sample_bytes = 8 * static_cast<std::uint64_t>(2 * d * d + ds.meas);
  if (total > (std::uint64_t{1} << 40) / sample_bytes ||
      std::filesystem::file_size(path) != header_bytes + total * sample_bytes + 4) {
    throw MalformedFileError(detail::kIo, "'" + path.string() + "' size does not match its header");
  }
  ds.samples.reserve(total);
  for (std::uint64_t i = 0; i < total; ++i) {
    CMatrix x(d, d);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = Complex(r.f64(), 0.0);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k].imag(r.f64());
    RVector b(ds.meas);
    for (Eigen::Index k = 0; k < b.size(); ++k) b(k) = r.f64();
    try {
      ds.samples.push_back({DensityMatrix::from_matrix(x), std::move(b)});
    } catch (const Error& e) {
      throw MalformedFileError(detail::kIo, "sample " + std::to_string(i) + " is not a density matrix (" + e.what() + ")");
    }
  }
  r.finish();
  try {
    (void)ds.ensemble();
  } catch (const Error& e) {
    throw MalformedFileError(detail::kIo, std::string("dataset ensemble is invalid (") + e.what() + ")");
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Checkpoints

struct CheckpointMeta {
  MeasurementKind kind = MeasurementKind::PauliExpectation;
  int qubits = 0;
  std::vector<std::uint64_t> ensemble_indices;
  std::uint64_t ensemble_seed = 0;
  Json extra = Json::object();
};

struct Checkpoint {
  NetworkParams params;
  CheckpointMeta meta;

  MeasurementEnsemble ensemble() const { return ensemble_from_indices(meta.kind, meta.qubits, meta.ensemble_indices); }
};

inline CheckpointMeta checkpoint_meta_for(const Dataset& ds) {
  return {ds.kind, ds.qubits, ds.ensemble_indices, ds.seed, Json::object()};
}

namespace detail {
inline Json checkpoint_payload(const NetworkParams& p, const CheckpointMeta& meta) {
  Json weights = Json::array();
  for (const CMatrix& w : p.weights) {
    std::vector<double> re(static_cast<std::size_t>(w.size())), im(re.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      re[static_cast<std::size_t>(k)] = w.data()[k].real();
      im[static_cast<std::size_t>(k)] = w.data()[k].imag();
    }
    weights.push_back({{"real", re}, {"imag", im}});
  }
  return {{"dim", p.dim},
          {"meas", p.meas},
          {"depth", p.depth},
          {"mu", p.mu},
          {"epsilon", p.epsilon},
          {"step_sizes", p.step_sizes},
          {"thresholds", p.thresholds},
          {"weights", weights},
          {"ensemble",
           {{"kind", to_string(meta.kind)}, {"qubits", meta.qubits}, {"indices", meta.ensemble_indices}, {"seed", meta.ensemble_seed}}},
          {"extra", meta.extra}};
}
}  // namespace detail

/// Self-describing JSON document; doubles are written in shortest
/// round-trip decimal, so load_checkpoint reproduces every bit.
inline void save_checkpoint(const NetworkParams& p, const CheckpointMeta& meta, const std::filesystem::path& path) {
  p.validate();
  if (meta.ensemble_indices.size() != static_cast<std::size_t>(p.meas)) {
    throw DimensionInconsistencyError(detail::kIo, "checkpoint ensemble size does not match the network");
  }
  const Json payload = detail::checkpoint_payload(p, meta);
  const Json doc = {{"format", detail::kCheckpointFormat},
                    {"version", detail::kCheckpointVersion},
                    {"payload", payload},
                    {"checksum", "crc32:" + detail::hex32(detail::crc32_of(payload.dump()))}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(detail::kIo, "cannot open '" + path.string() + "' for writing");
  out << doc.dump(1) << '\n';
  if (!out) throw IoError(detail::kIo, "write to '" + path.string() + "' failed");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(detail::kIo, "cannot open '" + path.string() + "' for reading");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    throw MalformedFileError(detail::kIo, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != detail::kCheckpointFormat) {
      throw MalformedFileError(detail::kIo, "'" + path.string() + "' is not an LQST checkpoint");
    }
    if (const int v = doc.at("version").get<int>(); v != detail::kCheckpointVersion) {
      throw VersionError(detail::kIo, "checkpoint version " + std::to_string(v) + " is not supported (expected " +
                                          std::to_string(detail::kCheckpointVersion) + ")");
    }
    const Json& payload = doc.at("payload");
    if (doc.at("checksum").get<std::string>() != "crc32:" + detail::hex32(detail::crc32_of(payload.dump()))) {
      throw MalformedFileError(detail::kIo, "'" + path.string() + "' fails its checksum");
    }
    Checkpoint ck;
    NetworkParams& p = ck.params;
    p.dim = payload.at("dim").get<Eigen::Index>();
    p.meas = payload.at("meas").get<Eigen::Index>();
    p.depth = payload.at("depth").get<int>();
    p.mu = payload.at("mu").get<double>();
    p.epsilon = payload.at("epsilon").get<double>();
    p.step_sizes = payload.at("step_sizes").get<std::vector<double>>();
    p.thresholds = payload.at("thresholds").get<std::vector<double>>();
    if (p.dim < 1 || p.dim > kMaxDimension || p.meas < 1 || p.depth < 1 ||
        payload.at("weights").size() != static_cast<std::size_t>(p.depth)) {
      throw DimensionInconsistencyError(detail::kIo, "checkpoint header is inconsistent");
    }
    for (const Json& w : payload.at("weights")) {
      const auto re = w.at("real").get<std::vector<double>>();
      const auto im = w.at("imag").get<std::vector<double>>();
      const auto n = static_cast<std::size_t>(p.meas * p.dim * p.dim);
      if (re.size() != n || im.size() != n) throw DimensionInconsistencyError(detail::kIo, "checkpoint weight has the wrong size");
      CMatrix m(p.meas, p.dim * p.dim);
      for (std::size_t k = 0; k < n; ++k) m.data()[k] = Complex(re[k], im[k]);
      p.weights.push_back(std::move(m));
    }
    const Json& e = payload.at("ensemble");
    const std::string kind = e.at("kind").get<std::string>();
    if (kind != to_string(MeasurementKind::PauliExpectation) && kind != to_string(MeasurementKind::Povm)) {
      throw MalformedFileError(detail::kIo, "unknown measurement kind '" + kind + "'");
    }
    ck.meta.kind = kind == to_string(MeasurementKind::Povm) ? MeasurementKind::Povm : MeasurementKind::PauliExpectation;
    ck.meta.qubits = e.at("qubits").get<int>();
    ck.meta.ensemble_indices = e.at("indices").get<std::vector<std::uint64_t>>();
    ck.meta.ensemble_seed = e.at("seed").get<std::uint64_t>();
    ck.meta.extra = payload.value("extra", Json::object());
    if ((Eigen::Index{1} << ck.meta.qubits) != p.dim || ck.meta.ensemble_indices.size() != static_cast<std::size_t>(p.meas)) {
      throw DimensionInconsistencyError(detail::kIo, "checkpoint ensemble is inconsistent with its network shape");
    }
    try {
      p.validate();
    } catch (const Error& err) {
      throw MalformedFileError(detail::kIo, std::string("checkpoint parameters are invalid (") + err.what() + ")");
    }
    return ck;
  } catch (const Json::exception& e) {
    throw MalformedFileError(detail::kIo, "'" + path.string() + "' is missing fields: " + e.what());
  }
}

/// Loads and checks that the checkpoint was trained for `ens`.
inline Checkpoint load_checkpoint(const std::filesystem::path& path, const MeasurementEnsemble& ens) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.params.dim != ens.dim() || ck.params.meas != ens.count()) {
    throw DimensionInconsistencyError(detail::kIo, "checkpoint (d=" + std::to_string(ck.params.dim) + ", m=" +
                                                       std::to_string(ck.params.meas) + ") does not fit the ensemble (d=" +
                                                       std::to_string(ens.dim()) + ", m=" + std::to_string(ens.count()) + ")");
  }
  if (ck.meta.kind != ens.kind() || ck.meta.ensemble_indices != ens.indices()) {
    throw DimensionInconsistencyError(detail::kIo, "checkpoint was trained on a different measurement ensemble");
  }
  return ck;
}

// ---------------------------------------------------------------------------
// JSON views

inline Json to_json(const EvalMetrics& m) {
  Json j = {{"count", m.count},
            {"mean_fidelity", m.mean_fidelity},
            {"std_fidelity", m.std_fidelity},
            {"mean_trace_distance", m.mean_trace_distance},
            {"std_trace_distance", m.std_trace_distance},
            {"mean_rank", m.mean_rank}};
  if (m.mean_classic_fidelity) j["mean_classic_fidelity"] = *m.mean_classic_fidelity;
  return j;
}

inline Json to_json(const TrainReport& r) {
  Json curve = Json::array();
  for (const EpochRecord& e : r.curve) curve.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
  Json j = {{"curve", curve},
            {"best_val_loss", r.curve.empty() ? Json(nullptr) : Json(r.best_val_loss)},
            {"best_epoch", r.best_epoch},
            {"steps", r.steps},
            {"evaluations", r.evaluations},
            {"stop_reason", to_string(r.stop)},
            {"seconds", r.seconds}};
  if (r.test_metrics) j["test_metrics"] = to_json(*r.test_metrics);
  return j;
}

}  // namespace lqst
