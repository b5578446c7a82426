#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "stationcast/errors.hpp"
#include "stationcast/graph.hpp"
#include "stationcast/ingest.hpp"
#include "stationcast/metrics.hpp"
#include "stationcast/nn.hpp"
#include "stationcast/tensor.hpp"
#include "stationcast/train.hpp"

namespace stationcast::serialize {

using json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'S', 'T', 'C', 'T'};
constexpr const char* kTensorFormat = "stct.tensor.v1";
constexpr const char* kCheckpointFormat = "stct.checkpoint.v1";
constexpr const char* kScalerFormat = "stct.scaler.v1";

static_assert(sizeof(double) == 8, "payload layout assumes 8-byte doubles");

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// binary tensor container: magic, u32 LE header length, JSON header, f64 LE
// payload

inline void write_tensor(const std::string& path, const Tensor& t, json meta = {}) {
  json header = json::object();
  header["format"] = kTensorFormat;
  header["dtype"] = "f64";
  header["shape"] = t.shape();
  for (auto& [k, v] : meta.items()) header[k] = v;
  const std::string head = header.dump();

  std::string bytes;
  bytes.reserve(8 + head.size() + t.size() * 8);
  bytes.append(kMagic, 4);
  const std::uint32_t len = static_cast<std::uint32_t>(head.size());
  char lenbuf[4];
  std::memcpy(lenbuf, &len, 4);
  bytes.append(lenbuf, 4);
  bytes.append(head);
  bytes.append(reinterpret_cast<const char*>(t.data()), t.size() * 8);
  write_file_atomic(path, bytes);
}

struct LoadedTensor {
  Tensor tensor;
  json meta;
};

inline LoadedTensor read_tensor(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw InputError(path + " is not a tensor container");
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 4, 4);
  if (bytes.size() < 8 + static_cast<std::size_t>(len))
    throw InputError(path + ": truncated header");

  json header = json::parse(bytes.substr(8, len), nullptr, false);
  if (header.is_discarded() || header.value("format", "") != kTensorFormat)
    throw InputError(path + ": bad container header");

  std::vector<std::size_t> shape;
  for (const auto& d : header.at("shape")) shape.push_back(d.get<std::size_t>());
  std::size_t count = 1;
  for (std::size_t d : shape) count *= d;
  if (bytes.size() != 8 + len + count * 8)
    throw InputError(path + ": payload size does not match shape");

  LoadedTensor out{Tensor(shape), std::move(header)};
  std::memcpy(out.tensor.data(), bytes.data() + 8 + len, count * 8);
  return out;
}

// ---------------------------------------------------------------------------
// pipeline artifacts

inline void write_demand(const std::string& path, const ingest::DemandTensor& d) {
  json meta;
  meta["kind"] = "demand";
  meta["start_ts"] = d.start_ts;
  write_tensor(path, d.values, meta);
}

inline ingest::DemandTensor read_demand(const std::string& path) {
  LoadedTensor lt = read_tensor(path);
  if (lt.meta.value("kind", "") != "demand" || lt.tensor.ndim() != 3 ||
      lt.tensor.dim(2) != 2)
    throw InputError(path + " is not a demand tensor");
  ingest::DemandTensor d;
  d.values = std::move(lt.tensor);
  d.start_ts = lt.meta.value("start_ts", std::int64_t{0});
  return d;
}

inline void write_features(const std::string& path, const ingest::FeatureTensor& f) {
  json meta;
  meta["kind"] = "features";
  meta["start_ts"] = f.start_ts;
  meta["feature_names"] = f.feature_names;
  write_tensor(path, f.values, meta);
}

inline ingest::FeatureTensor read_features(const std::string& path) {
  LoadedTensor lt = read_tensor(path);
  if (lt.meta.value("kind", "") != "features" || lt.tensor.ndim() != 3)
    throw InputError(path + " is not a feature tensor");
  ingest::FeatureTensor f;
  f.values = std::move(lt.tensor);
  f.start_ts = lt.meta.value("start_ts", std::int64_t{0});
  f.feature_names = lt.meta.value("feature_names", std::vector<std::string>{});
  if (f.feature_names.size() != f.values.dim(2))
    throw InputError(path + ": feature names do not match tensor width");
  return f;
}

inline void write_adjacency_series(const std::string& path,
                                   const graph::AdjacencySeries& series) {
  if (series.matrices.empty()) throw InputError("empty adjacency series");
  const std::size_t t_slots = series.matrices.size(), n = series.matrices[0].rows();
  Tensor packed({t_slots, n, n});
  for (std::size_t t = 0; t < t_slots; ++t)
    std::memcpy(packed.data() + t * n * n, series.matrices[t].data(), n * n * 8);
  json meta;
  meta["kind"] = "adjacency_series";
  meta["window"] = series.window;
  meta["channel"] = graph::channel_name(series.channel);
  write_tensor(path, packed, meta);
}

inline graph::AdjacencySeries read_adjacency_series(const std::string& path) {
  LoadedTensor lt = read_tensor(path);
  if (lt.meta.value("kind", "") != "adjacency_series" || lt.tensor.ndim() != 3 ||
      lt.tensor.dim(1) != lt.tensor.dim(2))
    throw InputError(path + " is not an adjacency series");
  graph::AdjacencySeries series;
  series.window = lt.meta.value("window", std::size_t{0});
  series.channel = graph::channel_from_string(lt.meta.value("channel", "out"));
  const std::size_t t_slots = lt.tensor.dim(0), n = lt.tensor.dim(1);
  series.matrices.assign(t_slots, Tensor(n, n));
  for (std::size_t t = 0; t < t_slots; ++t)
    std::memcpy(series.matrices[t].data(), lt.tensor.data() + t * n * n, n * n * 8);
  return series;
}

inline void write_static_adjacency(const std::string& path, const Tensor& adj,
                                   graph::Channel channel) {
  json meta;
  meta["kind"] = "adjacency";
  meta["channel"] = graph::channel_name(channel);
  write_tensor(path, adj, meta);
}

inline Tensor read_static_adjacency(const std::string& path) {
  LoadedTensor lt = read_tensor(path);
  if (lt.meta.value("kind", "") != "adjacency" || lt.tensor.ndim() != 2 ||
      lt.tensor.rows() != lt.tensor.cols())
    throw InputError(path + " is not an adjacency matrix");
  return std::move(lt.tensor);
}

inline void write_registry_csv(const std::string& path,
                               const ingest::StationRegistry& reg) {
  std::string out = "station_id,name,lat,lon,annual_demand\n";
  for (const auto& s : reg.stations) {
    out += std::to_string(s.id) + "," + csv::quote(s.name) + "," +
           format_double(s.lat) + "," + format_double(s.lon) + "," +
           std::to_string(s.annual_demand) + "\n";
  }
  write_file_atomic(path, out);
}

inline ingest::StationRegistry read_registry_csv(const std::string& path) {
  csv::Table table = csv::read_file(path);
  auto col = [&](const char* name) {
    int idx = table.column(name);
    if (idx < 0) throw MissingColumnError(path + ": missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(idx);
  };
  const std::size_t c_id = col("station_id"), c_name = col("name"), c_lat = col("lat"),
                    c_lon = col("lon"), c_dem = col("annual_demand");
  ingest::StationRegistry reg;
  for (const auto& row : table.rows) {
    ingest::Station s;
    auto id = ingest::detail::parse_int(row[c_id]);
    auto lat = ingest::detail::parse_double(row[c_lat]);
    auto lon = ingest::detail::parse_double(row[c_lon]);
    auto dem = ingest::detail::parse_int(row[c_dem]);
    if (!id || !lat || !lon || !dem) throw InputError(path + ": malformed registry row");
    s.id = *id;
    s.name = row[c_name];
    s.lat = *lat;
    s.lon = *lon;
    s.annual_demand = *dem;
    reg.index[s.id] = reg.stations.size();
    reg.stations.push_back(std::move(s));
  }
  if (reg.stations.empty()) throw EmptyFileError(path + " lists no stations");
  return reg;
}

struct ScalerBundle {
  ingest::MinMaxScaler features;
  ingest::MinMaxScaler targets;
  std::vector<std::string> feature_names;
  double train_fraction = 0.70;
  std::size_t cut = 0;
  std::size_t total = 0;
};

inline void write_scaler_json(const std::string& path, const ScalerBundle& b) {
  json j;
  j["format"] = kScalerFormat;
  j["feature_names"] = b.feature_names;
  j["features"] = {{"mins", b.features.mins()}, {"maxs", b.features.maxs()}};
  j["targets"] = {{"mins", b.targets.mins()}, {"maxs", b.targets.maxs()}};
  j["split"] = {{"train_fraction", b.train_fraction}, {"cut", b.cut}, {"total", b.total}};
  write_file_atomic(path, j.dump(2) + "\n");
}

inline ScalerBundle read_scaler_json(const std::string& path) {
  json j = json::parse(read_file_bytes(path), nullptr, false);
  if (j.is_discarded() || j.value("format", "") != kScalerFormat)
    throw InputError(path + " is not a scaler file");
  ScalerBundle b;
  b.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  b.features = ingest::MinMaxScaler(j.at("features").at("mins").get<std::vector<double>>(),
                                    j.at("features").at("maxs").get<std::vector<double>>());
  b.targets = ingest::MinMaxScaler(j.at("targets").at("mins").get<std::vector<double>>(),
                                   j.at("targets").at("maxs").get<std::vector<double>>());
  b.train_fraction = j.at("split").at("train_fraction").get<double>();
  b.cut = j.at("split").at("cut").get<std::size_t>();
  b.total = j.at("split").at("total").get<std::size_t>();
  if (b.features.columns() != b.feature_names.size() || b.targets.columns() != 2)
    throw InputError(path + ": inconsistent scaler dimensions");
  return b;
}

// ---------------------------------------------------------------------------
// model checkpoints: JSON header describing the architecture plus the
// concatenated parameter payload, keyed and ordered by parameter name

inline json model_config_json(const nn::GgcnnConfig& c) {
  json j;
  j["features"] = c.features;
  j["hidden1"] = c.hidden1;
  j["hidden2"] = c.hidden2;
  j["readout_hidden"] = c.readout_hidden;
  j["steps1"] = c.steps1;
  j["steps2"] = c.steps2;
  j["outputs"] = c.outputs;
  return j;
}

inline json model_config_json(const nn::GcnConfig& c) {
  json j;
  j["features"] = c.features;
  j["hidden1"] = c.hidden1;
  j["hidden2"] = c.hidden2;
  j["outputs"] = c.outputs;
  return j;
}

inline json model_config_json(const nn::MlpConfig& c) {
  json j;
  j["features"] = c.features;
  j["hidden"] = c.hidden;
  j["outputs"] = c.outputs;
  return j;
}

inline std::unique_ptr<nn::Forecaster> make_model(const std::string& kind,
                                                  const json& cfg,
                                                  std::uint64_t seed) {
  Rng rng(seed);
  if (kind == "ggcnn") {
    nn::GgcnnConfig c;
    c.features = cfg.value("features", c.features);
    c.hidden1 = cfg.value("hidden1", c.hidden1);
    c.hidden2 = cfg.value("hidden2", c.hidden2);
    c.readout_hidden = cfg.value("readout_hidden", c.readout_hidden);
    c.steps1 = cfg.value("steps1", c.steps1);
    c.steps2 = cfg.value("steps2", c.steps2);
    c.outputs = cfg.value("outputs", c.outputs);
    return std::make_unique<nn::GgcnnModel>(c, rng);
  }
  if (kind == "gcn") {
    nn::GcnConfig c;
    c.features = cfg.value("features", c.features);
    c.hidden1 = cfg.value("hidden1", c.hidden1);
    c.hidden2 = cfg.value("hidden2", c.hidden2);
    c.outputs = cfg.value("outputs", c.outputs);
    return std::make_unique<nn::GcnModel>(c, rng);
  }
  if (kind == "mlp") {
    nn::MlpConfig c;
    c.features = cfg.value("features", c.features);
    c.hidden = cfg.value("hidden", c.hidden);
    c.outputs = cfg.value("outputs", c.outputs);
    return std::make_unique<nn::MlpModel>(c, rng);
  }
  throw ConfigError("unknown model kind '" + kind + "'");
}

inline void save_checkpoint(const std::string& path, const nn::Forecaster& model,
                            const json& model_cfg, std::uint64_t seed,
                            const std::vector<std::string>& feature_names) {
  json header;
  header["format"] = kCheckpointFormat;
  header["kind"] = model.kind();
  header["seed"] = seed;
  header["feature_order"] = feature_names;
  header["config"] = model_cfg;

  nn::NamedParams params = model.named_parameters();
  json plist = json::array();
  std::size_t offset = 0;
  std::string payload;
  for (const auto& [name, p] : params) {
    json entry;
    entry["name"] = name;
    entry["shape"] = p->value.shape();
    entry["offset"] = offset;
    plist.push_back(entry);
    payload.append(reinterpret_cast<const char*>(p->value.data()),
                   p->value.size() * 8);
    offset += p->value.size();
  }
  header["params"] = plist;

  const std::string head = header.dump();
  std::string bytes;
  bytes.reserve(8 + head.size() + payload.size());
  bytes.append(kMagic, 4);
  const std::uint32_t len = static_cast<std::uint32_t>(head.size());
  char lenbuf[4];
  std::memcpy(lenbuf, &len, 4);
  bytes.append(lenbuf, 4);
  bytes.append(head);
  bytes.append(payload);
  write_file_atomic(path, bytes);
}

struct LoadedModel {
  std::unique_ptr<nn::Forecaster> model;
  json header;
};

inline LoadedModel load_checkpoint(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw InputError(path + " is not a checkpoint");
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 4, 4);
  if (bytes.size() < 8 + static_cast<std::size_t>(len))
    throw InputError(path + ": truncated header");
  json header = json::parse(bytes.substr(8, len), nullptr, false);
  if (header.is_discarded() || header.value("format", "") != kCheckpointFormat)
    throw InputError(path + ": bad checkpoint header");

  LoadedModel out;
  out.model = make_model(header.value("kind", ""), header.at("config"),
                         header.value("seed", std::uint64_t{0}));
  out.header = header;

  nn::NamedParams params = out.model->named_parameters();
  const char* payload = bytes.data() + 8 + len;
  const std::size_t payload_count = (bytes.size() - 8 - len) / 8;

  std::size_t matched = 0;
  for (const auto& entry : header.at("params")) {
    const std::string name = entry.at("name").get<std::string>();
    std::vector<std::size_t> shape;
    for (const auto& d : entry.at("shape")) shape.push_back(d.get<std::size_t>());
    const std::size_t offset = entry.at("offset").get<std::size_t>();

    bool found = false;
    for (auto& [pname, p] : params) {
      if (pname != name) continue;
      if (p->value.shape() != shape)
        throw InputError(path + ": parameter " + name + " shape mismatch");
      if (offset + p->value.size() > payload_count)
        throw InputError(path + ": payload too short for " + name);
      std::memcpy(p->value.data(), payload + offset * 8, p->value.size() * 8);
      found = true;
      ++matched;
      break;
    }
    if (!found) throw InputError(path + ": unexpected parameter " + name);
  }
  if (matched != params.size())
    throw InputError(path + ": checkpoint missing parameters");
  return out;
}

// ---------------------------------------------------------------------------
// logs and reports

inline void write_train_log_csv(const std::string& path, const train::TrainLog& log) {
  std::string out = "epoch,train_loss,val_loss,seconds\n";
  char buf[160];
  for (const auto& e : log.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.3f\n", e.epoch, e.train_loss,
                  e.val_loss, e.seconds);
    out += buf;
  }
  write_file_atomic(path, out);
}

inline void write_train_summary_json(const std::string& path, const train::TrainLog& log,
                                     json extra) {
  json j;
  j["epochs_run"] = log.epochs.size();
  j["best_epoch"] = log.best_epoch;
  j["best_val_loss"] = log.best_val_loss;
  if (!log.epochs.empty()) {
    j["final_train_loss"] = log.epochs.back().train_loss;
    j["final_val_loss"] = log.epochs.back().val_loss;
  }
  for (auto& [k, v] : extra.items()) j[k] = v;
  write_file_atomic(path, j.dump(2) + "\n");
}

inline json report_to_json(const metrics::MetricsReport& rep) {
  json j;
  j["model"] = rep.model;
  j["space"] = rep.space;
  j["n_test_slots"] = rep.n_test_slots;
  auto series = [](const metrics::SeriesMetrics& m) {
    json s;
    s["mse"] = m.mse;
    s["rmse"] = m.rmse;
    if (m.r2) s["r2"] = *m.r2;
    else s["r2"] = nullptr;
    s["n"] = m.n;
    return s;
  };
  j["aggregate"] = series(rep.aggregate);
  json per = json::array();
  for (const auto& m : rep.per_station) per.push_back(series(m));
  j["per_station"] = per;
  return j;
}

// aligned plain-text comparison table: Model, R2, MSE, RMSE, Attributes
inline std::string render_report_table(
    const std::vector<metrics::MetricsReport>& reports,
    const std::vector<std::string>& attributes) {
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-14s %-8s %10s %12s %12s  %s\n", "Model", "Space",
                "R2", "MSE", "RMSE", "Attributes");
  out += buf;
  out += std::string(78, '-') + "\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::string r2 = r.aggregate.r2 ? [&] {
      char b[32];
      std::snprintf(b, sizeof(b), "%10.4f", *r.aggregate.r2);
      return std::string(b);
    }() : std::string(" undefined");
    std::snprintf(buf, sizeof(buf), "%-14s %-8s %s %12.4f %12.4f  %s\n",
                  r.model.c_str(), r.space.c_str(), r2.c_str(), r.aggregate.mse,
                  r.aggregate.rmse, i < attributes.size() ? attributes[i].c_str() : "");
    out += buf;
  }
  return out;
}

}  // namespace stationcast::serialize
