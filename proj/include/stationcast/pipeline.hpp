#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "stationcast/access.hpp"
#include "stationcast/baselines.hpp"
#include "stationcast/config.hpp"
#include "stationcast/errors.hpp"
#include "stationcast/graph.hpp"
#include "stationcast/ingest.hpp"
#include "stationcast/manifest.hpp"
#include "stationcast/metrics.hpp"
#include "stationcast/nn.hpp"
#include "stationcast/serialize.hpp"
#include "stationcast/synthetic.hpp"
#include "stationcast/train.hpp"

namespace stationcast::pipeline {

namespace fs = std::filesystem;
using serialize::json;

struct RunConfig {
  config::Config raw;

  std::string trips_path, weather_path, population_path, employment_path;
  std::string workdir = "work";
  std::uint64_t seed = 42;

  std::int64_t min_annual_demand = 500;
  bool include_humidity = false;
  std::int64_t max_gap_hours = 24;
  double train_fraction = 0.70;

  access::AccessOptions access_opts;

  std::string graph_mode = "dynamic";  // dynamic | static
  std::size_t window_slots = 168;
  graph::GraphOptions graph_opts;

  std::string model_kind = "ggcnn";
  nn::GgcnnConfig ggcnn;
  nn::GcnConfig gcn;
  nn::MlpConfig mlp;
  bool normalized_propagation = true;

  train::TrainConfig tc;

  std::vector<std::string> eval_models = {"persistence", "ols", "mlp", "gcn", "ggcnn"};

  synthetic::SyntheticSpec synth;

  static RunConfig from(config::Config c) {
    RunConfig r;
    r.trips_path = c.get_string("paths.trips", "");
    r.weather_path = c.get_string("paths.weather", "");
    r.population_path = c.get_string("paths.population", "");
    r.employment_path = c.get_string("paths.employment", "");
    r.workdir = c.get_string("paths.workdir", r.workdir);
    r.seed = static_cast<std::uint64_t>(c.get_int("seed", 42));

    r.min_annual_demand = c.get_int("ingest.min_annual_demand", r.min_annual_demand);
    r.include_humidity = c.get_bool("ingest.include_humidity", r.include_humidity);
    r.max_gap_hours = c.get_int("ingest.max_gap_hours", r.max_gap_hours);
    r.train_fraction = c.get_double("ingest.train_fraction", r.train_fraction);
    if (r.train_fraction <= 0.0 || r.train_fraction >= 1.0)
      throw ConfigError("ingest.train_fraction must lie in (0, 1)");

    r.access_opts.walking_speed_kmh =
        c.get_double("access.walking_speed_kmh", r.access_opts.walking_speed_kmh);
    r.access_opts.budget_minutes =
        c.get_double("access.budget_minutes", r.access_opts.budget_minutes);

    r.graph_mode = c.get_string("graph.mode", r.graph_mode);
    if (r.graph_mode != "dynamic" && r.graph_mode != "static")
      throw ConfigError("graph.mode must be dynamic or static");
    r.window_slots = static_cast<std::size_t>(c.get_int("graph.window_slots", 168));
    r.graph_opts.channel =
        graph::channel_from_string(c.get_string("graph.channel", "out"));
    r.graph_opts.clip_negative = c.get_bool("graph.clip_negative", true);
    r.graph_opts.top_k = static_cast<int>(c.get_int("graph.top_k", 0));

    r.model_kind = c.get_string("model.kind", r.model_kind);
    r.normalized_propagation =
        c.get_bool("model.normalized_propagation", r.normalized_propagation);
    const std::size_t hidden1 =
        static_cast<std::size_t>(c.get_int("model.hidden1", 32));
    const std::size_t hidden2 =
        static_cast<std::size_t>(c.get_int("model.hidden2", 32));
    r.ggcnn.hidden1 = hidden1;
    r.ggcnn.hidden2 = hidden2;
    r.ggcnn.steps1 = static_cast<int>(c.get_int("model.steps1", 4));
    r.ggcnn.steps2 = static_cast<int>(c.get_int("model.steps2", 3));
    r.ggcnn.readout_hidden = {
        static_cast<std::size_t>(c.get_int("model.readout_hidden", 64))};
    r.gcn.hidden1 = hidden1;
    r.gcn.hidden2 = hidden2;

    r.tc.epochs = static_cast<int>(c.get_int("train.epochs", 100));
    r.tc.batch_size = static_cast<std::size_t>(c.get_int("train.batch_size", 64));
    r.tc.learning_rate = c.get_double("train.lr", 0.001);
    r.tc.beta1 = c.get_double("train.adam_beta1", 0.9);
    r.tc.beta2 = c.get_double("train.adam_beta2", 0.999);
    r.tc.epsilon = c.get_double("train.adam_epsilon", 1e-8);
    r.tc.seed = static_cast<std::uint64_t>(c.get_int("train.seed",
                                                     static_cast<std::int64_t>(r.seed)));
    r.tc.patience = static_cast<int>(c.get_int("train.patience", 0));
    r.tc.grad_clip = c.get_double("train.grad_clip", 0.0);
    r.tc.val_fraction = c.get_double("train.val_fraction", 0.10);
    r.tc.log_timing = c.get_bool("train.log_timing", false);
    r.tc.validate();

    r.eval_models = c.get_array("eval.models", r.eval_models);

    r.synth.stations = static_cast<std::size_t>(c.get_int("synth.stations", 20));
    r.synth.slots = static_cast<std::size_t>(c.get_int("synth.slots", 2000));
    r.synth.seed = static_cast<std::uint64_t>(
        c.get_int("synth.seed", static_cast<std::int64_t>(r.seed)));
    r.synth.alpha = c.get_double("synth.alpha", 0.3);
    r.synth.beta = c.get_double("synth.beta", 0.5);
    r.synth.noise = c.get_double("synth.noise", 0.2);
    r.synth.communities = static_cast<std::size_t>(c.get_int("synth.communities", 4));

    r.raw = std::move(c);
    return r;
  }

  fs::path wd() const { return fs::path(workdir); }
  std::string demand_bin() const { return (wd() / "demand.bin").string(); }
  std::string features_bin() const { return (wd() / "features.bin").string(); }
  std::string registry_csv() const { return (wd() / "registry.csv").string(); }
  std::string scaler_json() const { return (wd() / "scaler.json").string(); }
  std::string planted_bin() const { return (wd() / "planted_graph.bin").string(); }
  std::string adjacency_bin() const { return (wd() / "adjacency.bin").string(); }
  std::string checkpoint_bin() const { return (wd() / "checkpoint.bin").string(); }
  std::string train_log_csv() const { return (wd() / "train_log.csv").string(); }
  std::string train_summary() const { return (wd() / "train_summary.json").string(); }
  std::string eval_json() const { return (wd() / "eval_report.json").string(); }
  std::string eval_txt() const { return (wd() / "eval_report.txt").string(); }
  std::string predictions_csv() const { return (wd() / "predictions.csv").string(); }
  std::string access_csv() const { return (wd() / "access.csv").string(); }
  std::string manifest_json() const { return (wd() / "manifest.json").string(); }
};

namespace detail {

inline void require_artifact(const std::string& path, const std::string& stage) {
  if (!fs::exists(path))
    throw MissingUpstreamArtifactError(path + " not found; run '" + stage + "' first");
}

inline std::map<std::string, std::string> hash_inputs(
    const std::vector<std::string>& paths) {
  std::map<std::string, std::string> out;
  for (const auto& p : paths) out[p] = manifest::hash_file(p);
  return out;
}

struct StageGuard {
  const RunConfig& rc;
  std::string stage;
  std::vector<std::string> inputs;
  std::vector<std::string> config_prefixes;
  std::vector<std::string> outputs;

  // true when the stage must run; false when cached results stand
  bool should_run(bool force, std::ostream& log) const {
    if (force) return true;
    manifest::Manifest m = manifest::Manifest::load_or_empty(rc.manifest_json());
    const std::string cfg_hash = manifest::hash_bytes(rc.raw.dump_keys(config_prefixes));
    if (m.stage_up_to_date(stage, hash_inputs(inputs), cfg_hash, outputs)) {
      log << stage << ": up-to-date\n";
      return false;
    }
    return true;
  }

  void record() const {
    manifest::Manifest m = manifest::Manifest::load_or_empty(rc.manifest_json());
    const std::string cfg_hash = manifest::hash_bytes(rc.raw.dump_keys(config_prefixes));
    m.record_stage(stage, hash_inputs(inputs), cfg_hash, outputs);
    m.save();
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// dataset assembly shared by train / eval / predict

struct Dataset {
  ingest::DemandTensor demand;      // raw counts
  ingest::FeatureTensor features;   // raw feature values
  serialize::ScalerBundle scalers;
  std::vector<Tensor> ops;  // per-slot operators, or a single static one
  bool dynamic = false;

  std::size_t slots() const { return demand.slots(); }
  std::size_t stations() const { return demand.stations(); }

  const Tensor& op_for_target(std::size_t target_slot) const {
    return dynamic ? ops[target_slot - 1] : ops[0];
  }

  Tensor scaled_features_at(std::size_t t) const {
    const std::size_t n = features.stations(), nf = features.features();
    Tensor x(n, nf);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t k = 0; k < nf; ++k)
        x(s, k) = scalers.features.transform_value(k, features.values.at3(t, s, k));
    return x;
  }

  Tensor scaled_demand_at(std::size_t t) const {
    const std::size_t n = demand.stations();
    Tensor y(n, 2);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t c = 0; c < 2; ++c)
        y(s, c) = scalers.targets.transform_value(c, demand.values.at3(t, s, c));
    return y;
  }

  Tensor counts_from_scaled(const Tensor& scaled) const {
    Tensor y(scaled.rows(), scaled.cols());
    for (std::size_t s = 0; s < scaled.rows(); ++s)
      for (std::size_t c = 0; c < scaled.cols(); ++c)
        y(s, c) = scalers.targets.inverse_value(c, scaled(s, c));
    return y;
  }
};

inline Dataset load_dataset(const RunConfig& rc) {
  detail::require_artifact(rc.demand_bin(), "ingest or synth");
  detail::require_artifact(rc.features_bin(), "ingest or synth");
  detail::require_artifact(rc.scaler_json(), "ingest or synth");
  detail::require_artifact(rc.adjacency_bin(), "graph");

  Dataset d;
  d.demand = serialize::read_demand(rc.demand_bin());
  d.features = serialize::read_features(rc.features_bin());
  d.scalers = serialize::read_scaler_json(rc.scaler_json());

  serialize::LoadedTensor adj = serialize::read_tensor(rc.adjacency_bin());
  const std::string kind = adj.meta.value("kind", "");
  if (kind == "adjacency_series") {
    graph::AdjacencySeries series = serialize::read_adjacency_series(rc.adjacency_bin());
    if (series.matrices.size() != d.demand.slots())
      throw ShapeMismatchError("adjacency series does not cover all slots");
    d.dynamic = true;
    d.ops.reserve(series.matrices.size());
    for (const auto& m : series.matrices) {
      d.ops.push_back(rc.normalized_propagation ? graph::propagation_operator(m) : m);
    }
  } else if (kind == "adjacency") {
    d.dynamic = false;
    d.ops.push_back(rc.normalized_propagation
                        ? graph::propagation_operator(adj.tensor)
                        : adj.tensor);
  } else {
    throw InputError(rc.adjacency_bin() + ": unrecognized adjacency artifact");
  }

  if (d.features.slots() != d.demand.slots() ||
      d.features.stations() != d.demand.stations())
    throw ShapeMismatchError("feature tensor does not match demand tensor");
  if (d.scalers.total != d.demand.slots())
    throw ShapeMismatchError("scaler split does not match slot count");
  if (d.ops.empty() || d.ops[0].rows() != d.demand.stations())
    throw ShapeMismatchError("operator size does not match station count");
  return d;
}

// samples for target slots [from, to): features and operator strictly precede
// or coincide with the information available before the target slot
inline std::vector<train::Sample> make_samples(const Dataset& d, std::size_t from,
                                               std::size_t to) {
  if (from < 1) from = 1;
  std::vector<train::Sample> out;
  out.reserve(to > from ? to - from : 0);
  for (std::size_t t = from; t < to; ++t) {
    train::Sample s;
    s.x = d.scaled_features_at(t);
    s.op = d.op_for_target(t);
    s.y = d.scaled_demand_at(t);
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<std::size_t> target_range(std::size_t from, std::size_t to) {
  std::vector<std::size_t> v;
  for (std::size_t t = std::max<std::size_t>(from, 1); t < to; ++t) v.push_back(t);
  return v;
}

// ---------------------------------------------------------------------------
// shared artifact writing for ingest and synth

inline void write_dataset_artifacts(const RunConfig& rc,
                                    const ingest::StationRegistry& registry,
                                    const ingest::DemandTensor& demand,
                                    const ingest::FeatureTensor& features,
                                    std::ostream& log) {
  const ingest::SplitSpec split_spec{rc.train_fraction};
  const ingest::SplitIndices split = ingest::split_slots(demand.slots(), split_spec);

  serialize::ScalerBundle bundle;
  bundle.features = ingest::fit_scaler(features, split);
  bundle.targets = ingest::fit_target_scaler(demand, split);
  bundle.feature_names = features.feature_names;
  bundle.train_fraction = rc.train_fraction;
  bundle.cut = split.cut;
  bundle.total = split.total;

  serialize::write_demand(rc.demand_bin(), demand);
  serialize::write_features(rc.features_bin(), features);
  serialize::write_registry_csv(rc.registry_csv(), registry);
  serialize::write_scaler_json(rc.scaler_json(), bundle);

  log << "  " << registry.size() << " stations, " << demand.slots() << " hourly slots ("
      << split.cut << " train / " << (split.total - split.cut) << " test)\n";
}

// ---------------------------------------------------------------------------
// stages

inline void run_ingest(const RunConfig& rc, bool force, std::ostream& log) {
  if (rc.trips_path.empty()) throw ConfigError("paths.trips is required for ingest");
  if (rc.weather_path.empty()) throw ConfigError("paths.weather is required for ingest");
  if (!fs::exists(rc.trips_path)) throw MissingFileError("trips file " + rc.trips_path);
  if (!fs::exists(rc.weather_path))
    throw MissingFileError("weather file " + rc.weather_path);

  detail::StageGuard guard{rc,
                           "ingest",
                           {rc.trips_path, rc.weather_path},
                           {"paths", "ingest", "access"},
                           {rc.demand_bin(), rc.features_bin(), rc.registry_csv(),
                            rc.scaler_json()}};
  for (const std::string& p : {rc.population_path, rc.employment_path}) {
    if (!p.empty()) {
      if (!fs::exists(p)) throw MissingFileError("opportunity file " + p);
      guard.inputs.push_back(p);
    }
  }
  if (!guard.should_run(force, log)) return;

  ingest::ParsedTrips trips = ingest::parse_trips(rc.trips_path);
  log << "ingest: " << trips.records.size() << " trips parsed, " << trips.skipped
      << " rows skipped\n";

  ingest::StationRegistry registry =
      ingest::filter_stations(trips, rc.min_annual_demand);
  log << "  " << registry.size() << " stations at or above " << rc.min_annual_demand
      << " annual trip ends\n";

  ingest::DateInterval range = ingest::covering_interval(trips.records);
  ingest::DemandTensor demand = ingest::aggregate_hourly(trips.records, registry, range);

  std::vector<ingest::WeatherRecord> weather = ingest::parse_weather(rc.weather_path);

  std::vector<double> pop(registry.size(), 0.0), emp(registry.size(), 0.0);
  if (!rc.population_path.empty())
    pop = access::access_vector(registry, access::parse_sites(rc.population_path),
                                rc.access_opts);
  else
    log << "  no population file; access_population feature is zero\n";
  if (!rc.employment_path.empty())
    emp = access::access_vector(registry, access::parse_sites(rc.employment_path),
                                rc.access_opts);
  else
    log << "  no employment file; access_employment feature is zero\n";

  ingest::JoinOptions jo;
  jo.include_humidity = rc.include_humidity;
  jo.max_gap_hours = rc.max_gap_hours;
  ingest::FeatureTensor features = ingest::join_weather(demand, weather, pop, emp, jo);

  write_dataset_artifacts(rc, registry, demand, features, log);
  guard.record();
}

inline void run_synth(const RunConfig& rc, bool force, std::ostream& log) {
  detail::StageGuard guard{rc,
                           "synth",
                           {},
                           {"synth", "ingest", "seed"},
                           {rc.demand_bin(), rc.features_bin(), rc.registry_csv(),
                            rc.scaler_json(), rc.planted_bin()}};
  if (!guard.should_run(force, log)) return;

  synthetic::SyntheticData data = synthetic::generate(rc.synth);
  log << "synth: seed " << rc.synth.seed << ", " << rc.synth.stations << " stations x "
      << rc.synth.slots << " slots (alpha " << rc.synth.alpha << ", beta "
      << rc.synth.beta << ", noise " << rc.synth.noise << ")\n";

  ingest::JoinOptions jo;
  jo.include_humidity = rc.include_humidity;
  jo.max_gap_hours = rc.max_gap_hours;
  ingest::FeatureTensor features = ingest::join_weather(
      data.demand, data.weather, data.access_population, data.access_employment, jo);

  write_dataset_artifacts(rc, data.registry, data.demand, features, log);
  serialize::write_static_adjacency(rc.planted_bin(), data.planted,
                                    graph::Channel::Sum);
  guard.record();
}

inline void run_access(const RunConfig& rc, bool force, std::ostream& log) {
  detail::require_artifact(rc.registry_csv(), "ingest or synth");
  if (rc.population_path.empty() || rc.employment_path.empty())
    throw ConfigError("access needs paths.population and paths.employment");
  if (!fs::exists(rc.population_path))
    throw MissingFileError("opportunity file " + rc.population_path);
  if (!fs::exists(rc.employment_path))
    throw MissingFileError("opportunity file " + rc.employment_path);

  detail::StageGuard guard{rc,
                           "access",
                           {rc.registry_csv(), rc.population_path, rc.employment_path},
                           {"access", "paths"},
                           {rc.access_csv()}};
  if (!guard.should_run(force, log)) return;

  ingest::StationRegistry registry = serialize::read_registry_csv(rc.registry_csv());
  std::vector<double> pop = access::access_vector(
      registry, access::parse_sites(rc.population_path), rc.access_opts);
  std::vector<double> emp = access::access_vector(
      registry, access::parse_sites(rc.employment_path), rc.access_opts);

  std::string out = "station_id,access_population,access_employment\n";
  for (std::size_t i = 0; i < registry.size(); ++i) {
    out += std::to_string(registry.stations[i].id) + "," +
           serialize::format_double(pop[i]) + "," + serialize::format_double(emp[i]) +
           "\n";
  }
  serialize::write_file_atomic(rc.access_csv(), out);

  auto stats = [&log](const char* name, const std::vector<double>& v) {
    double lo = v[0], hi = v[0], mean = 0.0;
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      mean += x;
    }
    mean /= static_cast<double>(v.size());
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-18s min %.1f  mean %.1f  max %.1f\n", name, lo,
                  mean, hi);
    log << buf;
  };
  log << "access: " << registry.size() << " stations, budget "
      << rc.access_opts.budget_minutes << " min at " << rc.access_opts.walking_speed_kmh
      << " km/h\n";
  stats("population", pop);
  stats("employment", emp);
  guard.record();
}

inline void run_graph(const RunConfig& rc, bool force, std::ostream& log) {
  detail::require_artifact(rc.demand_bin(), "ingest or synth");
  detail::require_artifact(rc.scaler_json(), "ingest or synth");

  detail::StageGuard guard{rc,
                           "graph",
                           {rc.demand_bin(), rc.scaler_json()},
                           {"graph"},
                           {rc.adjacency_bin()}};
  if (!guard.should_run(force, log)) return;

  ingest::DemandTensor demand = serialize::read_demand(rc.demand_bin());
  serialize::ScalerBundle scalers = serialize::read_scaler_json(rc.scaler_json());

  if (rc.graph_mode == "dynamic") {
    graph::AdjacencySeries series =
        graph::dynamic_adjacency(demand, rc.window_slots, rc.graph_opts);
    serialize::write_adjacency_series(rc.adjacency_bin(), series);
    log << "graph: dynamic, window " << rc.window_slots << " slots, channel "
        << graph::channel_name(rc.graph_opts.channel) << ", " << series.slots()
        << " matrices\n";
  } else {
    // static correlations use training slots only, so the test period never
    // shapes the operator
    ingest::DemandTensor train_part;
    train_part.start_ts = demand.start_ts;
    const std::size_t n = demand.stations();
    train_part.values = Tensor({scalers.cut, n, 2});
    std::memcpy(train_part.values.data(), demand.values.data(),
                scalers.cut * n * 2 * 8);
    Tensor adj = graph::static_adjacency(train_part, rc.graph_opts);
    serialize::write_static_adjacency(rc.adjacency_bin(), adj, rc.graph_opts.channel);

    double off = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < adj.rows(); ++i)
      for (std::size_t j = 0; j < adj.cols(); ++j)
        if (i != j) {
          off += adj(i, j);
          ++cnt;
        }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "graph: static over %zu train slots, mean off-diagonal %.4f\n",
                  scalers.cut, cnt ? off / static_cast<double>(cnt) : 0.0);
    log << buf;
  }
  guard.record();
}

inline json model_config_for(const RunConfig& rc, const std::string& kind,
                             std::size_t feature_count) {
  if (kind == "ggcnn") {
    nn::GgcnnConfig c = rc.ggcnn;
    c.features = feature_count;
    return serialize::model_config_json(c);
  }
  if (kind == "gcn") {
    nn::GcnConfig c = rc.gcn;
    c.features = feature_count;
    return serialize::model_config_json(c);
  }
  if (kind == "mlp") {
    nn::MlpConfig c = rc.mlp;
    c.features = feature_count;
    return serialize::model_config_json(c);
  }
  throw ConfigError("unknown model kind '" + kind + "'");
}

struct TrainedModel {
  std::unique_ptr<nn::Forecaster> model;
  train::TrainLog log;
  double seconds = 0.0;
};

inline TrainedModel train_model(const RunConfig& rc, const std::string& kind,
                                const Dataset& data) {
  const json cfg = model_config_for(rc, kind, data.features.features());
  TrainedModel out;
  out.model = serialize::make_model(kind, cfg, rc.tc.seed);

  std::vector<train::Sample> all = make_samples(data, 1, data.scalers.cut);
  auto [train_set, val_set] = train::hold_out_tail(std::move(all), rc.tc.val_fraction);

  const auto t0 = std::chrono::steady_clock::now();
  out.log = train::fit(*out.model, train_set, val_set, rc.tc);
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline void run_train(const RunConfig& rc, bool force, std::ostream& log) {
  detail::StageGuard guard{rc,
                           "train",
                           {rc.demand_bin(), rc.features_bin(), rc.scaler_json(),
                            rc.adjacency_bin()},
                           {"model", "train", "seed"},
                           {rc.checkpoint_bin(), rc.train_log_csv(), rc.train_summary()}};
  Dataset data = load_dataset(rc);
  if (!guard.should_run(force, log)) return;

  TrainedModel trained = train_model(rc, rc.model_kind, data);

  const json cfg = model_config_for(rc, rc.model_kind, data.features.features());
  serialize::save_checkpoint(rc.checkpoint_bin(), *trained.model, cfg, rc.tc.seed,
                             data.features.feature_names);
  serialize::write_train_log_csv(rc.train_log_csv(), trained.log);

  json extra;
  extra["model"] = rc.model_kind;
  extra["parameter_count"] = trained.model->parameter_count();
  extra["train_samples"] = data.scalers.cut > 1 ? data.scalers.cut - 1 : 0;
  serialize::write_train_summary_json(rc.train_summary(), trained.log, extra);

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "train: %s, %zu parameters, %zu epochs, best val loss %.6g (epoch %d), "
                "%.1f s\n",
                rc.model_kind.c_str(), trained.model->parameter_count(),
                trained.log.epochs.size(), trained.log.best_val_loss,
                trained.log.best_epoch, trained.seconds);
  log << buf;
  guard.record();
}

// ---------------------------------------------------------------------------
// evaluation

inline std::vector<Tensor> model_predictions(nn::Forecaster& model, const Dataset& data,
                                             const std::vector<std::size_t>& targets) {
  std::vector<Tensor> preds;
  preds.reserve(targets.size());
  for (std::size_t t : targets) {
    ad::Var out = model.forward(data.op_for_target(t), data.scaled_features_at(t));
    preds.push_back(out->value);
  }
  return preds;
}

inline std::string model_attributes(const RunConfig& rc, const std::string& kind) {
  if (kind == "persistence") return "copies previous slot";
  if (kind == "ols") return "linear on slot features";
  if (kind == "mlp") return "feedforward per station";
  if (kind == "gcn") return "2 graph convolutions";
  if (kind == "ggcnn")
    return "gated graph conv, steps " + std::to_string(rc.ggcnn.steps1) + "+" +
           std::to_string(rc.ggcnn.steps2);
  return "";
}

inline void run_eval(const RunConfig& rc, bool force, std::ostream& log) {
  detail::StageGuard guard{rc,
                           "eval",
                           {rc.demand_bin(), rc.features_bin(), rc.scaler_json(),
                            rc.adjacency_bin()},
                           {"model", "train", "eval", "seed"},
                           {rc.eval_json(), rc.eval_txt()}};
  const bool reuse_checkpoint = fs::exists(rc.checkpoint_bin());
  if (reuse_checkpoint) guard.inputs.push_back(rc.checkpoint_bin());
  Dataset data = load_dataset(rc);
  if (!guard.should_run(force, log)) return;

  const std::size_t cut = data.scalers.cut, total = data.scalers.total;
  const std::vector<std::size_t> test_targets = target_range(cut, total);
  if (test_targets.empty()) throw DegenerateSplitError("no test slots to evaluate");

  std::vector<Tensor> actual_scaled, actual_counts;
  for (std::size_t t : test_targets) {
    actual_scaled.push_back(data.scaled_demand_at(t));
    Tensor y(data.stations(), 2);
    for (std::size_t s = 0; s < data.stations(); ++s)
      for (std::size_t c = 0; c < 2; ++c)
        y(s, c) = data.demand.values.at3(t, s, c);
    actual_counts.push_back(std::move(y));
  }

  std::vector<metrics::MetricsReport> reports;
  std::vector<std::string> attributes;

  auto add_reports = [&](const std::string& name, const std::vector<Tensor>& scaled,
                         const std::vector<Tensor>& counts) {
    reports.push_back(metrics::compute_report(name, "scaled", scaled, actual_scaled));
    attributes.push_back(model_attributes(rc, name));
    reports.push_back(metrics::compute_report(name, "counts", counts, actual_counts));
    attributes.push_back(model_attributes(rc, name));
  };

  for (const std::string& name : rc.eval_models) {
    const auto t0 = std::chrono::steady_clock::now();
    if (name == "persistence") {
      std::vector<Tensor> counts =
          baselines::persistence_predictions(data.demand, test_targets);
      std::vector<Tensor> scaled;
      for (const Tensor& p : counts) {
        Tensor s(p.rows(), p.cols());
        for (std::size_t i = 0; i < p.rows(); ++i)
          for (std::size_t c = 0; c < 2; ++c)
            s(i, c) = data.scalers.targets.transform_value(c, p(i, c));
        scaled.push_back(std::move(s));
      }
      add_reports(name, scaled, counts);
    } else if (name == "ols") {
      std::vector<train::Sample> train_set = make_samples(data, 1, cut);
      const std::size_t n = data.stations(), nf = data.features.features();
      Tensor x(train_set.size() * n, nf), y(train_set.size() * n, 2);
      for (std::size_t i = 0; i < train_set.size(); ++i) {
        for (std::size_t s = 0; s < n; ++s) {
          for (std::size_t k = 0; k < nf; ++k)
            x(i * n + s, k) = train_set[i].x(s, k);
          for (std::size_t c = 0; c < 2; ++c) y(i * n + s, c) = train_set[i].y(s, c);
        }
      }
      baselines::OlsModel ols = baselines::ols_fit(x, y);
      std::vector<Tensor> scaled, counts;
      for (std::size_t t : test_targets) {
        Tensor p = ols.predict(data.scaled_features_at(t));
        counts.push_back(data.counts_from_scaled(p));
        scaled.push_back(std::move(p));
      }
      add_reports(name, scaled, counts);
      if (ols.ridged) log << "  ols: ridge fallback engaged\n";
    } else if (name == "mlp" || name == "gcn" || name == "ggcnn") {
      std::unique_ptr<nn::Forecaster> model;
      if (name == "ggcnn" && reuse_checkpoint) {
        serialize::LoadedModel lm = serialize::load_checkpoint(rc.checkpoint_bin());
        if (lm.model->kind() == "ggcnn") model = std::move(lm.model);
      }
      if (!model) {
        TrainedModel trained = train_model(rc, name, data);
        model = std::move(trained.model);
      }
      std::vector<Tensor> scaled = model_predictions(*model, data, test_targets);
      std::vector<Tensor> counts;
      for (const Tensor& p : scaled) counts.push_back(data.counts_from_scaled(p));
      add_reports(name, scaled, counts);
    } else {
      throw ConfigError("unknown eval model '" + name + "'");
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[80];
    std::snprintf(buf, sizeof(buf), "  %-12s evaluated in %.1f s\n", name.c_str(), secs);
    log << buf;
  }

  json out;
  out["dataset"] = {{"stations", data.stations()},
                    {"slots", total},
                    {"cut", cut},
                    {"n_test_slots", test_targets.size()},
                    {"graph", data.dynamic ? "dynamic" : "static"}};
  json rep_list = json::array();
  for (const auto& r : reports) rep_list.push_back(serialize::report_to_json(r));
  out["reports"] = rep_list;
  serialize::write_file_atomic(rc.eval_json(), out.dump(2) + "\n");

  const std::string table = serialize::render_report_table(reports, attributes);
  serialize::write_file_atomic(rc.eval_txt(), table);
  log << table;
  guard.record();
}

inline void run_predict(const RunConfig& rc, bool force, std::ostream& log) {
  detail::require_artifact(rc.checkpoint_bin(), "train");
  detail::StageGuard guard{rc,
                           "predict",
                           {rc.demand_bin(), rc.features_bin(), rc.scaler_json(),
                            rc.adjacency_bin(), rc.checkpoint_bin()},
                           {"model"},
                           {rc.predictions_csv()}};
  Dataset data = load_dataset(rc);
  if (!guard.should_run(force, log)) return;

  ingest::StationRegistry registry = serialize::read_registry_csv(rc.registry_csv());
  if (registry.size() != data.stations())
    throw ShapeMismatchError("registry does not match demand tensor");

  serialize::LoadedModel lm = serialize::load_checkpoint(rc.checkpoint_bin());

  // next unseen slot: latest weather and access values carry forward, the lag
  // channels take the final observed demand
  const std::size_t last = data.slots() - 1;
  const std::size_t n = data.stations(), nf = data.features.features();
  Tensor x(n, nf);
  const int lag_in = data.features.feature_index("last_in_trips");
  const int lag_out = data.features.feature_index("last_out_trips");
  if (lag_in < 0 || lag_out < 0) throw InputError("feature tensor lacks lag channels");
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t k = 0; k < nf; ++k) {
      double raw = data.features.values.at3(last, s, k);
      if (static_cast<int>(k) == lag_in)
        raw = data.demand.values.at3(last, s, ingest::kInChannel);
      else if (static_cast<int>(k) == lag_out)
        raw = data.demand.values.at3(last, s, ingest::kOutChannel);
      x(s, k) = data.scalers.features.transform_value(k, raw);
    }
  }
  const Tensor& op = data.dynamic ? data.ops[last] : data.ops[0];

  ad::Var pred = lm.model->forward(op, x);
  const Tensor& scaled = pred->value;
  Tensor counts = data.counts_from_scaled(scaled);

  std::string out =
      "station_id,predicted_in_scaled,predicted_out_scaled,predicted_in,predicted_out\n";
  char buf[200];
  for (std::size_t s = 0; s < n; ++s) {
    std::snprintf(buf, sizeof(buf), "%lld,%.6f,%.6f,%.6f,%.6f\n",
                  static_cast<long long>(registry.stations[s].id), scaled(s, 0),
                  scaled(s, 1), counts(s, 0), counts(s, 1));
    out += buf;
  }
  serialize::write_file_atomic(rc.predictions_csv(), out);
  log << "predict: next-slot forecast for " << n << " stations ("
      << format_timestamp(data.demand.slot_timestamp(last) + 3600) << ")\n";
  guard.record();
}

// fixed tiny instance: 4 stations, hidden width 8, propagation steps 4 and 3
inline bool run_grad_check(const RunConfig& rc, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();

  nn::GgcnnConfig cfg;
  cfg.features = 8;
  cfg.hidden1 = 8;
  cfg.hidden2 = 8;
  cfg.readout_hidden = {8};
  cfg.steps1 = 4;
  cfg.steps2 = 3;

  Rng rng(rc.seed);
  nn::GgcnnModel model(cfg, rng);

  const std::size_t n = 4;
  Tensor adj(n, n);
  for (std::size_t i = 0; i < n; ++i) adj(i, i) = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = rng.uniform();
      adj(i, j) = w;
      adj(j, i) = w;
    }

  train::Sample sample;
  sample.op = graph::propagation_operator(adj);
  sample.x = Tensor(n, cfg.features);
  sample.y = Tensor(n, 2);
  for (std::size_t i = 0; i < sample.x.size(); ++i) sample.x[i] = rng.uniform();
  for (std::size_t i = 0; i < sample.y.size(); ++i) sample.y[i] = rng.uniform();

  train::GradCheckReport report = train::grad_check(model, sample);

  char buf[160];
  log << "grad-check: ggcnn, 4 stations, hidden 8, steps 4+3, seed " << rc.seed << "\n";
  for (const auto& e : report.entries) {
    std::snprintf(buf, sizeof(buf), "  %-18s %6zu elements  max rel err %.3e\n",
                  e.name.c_str(), e.elements, e.max_rel_err);
    log << buf;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::snprintf(buf, sizeof(buf), "grad-check: worst %.3e (threshold 1e-4), %.1f s: %s\n",
                report.worst, secs, report.pass() ? "PASS" : "FAIL");
  log << buf;
  return report.pass();
}

}  // namespace stationcast::pipeline
