#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stationcast/csv.hpp"
#include "stationcast/errors.hpp"
#include "stationcast/tensor.hpp"
#include "stationcast/timestamps.hpp"

namespace stationcast::ingest {

enum class UserType { Customer, Subscriber, Unknown };

struct TripRecord {
  std::string trip_id;
  std::int64_t start_time = 0;
  std::int64_t end_time = 0;
  std::int64_t start_station_id = 0;
  std::int64_t end_station_id = 0;
  double start_lat = 0.0, start_lon = 0.0;
  double end_lat = 0.0, end_lon = 0.0;
  UserType user_type = UserType::Unknown;
};

struct WeatherRecord {
  std::int64_t slot = 0;  // hourly timestamp
  double temperature = 0.0;
  double wind_speed = 0.0;
  double humidity = 0.0;
  double precipitation = 0.0;
  double pressure = 0.0;
};

struct Station {
  std::int64_t id = 0;
  std::string name;
  double lat = 0.0, lon = 0.0;
  std::int64_t annual_demand = 0;
};

// Retained stations in ascending id order; index map is contiguous 0..N-1.
struct StationRegistry {
  std::vector<Station> stations;
  std::unordered_map<std::int64_t, std::size_t> index;

  std::size_t size() const { return stations.size(); }
  std::optional<std::size_t> index_of(std::int64_t id) const {
    auto it = index.find(id);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

struct DateInterval {
  std::int64_t start = 0;  // inclusive, hour aligned
  std::int64_t end = 0;    // exclusive, hour aligned
  std::size_t slots() const {
    return static_cast<std::size_t>((end - start) / 3600);
  }
};

constexpr std::size_t kInChannel = 0;
constexpr std::size_t kOutChannel = 1;

// Hourly (slots x stations x 2) demand counts; channel 0 = in, 1 = out.
struct DemandTensor {
  Tensor values;
  std::int64_t start_ts = 0;

  std::size_t slots() const { return values.dim(0); }
  std::size_t stations() const { return values.dim(1); }
  std::int64_t slot_timestamp(std::size_t t) const {
    return start_ts + static_cast<std::int64_t>(t) * 3600;
  }
};

inline const std::vector<std::string>& canonical_feature_order() {
  static const std::vector<std::string> order = {
      "precipitation", "pressure",        "temperature",       "wind_speed",
      "access_population", "access_employment", "last_in_trips", "last_out_trips"};
  return order;
}

// (slots x stations x F) feature stack, canonical order above, humidity
// appended as a ninth column when enabled.
struct FeatureTensor {
  Tensor values;
  std::vector<std::string> feature_names;
  std::int64_t start_ts = 0;

  std::size_t slots() const { return values.dim(0); }
  std::size_t stations() const { return values.dim(1); }
  std::size_t features() const { return values.dim(2); }
  int feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i)
      if (feature_names[i] == name) return static_cast<int>(i);
    return -1;
  }
};

struct SplitSpec {
  double train_fraction = 0.70;
};

struct SplitIndices {
  std::size_t cut = 0;      // train slots [0, cut), test slots [cut, total)
  std::size_t total = 0;
};

inline SplitIndices split_slots(std::size_t total, const SplitSpec& spec) {
  if (total < 2) throw DegenerateSplitError("need at least 2 slots to split");
  SplitIndices s;
  s.total = total;
  s.cut = static_cast<std::size_t>(
      std::floor(spec.train_fraction * static_cast<double>(total)));
  if (s.cut == 0 || s.cut >= total) {
    throw DegenerateSplitError("split leaves an empty side (cut=" +
                               std::to_string(s.cut) + " of " +
                               std::to_string(total) + ")");
  }
  return s;
}

// Per-column min/max learned from the training slots only. Constant columns
// transform to 0; out-of-range values extrapolate, no clamping.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(std::vector<double> mins, std::vector<double> maxs)
      : mins_(std::move(mins)), maxs_(std::move(maxs)) {}

  std::size_t columns() const { return mins_.size(); }
  const std::vector<double>& mins() const { return mins_; }
  const std::vector<double>& maxs() const { return maxs_; }

  double transform_value(std::size_t col, double x) const {
    const double lo = mins_[col], hi = maxs_[col];
    if (hi <= lo) return 0.0;
    return (x - lo) / (hi - lo);
  }

  double inverse_value(std::size_t col, double y) const {
    const double lo = mins_[col], hi = maxs_[col];
    if (hi <= lo) return lo;
    return lo + y * (hi - lo);
  }

 private:
  std::vector<double> mins_, maxs_;
};

// ---------------------------------------------------------------------------
// parsing

struct TripSchema {
  std::string trip_id = "trip_id";
  std::string start_time = "start_time";
  std::string end_time = "end_time";
  std::string start_station_id = "from_station_id";
  std::string end_station_id = "to_station_id";
  // optional columns; empty string or absent header entry means "not present"
  std::string start_station_name = "from_station_name";
  std::string end_station_name = "to_station_name";
  std::string start_lat = "start_lat";
  std::string start_lon = "start_lon";
  std::string end_lat = "end_lat";
  std::string end_lon = "end_lon";
  std::string user_type = "usertype";
};

struct ParsedTrips {
  std::vector<TripRecord> records;
  std::size_t skipped = 0;
  // first-seen station names/coords keyed by station id, for the registry
  std::map<std::int64_t, std::string> station_names;
  std::map<std::int64_t, std::pair<double, double>> station_coords;
};

namespace detail {

inline std::optional<std::int64_t> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  try {
    std::int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  try {
    double v = std::stod(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

}  // namespace detail

inline ParsedTrips parse_trips(const std::string& path, const TripSchema& schema = {}) {
  csv::Table table = csv::read_file(path);
  if (table.rows.empty()) throw EmptyFileError(path + " has no data rows");

  auto require = [&](const std::string& col) {
    int idx = table.column(col);
    if (idx < 0) throw MissingColumnError(path + ": missing column '" + col + "'");
    return idx;
  };
  const int c_id = require(schema.trip_id);
  const int c_start = require(schema.start_time);
  const int c_end = require(schema.end_time);
  const int c_sst = require(schema.start_station_id);
  const int c_est = require(schema.end_station_id);
  const int c_sname = table.column(schema.start_station_name);
  const int c_ename = table.column(schema.end_station_name);
  const int c_slat = table.column(schema.start_lat);
  const int c_slon = table.column(schema.start_lon);
  const int c_elat = table.column(schema.end_lat);
  const int c_elon = table.column(schema.end_lon);
  const int c_user = table.column(schema.user_type);

  ParsedTrips out;
  auto cell = [](const std::vector<std::string>& row, int idx) -> const std::string& {
    static const std::string empty;
    if (idx < 0 || static_cast<std::size_t>(idx) >= row.size()) return empty;
    return row[static_cast<std::size_t>(idx)];
  };

  for (const auto& row : table.rows) {
    TripRecord r;
    r.trip_id = cell(row, c_id);
    auto st = parse_timestamp(cell(row, c_start));
    auto et = parse_timestamp(cell(row, c_end));
    auto ss = detail::parse_int(cell(row, c_sst));
    auto es = detail::parse_int(cell(row, c_est));
    if (!st || !et || !ss || !es || *et < *st) {
      ++out.skipped;
      continue;
    }
    r.start_time = *st;
    r.end_time = *et;
    r.start_station_id = *ss;
    r.end_station_id = *es;

    bool bad_coords = false;
    auto coord = [&](int idx, double lo, double hi) -> double {
      auto v = detail::parse_double(cell(row, idx));
      if (!v) return 0.0;
      if (*v < lo || *v > hi) bad_coords = true;
      return *v;
    };
    r.start_lat = coord(c_slat, -90.0, 90.0);
    r.start_lon = coord(c_slon, -180.0, 180.0);
    r.end_lat = coord(c_elat, -90.0, 90.0);
    r.end_lon = coord(c_elon, -180.0, 180.0);
    if (bad_coords) {
      ++out.skipped;
      continue;
    }

    const std::string& ut = cell(row, c_user);
    if (ut == "Customer") r.user_type = UserType::Customer;
    else if (ut == "Subscriber") r.user_type = UserType::Subscriber;

    if (c_sname >= 0 && !out.station_names.count(r.start_station_id))
      out.station_names[r.start_station_id] = cell(row, c_sname);
    if (c_ename >= 0 && !out.station_names.count(r.end_station_id))
      out.station_names[r.end_station_id] = cell(row, c_ename);
    if (c_slat >= 0 && !out.station_coords.count(r.start_station_id))
      out.station_coords[r.start_station_id] = {r.start_lat, r.start_lon};
    if (c_elat >= 0 && !out.station_coords.count(r.end_station_id))
      out.station_coords[r.end_station_id] = {r.end_lat, r.end_lon};

    out.records.push_back(std::move(r));
  }

  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const TripRecord& a, const TripRecord& b) {
                     return a.start_time < b.start_time;
                   });
  return out;
}

// Annual demand counts both trip ends; stations at or above the threshold are
// retained, indexed in ascending station id order.
inline StationRegistry filter_stations(const ParsedTrips& trips,
                                       std::int64_t min_annual_demand) {
  if (trips.records.empty()) throw EmptyFileError("no trips to filter stations from");

  std::map<std::int64_t, std::int64_t> counts;
  for (const auto& t : trips.records) {
    ++counts[t.start_station_id];
    ++counts[t.end_station_id];
  }

  StationRegistry reg;
  for (const auto& [id, n] : counts) {
    if (n < min_annual_demand) continue;
    Station s;
    s.id = id;
    s.annual_demand = n;
    if (auto it = trips.station_names.find(id); it != trips.station_names.end())
      s.name = it->second;
    if (auto it = trips.station_coords.find(id); it != trips.station_coords.end()) {
      s.lat = it->second.first;
      s.lon = it->second.second;
    }
    reg.index[id] = reg.stations.size();
    reg.stations.push_back(std::move(s));
  }
  if (reg.stations.empty()) {
    throw NoStationsRetainedError("threshold " + std::to_string(min_annual_demand) +
                                  " retains no stations");
  }
  return reg;
}

inline DateInterval covering_interval(const std::vector<TripRecord>& trips) {
  if (trips.empty()) throw EmptyFileError("no trips");
  std::int64_t lo = trips.front().start_time, hi = trips.front().end_time;
  for (const auto& t : trips) {
    lo = std::min(lo, t.start_time);
    hi = std::max(hi, t.end_time);
  }
  return DateInterval{floor_to_hour(lo), floor_to_hour(hi) + 3600};
}

// Out-trips count by start station/time, in-trips by end station/time; a trip
// touching an unretained station still contributes on its retained side.
inline DemandTensor aggregate_hourly(const std::vector<TripRecord>& trips,
                                     const StationRegistry& registry,
                                     const DateInterval& range) {
  const std::size_t slots = range.slots();
  const std::size_t n = registry.size();
  DemandTensor d;
  d.start_ts = range.start;
  d.values = Tensor({slots, n, 2});

  auto slot_of = [&](std::int64_t ts) -> std::optional<std::size_t> {
    if (ts < range.start || ts >= range.end) return std::nullopt;
    return static_cast<std::size_t>((ts - range.start) / 3600);
  };

  for (const auto& t : trips) {
    if (auto idx = registry.index_of(t.start_station_id)) {
      if (auto s = slot_of(t.start_time)) d.values.at3(*s, *idx, kOutChannel) += 1.0;
    }
    if (auto idx = registry.index_of(t.end_station_id)) {
      if (auto s = slot_of(t.end_time)) d.values.at3(*s, *idx, kInChannel) += 1.0;
    }
  }
  return d;
}

struct JoinOptions {
  bool include_humidity = false;
  std::int64_t max_gap_hours = 24;
};

// Hourly weather aligned to the demand slots, forward-filled across gaps of
// at most max_gap_hours. The lag features shift demand by one slot; slot 0
// lags are zero.
inline FeatureTensor join_weather(const DemandTensor& demand,
                                  const std::vector<WeatherRecord>& weather,
                                  const std::vector<double>& access_population,
                                  const std::vector<double>& access_employment,
                                  const JoinOptions& opts = {}) {
  const std::size_t slots = demand.slots();
  const std::size_t n = demand.stations();
  if (access_population.size() != n || access_employment.size() != n) {
    throw ShapeMismatchError("access vectors do not match station count");
  }

  std::map<std::int64_t, WeatherRecord> by_slot;
  for (const auto& w : weather) by_slot[floor_to_hour(w.slot)] = w;

  std::vector<WeatherRecord> filled(slots);
  const WeatherRecord* last = nullptr;
  std::int64_t last_ts = 0;
  for (std::size_t t = 0; t < slots; ++t) {
    const std::int64_t ts = demand.slot_timestamp(t);
    auto it = by_slot.find(ts);
    if (it != by_slot.end()) {
      filled[t] = it->second;
      last = &it->second;
      last_ts = ts;
    } else {
      if (!last) {
        throw WeatherGapError("no weather record at or before " + format_timestamp(ts));
      }
      const std::int64_t gap_h = (ts - last_ts) / 3600;
      if (gap_h > opts.max_gap_hours) {
        throw WeatherGapError("weather gap of " + std::to_string(gap_h) +
                              " h at " + format_timestamp(ts) + " exceeds " +
                              std::to_string(opts.max_gap_hours) + " h");
      }
      filled[t] = *last;
      filled[t].slot = ts;
    }
  }

  FeatureTensor f;
  f.start_ts = demand.start_ts;
  f.feature_names = canonical_feature_order();
  if (opts.include_humidity) f.feature_names.push_back("humidity");
  const std::size_t nf = f.feature_names.size();
  f.values = Tensor({slots, n, nf});

  for (std::size_t t = 0; t < slots; ++t) {
    const WeatherRecord& w = filled[t];
    for (std::size_t s = 0; s < n; ++s) {
      f.values.at3(t, s, 0) = w.precipitation;
      f.values.at3(t, s, 1) = w.pressure;
      f.values.at3(t, s, 2) = w.temperature;
      f.values.at3(t, s, 3) = w.wind_speed;
      f.values.at3(t, s, 4) = access_population[s];
      f.values.at3(t, s, 5) = access_employment[s];
      if (t > 0) {
        f.values.at3(t, s, 6) = demand.values.at3(t - 1, s, kInChannel);
        f.values.at3(t, s, 7) = demand.values.at3(t - 1, s, kOutChannel);
      }
      if (opts.include_humidity) f.values.at3(t, s, 8) = w.humidity;
    }
  }
  return f;
}

inline std::vector<WeatherRecord> parse_weather(const std::string& path) {
  csv::Table table = csv::read_file(path);
  auto col = [&](const char* name) {
    int idx = table.column(name);
    if (idx < 0) throw MissingColumnError(path + ": missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(idx);
  };
  const std::size_t c_slot = col("slot");
  const std::size_t c_temp = col("temperature");
  const std::size_t c_wind = col("wind_speed");
  const std::size_t c_hum = col("humidity");
  const std::size_t c_prec = col("precipitation");
  const std::size_t c_pres = col("pressure");

  std::vector<WeatherRecord> out;
  for (const auto& row : table.rows) {
    if (row.size() <= std::max({c_slot, c_temp, c_wind, c_hum, c_prec, c_pres})) continue;
    auto ts = parse_timestamp(row[c_slot]);
    auto temp = detail::parse_double(row[c_temp]);
    auto wind = detail::parse_double(row[c_wind]);
    auto hum = detail::parse_double(row[c_hum]);
    auto prec = detail::parse_double(row[c_prec]);
    auto pres = detail::parse_double(row[c_pres]);
    if (!ts || !temp || !wind || !hum || !prec || !pres) continue;
    out.push_back({*ts, *temp, *wind, *hum, *prec, *pres});
  }
  return out;
}

// Min/max over the training slots only (all stations pooled per feature).
inline MinMaxScaler fit_scaler(const FeatureTensor& features, const SplitIndices& split) {
  if (split.cut == 0) throw DegenerateSplitError("empty training portion");
  const std::size_t nf = features.features();
  std::vector<double> mins(nf, std::numeric_limits<double>::infinity());
  std::vector<double> maxs(nf, -std::numeric_limits<double>::infinity());
  for (std::size_t t = 0; t < split.cut; ++t) {
    for (std::size_t s = 0; s < features.stations(); ++s) {
      for (std::size_t k = 0; k < nf; ++k) {
        const double v = features.values.at3(t, s, k);
        mins[k] = std::min(mins[k], v);
        maxs[k] = std::max(maxs[k], v);
      }
    }
  }
  return MinMaxScaler(std::move(mins), std::move(maxs));
}

// Per-channel min/max of the training-slot demand, for target scaling.
inline MinMaxScaler fit_target_scaler(const DemandTensor& demand, const SplitIndices& split) {
  if (split.cut == 0) throw DegenerateSplitError("empty training portion");
  std::vector<double> mins(2, std::numeric_limits<double>::infinity());
  std::vector<double> maxs(2, -std::numeric_limits<double>::infinity());
  for (std::size_t t = 0; t < split.cut; ++t) {
    for (std::size_t s = 0; s < demand.stations(); ++s) {
      for (std::size_t c = 0; c < 2; ++c) {
        const double v = demand.values.at3(t, s, c);
        mins[c] = std::min(mins[c], v);
        maxs[c] = std::max(maxs[c], v);
      }
    }
  }
  return MinMaxScaler(std::move(mins), std::move(maxs));
}

}  // namespace stationcast::ingest
