#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "stationcast/csv.hpp"
#include "stationcast/errors.hpp"
#include "stationcast/ingest.hpp"

namespace stationcast::access {

constexpr double kEarthRadiusKm = 6371.0;

inline double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  const double rad = M_PI / 180.0;
  const double phi1 = lat1 * rad, phi2 = lat2 * rad;
  const double dphi = (lat2 - lat1) * rad;
  const double dlmb = (lon2 - lon1) * rad;
  const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) *
                       std::sin(dlmb / 2) * std::sin(dlmb / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

struct OpportunitySite {
  double lat = 0.0, lon = 0.0;
  double weight = 0.0;
};

struct AccessOptions {
  double walking_speed_kmh = 5.0;
  double budget_minutes = 15.0;
};

// Cumulative opportunities: sum of site weights whose walking time from the
// station is within the budget, boundary inclusive.
inline double cumulative_access(double lat, double lon,
                                const std::vector<OpportunitySite>& sites,
                                const AccessOptions& opts = {}) {
  if (opts.walking_speed_kmh <= 0.0) throw ConfigError("walking speed must be positive");
  if (opts.budget_minutes < 0.0) throw ConfigError("budget must be non-negative");
  const double reach_km = opts.walking_speed_kmh * opts.budget_minutes / 60.0;
  double total = 0.0;
  for (const auto& s : sites) {
    if (haversine_km(lat, lon, s.lat, s.lon) <= reach_km) total += s.weight;
  }
  return total;
}

inline std::vector<double> access_vector(const ingest::StationRegistry& registry,
                                         const std::vector<OpportunitySite>& sites,
                                         const AccessOptions& opts = {}) {
  std::vector<double> out(registry.size(), 0.0);
  for (std::size_t i = 0; i < registry.size(); ++i) {
    out[i] = cumulative_access(registry.stations[i].lat, registry.stations[i].lon,
                               sites, opts);
  }
  return out;
}

// CSV with columns lat,lon,weight.
inline std::vector<OpportunitySite> parse_sites(const std::string& path) {
  csv::Table table = csv::read_file(path);
  auto col = [&](const char* name) {
    int idx = table.column(name);
    if (idx < 0) throw MissingColumnError(path + ": missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(idx);
  };
  const std::size_t c_lat = col("lat");
  const std::size_t c_lon = col("lon");
  const std::size_t c_w = col("weight");

  std::vector<OpportunitySite> out;
  for (const auto& row : table.rows) {
    if (row.size() <= std::max({c_lat, c_lon, c_w})) continue;
    auto lat = ingest::detail::parse_double(row[c_lat]);
    auto lon = ingest::detail::parse_double(row[c_lon]);
    auto w = ingest::detail::parse_double(row[c_w]);
    if (!lat || !lon || !w) continue;
    if (*lat < -90.0 || *lat > 90.0 || *lon < -180.0 || *lon > 180.0) continue;
    out.push_back({*lat, *lon, *w});
  }
  return out;
}

}  // namespace stationcast::access
