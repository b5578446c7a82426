#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <stationcast/graph.hpp>
#include <stationcast/synthetic.hpp>

namespace sy = stationcast::synthetic;
namespace sg = stationcast::graph;
using stationcast::Tensor;

TEST_CASE("generator output shapes and registry") {
  sy::SyntheticSpec spec;
  spec.stations = 9;
  spec.slots = 100;
  spec.communities = 3;
  auto data = sy::generate(spec);

  REQUIRE(data.registry.size() == 9);
  REQUIRE(data.demand.values.dim(0) == 100);
  REQUIRE(data.demand.values.dim(1) == 9);
  REQUIRE(data.demand.values.dim(2) == 2);
  REQUIRE(data.access_population.size() == 9);
  REQUIRE(data.access_employment.size() == 9);
  REQUIRE(data.weather.size() == 100);
  REQUIRE(data.planted.dim(0) == 9);
  REQUIRE(data.planted.dim(1) == 9);

  // ids ascend and the index map inverts them
  for (std::size_t i = 0; i < data.registry.size(); ++i) {
    const auto& st = data.registry.stations[i];
    REQUIRE(st.id == 101 + static_cast<std::int64_t>(i));
    REQUIRE(data.registry.index_of(st.id).value() == i);
    REQUIRE_FALSE(st.name.empty());
    REQUIRE(st.lat >= -90.0);
    REQUIRE(st.lat <= 90.0);
  }

  // hourly, consecutive weather slots
  for (std::size_t t = 0; t + 1 < data.weather.size(); ++t)
    REQUIRE(data.weather[t + 1].slot - data.weather[t].slot == 3600);
  REQUIRE(data.weather[0].slot == data.demand.start_ts);
}

TEST_CASE("generated demand is finite and non-negative") {
  sy::SyntheticSpec spec;
  spec.stations = 8;
  spec.slots = 300;
  auto data = sy::generate(spec);
  REQUIRE(data.demand.values.all_finite());
  for (std::size_t i = 0; i < data.demand.values.size(); ++i)
    REQUIRE(data.demand.values[i] >= 0.0);
  for (const auto& w : data.weather) {
    REQUIRE(std::isfinite(w.temperature));
    REQUIRE(std::isfinite(w.precipitation));
    REQUIRE(w.precipitation >= 0.0);
    REQUIRE(std::isfinite(w.pressure));
    REQUIRE(std::isfinite(w.wind_speed));
    REQUIRE(std::isfinite(w.humidity));
  }
}

TEST_CASE("planted graph is a valid block structure") {
  sy::SyntheticSpec spec;
  spec.stations = 12;
  spec.slots = 50;
  spec.communities = 4;
  auto data = sy::generate(spec);
  const std::size_t n = spec.stations;
  const std::size_t per = n / spec.communities;

  for (std::size_t i = 0; i < n; ++i) {
    REQUIRE(data.planted(i, i) == 1.0);
    for (std::size_t j = 0; j < n; ++j) {
      REQUIRE(data.planted(i, j) == data.planted(j, i));
      const bool same_community = (i / per) == (j / per);
      if (i == j) continue;
      if (same_community) {
        REQUIRE(data.planted(i, j) >= 0.7);
        REQUIRE(data.planted(i, j) <= 0.9);
      } else {
        REQUIRE(data.planted(i, j) == 0.0);
      }
    }
  }

  // the planted matrix is a usable propagation operator source
  REQUIRE_NOTHROW(sg::propagation_operator(data.planted));
}

TEST_CASE("generation is deterministic in the seed") {
  sy::SyntheticSpec spec;
  spec.stations = 6;
  spec.slots = 80;
  auto a = sy::generate(spec);
  auto b = sy::generate(spec);
  REQUIRE(a.demand.values.size() == b.demand.values.size());
  for (std::size_t i = 0; i < a.demand.values.size(); ++i)
    REQUIRE(a.demand.values[i] == b.demand.values[i]);
  for (std::size_t i = 0; i < a.planted.size(); ++i)
    REQUIRE(a.planted[i] == b.planted[i]);
  for (std::size_t t = 0; t < a.weather.size(); ++t)
    REQUIRE(a.weather[t].temperature == b.weather[t].temperature);

  spec.seed = 43;
  auto c = sy::generate(spec);
  bool differs = false;
  for (std::size_t i = 0; i < a.demand.values.size(); ++i)
    if (a.demand.values[i] != c.demand.values[i]) differs = true;
  REQUIRE(differs);
}

TEST_CASE("within-community correlation exceeds cross-community") {
  sy::SyntheticSpec spec;
  spec.stations = 16;
  spec.slots = 600;
  spec.communities = 4;
  auto data = sy::generate(spec);
  Tensor adj = sg::static_adjacency(data.demand, {});

  const std::size_t per = spec.stations / spec.communities;
  double within = 0.0, cross = 0.0;
  std::size_t nw = 0, nx = 0;
  for (std::size_t i = 0; i < spec.stations; ++i)
    for (std::size_t j = i + 1; j < spec.stations; ++j) {
      if ((i / per) == (j / per)) {
        within += adj(i, j);
        ++nw;
      } else {
        cross += adj(i, j);
        ++nx;
      }
    }
  REQUIRE(within / static_cast<double>(nw) >
          cross / static_cast<double>(nx) + 0.1);
}

TEST_CASE("temperature effect shifts demand") {
  // beta couples demand to the temperature anomaly, so zeroing it changes
  // the series even at identical seeds
  sy::SyntheticSpec warm;
  warm.stations = 6;
  warm.slots = 120;
  warm.beta = 0.5;
  sy::SyntheticSpec cold = warm;
  cold.beta = 0.0;
  auto a = sy::generate(warm);
  auto b = sy::generate(cold);
  bool differs = false;
  for (std::size_t i = 0; i < a.demand.values.size(); ++i)
    if (a.demand.values[i] != b.demand.values[i]) differs = true;
  REQUIRE(differs);
}

TEST_CASE("spec validation") {
  sy::SyntheticSpec spec;
  spec.stations = 1;
  REQUIRE_THROWS_AS(sy::generate(spec), stationcast::ConfigError);
  spec.stations = 10;
  spec.communities = 11;
  REQUIRE_THROWS_AS(sy::generate(spec), stationcast::ConfigError);
  spec.communities = 0;
  REQUIRE_THROWS_AS(sy::generate(spec), stationcast::ConfigError);
  spec.communities = 2;
  spec.noise = -0.1;
  REQUIRE_THROWS_AS(sy::generate(spec), stationcast::ConfigError);
  spec.noise = 0.2;
  spec.slots = 1;
  REQUIRE_THROWS_AS(sy::generate(spec), stationcast::ConfigError);
}
