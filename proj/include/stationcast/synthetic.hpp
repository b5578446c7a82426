#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stationcast/errors.hpp"
#include "stationcast/graph.hpp"
#include "stationcast/ingest.hpp"
#include "stationcast/rng.hpp"
#include "stationcast/tensor.hpp"

namespace stationcast::synthetic {

struct SyntheticSpec {
  std::size_t stations = 20;
  std::size_t slots = 2000;
  std::uint64_t seed = 42;
  double alpha = 0.3;  // spatial diffusion strength
  double beta = 0.5;   // temperature covariate effect
  double noise = 0.2;  // noise level relative to station amplitude
  std::size_t communities = 4;

  void validate() const {
    if (stations < 2) throw ConfigError("synthetic: need at least 2 stations");
    if (slots < 2) throw ConfigError("synthetic: need at least 2 slots");
    if (communities < 1 || communities > stations)
      throw ConfigError("synthetic: communities must lie in [1, stations]");
    if (noise < 0) throw ConfigError("synthetic: noise must be non-negative");
  }
};

struct SyntheticData {
  ingest::StationRegistry registry;
  ingest::DemandTensor demand;
  std::vector<ingest::WeatherRecord> weather;
  std::vector<double> access_population;
  std::vector<double> access_employment;
  Tensor planted;  // ground-truth adjacency, symmetric, diagonal 1
};

// Demand with planted structure: per-station daily sinusoid whose phase is
// shared within a community, weekly amplitude modulation, diffusion of the
// previous slot through the planted graph, a temperature effect, and
// relative Gaussian noise, rectified at zero. Values stay real-valued so the
// zero-noise case is exactly the closed-form signal.
inline SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n = spec.stations, t_slots = spec.slots, nc = spec.communities;

  auto community = [&](std::size_t i) { return i * nc / n; };

  SyntheticData out;
  out.planted = Tensor(n, n);
  for (std::size_t i = 0; i < n; ++i) out.planted(i, i) = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (community(i) == community(j)) {
        const double w = 0.7 + 0.2 * rng.uniform();
        out.planted(i, j) = w;
        out.planted(j, i) = w;
      }
    }
  }
  const Tensor diffusion_op = graph::propagation_operator(out.planted);

  // level and amplitude are mostly community traits, so neighbor averaging
  // denoises rather than erasing station identity
  std::vector<double> comm_base(nc), comm_amp(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    comm_base[c] = 6.0 + 3.0 * rng.uniform();
    comm_amp[c] = 3.0 + 2.0 * rng.uniform();
  }
  std::vector<double> base(n), amp(n), phase(n), weekly_phase(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = community(i);
    base[i] = comm_base[c] + 0.5 * rng.uniform();
    amp[i] = comm_amp[c] + 0.3 * rng.uniform();
    phase[i] = 2.0 * M_PI * static_cast<double>(c) / static_cast<double>(nc) +
               rng.uniform(-0.15, 0.15);
    weekly_phase[i] = 2.0 * M_PI * static_cast<double>(c) / static_cast<double>(nc) + 1.0;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = community(i);
    ingest::Station st;
    st.id = 101 + static_cast<std::int64_t>(i);
    st.name = "synthetic-" + std::to_string(st.id);
    st.lat = 41.85 + 0.03 * static_cast<double>(c) + rng.uniform(-0.004, 0.004);
    st.lon = -87.65 - 0.02 * static_cast<double>(c) + rng.uniform(-0.004, 0.004);
    out.registry.index[st.id] = i;
    out.registry.stations.push_back(std::move(st));
  }

  out.access_population.resize(n);
  out.access_employment.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.access_population[i] = rng.uniform(2000.0, 38000.0);
    out.access_employment[i] = rng.uniform(1000.0, 20000.0);
  }

  const std::int64_t start_ts = 1546300800;  // 2019-01-01 00:00:00
  out.weather.resize(t_slots);
  for (std::size_t t = 0; t < t_slots; ++t) {
    const double td = static_cast<double>(t);
    const double hour = static_cast<double>(t % 24);
    ingest::WeatherRecord w;
    w.slot = start_ts + static_cast<std::int64_t>(t) * 3600;
    w.temperature = 10.0 + 8.0 * std::sin(2.0 * M_PI * td / static_cast<double>(t_slots)) +
                    4.0 * std::sin(2.0 * M_PI * hour / 24.0 - 2.0) + 0.8 * rng.normal();
    const double shower = rng.uniform();
    w.precipitation = shower < 0.08 ? 2.0 * rng.uniform() * rng.uniform() : 0.0;
    w.pressure = 1013.0 + 6.0 * std::sin(2.0 * M_PI * td / 337.0 + 0.4) + 0.5 * rng.normal();
    w.wind_speed = 3.0 + 2.0 * std::abs(rng.normal());
    w.humidity = 60.0 + 15.0 * std::sin(2.0 * M_PI * td / 209.0 + 2.0) + 2.0 * rng.normal();
    out.weather[t] = w;
  }

  out.demand.start_ts = start_ts;
  out.demand.values = Tensor({t_slots, n, 2});
  const double ch_phase[2] = {-0.8, 0.0};  // in lags out

  std::vector<double> prev(2 * n);
  for (std::size_t ch = 0; ch < 2; ++ch)
    for (std::size_t i = 0; i < n; ++i) prev[ch * n + i] = base[i];
  std::vector<double> diffused(n), next(2 * n);

  for (std::size_t t = 0; t < t_slots; ++t) {
    const double hour = static_cast<double>(t % 24);
    const double week = static_cast<double>(t) / 168.0;
    const double temp_effect =
        spec.beta * (out.weather[t].temperature - 10.0) / 8.0;
    for (std::size_t ch = 0; ch < 2; ++ch) {
      for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          d += diffusion_op(i, j) * prev[ch * n + j];
        diffused[i] = d;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double weekly =
            1.0 + 0.3 * std::sin(2.0 * M_PI * week + weekly_phase[i]);
        const double daily =
            std::sin(2.0 * M_PI * hour / 24.0 + phase[i] + ch_phase[ch]);
        double v = base[i] + amp[i] * weekly * daily + spec.alpha * diffused[i] +
                   temp_effect + spec.noise * amp[i] * rng.normal();
        v = std::max(0.0, v);
        out.demand.values.at3(t, i, ch) = v;
        next[ch * n + i] = v;
      }
    }
    prev = next;
  }
  return out;
}

}  // namespace stationcast::synthetic
