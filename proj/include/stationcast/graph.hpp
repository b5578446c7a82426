#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stationcast/errors.hpp"
#include "stationcast/ingest.hpp"
#include "stationcast/tensor.hpp"

namespace stationcast::graph {

enum class Channel { In, Out, Sum };

inline Channel channel_from_string(const std::string& s) {
  if (s == "in") return Channel::In;
  if (s == "out") return Channel::Out;
  if (s == "sum") return Channel::Sum;
  throw ConfigError("unknown demand channel '" + s + "' (expected in|out|sum)");
}

inline std::string channel_name(Channel c) {
  switch (c) {
    case Channel::In: return "in";
    case Channel::Out: return "out";
    default: return "sum";
  }
}

// Sample Pearson correlation, two-pass. nullopt marks the undefined case
// (either series has zero variance).
inline std::optional<double> pearson(const std::vector<double>& x,
                                     const std::vector<double>& y) {
  if (x.size() != y.size())
    throw LengthMismatchError("pearson: series lengths " + std::to_string(x.size()) +
                              " vs " + std::to_string(y.size()));
  const std::size_t n = x.size();
  if (n < 2) throw LengthMismatchError("pearson: need at least 2 samples");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

struct GraphOptions {
  Channel channel = Channel::Out;
  bool clip_negative = true;
  int top_k = 0;  // 0 disables row sparsification
};

// (T x N) matrix of per-station series for the chosen channel.
inline Tensor demand_series(const ingest::DemandTensor& demand, Channel channel) {
  const std::size_t t_slots = demand.slots(), n = demand.stations();
  Tensor s(t_slots, n);
  for (std::size_t t = 0; t < t_slots; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      switch (channel) {
        case Channel::In: s(t, i) = demand.values.at3(t, i, ingest::kInChannel); break;
        case Channel::Out: s(t, i) = demand.values.at3(t, i, ingest::kOutChannel); break;
        case Channel::Sum:
          s(t, i) = demand.values.at3(t, i, ingest::kInChannel) +
                    demand.values.at3(t, i, ingest::kOutChannel);
          break;
      }
    }
  }
  return s;
}

namespace detail {

// Keeps each row's top_k largest off-diagonal weights; an edge survives if it
// is in the top-k of either endpoint, so the matrix stays symmetric.
inline void sparsify_top_k(Tensor& adj, int top_k) {
  const std::size_t n = adj.rows();
  if (top_k <= 0 || static_cast<std::size_t>(top_k) + 1 >= n) return;

  std::vector<char> keep(n * n, 0);
  std::vector<std::pair<double, std::size_t>> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back({adj(i, j), j});
    }
    std::stable_sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
      return a.first > b.first;
    });
    for (int k = 0; k < top_k && k < static_cast<int>(row.size()); ++k) {
      keep[i * n + row[static_cast<std::size_t>(k)].second] = 1;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && !keep[i * n + j] && !keep[j * n + i]) adj(i, j) = 0.0;
    }
  }
}

inline double finish_entry(std::optional<double> r, bool clip_negative) {
  if (!r) return 0.0;
  if (clip_negative && *r < 0.0) return 0.0;
  return *r;
}

}  // namespace detail

// Correlation adjacency over the full series: undefined pairs → 0, negatives
// clipped when requested, diagonal forced to 1.
inline Tensor adjacency_from_series(const Tensor& series, const GraphOptions& opts = {}) {
  const std::size_t t_slots = series.rows(), n = series.cols();
  if (t_slots < 2) throw LengthMismatchError("adjacency needs at least 2 slots");

  std::vector<std::vector<double>> col(n, std::vector<double>(t_slots));
  for (std::size_t t = 0; t < t_slots; ++t)
    for (std::size_t i = 0; i < n; ++i) col[i][t] = series(t, i);

  Tensor adj(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    adj(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = detail::finish_entry(pearson(col[i], col[j]), opts.clip_negative);
      adj(i, j) = w;
      adj(j, i) = w;
    }
  }
  detail::sparsify_top_k(adj, opts.top_k);
  return adj;
}

inline Tensor static_adjacency(const ingest::DemandTensor& demand,
                               const GraphOptions& opts = {}) {
  return adjacency_from_series(demand_series(demand, opts.channel), opts);
}

struct AdjacencySeries {
  std::vector<Tensor> matrices;  // one per slot
  std::size_t window = 0;
  Channel channel = Channel::Out;

  std::size_t slots() const { return matrices.size(); }
  const Tensor& at(std::size_t t) const { return matrices[t]; }
};

// Trailing-window correlation matrices, one per slot. Slot t < window−1 has
// no full window and reuses the earliest full-window matrix (slot window−1).
// Windowed moments come from prefix sums so the whole series is O(N²·T).
inline AdjacencySeries dynamic_adjacency(const ingest::DemandTensor& demand,
                                         std::size_t window,
                                         const GraphOptions& opts = {}) {
  const std::size_t t_slots = demand.slots(), n = demand.stations();
  if (window < 2) throw ConfigError("graph window must be at least 2 slots");
  if (window > t_slots) {
    throw WindowTooLargeError("window " + std::to_string(window) + " exceeds " +
                              std::to_string(t_slots) + " slots");
  }

  Tensor series = demand_series(demand, opts.channel);
  const double wd = static_cast<double>(window);

  // prefix[i][t] = sum of series(0..t-1, i); likewise squares
  std::vector<std::vector<double>> ps(n, std::vector<double>(t_slots + 1, 0.0));
  std::vector<std::vector<double>> ps2(n, std::vector<double>(t_slots + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < t_slots; ++t) {
      const double v = series(t, i);
      ps[i][t + 1] = ps[i][t] + v;
      ps2[i][t + 1] = ps2[i][t] + v * v;
    }
  }

  AdjacencySeries out;
  out.window = window;
  out.channel = opts.channel;
  out.matrices.assign(t_slots, Tensor(n, n));
  for (std::size_t t = window - 1; t < t_slots; ++t) {
    for (std::size_t i = 0; i < n; ++i) out.matrices[t](i, i) = 1.0;
  }

  std::vector<double> cross(t_slots + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t t = 0; t < t_slots; ++t)
        cross[t + 1] = cross[t] + series(t, i) * series(t, j);

      for (std::size_t t = window - 1; t < t_slots; ++t) {
        const std::size_t lo = t + 1 - window, hi = t + 1;
        const double si = ps[i][hi] - ps[i][lo];
        const double sj = ps[j][hi] - ps[j][lo];
        const double sii = ps2[i][hi] - ps2[i][lo];
        const double sjj = ps2[j][hi] - ps2[j][lo];
        const double sij = cross[hi] - cross[lo];
        const double vxx = sii - si * si / wd;
        const double vyy = sjj - sj * sj / wd;
        const double cov = sij - si * sj / wd;
        std::optional<double> r;
        if (vxx > 1e-12 && vyy > 1e-12) r = cov / std::sqrt(vxx * vyy);
        const double w = detail::finish_entry(r, opts.clip_negative);
        out.matrices[t](i, j) = w;
        out.matrices[t](j, i) = w;
      }
    }
  }

  if (opts.top_k > 0) {
    for (std::size_t t = window - 1; t < t_slots; ++t)
      detail::sparsify_top_k(out.matrices[t], opts.top_k);
  }
  for (std::size_t t = 0; t + 1 < window; ++t) out.matrices[t] = out.matrices[window - 1];
  return out;
}

// Renormalized propagation operator D^{-1/2} A D^{-1/2}; the adjacency
// diagonal already carries the self-loop, so A is used as-is.
inline Tensor propagation_operator(const Tensor& adj) {
  if (adj.ndim() != 2 || adj.rows() != adj.cols())
    throw ShapeMismatchError("propagation operator needs a square matrix");
  const std::size_t n = adj.rows();

  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += adj(i, j);
    if (!(deg > 0.0) || !std::isfinite(deg)) {
      throw NonFiniteError("node " + std::to_string(i) + " has non-positive degree " +
                           std::to_string(deg));
    }
    inv_sqrt[i] = 1.0 / std::sqrt(deg);
  }

  Tensor op(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = inv_sqrt[i] * adj(i, j) * inv_sqrt[j];
      if (!std::isfinite(v)) throw NonFiniteError("non-finite operator entry");
      op(i, j) = v;
      op(j, i) = v;
    }
  }
  return op;
}

// I − D^{-1/2} A D^{-1/2}, diagnostics only.
inline Tensor laplacian(const Tensor& adj) {
  if (adj.ndim() != 2 || adj.rows() != adj.cols())
    throw ShapeMismatchError("laplacian needs a square matrix");
  const std::size_t n = adj.rows();

  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += adj(i, j);
    if (deg == 0.0) throw ZeroDegreeNodeError("node " + std::to_string(i) + " has zero degree");
    inv_sqrt[i] = 1.0 / std::sqrt(deg);
  }

  Tensor lap(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double norm = inv_sqrt[i] * adj(i, j) * inv_sqrt[j];
      const double v = (i == j ? 1.0 - norm : -norm);
      lap(i, j) = v;
      lap(j, i) = v;
    }
  }
  return lap;
}

}  // namespace stationcast::graph
