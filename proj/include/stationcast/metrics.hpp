#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "stationcast/errors.hpp"
#include "stationcast/tensor.hpp"

namespace stationcast::metrics {

inline double mse(const std::vector<double>& pred, const std::vector<double>& actual) {
  if (pred.size() != actual.size())
    throw LengthMismatchError("mse: lengths " + std::to_string(pred.size()) + " vs " +
                              std::to_string(actual.size()));
  if (pred.empty()) throw LengthMismatchError("mse: empty series");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - actual[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

inline double rmse(const std::vector<double>& pred, const std::vector<double>& actual) {
  return std::sqrt(mse(pred, actual));
}

// 1 − Σ(y−ŷ)²/Σ(y−ȳ)², pooled over the whole series; nullopt when the
// actual series has zero variance.
inline std::optional<double> r_squared(const std::vector<double>& pred,
                                       const std::vector<double>& actual) {
  if (pred.size() != actual.size())
    throw LengthMismatchError("r_squared: lengths " + std::to_string(pred.size()) +
                              " vs " + std::to_string(actual.size()));
  if (pred.size() < 2) throw LengthMismatchError("r_squared: need at least 2 samples");

  double mean = 0.0;
  for (double y : actual) mean += y;
  mean /= static_cast<double>(actual.size());

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double r = actual[i] - pred[i];
    const double d = actual[i] - mean;
    ss_res += r * r;
    ss_tot += d * d;
  }
  if (ss_tot == 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

struct SeriesMetrics {
  double mse = 0.0;
  double rmse = 0.0;
  std::optional<double> r2;
  std::size_t n = 0;
};

inline SeriesMetrics series_metrics(const std::vector<double>& pred,
                                    const std::vector<double>& actual) {
  SeriesMetrics m;
  m.mse = mse(pred, actual);
  m.rmse = std::sqrt(m.mse);
  m.r2 = r_squared(pred, actual);
  m.n = pred.size();
  return m;
}

// Aggregate pools every (slot, station, channel) element into one series;
// the per-station breakdown pools (slot, channel) within each station.
struct MetricsReport {
  std::string model;
  std::string space;  // "scaled" or "counts"
  std::size_t n_test_slots = 0;
  SeriesMetrics aggregate;
  std::vector<SeriesMetrics> per_station;
};

inline MetricsReport compute_report(const std::string& model, const std::string& space,
                                    const std::vector<Tensor>& preds,
                                    const std::vector<Tensor>& actuals) {
  if (preds.size() != actuals.size())
    throw LengthMismatchError("report: prediction/actual slot counts differ");
  if (preds.empty()) throw LengthMismatchError("report: no slots");
  const std::size_t n = preds[0].rows(), c = preds[0].cols();

  MetricsReport rep;
  rep.model = model;
  rep.space = space;
  rep.n_test_slots = preds.size();

  std::vector<double> all_p, all_a;
  all_p.reserve(preds.size() * n * c);
  all_a.reserve(preds.size() * n * c);
  for (std::size_t t = 0; t < preds.size(); ++t) {
    if (!preds[t].same_shape(preds[0]) || !actuals[t].same_shape(preds[0]))
      throw ShapeMismatchError("report: inconsistent slot shapes");
    for (std::size_t i = 0; i < n * c; ++i) {
      all_p.push_back(preds[t][i]);
      all_a.push_back(actuals[t][i]);
    }
  }
  rep.aggregate = series_metrics(all_p, all_a);

  std::vector<double> sp, sa;
  for (std::size_t s = 0; s < n; ++s) {
    sp.clear();
    sa.clear();
    for (std::size_t t = 0; t < preds.size(); ++t) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        sp.push_back(preds[t](s, ch));
        sa.push_back(actuals[t](s, ch));
      }
    }
    rep.per_station.push_back(series_metrics(sp, sa));
  }
  return rep;
}

}  // namespace stationcast::metrics
