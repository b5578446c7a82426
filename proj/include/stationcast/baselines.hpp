#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "stationcast/errors.hpp"
#include "stationcast/ingest.hpp"
#include "stationcast/tensor.hpp"

namespace stationcast::baselines {

// Next-slot forecast equals the current slot's demand. target_slots index
// into the demand tensor; each prediction is demand at the preceding slot.
inline std::vector<Tensor> persistence_predictions(
    const ingest::DemandTensor& demand, const std::vector<std::size_t>& target_slots) {
  const std::size_t n = demand.stations();
  std::vector<Tensor> out;
  out.reserve(target_slots.size());
  for (std::size_t t : target_slots) {
    if (t == 0) throw LengthMismatchError("persistence needs a preceding slot");
    Tensor p(n, 2);
    for (std::size_t s = 0; s < n; ++s) {
      p(s, 0) = demand.values.at3(t - 1, s, ingest::kInChannel);
      p(s, 1) = demand.values.at3(t - 1, s, ingest::kOutChannel);
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace detail {

// in-place Cholesky of a symmetric positive-definite matrix; false when a
// pivot is not strictly positive
inline bool cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
  }
  return true;
}

inline void cholesky_solve(const std::vector<double>& l, std::size_t n,
                           std::vector<double>& b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
  for (std::size_t ii = n; ii > 0; --ii) {
    const std::size_t i = ii - 1;
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * b[k];
    b[i] = s / l[i * n + i];
  }
}

}  // namespace detail

struct OlsModel {
  Tensor coef;                 // (F x outputs)
  std::vector<double> intercept;  // (outputs)
  bool ridged = false;

  Tensor predict(const Tensor& x) const {
    Tensor y = matmul(x, coef);
    for (std::size_t r = 0; r < y.rows(); ++r)
      for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += intercept[c];
    return y;
  }
};

struct OlsOptions {
  bool ridge_fallback = true;
  double ridge_lambda = 1e-8;
};

// Normal-equation least squares with an intercept column. A rank-deficient
// Gram matrix falls back to a tiny ridge unless disabled.
inline OlsModel ols_fit(const Tensor& x, const Tensor& y, const OlsOptions& opts = {}) {
  if (x.ndim() != 2 || y.ndim() != 2 || x.rows() != y.rows())
    throw ShapeMismatchError("ols: design " + x.shape_str() + " vs targets " +
                             y.shape_str());
  const std::size_t rows = x.rows(), f = x.cols(), outs = y.cols();
  if (rows <= f) throw RankDeficientError("ols: " + std::to_string(rows) +
                                          " samples for " + std::to_string(f) +
                                          " features");
  const std::size_t d = f + 1;  // intercept last

  std::vector<double> gram(d * d, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < f; ++i) {
      const double xi = x(r, i);
      for (std::size_t j = i; j < f; ++j) gram[i * d + j] += xi * x(r, j);
      gram[i * d + f] += xi;
    }
  }
  gram[f * d + f] = static_cast<double>(rows);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) gram[i * d + j] = gram[j * d + i];

  std::vector<double> chol = gram;
  bool ridged = false;
  if (!detail::cholesky(chol, d)) {
    if (!opts.ridge_fallback) throw RankDeficientError("ols: singular normal equations");
    chol = gram;
    for (std::size_t i = 0; i < d; ++i) chol[i * d + i] += opts.ridge_lambda;
    if (!detail::cholesky(chol, d))
      throw RankDeficientError("ols: singular even with ridge fallback");
    ridged = true;
  }

  OlsModel model;
  model.coef = Tensor(f, outs);
  model.intercept.assign(outs, 0.0);
  model.ridged = ridged;

  std::vector<double> rhs(d);
  for (std::size_t c = 0; c < outs; ++c) {
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double t = y(r, c);
      for (std::size_t i = 0; i < f; ++i) rhs[i] += x(r, i) * t;
      rhs[f] += t;
    }
    detail::cholesky_solve(chol, d, rhs);
    for (std::size_t i = 0; i < f; ++i) model.coef(i, c) = rhs[i];
    model.intercept[c] = rhs[f];
  }
  return model;
}

}  // namespace stationcast::baselines
