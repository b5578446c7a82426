#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <stationcast/baselines.hpp>
#include <stationcast/ingest.hpp>
#include <stationcast/metrics.hpp>
#include <stationcast/rng.hpp>

#include "support/oracles.hpp"

namespace mt = stationcast::metrics;
namespace bl = stationcast::baselines;
using stationcast::Rng;
using stationcast::Tensor;

TEST_CASE("metrics on hand-built series") {
  std::vector<double> actual = {1.0, 2.0, 3.0, 4.0};
  std::vector<double> perfect = actual;
  REQUIRE(mt::mse(perfect, actual) == 0.0);
  REQUIRE(mt::rmse(perfect, actual) == 0.0);
  REQUIRE(mt::r_squared(perfect, actual).value() == 1.0);

  std::vector<double> off_by_one = {2.0, 3.0, 4.0, 5.0};
  REQUIRE(mt::mse(off_by_one, actual) == Catch::Approx(1.0).margin(1e-15));
  REQUIRE(mt::rmse(off_by_one, actual) == Catch::Approx(1.0).margin(1e-15));

  // predicting the mean scores zero
  std::vector<double> mean_guess(4, 2.5);
  REQUIRE(mt::r_squared(mean_guess, actual).value() ==
          Catch::Approx(0.0).margin(1e-15));

  // worse than the mean goes negative
  std::vector<double> bad = {4.0, 3.0, 2.0, 1.0};
  REQUIRE(mt::r_squared(bad, actual).value() < 0.0);

  // constant actuals leave the score undefined
  std::vector<double> flat = {2.0, 2.0, 2.0, 2.0};
  REQUIRE_FALSE(mt::r_squared(perfect, flat).has_value());
}

TEST_CASE("metrics validate lengths") {
  std::vector<double> a = {1.0, 2.0};
  std::vector<double> b = {1.0};
  REQUIRE_THROWS_AS(mt::mse(a, b), stationcast::LengthMismatchError);
  REQUIRE_THROWS_AS(mt::r_squared(a, b), stationcast::LengthMismatchError);
  std::vector<double> empty;
  REQUIRE_THROWS_AS(mt::mse(empty, empty), stationcast::LengthMismatchError);
}

TEST_CASE("metrics match the flat oracles on random data") {
  Rng rng(71);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 2 + rng.index(100);
    std::vector<double> pred(n), actual(n);
    for (std::size_t i = 0; i < n; ++i) {
      actual[i] = rng.uniform(-10.0, 10.0);
      pred[i] = actual[i] + rng.normal() * 0.7;
    }
    REQUIRE(mt::mse(pred, actual) ==
            Catch::Approx(oracles::mse_flat(pred, actual)).margin(1e-12));
    REQUIRE(mt::rmse(pred, actual) ==
            Catch::Approx(oracles::rmse_flat(pred, actual)).margin(1e-12));
    const auto got = mt::r_squared(pred, actual);
    const auto want = oracles::r2_flat(pred, actual);
    REQUIRE(got.has_value() == want.has_value());
    if (got) REQUIRE(*got == Catch::Approx(*want).margin(1e-12));
  }
}

TEST_CASE("squared rmse equals mse") {
  Rng rng(72);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(60);
    std::vector<double> pred(n), actual(n);
    for (std::size_t i = 0; i < n; ++i) {
      actual[i] = rng.uniform(-100.0, 100.0);
      pred[i] = rng.uniform(-100.0, 100.0);
    }
    auto m = mt::series_metrics(pred, actual);
    REQUIRE(m.rmse * m.rmse == Catch::Approx(m.mse).margin(1e-9));
    REQUIRE(m.n == n);
  }
}

TEST_CASE("report pools aggregate and per-station series") {
  Rng rng(73);
  const std::size_t slots = 7, n = 3, c = 2;
  std::vector<Tensor> preds, actuals;
  for (std::size_t t = 0; t < slots; ++t) {
    Tensor p(n, c), a(n, c);
    for (std::size_t i = 0; i < p.size(); ++i) {
      a[i] = rng.uniform(0.0, 10.0);
      p[i] = a[i] + rng.normal();
    }
    preds.push_back(p);
    actuals.push_back(a);
  }
  auto rep = mt::compute_report("test", "scaled", preds, actuals);
  REQUIRE(rep.n_test_slots == slots);
  REQUIRE(rep.per_station.size() == n);
  REQUIRE(rep.aggregate.n == slots * n * c);

  // recompute the aggregate by flattening everything
  std::vector<double> all_p, all_a;
  for (std::size_t t = 0; t < slots; ++t)
    for (std::size_t i = 0; i < n * c; ++i) {
      all_p.push_back(preds[t][i]);
      all_a.push_back(actuals[t][i]);
    }
  REQUIRE(rep.aggregate.mse ==
          Catch::Approx(oracles::mse_flat(all_p, all_a)).margin(1e-12));

  // station 1 series by hand
  std::vector<double> sp, sa;
  for (std::size_t t = 0; t < slots; ++t)
    for (std::size_t ch = 0; ch < c; ++ch) {
      sp.push_back(preds[t](1, ch));
      sa.push_back(actuals[t](1, ch));
    }
  REQUIRE(rep.per_station[1].mse ==
          Catch::Approx(oracles::mse_flat(sp, sa)).margin(1e-12));
  REQUIRE(rep.per_station[1].n == slots * c);

  REQUIRE_THROWS_AS(mt::compute_report("x", "scaled", {}, {}),
                    stationcast::LengthMismatchError);
}

TEST_CASE("persistence repeats the previous slot") {
  stationcast::ingest::DemandTensor d;
  d.values = Tensor({4, 2, 2});
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t ch = 0; ch < 2; ++ch)
        d.values.at3(t, s, ch) = 100.0 * t + 10.0 * s + ch;

  auto preds = bl::persistence_predictions(d, {1, 3});
  REQUIRE(preds.size() == 2);
  REQUIRE(preds[0](0, 0) == 0.0);    // slot 0, station 0, in
  REQUIRE(preds[0](1, 1) == 11.0);   // slot 0, station 1, out
  REQUIRE(preds[1](0, 0) == 200.0);  // slot 2, station 0, in
  REQUIRE(preds[1](1, 0) == 210.0);

  REQUIRE_THROWS_AS(bl::persistence_predictions(d, {0}),
                    stationcast::LengthMismatchError);
}

TEST_CASE("least squares recovers a noiseless linear map") {
  Rng rng(74);
  const std::size_t rows = 50, f = 3;
  Tensor x(rows, f), y(rows, 2);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < f; ++i) x(r, i) = rng.uniform(-2.0, 2.0);
    y(r, 0) = 1.5 * x(r, 0) - 0.7 * x(r, 1) + 0.2 * x(r, 2) + 3.0;
    y(r, 1) = -0.4 * x(r, 0) + 0.9 * x(r, 2) - 1.0;
  }
  auto model = bl::ols_fit(x, y);
  REQUIRE_FALSE(model.ridged);
  REQUIRE(model.coef(0, 0) == Catch::Approx(1.5).margin(1e-9));
  REQUIRE(model.coef(1, 0) == Catch::Approx(-0.7).margin(1e-9));
  REQUIRE(model.coef(2, 0) == Catch::Approx(0.2).margin(1e-9));
  REQUIRE(model.intercept[0] == Catch::Approx(3.0).margin(1e-9));
  REQUIRE(model.coef(0, 1) == Catch::Approx(-0.4).margin(1e-9));
  REQUIRE(model.coef(1, 1) == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(model.intercept[1] == Catch::Approx(-1.0).margin(1e-9));

  Tensor pred = model.predict(x);
  for (std::size_t i = 0; i < pred.size(); ++i)
    REQUIRE(pred[i] == Catch::Approx(y[i]).margin(1e-9));
}

TEST_CASE("least squares matches the elimination oracle on random data") {
  Rng rng(75);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t f = 1 + rng.index(6);
    const std::size_t rows = f + 2 + rng.index(40);
    const std::size_t outs = 1 + rng.index(3);
    Tensor x(rows, f), y(rows, outs);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-3.0, 3.0);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = rng.uniform(-3.0, 3.0);

    auto model = bl::ols_fit(x, y);
    oracles::Mat xm(rows, f), ym(rows, outs);
    for (std::size_t i = 0; i < x.size(); ++i) xm.v[i] = x[i];
    for (std::size_t i = 0; i < y.size(); ++i) ym.v[i] = y[i];
    oracles::Mat ref = oracles::least_squares(xm, ym);

    for (std::size_t i = 0; i < f; ++i)
      for (std::size_t c = 0; c < outs; ++c)
        REQUIRE(model.coef(i, c) == Catch::Approx(ref.at(i, c)).margin(1e-8));
    for (std::size_t c = 0; c < outs; ++c)
      REQUIRE(model.intercept[c] == Catch::Approx(ref.at(f, c)).margin(1e-8));
  }
}

TEST_CASE("rank deficiency raises or falls back to ridge") {
  Rng rng(76);
  const std::size_t rows = 30;
  Tensor x(rows, 2), y(rows, 1);
  for (std::size_t r = 0; r < rows; ++r) {
    x(r, 0) = rng.uniform(-1.0, 1.0);
    x(r, 1) = 2.0 * x(r, 0);  // perfectly collinear
    y(r, 0) = x(r, 0) + 0.1 * rng.normal();
  }
  bl::OlsOptions strict;
  strict.ridge_fallback = false;
  REQUIRE_THROWS_AS(bl::ols_fit(x, y, strict), stationcast::RankDeficientError);

  auto model = bl::ols_fit(x, y);  // default falls back
  REQUIRE(model.ridged);
  Tensor pred = model.predict(x);
  // the ridged solution still fits the collinear data
  std::vector<double> pv(pred.vec()), yv(y.vec());
  REQUIRE(mt::mse(pv, yv) < 0.05);

  // more features than rows is rejected outright
  Tensor tiny_x(2, 3), tiny_y(2, 1);
  REQUIRE_THROWS_AS(bl::ols_fit(tiny_x, tiny_y),
                    stationcast::RankDeficientError);
}
