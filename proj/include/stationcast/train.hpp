#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stationcast/autodiff.hpp"
#include "stationcast/errors.hpp"
#include "stationcast/nn.hpp"
#include "stationcast/rng.hpp"
#include "stationcast/tensor.hpp"

namespace stationcast::train {

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 64;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 42;
  int patience = 0;        // epochs without val improvement; 0 disables
  double grad_clip = 0.0;  // global L2 norm ceiling; 0 disables
  double val_fraction = 0.10;
  bool log_timing = false;  // persist wall time per epoch (breaks byte-identical logs)

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (learning_rate <= 0) throw ConfigError("learning rate must be positive");
    if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1)
      throw ConfigError("Adam betas must lie in (0, 1)");
    if (epsilon <= 0) throw ConfigError("Adam epsilon must be positive");
    if (val_fraction < 0 || val_fraction >= 1)
      throw ConfigError("validation fraction must lie in [0, 1)");
  }
};

// One training sample: slot features, the slot's propagation operator, and
// the next slot's scaled demand.
struct Sample {
  Tensor x;
  Tensor op;
  Tensor y;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
};

class Adam {
 public:
  Adam(std::vector<ad::Var> params, const TrainConfig& cfg)
      : params_(std::move(params)), cfg_(cfg) {
    for (const auto& p : params_) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }

  std::int64_t step_count() const { return step_; }

  void step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor& p = params_[i]->value;
      const Tensor& g = params_[i]->grad;
      Tensor& m = m_[i];
      Tensor& v = v_[i];
      for (std::size_t k = 0; k < p.size(); ++k) {
        m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
        v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
        const double mhat = m[k] / bc1;
        const double vhat = v[k] / bc2;
        p[k] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p->grad.fill(0.0);
  }

  // scales all gradients so their global L2 norm is at most max_norm
  void clip_gradients(double max_norm) {
    double sq = 0.0;
    for (const auto& p : params_)
      for (std::size_t k = 0; k < p->grad.size(); ++k) sq += p->grad[k] * p->grad[k];
    const double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return;
    const double s = max_norm / norm;
    for (auto& p : params_)
      for (std::size_t k = 0; k < p->grad.size(); ++k) p->grad[k] *= s;
  }

 private:
  std::vector<ad::Var> params_;
  TrainConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::int64_t step_ = 0;
};

inline double sample_loss(nn::Forecaster& model, const Sample& s) {
  ad::Var pred = model.forward(s.op, s.x);
  ad::Var loss = ad::mse_against(pred, s.y);
  return loss->value[0];
}

inline double mean_loss(nn::Forecaster& model, const std::vector<Sample>& samples) {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : samples) total += sample_loss(model, s);
  return total / static_cast<double>(samples.size());
}

// Mini-batch training over shuffled slot order. Validation (when present)
// selects the best checkpoint; the winning parameters are restored into the
// model before returning.
inline TrainLog fit(nn::Forecaster& model, const std::vector<Sample>& train_samples,
                    const std::vector<Sample>& val_samples, const TrainConfig& cfg) {
  cfg.validate();
  if (train_samples.empty()) throw DegenerateSplitError("no training samples");

  std::vector<ad::Var> params = model.parameters();
  Adam opt(params, cfg);
  Rng rng(cfg.seed);

  std::vector<std::size_t> order(train_samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainLog log;
  std::vector<Tensor> best;
  int stale = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();

    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.index(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(stop - start);

      ad::Var batch_loss;
      for (std::size_t i = start; i < stop; ++i) {
        const Sample& s = train_samples[order[i]];
        ad::Var pred = model.forward(s.op, s.x);
        ad::Var loss = ad::mse_against(pred, s.y);
        batch_loss = batch_loss ? ad::add(batch_loss, loss) : loss;
      }
      batch_loss = ad::scale(batch_loss, inv);

      const double value = batch_loss->value[0];
      if (!std::isfinite(value)) {
        throw DivergedLossError("non-finite batch loss at epoch " +
                                std::to_string(epoch));
      }
      epoch_loss += value * static_cast<double>(stop - start);

      opt.zero_grad();
      ad::backward(batch_loss);
      if (cfg.grad_clip > 0.0) opt.clip_gradients(cfg.grad_clip);
      opt.step();
    }
    epoch_loss /= static_cast<double>(order.size());

    const double val_loss =
        val_samples.empty() ? epoch_loss : mean_loss(model, val_samples);
    if (!std::isfinite(val_loss)) {
      throw DivergedLossError("non-finite validation loss at epoch " +
                              std::to_string(epoch));
    }

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss;
    rec.val_loss = val_loss;
    rec.seconds = cfg.log_timing ? seconds : 0.0;
    log.epochs.push_back(rec);

    if (val_loss < log.best_val_loss) {
      log.best_val_loss = val_loss;
      log.best_epoch = epoch;
      best.clear();
      for (const auto& p : params) best.push_back(p->value);
      stale = 0;
    } else {
      ++stale;
      if (cfg.patience > 0 && stale >= cfg.patience) break;
    }
  }

  if (!best.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  }
  return log;
}

// chronological tail of the training samples held out for validation
inline std::pair<std::vector<Sample>, std::vector<Sample>> hold_out_tail(
    std::vector<Sample> samples, double val_fraction) {
  std::size_t n_val = static_cast<std::size_t>(
      std::floor(val_fraction * static_cast<double>(samples.size())));
  if (n_val >= samples.size()) n_val = samples.size() - 1;
  std::vector<Sample> val(samples.end() - static_cast<std::ptrdiff_t>(n_val),
                          samples.end());
  samples.resize(samples.size() - n_val);
  return {std::move(samples), std::move(val)};
}

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t elements = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst = 0.0;

  bool pass(double threshold = 1e-4) const { return worst < threshold; }
};

// Central finite differences against the recorded backward pass, element by
// element. Differences below the absolute guard count as agreement, so
// near-zero gradients do not inflate the relative error.
inline GradCheckReport grad_check(nn::Forecaster& model, const Sample& sample,
                                  double eps = 1e-5, double abs_guard = 1e-7) {
  nn::NamedParams named = model.named_parameters();

  for (auto& [name, p] : named) p->grad.fill(0.0);
  {
    ad::Var pred = model.forward(sample.op, sample.x);
    ad::Var loss = ad::mse_against(pred, sample.y);
    ad::backward(loss);
  }
  std::vector<Tensor> analytic;
  for (auto& [name, p] : named) analytic.push_back(p->grad);

  auto loss_value = [&]() {
    ad::Var pred = model.forward(sample.op, sample.x);
    return ad::mse_against(pred, sample.y)->value[0];
  };

  GradCheckReport report;
  for (std::size_t pi = 0; pi < named.size(); ++pi) {
    ad::Var p = named[pi].second;
    GradCheckEntry entry;
    entry.name = named[pi].first;
    entry.elements = p->value.size();
    for (std::size_t k = 0; k < p->value.size(); ++k) {
      const double orig = p->value[k];
      p->value[k] = orig + eps;
      const double hi = loss_value();
      p->value[k] = orig - eps;
      const double lo = loss_value();
      p->value[k] = orig;

      const double fd = (hi - lo) / (2.0 * eps);
      const double g = analytic[pi][k];
      const double diff = std::abs(fd - g);
      const double rel =
          diff < abs_guard ? 0.0 : diff / std::max(std::abs(fd), std::abs(g));
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    report.worst = std::max(report.worst, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace stationcast::train
