#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "stationcast/autodiff.hpp"
#include "stationcast/errors.hpp"
#include "stationcast/rng.hpp"
#include "stationcast/tensor.hpp"

namespace stationcast::nn {

using NamedParams = std::vector<std::pair<std::string, ad::Var>>;

inline ad::Var glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w(fan_in, fan_out);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-a, a);
  return ad::parameter(std::move(w));
}

inline ad::Var zero_bias(std::size_t width) {
  return ad::parameter(Tensor(1, width));
}

struct Linear {
  ad::Var w, b;

  Linear(std::size_t in, std::size_t out, Rng& rng)
      : w(glorot_uniform(in, out, rng)), b(zero_bias(out)) {}

  ad::Var forward(const ad::Var& x) const {
    return ad::add_bias(ad::matmul(x, w), b);
  }

  void collect(NamedParams& out, const std::string& prefix) const {
    out.push_back({prefix + ".w", w});
    out.push_back({prefix + ".b", b});
  }
};

// Gated recurrent unit cell. Weight matrices are stored input-major
// (input_dim x hidden and hidden x hidden) so the forward pass is x·W.
struct GruCell {
  ad::Var w_ir, w_iz, w_in;
  ad::Var w_hr, w_hz, w_hn;
  ad::Var b_ir, b_iz, b_in;
  ad::Var b_hr, b_hz, b_hn;

  GruCell(std::size_t input, std::size_t hidden, Rng& rng)
      : w_ir(glorot_uniform(input, hidden, rng)),
        w_iz(glorot_uniform(input, hidden, rng)),
        w_in(glorot_uniform(input, hidden, rng)),
        w_hr(glorot_uniform(hidden, hidden, rng)),
        w_hz(glorot_uniform(hidden, hidden, rng)),
        w_hn(glorot_uniform(hidden, hidden, rng)),
        b_ir(zero_bias(hidden)),
        b_iz(zero_bias(hidden)),
        b_in(zero_bias(hidden)),
        b_hr(zero_bias(hidden)),
        b_hz(zero_bias(hidden)),
        b_hn(zero_bias(hidden)) {}

  // r = σ(x·W_ir + b_ir + h·W_hr + b_hr), z likewise,
  // n = tanh(x·W_in + b_in + r ⊙ (h·W_hn + b_hn)),
  // h' = (1−z) ⊙ n + z ⊙ h, composed as n + z ⊙ (h − n).
  ad::Var forward(const ad::Var& x, const ad::Var& h_prev) const {
    auto gate = [&](const ad::Var& wi, const ad::Var& bi, const ad::Var& wh,
                    const ad::Var& bh) {
      return ad::add(ad::add_bias(ad::matmul(x, wi), bi),
                     ad::add_bias(ad::matmul(h_prev, wh), bh));
    };
    ad::Var r = ad::sigmoid(gate(w_ir, b_ir, w_hr, b_hr));
    ad::Var z = ad::sigmoid(gate(w_iz, b_iz, w_hz, b_hz));
    ad::Var n = ad::tanh_act(
        ad::add(ad::add_bias(ad::matmul(x, w_in), b_in),
                ad::mul(r, ad::add_bias(ad::matmul(h_prev, w_hn), b_hn))));
    return ad::add(n, ad::mul(z, ad::sub(h_prev, n)));
  }

  void collect(NamedParams& out, const std::string& prefix) const {
    out.push_back({prefix + ".w_ir", w_ir});
    out.push_back({prefix + ".w_iz", w_iz});
    out.push_back({prefix + ".w_in", w_in});
    out.push_back({prefix + ".w_hr", w_hr});
    out.push_back({prefix + ".w_hz", w_hz});
    out.push_back({prefix + ".w_hn", w_hn});
    out.push_back({prefix + ".b_ir", b_ir});
    out.push_back({prefix + ".b_iz", b_iz});
    out.push_back({prefix + ".b_in", b_in});
    out.push_back({prefix + ".b_hr", b_hr});
    out.push_back({prefix + ".b_hz", b_hz});
    out.push_back({prefix + ".b_hn", b_hn});
  }
};

// Graph convolution without nonlinearity: op · X · W.
struct GcnLayer {
  ad::Var w;

  GcnLayer(std::size_t in, std::size_t out, Rng& rng)
      : w(glorot_uniform(in, out, rng)) {}

  ad::Var forward(const ad::Var& op, const ad::Var& x) const {
    return ad::matmul(op, ad::matmul(x, w));
  }

  void collect(NamedParams& out, const std::string& prefix) const {
    out.push_back({prefix + ".w", w});
  }
};

// Gated graph convolution layer. State starts as the input padded with zeros
// to the hidden width, then `steps` rounds of message passing
// m = op · (h · W) feed a shared GRU cell: h = GRU(m, h).
struct GatedGraphLayer {
  ad::Var w_msg;
  GruCell gru;
  int steps;
  std::size_t hidden;

  GatedGraphLayer(std::size_t hidden_size, int step_count, Rng& rng)
      : w_msg(glorot_uniform(hidden_size, hidden_size, rng)),
        gru(hidden_size, hidden_size, rng),
        steps(step_count),
        hidden(hidden_size) {
    if (steps < 1) throw ConfigError("gated layer needs at least 1 propagation step");
  }

  ad::Var forward(const ad::Var& op, const ad::Var& x) const {
    if (x->value.cols() > hidden) {
      throw HiddenTooSmallError("hidden width " + std::to_string(hidden) +
                                " smaller than input width " +
                                std::to_string(x->value.cols()));
    }
    ad::Var h = ad::pad_cols(x, hidden);
    for (int s = 0; s < steps; ++s) {
      ad::Var m = ad::matmul(op, ad::matmul(h, w_msg));
      h = gru.forward(m, h);
    }
    return h;
  }

  void collect(NamedParams& out, const std::string& prefix) const {
    out.push_back({prefix + ".w_msg", w_msg});
    gru.collect(out, prefix + ".gru");
  }
};

struct Mlp {
  std::vector<Linear> layers;

  Mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
      Rng& rng) {
    std::size_t prev = in;
    for (std::size_t h : hidden) {
      layers.emplace_back(prev, h, rng);
      prev = h;
    }
    layers.emplace_back(prev, out, rng);
  }

  ad::Var forward(const ad::Var& x) const {
    ad::Var h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      h = layers[i].forward(h);
      if (i + 1 < layers.size()) h = ad::relu(h);
    }
    return h;
  }

  void collect(NamedParams& out, const std::string& prefix) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
      layers[i].collect(out, prefix + "." + std::to_string(i));
  }
};

// Common face of every trainable model: slot features and the slot's
// propagation operator in, per-station two-channel prediction out.
struct Forecaster {
  virtual ~Forecaster() = default;
  virtual ad::Var forward(const Tensor& op, const Tensor& x) = 0;
  virtual NamedParams named_parameters() const = 0;
  virtual std::string kind() const = 0;

  std::vector<ad::Var> parameters() const {
    std::vector<ad::Var> out;
    for (auto& [name, v] : named_parameters()) out.push_back(v);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (auto& [name, v] : named_parameters()) n += v->value.size();
    return n;
  }
};

struct GgcnnConfig {
  std::size_t features = 8;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 32;
  std::vector<std::size_t> readout_hidden = {64};
  int steps1 = 4;
  int steps2 = 3;
  std::size_t outputs = 2;
};

class GgcnnModel : public Forecaster {
 public:
  GgcnnModel(const GgcnnConfig& cfg, Rng& rng)
      : cfg_(cfg),
        layer1_(cfg.hidden1, cfg.steps1, rng),
        layer2_(cfg.hidden2, cfg.steps2, rng),
        readout_(cfg.hidden2, cfg.readout_hidden, cfg.outputs, rng) {
    if (cfg.features > cfg.hidden1) {
      throw HiddenTooSmallError("first hidden width " + std::to_string(cfg.hidden1) +
                                " smaller than feature count " +
                                std::to_string(cfg.features));
    }
    if (cfg.hidden1 > cfg.hidden2) {
      throw HiddenTooSmallError("second hidden width " + std::to_string(cfg.hidden2) +
                                " smaller than first " + std::to_string(cfg.hidden1));
    }
  }

  ad::Var forward(const Tensor& op, const Tensor& x) override {
    ad::Var opv = ad::constant(op);
    ad::Var h = layer1_.forward(opv, ad::constant(x));
    h = layer2_.forward(opv, h);
    return readout_.forward(h);
  }

  NamedParams named_parameters() const override {
    NamedParams out;
    layer1_.collect(out, "layer1");
    layer2_.collect(out, "layer2");
    readout_.collect(out, "readout");
    return out;
  }

  std::string kind() const override { return "ggcnn"; }
  const GgcnnConfig& config() const { return cfg_; }

 private:
  GgcnnConfig cfg_;
  GatedGraphLayer layer1_, layer2_;
  Mlp readout_;
};

struct GcnConfig {
  std::size_t features = 8;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 32;
  std::size_t outputs = 2;
};

// Two graph convolutions with ReLU, then a linear readout.
class GcnModel : public Forecaster {
 public:
  GcnModel(const GcnConfig& cfg, Rng& rng)
      : cfg_(cfg),
        conv1_(cfg.features, cfg.hidden1, rng),
        conv2_(cfg.hidden1, cfg.hidden2, rng),
        head_(cfg.hidden2, cfg.outputs, rng) {}

  ad::Var forward(const Tensor& op, const Tensor& x) override {
    ad::Var opv = ad::constant(op);
    ad::Var h = ad::relu(conv1_.forward(opv, ad::constant(x)));
    h = ad::relu(conv2_.forward(opv, h));
    return head_.forward(h);
  }

  NamedParams named_parameters() const override {
    NamedParams out;
    conv1_.collect(out, "conv1");
    conv2_.collect(out, "conv2");
    head_.collect(out, "head");
    return out;
  }

  std::string kind() const override { return "gcn"; }
  const GcnConfig& config() const { return cfg_; }

 private:
  GcnConfig cfg_;
  GcnLayer conv1_, conv2_;
  Linear head_;
};

struct MlpConfig {
  std::size_t features = 8;
  std::vector<std::size_t> hidden = {32, 32, 64};
  std::size_t outputs = 2;
};

// Station-wise multilayer perceptron; the graph operator is ignored.
class MlpModel : public Forecaster {
 public:
  MlpModel(const MlpConfig& cfg, Rng& rng)
      : cfg_(cfg), net_(cfg.features, cfg.hidden, cfg.outputs, rng) {}

  ad::Var forward(const Tensor& op, const Tensor& x) override {
    (void)op;
    return net_.forward(ad::constant(x));
  }

  NamedParams named_parameters() const override {
    NamedParams out;
    net_.collect(out, "net");
    return out;
  }

  std::string kind() const override { return "mlp"; }
  const MlpConfig& config() const { return cfg_; }

 private:
  MlpConfig cfg_;
  Mlp net_;
};

}  // namespace stationcast::nn
