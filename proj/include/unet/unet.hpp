#pragma once

// U-Net construction, valid-convolution size arithmetic, and forward passes.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "unet/kernels.hpp"
#include "unet/ops.hpp"
#include "unet/optim.hpp"
#include "unet/rng.hpp"
#include "unet/tape.hpp"

namespace unet {

struct UNetConfig {
  std::size_t depth = 4;
  std::size_t base_channels = 64;
  std::size_t in_channels = 1;
  std::size_t num_classes = 2;
  double dropout_rate = 0.5;

  void validate() const;
  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

/// Outcome of running the size recurrence for one spatial axis.
struct SizeCheck {
  bool valid = false;
  std::size_t output = 0;
  /// Spatial size after the last pooling step.
  std::size_t lowest = 0;
  /// Explanation naming the failing level when !valid.
  std::string reason;
};

SizeCheck output_size(std::size_t input_size, std::size_t depth);
std::vector<std::size_t> valid_input_sizes(std::size_t min, std::size_t max, std::size_t depth);
/// Pixels lost on each side between input and output.
std::size_t context_margin(std::size_t input_size, std::size_t depth);

enum class LayerKind { Conv3x3, ReLU, MaxPool, SaveSkip, Dropout, UpConv, CropConcat, Conv1x1 };

struct Layer {
  LayerKind kind;
  /// Index into the network parameters for convolutions.
  std::size_t param = 0;
  /// Channels produced by this layer.
  std::size_t channels = 0;
};

const char* layer_name(LayerKind kind);

namespace detail {
std::vector<Layer> unet_layers(const UNetConfig& config, std::vector<std::string>& param_names,
                               std::vector<Shape>& weight_shapes);
}

template <typename T>
class UNet {
 public:
  struct Taped {
    Var logits;
    std::vector<Var> weights;
    std::vector<Var> biases;
  };

  /// Network with He-initialized weights and zero biases.
  static UNet build(const UNetConfig& config, Rng& rng) {
    UNet net = zeros(config);
    for (ConvParams<T>& p : net.params_) p.weights = he_init<T>(p.weights.shape(), rng);
    return net;
  }

  /// Network topology with every parameter set to zero.
  static UNet zeros(const UNetConfig& config) {
    config.validate();
    UNet net;
    net.config_ = config;
    std::vector<Shape> shapes;
    net.layers_ = detail::unet_layers(config, net.names_, shapes);
    for (const Shape& s : shapes) net.params_.push_back(ConvParams<T>::zeros(s.n, s.c, s.h, s.w));
    return net;
  }

  const UNetConfig& config() const { return config_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<ConvParams<T>>& params() { return params_; }
  const std::vector<ConvParams<T>>& params() const { return params_; }
  const std::vector<std::string>& param_names() const { return names_; }

  std::size_t conv_layer_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers_) {
      if (l.kind == LayerKind::Conv3x3 || l.kind == LayerKind::UpConv || l.kind == LayerKind::Conv1x1) ++n;
    }
    return n;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.weights.size() + p.bias.size();
    return n;
  }

  /// Throws PreconditionError if the input cannot be processed.
  void check_input(const Shape& s) const {
    if (s.c != config_.in_channels) {
      throw PreconditionError("forward: input " + s.str() + " has " + std::to_string(s.c) +
                              " channels, network expects " + std::to_string(config_.in_channels));
    }
    for (std::size_t extent : {s.h, s.w}) {
      SizeCheck r = output_size(extent, config_.depth);
      if (!r.valid) throw PreconditionError("forward: invalid tile size " + s.str() + ": " + r.reason);
    }
  }

  /// Inference forward pass; returns logits.
  Tensor<T> forward(const Tensor<T>& input) const {
    check_input(input.shape());
    DirectExec ex{*this};
    return run(ex, input);
  }

  /// Forward pass recorded on `tape` with every parameter registered as a leaf.
  Taped forward(GradTape<T>& tape, Var input, Mode mode, Rng& rng) const {
    check_input(tape.value(input).shape());
    Taped out;
    for (const ConvParams<T>& p : params_) {
      out.weights.push_back(tape.parameter(p.weights));
      out.biases.push_back(tape.parameter(p.bias));
    }
    TapeExec ex{*this, tape, out, mode, rng};
    out.logits = run(ex, input);
    return out;
  }

  /// Gradients for params() in order, weights then bias, after tape.backward().
  std::vector<Tensor<T>> gradients(GradTape<T>& tape, const Taped& taped) const {
    std::vector<Tensor<T>> g;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      g.push_back(tape.grad(taped.weights[i]));
      g.push_back(tape.grad(taped.biases[i]));
    }
    return g;
  }

  /// Parameter tensors in the order used by gradients().
  std::vector<Tensor<T>*> parameter_tensors() {
    std::vector<Tensor<T>*> p;
    for (ConvParams<T>& c : params_) {
      p.push_back(&c.weights);
      p.push_back(&c.bias);
    }
    return p;
  }

 private:
  struct DirectExec {
    using Value = Tensor<T>;
    const UNet& net;
    Value conv(const Value& x, std::size_t p) {
      return kernels::conv2d_forward(x, net.params_[p].weights, net.params_[p].bias);
    }
    Value upconv(const Value& x, std::size_t p) {
      return kernels::upconv2x2_forward(x, net.params_[p].weights, net.params_[p].bias);
    }
    Value relu(const Value& x) { return kernels::relu_forward(x); }
    Value pool(const Value& x) { return kernels::maxpool2x2_forward(x).output; }
    Value dropout(const Value& x) { return x; }
    Value concat(const Value& skip, const Value& up) { return kernels::crop_concat_forward(skip, up); }
  };

  struct TapeExec {
    using Value = Var;
    const UNet& net;
    GradTape<T>& tape;
    const Taped& vars;
    Mode mode;
    Rng& rng;
    Value conv(Var x, std::size_t p) { return ops::conv2d(tape, x, vars.weights[p], vars.biases[p]); }
    Value upconv(Var x, std::size_t p) { return ops::upconv2x2(tape, x, vars.weights[p], vars.biases[p]); }
    Value relu(Var x) { return ops::relu(tape, x); }
    Value pool(Var x) { return ops::maxpool2x2(tape, x); }
    Value dropout(Var x) { return ops::dropout(tape, x, net.config_.dropout_rate, mode, rng); }
    Value concat(Var skip, Var up) { return ops::crop_concat(tape, skip, up); }
  };

  template <typename Exec>
  typename Exec::Value run(Exec& ex, typename Exec::Value x) const {
    std::vector<typename Exec::Value> skips;
    for (const Layer& l : layers_) {
      switch (l.kind) {
        case LayerKind::Conv3x3:
        case LayerKind::Conv1x1: x = ex.conv(x, l.param); break;
        case LayerKind::UpConv: x = ex.upconv(x, l.param); break;
        case LayerKind::ReLU: x = ex.relu(x); break;
        case LayerKind::MaxPool: x = ex.pool(x); break;
        case LayerKind::Dropout: x = ex.dropout(x); break;
        case LayerKind::SaveSkip: skips.push_back(x); break;
        case LayerKind::CropConcat:
          x = ex.concat(skips.back(), x);
          skips.pop_back();
          break;
      }
    }
    return x;
  }

  UNetConfig config_;
  std::vector<Layer> layers_;
  std::vector<ConvParams<T>> params_;
  std::vector<std::string> names_;
};

}  // namespace unet
