#pragma once

// Differentiable operators. Each computes its forward value with the
// unet::kernels implementation and records the matching gradient rule.

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "unet/kernels.hpp"
#include "unet/raster.hpp"
#include "unet/rng.hpp"
#include "unet/tape.hpp"

namespace unet {

enum class Mode { Train, Infer };

/// Probabilities below this value are clamped before taking the logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

namespace ops {

/// Valid (unpadded) convolution, stride 1.
template <typename T>
Var conv2d(GradTape<T>& tape, Var x, Var w, Var b) {
  Tensor<T> out = kernels::conv2d_forward(tape.value(x), tape.value(w), tape.value(b));
  return tape.record(std::move(out), {x, w, b}, "conv2d",
                     [x, w, b](GradTape<T>& t, const Tensor<T>& g) {
                       ConvGrads<T> grads = kernels::conv2d_backward(t.value(x), t.value(w), t.value(b), g);
                       t.accumulate(x, grads.input);
                       t.accumulate(w, grads.weights);
                       t.accumulate(b, grads.bias);
                     });
}

template <typename T>
Var conv1x1(GradTape<T>& tape, Var x, Var w, Var b) {
  const Shape& ws = tape.value(w).shape();
  if (ws.h != 1 || ws.w != 1) throw PreconditionError("conv1x1: kernel must be 1x1, got " + ws.str());
  return conv2d(tape, x, w, b);
}

template <typename T>
Var upconv2x2(GradTape<T>& tape, Var x, Var w, Var b) {
  Tensor<T> out = kernels::upconv2x2_forward(tape.value(x), tape.value(w), tape.value(b));
  return tape.record(std::move(out), {x, w, b}, "upconv2x2",
                     [x, w, b](GradTape<T>& t, const Tensor<T>& g) {
                       ConvGrads<T> grads = kernels::upconv2x2_backward(t.value(x), t.value(w), t.value(b), g);
                       t.accumulate(x, grads.input);
                       t.accumulate(w, grads.weights);
                       t.accumulate(b, grads.bias);
                     });
}

template <typename T>
Var relu(GradTape<T>& tape, Var x) {
  return tape.record(kernels::relu_forward(tape.value(x)), {x}, "relu",
                     [x](GradTape<T>& t, const Tensor<T>& g) {
                       t.accumulate(x, kernels::relu_backward(t.value(x), g));
                     });
}

template <typename T>
Var maxpool2x2(GradTape<T>& tape, Var x) {
  PoolResult<T> r = kernels::maxpool2x2_forward(tape.value(x));
  auto indices = std::make_shared<PoolIndices>(std::move(r.indices));
  const Shape in_shape = tape.value(x).shape();
  return tape.record(std::move(r.output), {x}, "maxpool2x2",
                     [x, indices, in_shape](GradTape<T>& t, const Tensor<T>& g) {
                       t.accumulate(x, kernels::maxpool2x2_backward(in_shape, *indices, g));
                     });
}

template <typename T>
Var crop_concat(GradTape<T>& tape, Var skip, Var up) {
  const Shape ss = tape.value(skip).shape();
  const Shape us = tape.value(up).shape();
  return tape.record(kernels::crop_concat_forward(tape.value(skip), tape.value(up)), {skip, up},
                     "crop_concat", [skip, up, ss, us](GradTape<T>& t, const Tensor<T>& g) {
                       Tensor<T> gs, gu;
                       kernels::crop_concat_backward(g, ss, us, gs, gu);
                       t.accumulate(skip, gs);
                       t.accumulate(up, gu);
                     });
}

/// Inverted dropout: survivors are scaled by 1/(1-rate) in training, identity at inference.
template <typename T>
Var dropout(GradTape<T>& tape, Var x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw PreconditionError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::Infer || rate == 0.0) return x;
  const Tensor<T>& in = tape.value(x);
  auto scale = std::make_shared<Tensor<T>>(in.shape());
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) {
    (*scale)[i] = rng.uniform() < rate ? T(0) : keep;
    out[i] = in[i] * (*scale)[i];
  }
  return tape.record(std::move(out), {x}, "dropout", [x, scale](GradTape<T>& t, const Tensor<T>& g) {
    Tensor<T> gi(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) gi[i] = g[i] * (*scale)[i];
    t.accumulate(x, gi);
  });
}

/// Per-pixel softmax over the channel axis.
template <typename T>
Var softmax(GradTape<T>& tape, Var x) {
  if (tape.value(x).c() < 2) throw PreconditionError("softmax: need at least 2 channels");
  Tensor<T> p = kernels::softmax_channels(tape.value(x));
  auto probs = std::make_shared<Tensor<T>>(p);
  return tape.record(std::move(p), {x}, "softmax", [x, probs](GradTape<T>& t, const Tensor<T>& g) {
    const Tensor<T>& p = *probs;
    const std::size_t C = p.c(), P = p.h() * p.w();
    Tensor<T> gi(p.shape());
    for (std::size_t n = 0; n < p.n(); ++n) {
      const T* pp = p.plane(n, 0);
      const T* gg = g.plane(n, 0);
      T* out = gi.plane(n, 0);
      for (std::size_t i = 0; i < P; ++i) {
        T dot = 0;
        for (std::size_t c = 0; c < C; ++c) dot += pp[c * P + i] * gg[c * P + i];
        for (std::size_t c = 0; c < C; ++c) out[c * P + i] = pp[c * P + i] * (gg[c * P + i] - dot);
      }
    }
    t.accumulate(x, gi);
  });
}

namespace detail {
template <typename T>
void check_loss_inputs(const Tensor<T>& t, const ClassMap& labels, const WeightMap& weights) {
  if (t.n() != 1) throw PreconditionError("loss: batch size must be 1, got " + t.shape().str());
  if (!labels.same_size(t.h(), t.w()) || !weights.same_size(t.h(), t.w())) {
    throw PreconditionError("loss: prediction " + t.shape().str() + " vs labels " +
                            size_str(labels.height, labels.width) + " vs weights " +
                            size_str(weights.height, weights.width));
  }
  for (std::uint8_t l : labels.data) {
    if (l >= t.c()) throw PreconditionError("loss: label " + std::to_string(l) + " out of range");
  }
}
}  // namespace detail

/// -sum_x w(x) log p_{l(x)}(x) over softmax probabilities.
/// `saturated` counts pixels whose true-class probability was clamped.
template <typename T>
Var weighted_cross_entropy(GradTape<T>& tape, Var probs, const ClassMap& labels,
                           const WeightMap& weights, std::size_t* saturated = nullptr) {
  const Tensor<T>& p = tape.value(probs);
  detail::check_loss_inputs(p, labels, weights);
  const std::size_t P = labels.size();
  const T floor = static_cast<T>(kProbabilityFloor);
  double loss = 0;
  std::size_t sat = 0;
  auto grad = std::make_shared<Tensor<T>>(p.shape());
  for (std::size_t i = 0; i < P; ++i) {
    const std::size_t idx = labels.data[i] * P + i;
    T pv = p[idx];
    if (pv < floor) {
      ++sat;
      pv = floor;
    } else {
      (*grad)[idx] = static_cast<T>(-weights.data[i]) / pv;
    }
    loss -= weights.data[i] * std::log(static_cast<double>(pv));
  }
  if (saturated) *saturated = sat;
  return tape.record(Tensor<T>({1, 1, 1, 1}, static_cast<T>(loss)), {probs}, "weighted_cross_entropy",
                     [probs, grad](GradTape<T>& t, const Tensor<T>& g) {
                       Tensor<T> gi = *grad;
                       for (std::size_t i = 0; i < gi.size(); ++i) gi[i] *= g[0];
                       t.accumulate(probs, gi);
                     });
}

/// Softmax followed by weighted cross-entropy, evaluated in log space.
/// The logit gradient is w(x) (p - onehot(l)).
template <typename T>
Var softmax_cross_entropy(GradTape<T>& tape, Var logits, const ClassMap& labels,
                          const WeightMap& weights, std::size_t* saturated = nullptr) {
  const Tensor<T>& a = tape.value(logits);
  detail::check_loss_inputs(a, labels, weights);
  if (a.c() < 2) throw PreconditionError("softmax_cross_entropy: need at least 2 channels");
  const std::size_t C = a.c(), P = labels.size();
  const double log_floor = std::log(kProbabilityFloor);
  auto grad = std::make_shared<Tensor<T>>(a.shape());
  double loss = 0;
  std::size_t sat = 0;
  for (std::size_t i = 0; i < P; ++i) {
    double mx = a[i];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, static_cast<double>(a[c * P + i]));
    double sum = 0;
    for (std::size_t c = 0; c < C; ++c) sum += std::exp(a[c * P + i] - mx);
    const double lse = mx + std::log(sum);
    const double w = weights.data[i];
    const std::size_t label = labels.data[i];
    double logp = a[label * P + i] - lse;
    if (logp < log_floor) {
      ++sat;
      logp = log_floor;
    }
    loss -= w * logp;
    for (std::size_t c = 0; c < C; ++c) {
      const double p = std::exp(a[c * P + i] - lse);
      (*grad)[c * P + i] = static_cast<T>(w * (p - (c == label ? 1.0 : 0.0)));
    }
  }
  if (saturated) *saturated = sat;
  return tape.record(Tensor<T>({1, 1, 1, 1}, static_cast<T>(loss)), {logits}, "softmax_cross_entropy",
                     [logits, grad](GradTape<T>& t, const Tensor<T>& g) {
                       Tensor<T> gi = *grad;
                       for (std::size_t i = 0; i < gi.size(); ++i) gi[i] *= g[0];
                       t.accumulate(logits, gi);
                     });
}

template <typename T>
Var sum(GradTape<T>& tape, Var x) {
  const Tensor<T>& v = tape.value(x);
  T s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i];
  const Shape shape = v.shape();
  return tape.record(Tensor<T>({1, 1, 1, 1}, s), {x}, "sum",
                     [x, shape](GradTape<T>& t, const Tensor<T>& g) { t.accumulate(x, Tensor<T>(shape, g[0])); });
}

/// Inner product with a fixed tensor; used to reduce arbitrary outputs to a scalar.
template <typename T>
Var dot(GradTape<T>& tape, Var x, const Tensor<T>& coefficients) {
  const Tensor<T>& v = tape.value(x);
  if (v.shape() != coefficients.shape()) {
    throw PreconditionError("dot: shapes " + v.shape().str() + " and " + coefficients.shape().str());
  }
  T s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * coefficients[i];
  auto coef = std::make_shared<Tensor<T>>(coefficients);
  return tape.record(Tensor<T>({1, 1, 1, 1}, s), {x}, "dot", [x, coef](GradTape<T>& t, const Tensor<T>& g) {
    Tensor<T> gi = *coef;
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] *= g[0];
    t.accumulate(x, gi);
  });
}

}  // namespace ops

/// Loss value of -sum w log p for a probability tensor, without recording.
template <typename T>
double weighted_cross_entropy(const Tensor<T>& probabilities, const ClassMap& labels,
                              const WeightMap& weights, std::size_t* saturated = nullptr) {
  GradTape<T> tape;
  Var p = tape.constant(probabilities);
  return static_cast<double>(tape.value(ops::weighted_cross_entropy(tape, p, labels, weights, saturated))[0]);
}

}  // namespace unet
