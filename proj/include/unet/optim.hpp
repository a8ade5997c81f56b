#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "unet/rng.hpp"
#include "unet/tensor.hpp"

namespace unet {

/// He initialization: i.i.d. N(0, 2/N) with N = c_in * kh * kw.
template <typename T>
Tensor<T> he_init(const Shape& shape, Rng& rng) {
  const std::size_t fan_in = shape.c * shape.h * shape.w;
  if (fan_in == 0) throw PreconditionError("he_init: fan-in must be positive");
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  Tensor<T> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.normal(0.0, stddev));
  return t;
}

/// Classical (heavy-ball) momentum: v <- m v - lr g;  w <- w + v.
template <typename T>
class SgdMomentum {
 public:
  SgdMomentum(double learning_rate, double momentum) : lr_(learning_rate), momentum_(momentum) {
    if (!(learning_rate >= 0.0)) throw PreconditionError("learning rate must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw PreconditionError("momentum must be in [0, 1)");
  }

  /// Applies one update. Throws before touching any parameter if a gradient is not finite.
  void step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>> grads) {
    if (params.size() != grads.size()) {
      throw PreconditionError("sgd: " + std::to_string(params.size()) + " parameters but " +
                              std::to_string(grads.size()) + " gradients");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (grads[i].shape() != params[i]->shape()) {
        throw PreconditionError("sgd: gradient " + grads[i].shape().str() + " does not match parameter " +
                                params[i]->shape().str());
      }
      for (T g : grads[i].values()) {
        if (!std::isfinite(g)) {
          throw PreconditionError("sgd: non-finite gradient in parameter tensor " + std::to_string(i));
        }
      }
    }
    if (velocity_.empty()) {
      for (const Tensor<T>* p : params) velocity_.emplace_back(p->shape());
    }
    const T lr = static_cast<T>(lr_), m = static_cast<T>(momentum_);
    for (std::size_t i = 0; i < grads.size(); ++i) {
      Tensor<T>& v = velocity_[i];
      Tensor<T>& w = *params[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        v[j] = m * v[j] - lr * grads[i][j];
        w[j] += v[j];
      }
    }
  }

  const std::vector<Tensor<T>>& velocity() const { return velocity_; }
  double learning_rate() const { return lr_; }
  double momentum() const { return momentum_; }

 private:
  double lr_;
  double momentum_;
  std::vector<Tensor<T>> velocity_;
};

}  // namespace unet
