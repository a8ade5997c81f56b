// Serial reference kernels. Each output element is written as the literal
// sum from its definition; no blocking, no parallelism.

#include "unet/kernels.hpp"

namespace unet::reference {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  check_conv_shapes(input.shape(), weights.shape(), bias.shape());
  const auto& ws = weights.shape();
  const std::size_t OH = input.h() - ws.h + 1, OW = input.w() - ws.w + 1;
  Tensor<T> out({input.n(), ws.n, OH, OW});
  for (std::size_t n = 0; n < input.n(); ++n)
    for (std::size_t k = 0; k < ws.n; ++k)
      for (std::size_t y = 0; y < OH; ++y)
        for (std::size_t x = 0; x < OW; ++x) {
          T acc = bias[k];
          for (std::size_t c = 0; c < ws.c; ++c)
            for (std::size_t dy = 0; dy < ws.h; ++dy)
              for (std::size_t dx = 0; dx < ws.w; ++dx)
                acc += weights(k, c, dy, dx) * input(n, c, y + dy, x + dx);
          out(n, k, y, x) = acc;
        }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                             const Tensor<T>& grad_output) {
  const auto& ws = weights.shape();
  const std::size_t OH = grad_output.h(), OW = grad_output.w();
  ConvGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(ws), Tensor<T>(bias.shape())};
  for (std::size_t n = 0; n < input.n(); ++n)
    for (std::size_t k = 0; k < ws.n; ++k)
      for (std::size_t y = 0; y < OH; ++y)
        for (std::size_t x = 0; x < OW; ++x) {
          const T go = grad_output(n, k, y, x);
          g.bias[k] += go;
          for (std::size_t c = 0; c < ws.c; ++c)
            for (std::size_t dy = 0; dy < ws.h; ++dy)
              for (std::size_t dx = 0; dx < ws.w; ++dx) {
                g.weights(k, c, dy, dx) += go * input(n, c, y + dy, x + dx);
                g.input(n, c, y + dy, x + dx) += go * weights(k, c, dy, dx);
              }
        }
  return g;
}

template <typename T>
Tensor<T> upconv2x2_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  check_upconv_shapes(input.shape(), weights.shape(), bias.shape());
  const std::size_t K = weights.n();
  Tensor<T> out({input.n(), K, 2 * input.h(), 2 * input.w()});
  for (std::size_t n = 0; n < input.n(); ++n)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t y = 0; y < out.h(); ++y)
        for (std::size_t x = 0; x < out.w(); ++x) {
          T acc = bias[k];
          for (std::size_t c = 0; c < input.c(); ++c)
            acc += weights(k, c, y % 2, x % 2) * input(n, c, y / 2, x / 2);
          out(n, k, y, x) = acc;
        }
  return out;
}

template <typename T>
ConvGrads<T> upconv2x2_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                                const Tensor<T>& grad_output) {
  const std::size_t K = weights.n();
  ConvGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(weights.shape()),
                 Tensor<T>(bias.shape())};
  for (std::size_t n = 0; n < input.n(); ++n)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t y = 0; y < grad_output.h(); ++y)
        for (std::size_t x = 0; x < grad_output.w(); ++x) {
          const T go = grad_output(n, k, y, x);
          g.bias[k] += go;
          for (std::size_t c = 0; c < input.c(); ++c) {
            g.weights(k, c, y % 2, x % 2) += go * input(n, c, y / 2, x / 2);
            g.input(n, c, y / 2, x / 2) += go * weights(k, c, y % 2, x % 2);
          }
        }
  return g;
}

template <typename T>
PoolResult<T> maxpool2x2_forward(const Tensor<T>& input) {
  check_pool_shape(input.shape());
  PoolResult<T> r{Tensor<T>({input.n(), input.c(), input.h() / 2, input.w() / 2}), {}};
  r.indices.argmax.resize(r.output.size());
  for (std::size_t n = 0; n < input.n(); ++n)
    for (std::size_t c = 0; c < input.c(); ++c)
      for (std::size_t y = 0; y < r.output.h(); ++y)
        for (std::size_t x = 0; x < r.output.w(); ++x) {
          std::size_t by = 2 * y, bx = 2 * x;
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx)
              if (input(n, c, 2 * y + dy, 2 * x + dx) > input(n, c, by, bx)) {
                by = 2 * y + dy;
                bx = 2 * x + dx;
              }
          r.output(n, c, y, x) = input(n, c, by, bx);
          r.indices.argmax[r.output.offset(n, c, y, x)] =
              static_cast<std::uint32_t>(by * input.w() + bx);
        }
  return r;
}

#define UNET_INSTANTIATE_REFERENCE(T)                                                \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);         \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                        const Tensor<T>&);                           \
  template Tensor<T> upconv2x2_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);      \
  template ConvGrads<T> upconv2x2_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                           const Tensor<T>&);                        \
  template PoolResult<T> maxpool2x2_forward(const Tensor<T>&);

UNET_INSTANTIATE_REFERENCE(float)
UNET_INSTANTIATE_REFERENCE(double)

#undef UNET_INSTANTIATE_REFERENCE

}  // namespace unet::reference
