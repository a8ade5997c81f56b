#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "unet/kernels.hpp"

namespace unet {

namespace {
int g_default_threads = 0;
}

void set_num_threads(int threads) {
  if (g_default_threads == 0) g_default_threads = omp_get_max_threads();
  omp_set_num_threads(threads > 0 ? threads : g_default_threads);
}

int num_threads() { return omp_get_max_threads(); }

Shape check_conv_shapes(const Shape& input, const Shape& weights, const Shape& bias) {
  if (input.c != weights.c) {
    throw PreconditionError("conv: input " + input.str() + " has " + std::to_string(input.c) +
                            " channels but weights " + weights.str() + " expect " +
                            std::to_string(weights.c));
  }
  if (input.h < weights.h || input.w < weights.w) {
    throw PreconditionError("conv: input " + input.str() + " is smaller than kernel " +
                            weights.str());
  }
  if (bias.size() != weights.n) {
    throw PreconditionError("conv: bias " + bias.str() + " does not match weights " +
                            weights.str());
  }
  return {input.n, weights.n, input.h - weights.h + 1, input.w - weights.w + 1};
}

Shape check_upconv_shapes(const Shape& input, const Shape& weights, const Shape& bias) {
  if (weights.h != 2 || weights.w != 2) {
    throw PreconditionError("upconv: kernel must be 2x2, got weights " + weights.str());
  }
  if (input.c != weights.c) {
    throw PreconditionError("upconv: input " + input.str() + " does not match weights " +
                            weights.str());
  }
  if (bias.size() != weights.n) {
    throw PreconditionError("upconv: bias " + bias.str() + " does not match weights " +
                            weights.str());
  }
  return {input.n, weights.n, 2 * input.h, 2 * input.w};
}

Shape check_pool_shape(const Shape& input) {
  if (input.h % 2 != 0 || input.w % 2 != 0) {
    throw PreconditionError("maxpool2x2: input " + input.str() + " has odd height or width");
  }
  return {input.n, input.c, input.h / 2, input.w / 2};
}

Shape check_crop_concat_shapes(const Shape& skip, const Shape& up) {
  if (skip.n != up.n) {
    throw PreconditionError("crop_concat: batch mismatch between skip " + skip.str() +
                            " and up " + up.str());
  }
  if (skip.h < up.h || skip.w < up.w) {
    throw PreconditionError("crop_concat: skip " + skip.str() + " smaller than up " + up.str());
  }
  if ((skip.h - up.h) % 2 != 0 || (skip.w - up.w) % 2 != 0) {
    throw PreconditionError("crop_concat: odd size difference between skip " + skip.str() +
                            " and up " + up.str());
  }
  return {up.n, skip.c + up.c, up.h, up.w};
}

namespace kernels {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  const Shape out_shape = check_conv_shapes(input.shape(), weights.shape(), bias.shape());
  const auto& ws = weights.shape();
  const std::size_t N = input.n(), C = input.c(), H = input.h(), W = input.w();
  const std::size_t K = ws.n, KH = ws.h, KW = ws.w;
  const std::size_t OH = H - KH + 1, OW = W - KW + 1;
  Tensor<T> out(out_shape);
  const long long jobs = static_cast<long long>(N * K);

#pragma omp parallel for schedule(static)
  for (long long job = 0; job < jobs; ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / K;
    const std::size_t k = static_cast<std::size_t>(job) % K;
    T* o = out.plane(n, k);
    std::fill(o, o + OH * OW, bias[k]);
    for (std::size_t c = 0; c < C; ++c) {
      const T* in = input.plane(n, c);
      for (std::size_t dy = 0; dy < KH; ++dy) {
        for (std::size_t dx = 0; dx < KW; ++dx) {
          const T wv = weights(k, c, dy, dx);
          for (std::size_t y = 0; y < OH; ++y) {
            const T* src = in + (y + dy) * W + dx;
            T* dst = o + y * OW;
            for (std::size_t x = 0; x < OW; ++x) dst[x] += wv * src[x];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                             const Tensor<T>& grad_output) {
  const auto& ws = weights.shape();
  const std::size_t N = input.n(), C = input.c(), H = input.h(), W = input.w();
  const std::size_t K = ws.n, KH = ws.h, KW = ws.w;
  const std::size_t OH = H - KH + 1, OW = W - KW + 1;
  if (grad_output.shape() != Shape{N, K, OH, OW}) {
    throw PreconditionError("conv backward: grad " + grad_output.shape().str() +
                            " does not match output shape " + Shape{N, K, OH, OW}.str());
  }
  ConvGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(ws), Tensor<T>(bias.shape())};

  // Input gradient: one (n, c) plane per job, scattered from every output channel.
  const long long in_jobs = static_cast<long long>(N * C);
#pragma omp parallel for schedule(static)
  for (long long job = 0; job < in_jobs; ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / C;
    const std::size_t c = static_cast<std::size_t>(job) % C;
    T* gi = g.input.plane(n, c);
    for (std::size_t k = 0; k < K; ++k) {
      const T* go = grad_output.plane(n, k);
      for (std::size_t dy = 0; dy < KH; ++dy) {
        for (std::size_t dx = 0; dx < KW; ++dx) {
          const T wv = weights(k, c, dy, dx);
          for (std::size_t y = 0; y < OH; ++y) {
            T* dst = gi + (y + dy) * W + dx;
            const T* src = go + y * OW;
            for (std::size_t x = 0; x < OW; ++x) dst[x] += wv * src[x];
          }
        }
      }
    }
  }

  // Weight gradient: one (k, c) filter slice per job.
  const long long w_jobs = static_cast<long long>(K * C);
#pragma omp parallel for schedule(static)
  for (long long job = 0; job < w_jobs; ++job) {
    const std::size_t k = static_cast<std::size_t>(job) / C;
    const std::size_t c = static_cast<std::size_t>(job) % C;
    for (std::size_t dy = 0; dy < KH; ++dy) {
      for (std::size_t dx = 0; dx < KW; ++dx) {
        T acc = 0;
        for (std::size_t n = 0; n < N; ++n) {
          const T* go = grad_output.plane(n, k);
          const T* in = input.plane(n, c);
          for (std::size_t y = 0; y < OH; ++y) {
            const T* a = go + y * OW;
            const T* b = in + (y + dy) * W + dx;
            for (std::size_t x = 0; x < OW; ++x) acc += a[x] * b[x];
          }
        }
        g.weights(k, c, dy, dx) = acc;
      }
    }
  }

#pragma omp parallel for schedule(static)
  for (long long k = 0; k < static_cast<long long>(K); ++k) {
    T acc = 0;
    for (std::size_t n = 0; n < N; ++n) {
      const T* go = grad_output.plane(n, static_cast<std::size_t>(k));
      for (std::size_t i = 0; i < OH * OW; ++i) acc += go[i];
    }
    g.bias[static_cast<std::size_t>(k)] = acc;
  }
  return g;
}

template <typename T>
Tensor<T> upconv2x2_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  const Shape out_shape = check_upconv_shapes(input.shape(), weights.shape(), bias.shape());
  const std::size_t N = input.n(), C = input.c(), H = input.h(), W = input.w();
  const std::size_t K = weights.n();
  const std::size_t OW = 2 * W;
  Tensor<T> out(out_shape);
  const long long jobs = static_cast<long long>(N * K);

#pragma omp parallel for schedule(static)
  for (long long job = 0; job < jobs; ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / K;
    const std::size_t k = static_cast<std::size_t>(job) % K;
    T* o = out.plane(n, k);
    std::fill(o, o + 4 * H * W, bias[k]);
    for (std::size_t c = 0; c < C; ++c) {
      const T* in = input.plane(n, c);
      for (std::size_t dy = 0; dy < 2; ++dy) {
        for (std::size_t dx = 0; dx < 2; ++dx) {
          const T wv = weights(k, c, dy, dx);
          for (std::size_t y = 0; y < H; ++y) {
            T* dst = o + (2 * y + dy) * OW + dx;
            const T* src = in + y * W;
            for (std::size_t x = 0; x < W; ++x) dst[2 * x] += wv * src[x];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
ConvGrads<T> upconv2x2_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                                const Tensor<T>& grad_output) {
  const std::size_t N = input.n(), C = input.c(), H = input.h(), W = input.w();
  const std::size_t K = weights.n();
  const std::size_t OW = 2 * W;
  if (grad_output.shape() != Shape{N, K, 2 * H, 2 * W}) {
    throw PreconditionError("upconv backward: grad " + grad_output.shape().str() +
                            " does not match output shape " + Shape{N, K, 2 * H, 2 * W}.str());
  }
  ConvGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(weights.shape()),
                 Tensor<T>(bias.shape())};

  const long long in_jobs = static_cast<long long>(N * C);
#pragma omp parallel for schedule(static)
  for (long long job = 0; job < in_jobs; ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / C;
    const std::size_t c = static_cast<std::size_t>(job) % C;
    T* gi = g.input.plane(n, c);
    for (std::size_t k = 0; k < K; ++k) {
      const T* go = grad_output.plane(n, k);
      for (std::size_t dy = 0; dy < 2; ++dy) {
        for (std::size_t dx = 0; dx < 2; ++dx) {
          const T wv = weights(k, c, dy, dx);
          for (std::size_t y = 0; y < H; ++y) {
            const T* src = go + (2 * y + dy) * OW + dx;
            T* dst = gi + y * W;
            for (std::size_t x = 0; x < W; ++x) dst[x] += wv * src[2 * x];
          }
        }
      }
    }
  }

  const long long w_jobs = static_cast<long long>(K * C);
#pragma omp parallel for schedule(static)
  for (long long job = 0; job < w_jobs; ++job) {
    const std::size_t k = static_cast<std::size_t>(job) / C;
    const std::size_t c = static_cast<std::size_t>(job) % C;
    for (std::size_t dy = 0; dy < 2; ++dy) {
      for (std::size_t dx = 0; dx < 2; ++dx) {
        T acc = 0;
        for (std::size_t n = 0; n < N; ++n) {
          const T* go = grad_output.plane(n, k);
          const T* in = input.plane(n, c);
          for (std::size_t y = 0; y < H; ++y) {
            const T* a = go + (2 * y + dy) * OW + dx;
            const T* b = in + y * W;
            for (std::size_t x = 0; x < W; ++x) acc += a[2 * x] * b[x];
          }
        }
        g.weights(k, c, dy, dx) = acc;
      }
    }
  }

#pragma omp parallel for schedule(static)
  for (long long k = 0; k < static_cast<long long>(K); ++k) {
    T acc = 0;
    for (std::size_t n = 0; n < N; ++n) {
      const T* go = grad_output.plane(n, static_cast<std::size_t>(k));
      for (std::size_t i = 0; i < 4 * H * W; ++i) acc += go[i];
    }
    g.bias[static_cast<std::size_t>(k)] = acc;
  }
  return g;
}

template <typename T>
PoolResult<T> maxpool2x2_forward(const Tensor<T>& input) {
  const Shape out_shape = check_pool_shape(input.shape());
  const std::size_t N = input.n(), C = input.c(), H = input.h(), W = input.w();
  const std::size_t OH = H / 2, OW = W / 2;
  PoolResult<T> r{Tensor<T>(out_shape), {}};
  r.indices.argmax.resize(r.output.size());
  const long long jobs = static_cast<long long>(N * C);

#pragma omp parallel for schedule(static)
  for (long long job = 0; job < jobs; ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / C;
    const std::size_t c = static_cast<std::size_t>(job) % C;
    const T* in = input.plane(n, c);
    T* o = r.output.plane(n, c);
    std::uint32_t* idx = r.indices.argmax.data() + r.output.offset(n, c, 0, 0);
    for (std::size_t y = 0; y < OH; ++y) {
      for (std::size_t x = 0; x < OW; ++x) {
        std::size_t best = (2 * y) * W + 2 * x;
        // Strict comparison keeps the first maximum in row-major order.
        for (std::size_t cand : {best + 1, best + W, best + W + 1}) {
          if (in[cand] > in[best]) best = cand;
        }
        o[y * OW + x] = in[best];
        idx[y * OW + x] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool2x2_backward(const Shape& input_shape, const PoolIndices& indices,
                              const Tensor<T>& grad_output) {
  Tensor<T> gi(input_shape);
  const std::size_t N = input_shape.n, C = input_shape.c;
  const std::size_t OP = grad_output.h() * grad_output.w();
  const long long jobs = static_cast<long long>(N * C);

#pragma omp parallel for schedule(static)
  for (long long job = 0; job < jobs; ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / C;
    const std::size_t c = static_cast<std::size_t>(job) % C;
    const std::size_t base = grad_output.offset(n, c, 0, 0);
    T* dst = gi.plane(n, c);
    for (std::size_t i = 0; i < OP; ++i) dst[indices.argmax[base + i]] += grad_output[base + i];
  }
  return gi;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  const long long n = static_cast<long long>(input.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) out[i] = input[i] > T(0) ? input[i] : T(0);
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_output) {
  Tensor<T> gi(input.shape());
  const long long n = static_cast<long long>(input.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) gi[i] = input[i] > T(0) ? grad_output[i] : T(0);
  return gi;
}

template <typename T>
Tensor<T> crop_concat_forward(const Tensor<T>& skip, const Tensor<T>& up) {
  const Shape out_shape = check_crop_concat_shapes(skip.shape(), up.shape());
  const std::size_t N = up.n(), CS = skip.c(), CU = up.c(), H = up.h(), W = up.w();
  const std::size_t oy = (skip.h() - H) / 2, ox = (skip.w() - W) / 2;
  Tensor<T> out(out_shape);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < CS; ++c) {
      const T* src = skip.plane(n, c);
      T* dst = out.plane(n, c);
      for (std::size_t y = 0; y < H; ++y) {
        std::memcpy(dst + y * W, src + (y + oy) * skip.w() + ox, W * sizeof(T));
      }
    }
    std::memcpy(out.plane(n, CS), up.plane(n, 0), CU * H * W * sizeof(T));
  }
  return out;
}

template <typename T>
void crop_concat_backward(const Tensor<T>& grad_output, const Shape& skip_shape,
                          const Shape& up_shape, Tensor<T>& grad_skip, Tensor<T>& grad_up) {
  const std::size_t N = up_shape.n, CS = skip_shape.c, CU = up_shape.c;
  const std::size_t H = up_shape.h, W = up_shape.w;
  const std::size_t oy = (skip_shape.h - H) / 2, ox = (skip_shape.w - W) / 2;
  grad_skip = Tensor<T>(skip_shape);
  grad_up = Tensor<T>(up_shape);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < CS; ++c) {
      const T* src = grad_output.plane(n, c);
      T* dst = grad_skip.plane(n, c);
      for (std::size_t y = 0; y < H; ++y) {
        std::memcpy(dst + (y + oy) * skip_shape.w + ox, src + y * W, W * sizeof(T));
      }
    }
    std::memcpy(grad_up.plane(n, 0), grad_output.plane(n, CS), CU * H * W * sizeof(T));
  }
}

template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& logits) {
  const std::size_t N = logits.n(), C = logits.c(), P = logits.h() * logits.w();
  Tensor<T> out(logits.shape());
  for (std::size_t n = 0; n < N; ++n) {
    const T* a = logits.plane(n, 0);
    T* p = out.plane(n, 0);
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < static_cast<long long>(P); ++ii) {
      const std::size_t i = static_cast<std::size_t>(ii);
      T mx = a[i];
      for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, a[c * P + i]);
      T sum = 0;
      for (std::size_t c = 0; c < C; ++c) {
        const T e = std::exp(a[c * P + i] - mx);
        p[c * P + i] = e;
        sum += e;
      }
      for (std::size_t c = 0; c < C; ++c) p[c * P + i] /= sum;
    }
  }
  return out;
}

#define UNET_INSTANTIATE_KERNELS(T)                                                          \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                 \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,              \
                                        const Tensor<T>&);                                   \
  template Tensor<T> upconv2x2_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);              \
  template ConvGrads<T> upconv2x2_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                                           const Tensor<T>&);                                \
  template PoolResult<T> maxpool2x2_forward(const Tensor<T>&);                               \
  template Tensor<T> maxpool2x2_backward(const Shape&, const PoolIndices&, const Tensor<T>&); \
  template Tensor<T> relu_forward(const Tensor<T>&);                                         \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> crop_concat_forward(const Tensor<T>&, const Tensor<T>&);                \
  template void crop_concat_backward(const Tensor<T>&, const Shape&, const Shape&,           \
                                     Tensor<T>&, Tensor<T>&);                                \
  template Tensor<T> softmax_channels(const Tensor<T>&);

UNET_INSTANTIATE_KERNELS(float)
UNET_INSTANTIATE_KERNELS(double)
UNET_INSTANTIATE_KERNELS(long double)

#undef UNET_INSTANTIATE_KERNELS

}  // namespace kernels
}  // namespace unet
