// OpenMP kernels against the serial reference loops. Arguments are
// {channels, spatial size}; the thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "unet/kernels.hpp"
#include "unet/rng.hpp"

namespace {

using namespace unet;

Tensor<float> random_tensor(const Shape& s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

struct ConvCase {
  Tensor<float> x, w, b, g;
};

ConvCase conv_case(const benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0)), s = static_cast<std::size_t>(state.range(1));
  ConvCase k{random_tensor({1, c, s, s}, 1), random_tensor({c, c, 3, 3}, 2), random_tensor({1, c, 1, 1}, 3), {}};
  k.g = random_tensor({1, c, s - 2, s - 2}, 4);
  return k;
}

ConvCase upconv_case(const benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0)), s = static_cast<std::size_t>(state.range(1));
  ConvCase k{random_tensor({1, c, s, s}, 1), random_tensor({c / 2, c, 2, 2}, 2), random_tensor({1, c / 2, 1, 1}, 3), {}};
  k.g = random_tensor({1, c / 2, 2 * s, 2 * s}, 4);
  return k;
}

void conv_flops(benchmark::State& state) {
  const double c = static_cast<double>(state.range(0)), o = static_cast<double>(state.range(1) - 2);
  state.counters["GFLOP/s"] =
      benchmark::Counter(2.0 * c * c * 9.0 * o * o, benchmark::Counter::kIsIterationInvariantRate, benchmark::Counter::kIs1000);
}

template <bool Fast>
void BM_ConvForward(benchmark::State& state) {
  const ConvCase k = conv_case(state);
  for (auto _ : state) {
    auto out = Fast ? kernels::conv2d_forward(k.x, k.w, k.b) : reference::conv2d_forward(k.x, k.w, k.b);
    benchmark::DoNotOptimize(out.data());
  }
  conv_flops(state);
}

template <bool Fast>
void BM_ConvBackward(benchmark::State& state) {
  const ConvCase k = conv_case(state);
  for (auto _ : state) {
    auto g = Fast ? kernels::conv2d_backward(k.x, k.w, k.b, k.g) : reference::conv2d_backward(k.x, k.w, k.b, k.g);
    benchmark::DoNotOptimize(g.input.data());
  }
}

template <bool Fast>
void BM_UpConvForward(benchmark::State& state) {
  const ConvCase k = upconv_case(state);
  for (auto _ : state) {
    auto out = Fast ? kernels::upconv2x2_forward(k.x, k.w, k.b) : reference::upconv2x2_forward(k.x, k.w, k.b);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Fast>
void BM_UpConvBackward(benchmark::State& state) {
  const ConvCase k = upconv_case(state);
  for (auto _ : state) {
    auto g = Fast ? kernels::upconv2x2_backward(k.x, k.w, k.b, k.g) : reference::upconv2x2_backward(k.x, k.w, k.b, k.g);
    benchmark::DoNotOptimize(g.input.data());
  }
}

template <bool Fast>
void BM_MaxPool(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0)), s = static_cast<std::size_t>(state.range(1));
  const Tensor<float> x = random_tensor({1, c, s, s}, 5);
  for (auto _ : state) {
    auto r = Fast ? kernels::maxpool2x2_forward(x) : reference::maxpool2x2_forward(x);
    benchmark::DoNotOptimize(r.output.data());
  }
}

#define UNET_BENCH_PAIR(fn, ...)                                                        \
  BENCHMARK(fn<true>)->Name(#fn "/omp")->Args(__VA_ARGS__)->Unit(benchmark::kMillisecond); \
  BENCHMARK(fn<false>)->Name(#fn "/reference")->Args(__VA_ARGS__)->Unit(benchmark::kMillisecond)

UNET_BENCH_PAIR(BM_ConvForward, {16, 130});
UNET_BENCH_PAIR(BM_ConvForward, {64, 66});
UNET_BENCH_PAIR(BM_ConvBackward, {16, 130});
UNET_BENCH_PAIR(BM_ConvBackward, {64, 66});
UNET_BENCH_PAIR(BM_UpConvForward, {64, 64});
UNET_BENCH_PAIR(BM_UpConvBackward, {64, 64});
UNET_BENCH_PAIR(BM_MaxPool, {64, 128});

}  // namespace
BENCHMARK_MAIN();
