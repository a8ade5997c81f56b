#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "unet/tensor.hpp"

namespace unet {

/// Single-channel 2-D grid in row-major order.
template <typename T>
struct Raster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(std::size_t h, std::size_t w, T fill = T{}) : height(h), width(w), data(h * w, fill) {}
  Raster(std::size_t h, std::size_t w, std::vector<T> values)
      : height(h), width(w), data(std::move(values)) {
    if (data.size() != h * w) throw PreconditionError("raster data length does not match size");
  }

  std::size_t size() const { return data.size(); }
  T& operator()(std::size_t y, std::size_t x) { return data[y * width + x]; }
  const T& operator()(std::size_t y, std::size_t x) const { return data[y * width + x]; }
  bool same_size(std::size_t h, std::size_t w) const { return height == h && width == w; }
  template <typename U>
  bool same_size(const Raster<U>& o) const { return height == o.height && width == o.width; }

  friend bool operator==(const Raster&, const Raster&) = default;
};

using Image = Raster<double>;
/// Per-pixel instance ids: 0 is background, k >= 1 an object, kUnannotated unlabeled.
using InstanceMap = Raster<std::uint32_t>;
/// Per-pixel class index in [0, K); channel index into the network output.
using ClassMap = Raster<std::uint8_t>;
using WeightMap = Raster<double>;
/// Binary masks use 0 / 1.
using Mask = Raster<std::uint8_t>;

inline constexpr std::uint32_t kUnannotated = 65535;

inline std::string size_str(std::size_t h, std::size_t w) {
  return std::to_string(h) + "x" + std::to_string(w);
}

/// Packs a raster into a 1x1xHxW tensor.
template <typename T, typename U>
Tensor<T> to_tensor(const Raster<U>& r) {
  Tensor<T> t({1, 1, r.height, r.width});
  for (std::size_t i = 0; i < r.size(); ++i) t[i] = static_cast<T>(r.data[i]);
  return t;
}

/// Extracts channel `c` of batch item 0.
template <typename U, typename T>
Raster<U> channel_raster(const Tensor<T>& t, std::size_t c) {
  Raster<U> r(t.h(), t.w());
  const T* p = t.plane(0, c);
  for (std::size_t i = 0; i < r.size(); ++i) r.data[i] = static_cast<U>(p[i]);
  return r;
}

}  // namespace unet
