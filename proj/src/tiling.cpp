#include "unet/tiling.hpp"

#include <sstream>

#include "unet/augment.hpp"

namespace unet {

template <typename V>
Raster<V> mirror_pad(const Raster<V>& image, const Margins& m) {
  const std::size_t H = image.height + m.top + m.bottom, W = image.width + m.left + m.right;
  Raster<V> out(H, W);
  std::vector<std::size_t> cols(W);
  for (std::size_t x = 0; x < W; ++x) {
    cols[x] = static_cast<std::size_t>(
        reflect_index(static_cast<std::ptrdiff_t>(x) - static_cast<std::ptrdiff_t>(m.left), image.width));
  }
  for (std::size_t y = 0; y < H; ++y) {
    const auto sy = static_cast<std::size_t>(
        reflect_index(static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(m.top), image.height));
    for (std::size_t x = 0; x < W; ++x) out(y, x) = image(sy, cols[x]);
  }
  return out;
}

template Raster<double> mirror_pad(const Raster<double>&, const Margins&);
template Raster<std::uint8_t> mirror_pad(const Raster<std::uint8_t>&, const Margins&);
template Raster<std::uint32_t> mirror_pad(const Raster<std::uint32_t>&, const Margins&);

TilePlan plan_tiles(std::size_t height, std::size_t width, const UNetConfig& config, std::size_t tile_size) {
  if (height == 0 || width == 0) throw PreconditionError("plan_tiles: empty image");
  const SizeCheck check = output_size(tile_size, config.depth);
  if (!check.valid) {
    throw PreconditionError("plan_tiles: invalid tile size " + std::to_string(tile_size) + ": " + check.reason);
  }
  TilePlan plan;
  plan.image_height = height;
  plan.image_width = width;
  plan.tile_size = tile_size;
  plan.output_size = check.output;
  plan.margin = (tile_size - check.output) / 2;
  const std::size_t align = std::size_t{1} << config.depth;
  plan.stride = (check.output / align) * align;
  if (plan.stride == 0) {
    throw PreconditionError("plan_tiles: tile " + std::to_string(tile_size) + " gives output " +
                            std::to_string(check.output) + ", smaller than the pooling period " +
                            std::to_string(align));
  }
  auto count = [&](std::size_t extent) {
    if (extent <= plan.output_size) return std::size_t{1};
    return 1 + (extent - plan.output_size + plan.stride - 1) / plan.stride;
  };
  plan.rows = count(height);
  plan.cols = count(width);
  plan.padding.top = plan.margin;
  plan.padding.left = plan.margin;
  plan.padding.bottom = (plan.rows - 1) * plan.stride + tile_size - plan.margin - height;
  plan.padding.right = (plan.cols - 1) * plan.stride + tile_size - plan.margin - width;

  for (std::size_t r = 0; r < plan.rows; ++r) {
    for (std::size_t c = 0; c < plan.cols; ++c) {
      Tile t;
      t.output.y = r * plan.stride;
      t.output.x = c * plan.stride;
      t.output.height = r + 1 == plan.rows ? height - t.output.y : plan.stride;
      t.output.width = c + 1 == plan.cols ? width - t.output.x : plan.stride;
      t.input_y = t.output.y;
      t.input_x = t.output.x;
      plan.tiles.push_back(t);
    }
  }
  return plan;
}

namespace {

template <typename T>
ProbabilityMap empty_probs(std::size_t classes, std::size_t H, std::size_t W) {
  return ProbabilityMap(classes, Raster<double>(H, W));
}

template <typename T>
Tensor<T> window(const Image& padded, std::size_t y0, std::size_t x0, std::size_t size_y, std::size_t size_x) {
  Tensor<T> t({1, 1, size_y, size_x});
  for (std::size_t y = 0; y < size_y; ++y)
    for (std::size_t x = 0; x < size_x; ++x) t(0, 0, y, x) = static_cast<T>(padded(y0 + y, x0 + x));
  return t;
}

template <typename T>
void check_single_channel(const UNet<T>& net) {
  if (net.config().in_channels != 1) {
    throw PreconditionError("prediction on grayscale rasters needs in_channels = 1, network has " +
                            std::to_string(net.config().in_channels));
  }
}

}  // namespace

template <typename T>
ProbabilityMap predict_tiled(const UNet<T>& net, const Image& image, const TilePlan& plan) {
  check_single_channel(net);
  if (!image.same_size(plan.image_height, plan.image_width)) {
    throw PreconditionError("predict_tiled: plan for " + size_str(plan.image_height, plan.image_width) +
                            " used on image " + size_str(image.height, image.width));
  }
  const Image padded = mirror_pad(image, plan.padding);
  const std::size_t K = net.config().num_classes;
  ProbabilityMap probs = empty_probs<T>(K, image.height, image.width);
  for (const Tile& tile : plan.tiles) {
    const Tensor<T> p =
        kernels::softmax_channels(net.forward(window<T>(padded, tile.input_y, tile.input_x, plan.tile_size, plan.tile_size)));
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t y = 0; y < tile.output.height; ++y)
        for (std::size_t x = 0; x < tile.output.width; ++x)
          probs[k](tile.output.y + y, tile.output.x + x) = static_cast<double>(p(0, k, y, x));
    }
  }
  return probs;
}

template <typename T>
ProbabilityMap predict_whole(const UNet<T>& net, const Image& image) {
  check_single_channel(net);
  const std::size_t depth = net.config().depth;
  auto smallest_valid = [depth](std::size_t need) {
    for (std::size_t s = need;; ++s) {
      if (output_size(s, depth).valid) return s;
    }
  };
  const std::size_t margin = context_margin(smallest_valid(1), depth);
  const std::size_t SH = smallest_valid(image.height + 2 * margin);
  const std::size_t SW = smallest_valid(image.width + 2 * margin);
  const Margins m{margin, SH - image.height - margin, margin, SW - image.width - margin};
  const Image padded = mirror_pad(image, m);
  const Tensor<T> p = kernels::softmax_channels(net.forward(window<T>(padded, 0, 0, SH, SW)));
  const std::size_t K = net.config().num_classes;
  ProbabilityMap probs = empty_probs<T>(K, image.height, image.width);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t y = 0; y < image.height; ++y)
      for (std::size_t x = 0; x < image.width; ++x) probs[k](y, x) = static_cast<double>(p(0, k, y, x));
  return probs;
}

std::vector<Dihedral> all_dihedral() {
  std::vector<Dihedral> v;
  for (bool flip : {false, true})
    for (int r = 0; r < 4; ++r) v.push_back({r, flip});
  return v;
}

std::string dihedral_name(const Dihedral& t) {
  return std::string(t.flip ? "f" : "r") + std::to_string(90 * t.rotation);
}

std::vector<Dihedral> parse_dihedral_list(const std::string& spec) {
  if (spec == "all") return all_dihedral();
  if (spec == "identity") return {Dihedral{}};
  std::vector<Dihedral> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    bool ok = false;
    for (const Dihedral& d : all_dihedral()) {
      if (dihedral_name(d) == item) {
        out.push_back(d);
        ok = true;
      }
    }
    if (!ok) throw PreconditionError("unknown transform '" + item + "' (expected r0|r90|r180|r270|f0|f90|f180|f270)");
  }
  if (out.empty()) throw PreconditionError("empty transform list");
  return out;
}

namespace {

template <typename V>
Raster<V> flip_horizontal(const Raster<V>& r) {
  Raster<V> out(r.height, r.width);
  for (std::size_t y = 0; y < r.height; ++y)
    for (std::size_t x = 0; x < r.width; ++x) out(y, x) = r(y, r.width - 1 - x);
  return out;
}

template <typename V>
Raster<V> rotate_ccw(const Raster<V>& r) {
  Raster<V> out(r.width, r.height);
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x) out(y, x) = r(x, r.width - 1 - y);
  return out;
}

template <typename V>
Raster<V> rotate_cw(const Raster<V>& r) {
  Raster<V> out(r.width, r.height);
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x) out(y, x) = r(r.height - 1 - x, y);
  return out;
}

}  // namespace

template <typename V>
Raster<V> apply_dihedral(const Raster<V>& r, const Dihedral& t) {
  Raster<V> out = t.flip ? flip_horizontal(r) : r;
  for (int i = 0; i < ((t.rotation % 4) + 4) % 4; ++i) out = rotate_ccw(out);
  return out;
}

template <typename V>
Raster<V> invert_dihedral(const Raster<V>& r, const Dihedral& t) {
  Raster<V> out = r;
  for (int i = 0; i < ((t.rotation % 4) + 4) % 4; ++i) out = rotate_cw(out);
  return t.flip ? flip_horizontal(out) : out;
}

template Raster<double> apply_dihedral(const Raster<double>&, const Dihedral&);
template Raster<double> invert_dihedral(const Raster<double>&, const Dihedral&);
template Raster<std::uint8_t> apply_dihedral(const Raster<std::uint8_t>&, const Dihedral&);
template Raster<std::uint8_t> invert_dihedral(const Raster<std::uint8_t>&, const Dihedral&);
template Raster<std::uint32_t> apply_dihedral(const Raster<std::uint32_t>&, const Dihedral&);
template Raster<std::uint32_t> invert_dihedral(const Raster<std::uint32_t>&, const Dihedral&);

template <typename T>
ProbabilityMap rotate_average(const UNet<T>& net, const Image& image, const std::vector<Dihedral>& transforms,
                              std::size_t tile_size) {
  if (transforms.empty()) throw PreconditionError("rotate_average: empty transform list");
  const std::size_t K = net.config().num_classes;
  ProbabilityMap acc = empty_probs<T>(K, image.height, image.width);
  for (const Dihedral& t : transforms) {
    const Image view = apply_dihedral(image, t);
    const ProbabilityMap p = predict_tiled(net, view, plan_tiles(view.height, view.width, net.config(), tile_size));
    for (std::size_t k = 0; k < K; ++k) {
      const Raster<double> back = invert_dihedral(p[k], t);
      for (std::size_t i = 0; i < back.size(); ++i) acc[k].data[i] += back.data[i];
    }
  }
  const double n = static_cast<double>(transforms.size());
  for (auto& r : acc)
    for (double& v : r.data) v /= n;
  return acc;
}

ClassMap argmax(const ProbabilityMap& probs) {
  if (probs.empty()) throw PreconditionError("argmax: no channels");
  ClassMap out(probs[0].height, probs[0].width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < probs.size(); ++k) {
      if (probs[k].data[i] > probs[best].data[i]) best = k;
    }
    out.data[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

template ProbabilityMap predict_tiled(const UNet<float>&, const Image&, const TilePlan&);
template ProbabilityMap predict_tiled(const UNet<double>&, const Image&, const TilePlan&);
template ProbabilityMap predict_whole(const UNet<float>&, const Image&);
template ProbabilityMap predict_whole(const UNet<double>&, const Image&);
template ProbabilityMap rotate_average(const UNet<float>&, const Image&, const std::vector<Dihedral>&, std::size_t);
template ProbabilityMap rotate_average(const UNet<double>&, const Image&, const std::vector<Dihedral>&, std::size_t);

}  // namespace unet
