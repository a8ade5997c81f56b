#include "unet/augment.hpp"

#include <cmath>
#include <numbers>

namespace unet {

namespace {

constexpr double kKeysA = -0.5;

/// Maps pixel index to control-grid coordinate.
double grid_coord(std::size_t i, std::size_t n, std::size_t grid) {
  if (n <= 1) return 0.0;
  return static_cast<double>(i) * static_cast<double>(grid - 1) / static_cast<double>(n - 1);
}

std::ptrdiff_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  return std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1);
}

template <typename Sample>
void for_each_sample_position(std::size_t H, std::size_t W, Sample&& sample) {
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) sample(y, x);
}

}  // namespace

void AugmentConfig::validate() const {
  if (grid_size < 2) throw PreconditionError("augment: grid_size must be >= 2");
  if (!(displacement_sigma >= 0.0)) throw PreconditionError("augment: displacement_sigma must be >= 0");
  if (!(rotation_range >= 0.0) || !(shift_range >= 0.0)) {
    throw PreconditionError("augment: rotation and shift ranges must be >= 0");
  }
  if (!(gray_scale_min <= gray_scale_max) || !(gray_shift_min <= gray_shift_max)) {
    throw PreconditionError("augment: gray ranges must satisfy min <= max");
  }
}

AugmentConfig AugmentConfig::identity() {
  AugmentConfig c;
  c.displacement_sigma = 0.0;
  return c;
}

std::vector<std::array<double, 2>> sample_control_vectors(std::size_t grid_size, double sigma, Rng& rng) {
  std::vector<std::array<double, 2>> v(grid_size * grid_size);
  for (auto& d : v) {
    d[0] = rng.normal(0.0, 1.0) * sigma;
    d[1] = rng.normal(0.0, 1.0) * sigma;
  }
  return v;
}

double cubic_weight(double t) {
  t = std::abs(t);
  if (t <= 1.0) return ((kKeysA + 2.0) * t - (kKeysA + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((kKeysA * t - 5.0 * kKeysA) * t + 8.0 * kKeysA) * t - 4.0 * kKeysA;
  return 0.0;
}

std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n <= 1) return 0;
  const std::ptrdiff_t period = 2 * (static_cast<std::ptrdiff_t>(n) - 1);
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return i;
}

DisplacementField densify(const std::vector<std::array<double, 2>>& control, std::size_t grid,
                          std::size_t H, std::size_t W) {
  if (grid < 2 || control.size() != grid * grid) {
    throw PreconditionError("densify: expected " + std::to_string(grid * grid) + " control vectors");
  }
  DisplacementField f(H, W);
  std::vector<std::array<double, 4>> wy(H), wx(W);
  std::vector<std::array<std::ptrdiff_t, 4>> iy(H), ix(W);
  auto taps = [grid](std::size_t i, std::size_t n, std::array<double, 4>& w, std::array<std::ptrdiff_t, 4>& idx) {
    const double g = grid_coord(i, n, grid);
    const double base = std::floor(g);
    const double u = g - base;
    for (int t = 0; t < 4; ++t) {
      w[t] = cubic_weight(u - static_cast<double>(t - 1));
      idx[t] = clamp_index(static_cast<std::ptrdiff_t>(base) + t - 1, grid);
    }
  };
  for (std::size_t y = 0; y < H; ++y) taps(y, H, wy[y], iy[y]);
  for (std::size_t x = 0; x < W; ++x) taps(x, W, wx[x], ix[x]);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      double dy = 0, dx = 0;
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          const auto& c = control[static_cast<std::size_t>(iy[y][a]) * grid + static_cast<std::size_t>(ix[x][b])];
          const double w = wy[y][a] * wx[x][b];
          dy += w * c[0];
          dx += w * c[1];
        }
      }
      f.dy[y * W + x] = dy;
      f.dx[y * W + x] = dx;
    }
  }
  return f;
}

DisplacementField elastic_field(std::size_t H, std::size_t W, const AugmentConfig& config, Rng& rng) {
  config.validate();
  if (H < config.grid_size || W < config.grid_size) {
    throw PreconditionError("elastic_field: image " + size_str(H, W) + " smaller than control grid");
  }
  return densify(sample_control_vectors(config.grid_size, config.displacement_sigma, rng), config.grid_size, H, W);
}

double sample_bicubic(const Image& src, double y, double x) {
  const double by = std::floor(y), bx = std::floor(x);
  const double uy = y - by, ux = x - bx;
  const auto iy0 = static_cast<std::ptrdiff_t>(by), ix0 = static_cast<std::ptrdiff_t>(bx);
  double wy[4], wx[4];
  std::ptrdiff_t ry[4], rx[4];
  for (int t = 0; t < 4; ++t) {
    wy[t] = cubic_weight(uy - static_cast<double>(t - 1));
    wx[t] = cubic_weight(ux - static_cast<double>(t - 1));
    ry[t] = reflect_index(iy0 + t - 1, src.height);
    rx[t] = reflect_index(ix0 + t - 1, src.width);
  }
  double acc = 0;
  for (int a = 0; a < 4; ++a) {
    if (wy[a] == 0.0) continue;
    double row = 0;
    for (int b = 0; b < 4; ++b) {
      if (wx[b] == 0.0) continue;
      row += wx[b] * src(static_cast<std::size_t>(ry[a]), static_cast<std::size_t>(rx[b]));
    }
    acc += wy[a] * row;
  }
  return acc;
}

namespace {

template <typename V>
V sample_nearest(const Raster<V>& src, double y, double x) {
  const auto iy = reflect_index(static_cast<std::ptrdiff_t>(std::floor(y + 0.5)), src.height);
  const auto ix = reflect_index(static_cast<std::ptrdiff_t>(std::floor(x + 0.5)), src.width);
  return src(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
}

void check_field(std::size_t H, std::size_t W, const DisplacementField& f) {
  if (f.height != H || f.width != W) {
    throw PreconditionError("warp: field " + size_str(f.height, f.width) + " does not match raster " + size_str(H, W));
  }
}

}  // namespace

Image warp_image(const Image& image, const DisplacementField& field, Interpolation mode) {
  check_field(image.height, image.width, field);
  Image out(image.height, image.width);
  for_each_sample_position(image.height, image.width, [&](std::size_t y, std::size_t x) {
    const std::size_t i = y * image.width + x;
    const double sy = static_cast<double>(y) + field.dy[i], sx = static_cast<double>(x) + field.dx[i];
    out.data[i] = mode == Interpolation::Smooth ? sample_bicubic(image, sy, sx) : sample_nearest(image, sy, sx);
  });
  return out;
}

InstanceMap warp_labels(const InstanceMap& labels, const DisplacementField& field) {
  check_field(labels.height, labels.width, field);
  InstanceMap out(labels.height, labels.width);
  for_each_sample_position(labels.height, labels.width, [&](std::size_t y, std::size_t x) {
    const std::size_t i = y * labels.width + x;
    out.data[i] = sample_nearest(labels, static_cast<double>(y) + field.dy[i], static_cast<double>(x) + field.dx[i]);
  });
  return out;
}

AugmentedSample augment_sample(const Image& image, const InstanceMap& instances, bool recompute_weights,
                               const WeightMapParams& weight_params, const AugmentConfig& config, Rng& rng) {
  config.validate();
  if (!image.same_size(instances)) {
    throw PreconditionError("augment: image " + size_str(image.height, image.width) + " vs instances " +
                            size_str(instances.height, instances.width));
  }
  const std::size_t H = image.height, W = image.width;
  // Fixed draw order keeps the stream aligned regardless of which ranges are zero.
  const double angle = rng.uniform(-config.rotation_range, config.rotation_range) * std::numbers::pi / 180.0;
  const double shift_y = rng.uniform(-config.shift_range, config.shift_range);
  const double shift_x = rng.uniform(-config.shift_range, config.shift_range);
  const double gray_scale = rng.uniform(config.gray_scale_min, config.gray_scale_max);
  const double gray_shift = rng.uniform(config.gray_shift_min, config.gray_shift_max);
  const DisplacementField elastic = densify(
      sample_control_vectors(config.grid_size, config.displacement_sigma, rng), config.grid_size, H, W);

  const double cy = (static_cast<double>(H) - 1.0) / 2.0, cx = (static_cast<double>(W) - 1.0) / 2.0;
  const double cs = std::cos(angle), sn = std::sin(angle);

  // Source position of output pixel p: rotate(p + elastic(p) + shift) about the center.
  DisplacementField total(H, W);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const std::size_t i = y * W + x;
      const double vy = static_cast<double>(y) + elastic.dy[i] + shift_y - cy;
      const double vx = static_cast<double>(x) + elastic.dx[i] + shift_x - cx;
      const double sy = cs * vy - sn * vx + cy;
      const double sx = sn * vy + cs * vx + cx;
      total.dy[i] = sy - static_cast<double>(y);
      total.dx[i] = sx - static_cast<double>(x);
    }
  }

  AugmentedSample out;
  out.image = warp_image(image, total, Interpolation::Smooth);
  for (double& v : out.image.data) v = gray_scale * v + gray_shift;
  out.instances = warp_labels(instances, total);
  if (recompute_weights) out.weights = weight_map(out.instances, weight_params);
  return out;
}

}  // namespace unet
