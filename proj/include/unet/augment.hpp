#pragma once

// Training-time augmentation: rotation, shift, smooth elastic deformation and
// gray-value jitter. All randomness comes from the caller's generator.

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "unet/raster.hpp"
#include "unet/rng.hpp"
#include "unet/weightmap.hpp"

namespace unet {

struct AugmentConfig {
  std::size_t grid_size = 3;
  double displacement_sigma = 10.0;
  /// Rotation angle drawn uniformly from [-rotation_range, rotation_range] degrees.
  double rotation_range = 0.0;
  /// Shift drawn uniformly from [-shift_range, shift_range] pixels per axis.
  double shift_range = 0.0;
  double gray_scale_min = 1.0;
  double gray_scale_max = 1.0;
  double gray_shift_min = 0.0;
  double gray_shift_max = 0.0;

  void validate() const;
  /// Configuration that leaves every sample unchanged.
  static AugmentConfig identity();
};

/// Per-pixel (dy, dx) displacements.
struct DisplacementField {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> dy;
  std::vector<double> dx;

  DisplacementField() = default;
  DisplacementField(std::size_t h, std::size_t w) : height(h), width(w), dy(h * w, 0.0), dx(h * w, 0.0) {}
};

/// grid_size x grid_size control vectors, row-major, each (dy, dx) ~ N(0, sigma^2).
std::vector<std::array<double, 2>> sample_control_vectors(std::size_t grid_size, double sigma, Rng& rng);

/// Bicubic densification of control vectors placed evenly from edge to edge.
DisplacementField densify(const std::vector<std::array<double, 2>>& control, std::size_t grid_size,
                          std::size_t height, std::size_t width);

DisplacementField elastic_field(std::size_t height, std::size_t width, const AugmentConfig& config, Rng& rng);

enum class Interpolation { Smooth, Nearest };

/// Keys cubic convolution weight (a = -0.5).
double cubic_weight(double t);

/// Index reflected into [0, n) without repeating the edge sample.
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::size_t n);

/// Samples `src` at a real-valued position with mirror extension.
double sample_bicubic(const Image& src, double y, double x);

/// output(p) = input(p + field(p)).
Image warp_image(const Image& image, const DisplacementField& field, Interpolation mode);
InstanceMap warp_labels(const InstanceMap& labels, const DisplacementField& field);

struct AugmentedSample {
  Image image;
  InstanceMap instances;
  std::optional<WeightMap> weights;
};

/// Rotation -> shift -> elastic warp -> gray jitter, composed into a single resampling.
/// Labels use nearest-neighbour sampling. With `recompute_weights`, the weight map is
/// rebuilt from the warped instances.
AugmentedSample augment_sample(const Image& image, const InstanceMap& instances, bool recompute_weights,
                               const WeightMapParams& weight_params, const AugmentConfig& config, Rng& rng);

}  // namespace unet
