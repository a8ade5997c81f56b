#pragma once

// Per-pixel loss weights: class-frequency balancing plus a Gaussian emphasis on
// narrow background gaps between neighbouring instances.

#include <cstddef>
#include <vector>

#include "unet/raster.hpp"

namespace unet {

struct WeightMapParams {
  double w0 = 10.0;
  double sigma = 5.0;
  std::size_t border_radius = 2;

  void validate() const;
};

/// Foreground/background labels for an instance map: 0 -> class 0, ids -> class 1.
/// Unannotated pixels map to class 0; use annotated_mask() to exclude them.
ClassMap instances_to_classes(const InstanceMap& instances);
Mask annotated_mask(const InstanceMap& instances);

/// Renumbers instance ids to 1..M in order of first appearance (row-major).
InstanceMap canonicalize(const InstanceMap& instances);

/// totalPixels / (P * classPixels) for each present class, where P is the number
/// of classes present; absent classes get 0. Pixels with annotated == 0 are skipped.
std::vector<double> class_balance_weights(const ClassMap& labels, std::size_t num_classes,
                                          const Mask* annotated = nullptr);

struct SeparationBorder {
  Mask border;
  ClassMap classes;
};

/// Background pixels whose (2r+1)x(2r+1) neighbourhood touches two or more
/// distinct instances. Those pixels are background in the returned class map.
SeparationBorder separation_border(const InstanceMap& instances, std::size_t radius);

struct DistanceMaps {
  /// Euclidean distance to the nearest pixel of the nearest instance.
  Raster<double> d1;
  /// Same for the second-nearest distinct instance; +inf when it does not exist.
  Raster<double> d2;
};

/// Exact Euclidean distance maps, one separable squared-distance transform per instance.
DistanceMaps distance_maps(const InstanceMap& instances);

/// w_c + w0 * exp(-(d1 + d2)^2 / (2 sigma^2)).
double gap_weight(double class_weight, double d1, double d2, const WeightMapParams& params);

/// Full weight map for a two-class (background / foreground) instance map.
/// Unannotated pixels receive weight 0.
WeightMap weight_map(const InstanceMap& instances, const WeightMapParams& params);

/// Fixed-point export scaling: round(min(w, 25.5) * 10), fits in 8 bits.
std::uint8_t weight_to_byte(double w);

}  // namespace unet
