#pragma once

#include "unet/raster.hpp"

namespace unet {

/// Fraction of pixels where the binary masks disagree.
double pixel_error(const Mask& prediction, const Mask& truth);

/// |A ∩ B| / |A ∪ B|; two empty masks score 1.
double iou(const Mask& prediction, const Mask& truth);

/// Mean over truth instances of the best IOU against any predicted instance.
/// With no truth instances the score is 1 if the prediction is empty too, else 0.
double instance_iou(const InstanceMap& prediction, const InstanceMap& truth);

/// 1 - Rand index over all pixel pairs. Background (id 0) is one segment.
double rand_error(const InstanceMap& prediction, const InstanceMap& truth);

/// 4-connected components of a binary mask, numbered from 1 in row-major order.
InstanceMap connected_components(const Mask& mask);

Mask foreground(const InstanceMap& instances);
Mask foreground(const ClassMap& classes, std::uint8_t foreground_class = 1);

}  // namespace unet
