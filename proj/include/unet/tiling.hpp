#pragma once

// Overlap-tile prediction of images of any size, with mirror extrapolation at
// the borders and optional dihedral-transform ensembling.

#include <cstddef>
#include <string>
#include <vector>

#include "unet/raster.hpp"
#include "unet/unet.hpp"

namespace unet {

struct Margins {
  std::size_t top = 0, bottom = 0, left = 0, right = 0;
};

/// Reflects about each border without repeating the edge pixel:
/// [a b c] padded by 2 on the left becomes [c b a b c].
template <typename V>
Raster<V> mirror_pad(const Raster<V>& image, const Margins& m);

struct Rect {
  std::size_t y = 0, x = 0, height = 0, width = 0;
  std::size_t area() const { return height * width; }
};

struct Tile {
  /// Output pixels this tile writes, in image coordinates.
  Rect output;
  /// Top-left corner of the input window inside the padded image.
  std::size_t input_y = 0, input_x = 0;
};

/// Tile layout for one image. Tile origins advance by `stride`, a multiple of
/// 2^depth no larger than the network output size, so every tile sees the
/// same max-pooling phase as a single pass over the padded image.
struct TilePlan {
  std::size_t image_height = 0, image_width = 0;
  std::size_t tile_size = 0;
  std::size_t output_size = 0;
  std::size_t stride = 0;
  /// Context lost on each side between network input and output.
  std::size_t margin = 0;
  /// Mirror padding applied to the whole image before cutting input windows.
  Margins padding;
  std::size_t rows = 0, cols = 0;
  std::vector<Tile> tiles;
};

TilePlan plan_tiles(std::size_t height, std::size_t width, const UNetConfig& config, std::size_t tile_size);

/// Per-class softmax probabilities, one raster per class, covering the whole image.
using ProbabilityMap = std::vector<Raster<double>>;

template <typename T>
ProbabilityMap predict_tiled(const UNet<T>& net, const Image& image, const TilePlan& plan);

/// Single forward pass over the image mirror-padded to the smallest valid size
/// covering it plus context; the reference that tiled prediction must match.
template <typename T>
ProbabilityMap predict_whole(const UNet<T>& net, const Image& image);

/// Dihedral group element: an optional horizontal flip followed by `rotation`
/// quarter turns counter-clockwise.
struct Dihedral {
  int rotation = 0;
  bool flip = false;
  friend bool operator==(const Dihedral&, const Dihedral&) = default;
};

std::vector<Dihedral> all_dihedral();
/// Parses "identity", "all", or a comma list such as "r0,r90,f0,f270".
std::vector<Dihedral> parse_dihedral_list(const std::string& spec);
std::string dihedral_name(const Dihedral& t);

template <typename V>
Raster<V> apply_dihedral(const Raster<V>& r, const Dihedral& t);
template <typename V>
Raster<V> invert_dihedral(const Raster<V>& r, const Dihedral& t);

/// Averages predict_tiled over transformed copies, mapping each result back.
template <typename T>
ProbabilityMap rotate_average(const UNet<T>& net, const Image& image, const std::vector<Dihedral>& transforms,
                              std::size_t tile_size);

/// Per-pixel argmax class.
ClassMap argmax(const ProbabilityMap& probs);

}  // namespace unet
