#pragma once

// File formats: binary graymaps (P5) for rasters, UNETCKPT checkpoints for
// network parameters, and line-based key=value configuration files.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unet/raster.hpp"
#include "unet/unet.hpp"

namespace unet {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Decoded P5 graymap. Samples are stored widened to 16 bits.
struct RasterFile {
  std::size_t width = 0;
  std::size_t height = 0;
  /// 255 for 8-bit images and masks, 65535 for 16-bit instance maps.
  std::uint32_t maxval = 255;
  std::vector<std::uint16_t> samples;

  friend bool operator==(const RasterFile&, const RasterFile&) = default;
};

std::string encode_pgm(const RasterFile& file, const std::string& comment = {});
RasterFile decode_pgm(std::string_view bytes);
RasterFile read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const RasterFile& file, const std::string& comment = {});

/// Gray values scaled to [0, 1] by maxval.
Image to_image(const RasterFile& file);
InstanceMap to_instances(const RasterFile& file);
/// Nonzero samples become 1.
Mask to_mask(const RasterFile& file);

RasterFile from_image(const Image& image);  ///< clamps to [0, 1], 8-bit
RasterFile from_mask(const Mask& mask);     ///< 0 / 255
RasterFile from_instances(const InstanceMap& instances);  ///< 16-bit
RasterFile from_weights(const WeightMap& weights);        ///< fixed-point, see weight_to_byte

inline constexpr std::string_view kCheckpointMagic = "UNETCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<float> values;
};

struct CheckpointData {
  UNetConfig config;
  std::vector<NamedTensor> tensors;
};

std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& data);
/// Throws FormatError on bad magic, version, truncation or checksum mismatch.
CheckpointData decode_checkpoint(std::span<const std::uint8_t> bytes);
/// FNV-1a over `bytes`.
std::uint64_t checksum64(std::span<const std::uint8_t> bytes);

template <typename T>
CheckpointData checkpoint_of(const UNet<T>& net) {
  CheckpointData d{net.config(), {}};
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    d.tensors.push_back({net.param_names()[i] + ".weight", net.params()[i].weights.template cast<float>()});
    d.tensors.push_back({net.param_names()[i] + ".bias", net.params()[i].bias.template cast<float>()});
  }
  return d;
}

template <typename T>
UNet<T> network_from(const CheckpointData& d) {
  UNet<T> net = UNet<T>::zeros(d.config);
  if (d.tensors.size() != 2 * net.params().size()) {
    throw FormatError("checkpoint holds " + std::to_string(d.tensors.size()) + " tensors, network needs " +
                      std::to_string(2 * net.params().size()));
  }
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    const NamedTensor& w = d.tensors[2 * i];
    const NamedTensor& b = d.tensors[2 * i + 1];
    ConvParams<T>& p = net.params()[i];
    if (w.name != net.param_names()[i] + ".weight" || w.values.shape() != p.weights.shape() ||
        b.name != net.param_names()[i] + ".bias" || b.values.shape() != p.bias.shape()) {
      throw FormatError("checkpoint tensor '" + w.name + "' does not match layer " + net.param_names()[i]);
    }
    p.weights = w.values.template cast<T>();
    p.bias = b.values.template cast<T>();
  }
  return net;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const UNet<T>& net) {
  write_file(path, encode_checkpoint(checkpoint_of(net)));
}

template <typename T>
UNet<T> load_checkpoint(const std::filesystem::path& path) {
  return network_from<T>(decode_checkpoint(read_file(path)));
}

/// key=value lines; '#' starts a comment; blank lines ignored.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace unet
