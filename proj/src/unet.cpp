#include "unet/unet.hpp"

namespace unet {

void UNetConfig::validate() const {
  if (depth < 1) throw PreconditionError("config: depth must be >= 1");
  if (base_channels < 1) throw PreconditionError("config: base_channels must be >= 1");
  if (in_channels < 1) throw PreconditionError("config: in_channels must be >= 1");
  if (num_classes < 2) throw PreconditionError("config: num_classes must be >= 2");
  if (num_classes > 255) throw PreconditionError("config: num_classes must be <= 255");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw PreconditionError("config: dropout_rate must be in [0, 1)");
  }
}

SizeCheck output_size(std::size_t input_size, std::size_t depth) {
  SizeCheck r;
  auto fail = [&](const std::string& why) {
    r.valid = false;
    r.reason = why;
    return r;
  };
  auto two_convs = [](std::size_t s) -> std::optional<std::size_t> {
    if (s < 5) return std::nullopt;
    return s - 4;
  };
  if (input_size < 1) return fail("input size must be >= 1");

  std::size_t s = input_size;
  std::vector<std::size_t> skips;
  for (std::size_t level = 0; level < depth; ++level) {
    auto c = two_convs(s);
    if (!c) return fail("size " + std::to_string(s) + " too small for two 3x3 convolutions at level " + std::to_string(level));
    if (*c % 2 != 0) {
      return fail("odd pooling input at level " + std::to_string(level) + ": level input " + std::to_string(s) +
                  " leaves " + std::to_string(*c) + " after its convolutions");
    }
    s = *c;
    skips.push_back(s);
    s /= 2;
  }
  r.lowest = s;
  auto c = two_convs(s);
  if (!c) return fail("size " + std::to_string(s) + " too small for the bottom convolutions");
  s = *c;
  for (std::size_t level = depth; level-- > 0;) {
    s *= 2;
    const std::size_t skip = skips[level];
    if (skip < s || (skip - s) % 2 != 0) {
      return fail("skip " + std::to_string(skip) + " cannot be center-cropped to " + std::to_string(s) +
                  " at level " + std::to_string(level));
    }
    auto c2 = two_convs(s);
    if (!c2) return fail("size " + std::to_string(s) + " too small at expansive level " + std::to_string(level));
    s = *c2;
  }
  r.valid = true;
  r.output = s;
  return r;
}

std::vector<std::size_t> valid_input_sizes(std::size_t min, std::size_t max, std::size_t depth) {
  std::vector<std::size_t> out;
  for (std::size_t s = std::max<std::size_t>(min, 1); s <= max; ++s) {
    if (output_size(s, depth).valid) out.push_back(s);
  }
  return out;
}

std::size_t context_margin(std::size_t input_size, std::size_t depth) {
  SizeCheck r = output_size(input_size, depth);
  if (!r.valid) throw PreconditionError("invalid tile size " + std::to_string(input_size) + ": " + r.reason);
  return (input_size - r.output) / 2;
}

const char* layer_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv3x3: return "conv3x3";
    case LayerKind::ReLU: return "relu";
    case LayerKind::MaxPool: return "maxpool2x2";
    case LayerKind::SaveSkip: return "skip";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::UpConv: return "upconv2x2";
    case LayerKind::CropConcat: return "crop_concat";
    case LayerKind::Conv1x1: return "conv1x1";
  }
  return "?";
}

namespace detail {

std::vector<Layer> unet_layers(const UNetConfig& config, std::vector<std::string>& names,
                               std::vector<Shape>& shapes) {
  std::vector<Layer> layers;
  names.clear();
  shapes.clear();
  auto add_conv = [&](LayerKind kind, std::size_t in, std::size_t out, std::size_t k, std::string name) {
    layers.push_back({kind, shapes.size(), out});
    shapes.push_back({out, in, k, k});
    names.push_back(std::move(name));
  };
  auto add = [&](LayerKind kind, std::size_t channels) { layers.push_back({kind, 0, channels}); };

  std::size_t channels = config.in_channels;
  std::size_t width = config.base_channels;
  for (std::size_t level = 0; level < config.depth; ++level) {
    const std::string prefix = "down" + std::to_string(level);
    add_conv(LayerKind::Conv3x3, channels, width, 3, prefix + ".conv0");
    add(LayerKind::ReLU, width);
    add_conv(LayerKind::Conv3x3, width, width, 3, prefix + ".conv1");
    add(LayerKind::ReLU, width);
    add(LayerKind::SaveSkip, width);
    add(LayerKind::MaxPool, width);
    channels = width;
    width *= 2;
  }
  add_conv(LayerKind::Conv3x3, channels, width, 3, "bottom.conv0");
  add(LayerKind::ReLU, width);
  add(LayerKind::Dropout, width);
  add_conv(LayerKind::Conv3x3, width, width, 3, "bottom.conv1");
  add(LayerKind::ReLU, width);
  add(LayerKind::Dropout, width);
  channels = width;
  for (std::size_t level = config.depth; level-- > 0;) {
    const std::string prefix = "up" + std::to_string(level);
    width = channels / 2;
    add_conv(LayerKind::UpConv, channels, width, 2, prefix + ".upconv");
    add(LayerKind::CropConcat, 2 * width);
    add_conv(LayerKind::Conv3x3, 2 * width, width, 3, prefix + ".conv0");
    add(LayerKind::ReLU, width);
    add_conv(LayerKind::Conv3x3, width, width, 3, prefix + ".conv1");
    add(LayerKind::ReLU, width);
    channels = width;
  }
  add_conv(LayerKind::Conv1x1, channels, config.num_classes, 1, "final.conv1x1");
  return layers;
}

}  // namespace detail
}  // namespace unet
